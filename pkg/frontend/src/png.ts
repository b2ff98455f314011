import { deflateSync } from 'node:zlib'

import { Figure, computeLayout, seriesColor } from './figure.js'
import { formatTick } from './scale.js'

type Rgb = [number, number, number]

function hexToRgb(hex: string): Rgb {
  const v = parseInt(hex.slice(1), 16)
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff]
}

export class Raster {
  readonly width: number
  readonly height: number
  readonly data: Uint8Array

  constructor(width: number, height: number) {
    this.width = width
    this.height = height
    this.data = new Uint8Array(width * height * 4).fill(255)
  }

  setPixel(x: number, y: number, [r, g, b]: Rgb): void {
    const xi = Math.round(x)
    const yi = Math.round(y)
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) return
    const o = (yi * this.width + xi) * 4
    this.data[o] = r
    this.data[o + 1] = g
    this.data[o + 2] = b
    this.data[o + 3] = 255
  }

  fillRect(x0: number, y0: number, w: number, h: number, color: Rgb): void {
    for (let y = Math.round(y0); y < Math.round(y0 + h); y += 1) {
      for (let x = Math.round(x0); x < Math.round(x0 + w); x += 1) {
        this.setPixel(x, y, color)
      }
    }
  }

  drawLine(x0: number, y0: number, x1: number, y1: number, color: Rgb,
           thick = 1): void {
    let xa = Math.round(x0)
    let ya = Math.round(y0)
    const xb = Math.round(x1)
    const yb = Math.round(y1)
    const dx = Math.abs(xb - xa)
    const dy = -Math.abs(yb - ya)
    const sx = xa < xb ? 1 : -1
    const sy = ya < yb ? 1 : -1
    let err = dx + dy
    for (;;) {
      for (let tx = 0; tx < thick; tx += 1) {
        for (let ty = 0; ty < thick; ty += 1) {
          this.setPixel(xa + tx, ya + ty, color)
        }
      }
      if (xa === xb && ya === yb) break
      const e2 = 2 * err
      if (e2 >= dy) {
        err += dy
        xa += sx
      }
      if (e2 <= dx) {
        err += dx
        ya += sy
      }
    }
  }
}

// 5x7 bitmap glyphs for tick labels (digits, sign, dot, exponent marker)
const GLYPHS: Record<string, number[]> = {
  '0': [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
  '1': [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
  '2': [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
  '3': [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
  '4': [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
  '5': [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
  '6': [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
  '7': [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
  '8': [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
  '9': [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
  '.': [0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c],
  '-': [0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00],
  '+': [0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00],
  e: [0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e],
}

export function drawText(raster: Raster, x: number, y: number, text: string,
                         color: Rgb, align: 'left' | 'center' | 'right' = 'left'): void {
  const width = text.length * 6
  let cx = align === 'left' ? x : align === 'center' ? x - width / 2 : x - width
  for (const ch of text) {
    const glyph = GLYPHS[ch]
    if (glyph) {
      for (let row = 0; row < 7; row += 1) {
        for (let col = 0; col < 5; col += 1) {
          if ((glyph[row] >> (4 - col)) & 1) {
            raster.setPixel(cx + col, y + row, color)
          }
        }
      }
    }
    cx += 6
  }
}

// -- PNG encoding -------------------------------------------------------------

const CRC_TABLE = (() => {
  const table = new Uint32Array(256)
  for (let n = 0; n < 256; n += 1) {
    let c = n
    for (let k = 0; k < 8; k += 1) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1
    }
    table[n] = c >>> 0
  }
  return table
})()

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff
  for (const b of bytes) {
    c = CRC_TABLE[(c ^ b) & 0xff] ^ (c >>> 8)
  }
  return (c ^ 0xffffffff) >>> 0
}

function chunk(type: string, payload: Uint8Array): Buffer {
  const head = Buffer.alloc(8)
  head.writeUInt32BE(payload.length, 0)
  head.write(type, 4, 'ascii')
  const body = Buffer.concat([Buffer.from(type, 'ascii'), Buffer.from(payload)])
  const tail = Buffer.alloc(4)
  tail.writeUInt32BE(crc32(body), 0)
  return Buffer.concat([head, Buffer.from(payload), tail])
}

export function encodePng(raster: Raster): Buffer {
  const { width, height, data } = raster
  const ihdr = Buffer.alloc(13)
  ihdr.writeUInt32BE(width, 0)
  ihdr.writeUInt32BE(height, 4)
  ihdr[8] = 8 // bit depth
  ihdr[9] = 6 // RGBA
  const stride = width * 4
  const raw = Buffer.alloc(height * (1 + stride))
  for (let y = 0; y < height; y += 1) {
    raw[y * (1 + stride)] = 0 // filter: none
    raw.set(data.subarray(y * stride, (y + 1) * stride), y * (1 + stride) + 1)
  }
  const idat = deflateSync(raw)
  return Buffer.concat([
    Buffer.from([137, 80, 78, 71, 13, 10, 26, 10]),
    chunk('IHDR', ihdr),
    chunk('IDAT', idat),
    chunk('IEND', new Uint8Array(0)),
  ])
}

// -- figure rasterization -------------------------------------------------------

const BLACK: Rgb = [0, 0, 0]
const GRID: Rgb = [232, 232, 232]
const GUIDE: Rgb = [85, 85, 85]
const CELL: Rgb = [158, 202, 225]

export function renderPng(figure: Figure, width = 720, height = 480): Buffer {
  const layout = computeLayout(figure, width, height)
  const { plot, x, y } = layout
  const raster = new Raster(width, height)

  if (figure.cells) {
    const { re, im, mask } = figure.cells
    const dx = re.length > 1 ? x.map(re[1]) - x.map(re[0]) : 8
    const dy = im.length > 1 ? Math.abs(y.map(im[0]) - y.map(im[1])) : 8
    for (let i = 0; i < im.length; i += 1) {
      for (let j = 0; j < re.length; j += 1) {
        if (mask[i][j] > 0) {
          raster.fillRect(x.map(re[j]) - dx / 2, y.map(im[i]) - dy / 2,
                          Math.max(dx, 1), Math.max(dy, 1), CELL)
        }
      }
    }
  }

  for (const t of x.ticks) {
    raster.drawLine(x.map(t), plot.y0, x.map(t), plot.y1, GRID)
    raster.drawLine(x.map(t), plot.y1, x.map(t), plot.y1 + 4, BLACK)
    drawText(raster, x.map(t), plot.y1 + 8, formatTick(t), BLACK, 'center')
  }
  for (const t of y.ticks) {
    raster.drawLine(plot.x0, y.map(t), plot.x1, y.map(t), GRID)
    raster.drawLine(plot.x0 - 4, y.map(t), plot.x0, y.map(t), BLACK)
    drawText(raster, plot.x0 - 7, y.map(t) - 3, formatTick(t), BLACK, 'right')
  }
  raster.drawLine(plot.x0, plot.y0, plot.x1, plot.y0, BLACK)
  raster.drawLine(plot.x0, plot.y1, plot.x1, plot.y1, BLACK)
  raster.drawLine(plot.x0, plot.y0, plot.x0, plot.y1, BLACK)
  raster.drawLine(plot.x1, plot.y0, plot.x1, plot.y1, BLACK)

  for (const guide of figure.guides) {
    for (let i = 1; i < guide.x.length; i += 1) {
      raster.drawLine(x.map(guide.x[i - 1]), y.map(guide.y[i - 1]),
                      x.map(guide.x[i]), y.map(guide.y[i]), GUIDE)
    }
  }
  figure.series.forEach((s, idx) => {
    const color = hexToRgb(seriesColor(idx))
    for (let i = 1; i < s.x.length; i += 1) {
      raster.drawLine(x.map(s.x[i - 1]), y.map(s.y[i - 1]),
                      x.map(s.x[i]), y.map(s.y[i]), color, 2)
    }
    for (let i = 0; i < s.x.length; i += 1) {
      raster.fillRect(x.map(s.x[i]) - 1, y.map(s.y[i]) - 1, 3, 3, color)
    }
  })
  return encodePng(raster)
}
