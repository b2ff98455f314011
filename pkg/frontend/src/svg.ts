import { Figure, Layout, computeLayout, seriesColor } from './figure.js'
import { formatTick } from './scale.js'

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}

function num(x: number): string {
  return Number(x.toFixed(2)).toString()
}

function polylinePoints(layout: Layout, xs: number[], ys: number[]): string {
  const pts: string[] = []
  for (let i = 0; i < xs.length; i += 1) {
    pts.push(`${num(layout.x.map(xs[i]))},${num(layout.y.map(ys[i]))}`)
  }
  return pts.join(' ')
}

export function renderSvg(figure: Figure, width = 720, height = 480): string {
  const layout = computeLayout(figure, width, height)
  const { plot, x, y } = layout
  const out: string[] = []
  out.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`)
  out.push(`<rect width="${width}" height="${height}" fill="white"/>`)
  out.push(`<text x="${width / 2}" y="20" text-anchor="middle" font-size="15">${esc(figure.title)}</text>`)

  // region cells under everything else
  if (figure.cells) {
    const { re, im, mask } = figure.cells
    const dx = re.length > 1 ? (x.map(re[1]) - x.map(re[0])) : 8
    const dy = im.length > 1 ? Math.abs(y.map(im[0]) - y.map(im[1])) : 8
    for (let i = 0; i < im.length; i += 1) {
      for (let j = 0; j < re.length; j += 1) {
        if (mask[i][j] > 0) {
          const cx = x.map(re[j]) - dx / 2
          const cy = y.map(im[i]) - dy / 2
          out.push(`<rect x="${num(cx)}" y="${num(cy)}" width="${num(dx)}" height="${num(dy)}" fill="#9ecae1"/>`)
        }
      }
    }
    // mark the axes through the origin
    if (re[0] < 0 && re[re.length - 1] > 0) {
      out.push(`<line x1="${num(x.map(0))}" y1="${plot.y0}" x2="${num(x.map(0))}" y2="${plot.y1}" stroke="#999" stroke-width="0.7"/>`)
    }
    if (im[0] < 0 && im[im.length - 1] > 0) {
      out.push(`<line x1="${plot.x0}" y1="${num(y.map(0))}" x2="${plot.x1}" y2="${num(y.map(0))}" stroke="#999" stroke-width="0.7"/>`)
    }
  }

  // gridlines and ticks
  for (const t of x.ticks) {
    const px = num(x.map(t))
    out.push(`<line x1="${px}" y1="${plot.y0}" x2="${px}" y2="${plot.y1}" stroke="#eee"/>`)
    out.push(`<line x1="${px}" y1="${plot.y1}" x2="${px}" y2="${plot.y1 + 5}" stroke="black"/>`)
    out.push(`<text x="${px}" y="${plot.y1 + 18}" text-anchor="middle" font-size="11">${esc(formatTick(t))}</text>`)
  }
  for (const t of y.ticks) {
    const py = num(y.map(t))
    out.push(`<line x1="${plot.x0}" y1="${py}" x2="${plot.x1}" y2="${py}" stroke="#eee"/>`)
    out.push(`<line x1="${plot.x0 - 5}" y1="${py}" x2="${plot.x0}" y2="${py}" stroke="black"/>`)
    out.push(`<text x="${plot.x0 - 8}" y="${Number(py) + 4}" text-anchor="end" font-size="11">${esc(formatTick(t))}</text>`)
  }
  out.push(`<rect x="${plot.x0}" y="${plot.y0}" width="${plot.x1 - plot.x0}" height="${plot.y1 - plot.y0}" fill="none" stroke="black"/>`)
  out.push(`<text x="${(plot.x0 + plot.x1) / 2}" y="${height - 12}" text-anchor="middle" font-size="13">${esc(figure.xLabel)}</text>`)
  out.push(`<text x="16" y="${(plot.y0 + plot.y1) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 16 ${(plot.y0 + plot.y1) / 2})">${esc(figure.yLabel)}</text>`)

  // guides (dashed) and series
  for (const guide of figure.guides) {
    out.push(`<polyline points="${polylinePoints(layout, guide.x, guide.y)}" fill="none" stroke="#555" stroke-dasharray="6 4" stroke-width="1.2"/>`)
  }
  figure.series.forEach((s, i) => {
    const color = seriesColor(i)
    out.push(`<polyline points="${polylinePoints(layout, s.x, s.y)}" fill="none" stroke="${color}" stroke-width="1.6"/>`)
    for (let j = 0; j < s.x.length; j += 1) {
      out.push(`<circle cx="${num(x.map(s.x[j]))}" cy="${num(y.map(s.y[j]))}" r="2.4" fill="${color}"/>`)
    }
  })

  // legend
  const entries = [...figure.series.map((s, i) => ({ label: s.label, color: seriesColor(i), dash: false })),
                   ...figure.guides.map((g) => ({ label: g.label, color: '#555', dash: true }))]
  if (entries.length > 0 && entries.length <= 14 && !figure.cells) {
    const lx = plot.x0 + 10
    let ly = plot.y0 + 14
    for (const e of entries) {
      out.push(`<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" stroke="${e.color}" stroke-width="2"${e.dash ? ' stroke-dasharray="6 4"' : ''}/>`)
      out.push(`<text x="${lx + 28}" y="${ly}" font-size="11">${esc(e.label)}</text>`)
      ly += 15
    }
  }
  out.push('</svg>')
  return out.join('\n') + '\n'
}
