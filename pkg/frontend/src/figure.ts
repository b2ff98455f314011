import { Scale, ScaleKind, extent, makeScale } from './scale.js'

export interface Series {
  label: string
  x: number[]
  y: number[]
}

export interface RegionCells {
  re: number[]
  im: number[]
  mask: number[][] // mask[iIm][jRe], 0 or 1
}

export interface Figure {
  kind: string
  title: string
  xLabel: string
  yLabel: string
  xScale: ScaleKind
  yScale: ScaleKind
  series: Series[]
  guides: Series[]
  cells?: RegionCells
}

export interface Layout {
  width: number
  height: number
  plot: { x0: number; y0: number; x1: number; y1: number }
  x: Scale
  y: Scale
}

export const PALETTE = [
  '#1f77b4', '#d62728', '#2ca02c', '#ff7f0e', '#9467bd',
  '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22', '#17becf',
]

export function seriesColor(index: number): string {
  return PALETTE[index % PALETTE.length]
}

function dataExtent(figure: Figure, axis: 'x' | 'y'): [number, number] {
  const values: number[] = []
  for (const s of [...figure.series, ...figure.guides]) {
    values.push(...(axis === 'x' ? s.x : s.y))
  }
  if (figure.cells) {
    values.push(...(axis === 'x' ? figure.cells.re : figure.cells.im))
  }
  return extent(values)
}

function padded(kind: ScaleKind, [lo, hi]: [number, number]): [number, number] {
  if (kind === 'log') {
    return [lo / 1.3, hi * 1.3]
  }
  const span = hi - lo
  const pad = span === 0 ? Math.max(Math.abs(lo), 1) * 0.1 : span * 0.05
  return [lo - pad, hi + pad]
}

export function computeLayout(figure: Figure, width = 720, height = 480): Layout {
  const margin = { left: 78, right: 16, top: 34, bottom: 52 }
  const plot = {
    x0: margin.left,
    y0: margin.top,
    x1: width - margin.right,
    y1: height - margin.bottom,
  }
  const x = makeScale(figure.xScale, padded(figure.xScale, dataExtent(figure, 'x')),
                      [plot.x0, plot.x1])
  // screen y grows downward
  const y = makeScale(figure.yScale, padded(figure.yScale, dataExtent(figure, 'y')),
                      [plot.y1, plot.y0])
  return { width, height, plot, x, y }
}

/** The data arrays a renderer consumes; golden-file tests compare these. */
export function goldenData(figure: Figure): unknown {
  return {
    kind: figure.kind,
    xScale: figure.xScale,
    yScale: figure.yScale,
    series: figure.series.map((s) => ({ label: s.label, x: s.x, y: s.y })),
    guides: figure.guides.map((s) => ({ label: s.label, x: s.x, y: s.y })),
    cells: figure.cells ?? null,
  }
}
