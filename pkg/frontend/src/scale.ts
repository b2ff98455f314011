export type ScaleKind = 'linear' | 'log'

export interface Scale {
  kind: ScaleKind
  domain: [number, number]
  range: [number, number]
  map: (x: number) => number
  ticks: number[]
}

function niceLinearTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo]
  const span = hi - lo
  const rawStep = span / count
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)))
  const candidates = [1, 2, 2.5, 5, 10]
  let step = candidates[candidates.length - 1] * mag
  for (const c of candidates) {
    if (c * mag >= rawStep) {
      step = c * mag
      break
    }
  }
  const ticks: number[] = []
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
    ticks.push(Math.abs(t) < 1e-12 * span ? 0 : t)
  }
  return ticks
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = []
  const eLo = Math.ceil(Math.log10(lo) - 1e-12)
  const eHi = Math.floor(Math.log10(hi) + 1e-12)
  for (let e = eLo; e <= eHi; e += 1) {
    ticks.push(Math.pow(10, e))
  }
  if (ticks.length === 0) ticks.push(lo, hi)
  return ticks
}

export function makeScale(kind: ScaleKind, domain: [number, number],
                          range: [number, number]): Scale {
  let [lo, hi] = domain
  if (kind === 'log' && (lo <= 0 || hi <= 0)) {
    throw new Error(`log scale needs a positive domain, got [${lo}, ${hi}]`)
  }
  if (lo === hi) {
    // degenerate domain: pad so points render mid-range
    const pad = kind === 'log' ? lo * 0.5 : Math.max(Math.abs(lo), 1) * 0.5
    lo -= kind === 'log' ? -pad : pad
    hi += pad
    if (kind === 'log') {
      lo = domain[0] / 2
      hi = domain[0] * 2
    }
  }
  const t = (x: number) => (kind === 'log' ? Math.log10(x) : x)
  const tLo = t(lo)
  const tHi = t(hi)
  const map = (x: number) =>
    range[0] + ((t(x) - tLo) / (tHi - tLo)) * (range[1] - range[0])
  const ticks = kind === 'log' ? logTicks(lo, hi) : niceLinearTicks(lo, hi)
  return { kind, domain: [lo, hi], range, map, ticks }
}

export function extent(values: number[]): [number, number] {
  if (values.length === 0) {
    throw new Error('cannot take the extent of an empty series')
  }
  let lo = Infinity
  let hi = -Infinity
  for (const v of values) {
    if (v < lo) lo = v
    if (v > hi) hi = v
  }
  return [lo, hi]
}

export function formatTick(x: number): string {
  if (x === 0) return '0'
  const ax = Math.abs(x)
  if (ax >= 1e-3 && ax < 1e4) {
    const s = x.toPrecision(4)
    return String(Number(s))
  }
  const e = Math.floor(Math.log10(ax))
  const mant = x / Math.pow(10, e)
  const m = Math.abs(mant - 1) < 1e-9 ? '' : `${String(Number(mant.toPrecision(3)))}e`
  return m === '' ? `1e${e}` : `${m}${e}`
}
