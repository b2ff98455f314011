import { existsSync, readFileSync } from 'node:fs'
import { basename, dirname, join } from 'node:path'

import { Table, column, numericColumn, readCsv } from './csv.js'
import { Figure, Series } from './figure.js'

function groupRows(table: Table, keyColumns: string[]): Map<string, number[]> {
  const indices = keyColumns.map((name) => {
    const idx = table.header.indexOf(name)
    if (idx < 0) throw new Error(`CSV is missing column '${name}'`)
    return idx
  })
  const groups = new Map<string, number[]>()
  table.rows.forEach((row, i) => {
    const key = indices.map((idx) => row[idx]).join('|')
    const bucket = groups.get(key)
    if (bucket) bucket.push(i)
    else groups.set(key, [i])
  })
  return groups
}

function requireSeries(figure: Figure): Figure {
  if (figure.series.length === 0 || figure.series.every((s) => s.x.length === 0)) {
    throw new Error(`no plottable series for '${figure.kind}'`)
  }
  return figure
}

/** Label a run by (nlevels, cfactor, nrelax) from its sibling manifest. */
function runLabel(csvPath: string): string {
  const manifest = join(dirname(csvPath), 'manifest.json')
  if (existsSync(manifest)) {
    try {
      const cfg = JSON.parse(readFileSync(manifest, 'utf-8'))?.config?.pint
      if (cfg && cfg.nlevels !== undefined) {
        return `(${cfg.nlevels},${cfg.cfactor},${cfg.nrelax ?? 0})`
      }
    } catch {
      // fall through to the file stem
    }
  }
  return basename(dirname(csvPath)) || basename(csvPath, '.csv')
}

/** Semilog error-vs-iteration curves, one series per run/rnorm/target. */
export function buildErrors(paths: string[]): Figure {
  const series: Series[] = []
  for (const path of paths) {
    const table = readCsv(path)
    if (table.rows.length === 0) {
      throw new Error(`empty error series in ${path}`)
    }
    const k = numericColumn(table, 'k')
    const value = numericColumn(table, 'value')
    const label = runLabel(path)
    for (const [key, rows] of groupRows(table, ['rnorm', 'target'])) {
      const [rnorm, target] = key.split('|')
      const pts = rows
        .map((i) => ({ x: k[i], y: value[i] }))
        .filter((p) => p.y > 0)
        .sort((a, b) => a.x - b.x)
      if (pts.length === 0) continue
      series.push({
        label: `${label} R=${rnorm} vs ${target}`,
        x: pts.map((p) => p.x),
        y: pts.map((p) => p.y),
      })
    }
  }
  return requireSeries({
    kind: 'errors',
    title: 'Relative error vs iteration',
    xLabel: 'iteration',
    yLabel: 'relative error',
    xScale: 'linear',
    yScale: 'log',
    series,
    guides: [],
  })
}

/** Filled stability mask over the xi_N plane. */
export function buildRegion(path: string): Figure {
  const table = readCsv(path)
  const re = numericColumn(table, 're')
  const im = numericColumn(table, 'im')
  const stable = numericColumn(table, 'stable')
  const reAxis = [...new Set(re)].sort((a, b) => a - b)
  const imAxis = [...new Set(im)].sort((a, b) => a - b)
  if (reAxis.length * imAxis.length !== table.rows.length) {
    throw new Error(`${path} is not a complete rectangular raster`)
  }
  const reIndex = new Map(reAxis.map((v, i) => [v, i]))
  const imIndex = new Map(imAxis.map((v, i) => [v, i]))
  const mask = imAxis.map(() => reAxis.map(() => 0))
  for (let i = 0; i < table.rows.length; i += 1) {
    mask[imIndex.get(im[i])!][reIndex.get(re[i])!] = stable[i]
  }
  const boundary = traceBoundarySizes(mask)
  return {
    kind: 'region',
    title: `Stability region (${boundary.stable} of ${boundary.total} points stable)`,
    xLabel: 'Re(xi_N)',
    yLabel: 'Im(xi_N)',
    xScale: 'linear',
    yScale: 'linear',
    series: [],
    guides: [],
    cells: { re: reAxis, im: imAxis, mask },
  }
}

function traceBoundarySizes(mask: number[][]): { stable: number; total: number } {
  let stable = 0
  let total = 0
  for (const row of mask) {
    for (const v of row) {
      total += 1
      if (v > 0) stable += 1
    }
  }
  return { stable, total }
}

/** Log-log kinetic-energy spectra with a +5/3 wavelength slope guide. */
export function buildSpectrum(path: string): Figure {
  const table = readCsv(path)
  const wavelength = numericColumn(table, 'wavelength_m')
  const energy = numericColumn(table, 'energy')
  const series: Series[] = []
  for (const [key, rows] of groupRows(table, ['series', 'iteration'])) {
    const [name, iteration] = key.split('|')
    const pts = rows
      .map((i) => ({ x: wavelength[i], y: energy[i] }))
      .filter((p) => p.y > 0)
      .sort((a, b) => a.x - b.x)
    if (pts.length === 0) continue
    const label = iteration === '' ? name : `${name} k=${iteration}`
    series.push({ label, x: pts.map((p) => p.x), y: pts.map((p) => p.y) })
  }
  const fig: Figure = {
    kind: 'spectrum',
    title: 'Kinetic-energy spectrum',
    xLabel: 'wavelength (m)',
    yLabel: 'E(n)',
    xScale: 'log',
    yScale: 'log',
    series,
    guides: [],
  }
  requireSeries(fig)
  // E(n) ~ n^(-5/3) appears as slope +5/3 against the wavelength 2*pi*a/n;
  // anchor the guide at the geometric midpoint of the plotted data
  const xs = series.flatMap((s) => s.x)
  const ys = series.flatMap((s) => s.y)
  const gx = Math.exp(xs.reduce((a, v) => a + Math.log(v), 0) / xs.length)
  const gy = Math.exp(ys.reduce((a, v) => a + Math.log(v), 0) / ys.length)
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)]
  const guideY = (x: number) => gy * Math.pow(x / gx, 5 / 3)
  fig.guides.push({
    label: 'slope 5/3',
    x: [x0, x1],
    y: [guideY(x0), guideY(x1)],
  })
  return fig
}

/** Discrete damping factor per wavenumber, one series per (q, nu). */
export function buildDamping(path: string): Figure {
  const table = readCsv(path)
  const n = numericColumn(table, 'n')
  const bhat = numericColumn(table, 'bhat')
  const series: Series[] = []
  for (const [key, rows] of groupRows(table, ['q', 'nu'])) {
    const [q, nu] = key.split('|')
    const pts = rows
      .map((i) => ({ x: n[i], y: bhat[i] }))
      .filter((p) => p.y > 0)
      .sort((a, b) => a.x - b.x)
    series.push({ label: `q=${q} nu=${nu}`, x: pts.map((p) => p.x),
                  y: pts.map((p) => p.y) })
  }
  return requireSeries({
    kind: 'damping',
    title: 'Backward-Euler damping factor',
    xLabel: 'total wavenumber n',
    yLabel: 'damping factor',
    xScale: 'linear',
    yScale: 'log',
    series,
    guides: [],
  })
}

/** Viscosity coefficient against damping time, one series per (M, q). */
export function buildViscosity(path: string): Figure {
  const table = readCsv(path)
  const tau = numericColumn(table, 'tau_seconds')
  const nu = numericColumn(table, 'nu')
  const series: Series[] = []
  for (const [key, rows] of groupRows(table, ['M', 'q'])) {
    const [M, q] = key.split('|')
    const pts = rows
      .map((i) => ({ x: tau[i] / 3600, y: nu[i] }))
      .sort((a, b) => a.x - b.x)
    series.push({ label: `M=${M} q=${q}`, x: pts.map((p) => p.x),
                  y: pts.map((p) => p.y) })
  }
  return requireSeries({
    kind: 'viscosity',
    title: 'Viscosity coefficient vs damping time',
    xLabel: 'damping time (h)',
    yLabel: 'nu (m^q/s)',
    xScale: 'log',
    yScale: 'log',
    series,
    guides: [],
  })
}

export const BUILDERS: Record<string, (paths: string[]) => Figure> = {
  errors: (paths) => buildErrors(paths),
  region: (paths) => buildRegion(single(paths, 'region')),
  spectrum: (paths) => buildSpectrum(single(paths, 'spectrum')),
  damping: (paths) => buildDamping(single(paths, 'damping')),
  viscosity: (paths) => buildViscosity(single(paths, 'viscosity')),
}

function single(paths: string[], kind: string): string {
  if (paths.length !== 1) {
    throw new Error(`plot kind '${kind}' takes exactly one --in file`)
  }
  return paths[0]
}
