import assert from 'node:assert/strict'
import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { test } from 'node:test'

import { parseCsv, numericColumn } from '../src/csv.js'
import { goldenData } from '../src/figure.js'
import { buildDamping, buildErrors, buildRegion, buildSpectrum,
         buildViscosity } from '../src/plots.js'

const FIXTURES = new URL('../../fixtures/', import.meta.url).pathname

function fixture(name: string): string {
  return join(FIXTURES, name)
}

function loadGolden(name: string): unknown {
  return JSON.parse(readFileSync(join(FIXTURES, 'golden', `${name}.json`), 'utf-8'))
}

/** Recursive comparison with 1e-12 relative tolerance on numbers. */
function assertClose(actual: unknown, expected: unknown, path = '$'): void {
  if (typeof expected === 'number') {
    assert.equal(typeof actual, 'number', `${path}: expected a number`)
    const a = actual as number
    const tol = 1e-12 * Math.max(Math.abs(expected), 1e-300)
    assert.ok(Math.abs(a - expected) <= tol,
              `${path}: ${a} != ${expected} (tol ${tol})`)
  } else if (Array.isArray(expected)) {
    assert.ok(Array.isArray(actual), `${path}: expected an array`)
    assert.equal((actual as unknown[]).length, expected.length,
                 `${path}: length mismatch`)
    expected.forEach((v, i) => assertClose((actual as unknown[])[i], v,
                                           `${path}[${i}]`))
  } else if (expected !== null && typeof expected === 'object') {
    for (const key of Object.keys(expected as object)) {
      assertClose((actual as Record<string, unknown>)[key],
                  (expected as Record<string, unknown>)[key],
                  `${path}.${key}`)
    }
  } else {
    assert.deepEqual(actual, expected, `${path}: value mismatch`)
  }
}

test('errors figure matches golden data arrays', () => {
  const fig = buildErrors([fixture('errors.csv')])
  assertClose(goldenData(fig), loadGolden('errors'))
})

test('region figure matches golden data arrays', () => {
  const fig = buildRegion(fixture('region.csv'))
  assertClose(goldenData(fig), loadGolden('region'))
})

test('spectrum figure matches golden data arrays', () => {
  const fig = buildSpectrum(fixture('spectrum.csv'))
  assertClose(goldenData(fig), loadGolden('spectrum'))
})

test('damping figure matches golden data arrays', () => {
  const fig = buildDamping(fixture('damping.csv'))
  assertClose(goldenData(fig), loadGolden('damping'))
})

test('viscosity figure matches golden data arrays', () => {
  const fig = buildViscosity(fixture('nu_table.csv'))
  assertClose(goldenData(fig), loadGolden('viscosity'))
})

test('errors series are labeled from the sibling manifest', () => {
  const fig = buildErrors([fixture('errors.csv')])
  assert.ok(fig.series.every((s) => s.label.startsWith('(2,2,0)')))
  assert.ok(fig.series.some((s) => s.label.includes('R=8')))
  assert.equal(fig.yScale, 'log')
})

test('empty error series raises', () => {
  const dir = mkdtempSync(join(tmpdir(), 'plotkit-'))
  const path = join(dir, 'errors.csv')
  writeFileSync(path, 'k,rnorm,target,value\n')
  assert.throws(() => buildErrors([path]), /empty error series/)
})

test('incomplete region raster raises', () => {
  const dir = mkdtempSync(join(tmpdir(), 'plotkit-'))
  const path = join(dir, 'region.csv')
  writeFileSync(path, 're,im,stable\n0,0,1\n1,0,0\n0,1,1\n')
  assert.throws(() => buildRegion(path), /rectangular/)
})

test('region mask mirrors the CSV stable column', () => {
  const fig = buildRegion(fixture('region.csv'))
  const table = parseCsv(readFileSync(fixture('region.csv'), 'utf-8'))
  const stable = numericColumn(table, 'stable')
  const total = stable.reduce((a, b) => a + b, 0)
  const cells = fig.cells!
  let masked = 0
  for (const row of cells.mask) for (const v of row) masked += v
  assert.equal(masked, total)
  assert.equal(cells.re.length * cells.im.length, stable.length)
})

test('spectrum guide has the 5/3 log-log slope', () => {
  const fig = buildSpectrum(fixture('spectrum.csv'))
  const guide = fig.guides[0]
  const slope = (Math.log(guide.y[1]) - Math.log(guide.y[0]))
    / (Math.log(guide.x[1]) - Math.log(guide.x[0]))
  assert.ok(Math.abs(slope - 5 / 3) < 1e-12)
})

test('csv parser rejects ragged rows and missing columns', () => {
  assert.throws(() => parseCsv('a,b\n1,2,3\n'), /fields/)
  const table = parseCsv('a,b\n1,2\n')
  assert.throws(() => numericColumn(table, 'c'), /missing column/)
  assert.throws(() => parseCsv(''), /empty/)
})
