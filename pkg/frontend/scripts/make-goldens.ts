// Regenerate the golden data arrays from the fixture CSVs.
// Run after intentionally changing a series-extraction rule:
//   npx tsc -p tsconfig.json && node dist/scripts/make-goldens.js

import { mkdirSync, writeFileSync } from 'node:fs'
import { join } from 'node:path'

import { goldenData } from '../src/figure.js'
import { buildDamping, buildErrors, buildRegion, buildSpectrum,
         buildViscosity } from '../src/plots.js'

const fixtures = new URL('../../fixtures/', import.meta.url).pathname
const goldenDir = join(fixtures, 'golden')
mkdirSync(goldenDir, { recursive: true })

const figures = {
  errors: buildErrors([join(fixtures, 'errors.csv')]),
  region: buildRegion(join(fixtures, 'region.csv')),
  spectrum: buildSpectrum(join(fixtures, 'spectrum.csv')),
  damping: buildDamping(join(fixtures, 'damping.csv')),
  viscosity: buildViscosity(join(fixtures, 'nu_table.csv')),
}

for (const [name, figure] of Object.entries(figures)) {
  const path = join(goldenDir, `${name}.json`)
  writeFileSync(path, JSON.stringify(goldenData(figure), null, 1) + '\n')
  console.log(path)
}
