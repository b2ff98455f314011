export { parseCsv, readCsv, column, numericColumn } from './csv.js'
export { makeScale, extent, formatTick } from './scale.js'
export { computeLayout, goldenData, seriesColor } from './figure.js'
export type { Figure, Series, RegionCells, Layout } from './figure.js'
export { buildErrors, buildRegion, buildSpectrum, buildDamping,
         buildViscosity, BUILDERS } from './plots.js'
export { renderSvg } from './svg.js'
export { renderPng, encodePng, Raster, drawText } from './png.js'
export { run, parseArgs } from './cli.js'
