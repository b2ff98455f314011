import { writeFileSync } from 'node:fs'
import { extname } from 'node:path'
import { fileURLToPath } from 'node:url'

import { BUILDERS } from './plots.js'
import { renderPng } from './png.js'
import { renderSvg } from './svg.js'

const USAGE = `usage: plotkit <kind> --in CSV [--in CSV ...] --out IMAGE

kinds:  errors | region | spectrum | damping | viscosity
output: .svg (full labels) or .png (numeric tick labels)

examples:
  plotkit errors --in out/desk/errors.csv --in out/settls/errors.csv --out errors.svg
  plotkit region --in out/regions/serial_imex_xl0.csv --out region.png
  plotkit spectrum --in out/desk/spectrum.csv --out spectrum.svg`

export interface CliArgs {
  kind: string
  inputs: string[]
  out: string
}

export function parseArgs(argv: string[]): CliArgs {
  if (argv.length === 0) throw new Error(USAGE)
  const [kind, ...rest] = argv
  if (!(kind in BUILDERS)) {
    throw new Error(`unknown plot kind '${kind}'\n${USAGE}`)
  }
  const inputs: string[] = []
  let out = ''
  for (let i = 0; i < rest.length; i += 1) {
    const arg = rest[i]
    if (arg === '--in') {
      inputs.push(rest[++i] ?? '')
    } else if (arg === '--out') {
      out = rest[++i] ?? ''
    } else {
      throw new Error(`unknown argument '${arg}'\n${USAGE}`)
    }
  }
  if (inputs.length === 0 || inputs.some((p) => p === '')) {
    throw new Error(`at least one --in CSV is required\n${USAGE}`)
  }
  if (out === '') {
    throw new Error(`--out IMAGE is required\n${USAGE}`)
  }
  return { kind, inputs, out }
}

export function run(argv: string[]): number {
  let args: CliArgs
  try {
    args = parseArgs(argv)
  } catch (err) {
    console.error((err as Error).message)
    return 2
  }
  try {
    const figure = BUILDERS[args.kind](args.inputs)
    const ext = extname(args.out).toLowerCase()
    if (ext === '.png') {
      writeFileSync(args.out, renderPng(figure))
    } else if (ext === '.svg') {
      writeFileSync(args.out, renderSvg(figure))
    } else {
      throw new Error(`unsupported output extension '${ext}' (use .svg or .png)`)
    }
    console.log(args.out)
    return 0
  } catch (err) {
    console.error((err as Error).message)
    return 1
  }
}

if (process.argv[1] && fileURLToPath(import.meta.url) === process.argv[1]) {
  process.exit(run(process.argv.slice(2)))
}
