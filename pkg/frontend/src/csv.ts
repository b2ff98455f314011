import { readFileSync } from 'node:fs'

export interface Table {
  header: string[]
  rows: string[][]
}

export function parseCsv(text: string): Table {
  const lines = text.split('\n').filter((ln) => ln.trim().length > 0)
  if (lines.length === 0) {
    throw new Error('empty CSV')
  }
  const header = lines[0].split(',')
  const rows = lines.slice(1).map((ln) => ln.split(','))
  for (const row of rows) {
    if (row.length !== header.length) {
      throw new Error(`CSV row has ${row.length} fields, expected ${header.length}`)
    }
  }
  return { header, rows }
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, 'utf-8'))
}

export function column(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name)
  if (idx < 0) {
    throw new Error(`CSV is missing column '${name}' (has ${table.header.join(', ')})`)
  }
  return table.rows.map((r) => r[idx])
}

export function numericColumn(table: Table, name: string): number[] {
  return column(table, name).map((v) => {
    const x = Number(v)
    if (!Number.isFinite(x)) {
      throw new Error(`non-numeric value '${v}' in column '${name}'`)
    }
    return x
  })
}
