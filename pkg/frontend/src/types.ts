/** Payload shapes served by the emulator's HTTP API, with structural
 * validators. The console never renders a payload it has not validated,
 * and never synthesizes cells that were not in the payload. */

export interface MatrixPayload {
  asns: number[];
  cells: string[][];
  round: number;
}

export interface Finding {
  asn: number;
  code: string;
  cells: [number, number][];
  note: string;
}

export interface DiagnosisPayload {
  findings: Finding[];
}

export interface PathPayload {
  src: number;
  dst: number;
  asns: number[];
  labels: string[];
  valley_free: boolean;
  outcome: string;
}

const CELL_STATES = new Set(["g", "r"]);

function isNumberArray(value: unknown): value is number[] {
  return Array.isArray(value) && value.every((item) => typeof item === "number");
}

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((item) => typeof item === "string");
}

export function asMatrixPayload(value: unknown): MatrixPayload | null {
  if (typeof value !== "object" || value === null) return null;
  const { asns, cells, round } = value as Record<string, unknown>;
  if (!isNumberArray(asns) || typeof round !== "number") return null;
  if (!Array.isArray(cells) || cells.length !== asns.length) return null;
  for (const row of cells) {
    if (!Array.isArray(row) || row.length !== asns.length) return null;
    if (!row.every((cell) => typeof cell === "string" && CELL_STATES.has(cell))) {
      return null;
    }
  }
  return { asns, cells: cells as string[][], round };
}

export function asDiagnosisPayload(value: unknown): DiagnosisPayload | null {
  if (typeof value !== "object" || value === null) return null;
  const { findings } = value as Record<string, unknown>;
  if (!Array.isArray(findings)) return null;
  const out: Finding[] = [];
  for (const raw of findings) {
    if (typeof raw !== "object" || raw === null) return null;
    const { asn, code, cells, note } = raw as Record<string, unknown>;
    if (typeof asn !== "number" || typeof code !== "string") return null;
    if (!Array.isArray(cells) || typeof note !== "string") return null;
    const pairs: [number, number][] = [];
    for (const cell of cells) {
      if (!isNumberArray(cell) || cell.length !== 2) return null;
      pairs.push([cell[0] as number, cell[1] as number]);
    }
    out.push({ asn, code, cells: pairs, note });
  }
  return { findings: out };
}

export function asPathPayload(value: unknown): PathPayload | null {
  if (typeof value !== "object" || value === null) return null;
  const data = value as Record<string, unknown>;
  const { src, dst, asns, labels, outcome } = data;
  if (typeof src !== "number" || typeof dst !== "number") return null;
  if (!isNumberArray(asns) || !isStringArray(labels)) return null;
  if (typeof data.valley_free !== "boolean" || typeof outcome !== "string") {
    return null;
  }
  return { src, dst, asns, labels, valley_free: data.valley_free, outcome };
}

/** What the grid actually draws: cell colors plus per-row and per-column
 * badges derived from the diagnosis. A finding badges the row of its AS
 * when all its evidence cells start there (the AS cannot reach out) and
 * the column when they all end there (nobody reaches the AS). */
export interface MatrixViewModel {
  asns: number[];
  cells: string[][];
  round: number;
  rowBadges: Map<number, string[]>;
  columnBadges: Map<number, string[]>;
}

function addBadge(badges: Map<number, string[]>, asn: number, code: string): void {
  const codes = badges.get(asn) ?? [];
  if (!codes.includes(code)) codes.push(code);
  badges.set(asn, codes);
}

export function buildMatrixViewModel(
  matrix: MatrixPayload,
  diagnosis: DiagnosisPayload | null,
): MatrixViewModel {
  const rowBadges = new Map<number, string[]>();
  const columnBadges = new Map<number, string[]>();
  for (const finding of diagnosis?.findings ?? []) {
    if (finding.cells.length === 0) continue;
    if (finding.cells.every(([src]) => src === finding.asn)) {
      addBadge(rowBadges, finding.asn, finding.code);
    }
    if (finding.cells.every(([, dst]) => dst === finding.asn)) {
      addBadge(columnBadges, finding.asn, finding.code);
    }
  }
  return { ...matrix, rowBadges, columnBadges };
}
