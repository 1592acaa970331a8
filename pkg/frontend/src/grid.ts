/** Owns the matrix element between polls and applies payload diffs to
 * it: unchanged cells are left alone (same DOM nodes), changed cells get
 * their color swapped plus a one-poll highlight pulse, and badges and
 * the round tag are refreshed in place. A shape change, or anything that
 * fails validation, falls back to a full render. */

import { renderMatrix, cellClass, CellHandler, errorBanner } from "./render";
import {
  asMatrixPayload,
  asDiagnosisPayload,
  buildMatrixViewModel,
  MatrixPayload,
} from "./types";

function sameAsns(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((value, index) => value === b[index]);
}

export class MatrixGrid {
  readonly root: HTMLElement;
  private current: MatrixPayload | null = null;

  constructor(private onCell?: CellHandler) {
    this.root = document.createElement("div");
    this.root.className = "matrix-host";
  }

  /** Returns how many cells were re-rendered; -1 means a full render. */
  apply(payload: unknown, diagnosis: unknown = null): number {
    const matrix = asMatrixPayload(payload);
    if (matrix === null) {
      this.current = null;
      this.root.replaceChildren(errorBanner("unexpected /matrix payload"));
      return -1;
    }
    if (this.current === null || !sameAsns(this.current.asns, matrix.asns)) {
      this.root.replaceChildren(renderMatrix(payload, diagnosis, this.onCell));
      this.current = matrix;
      return -1;
    }

    for (const pulsed of this.root.querySelectorAll(".pulse")) {
      pulsed.classList.remove("pulse");
    }
    let changed = 0;
    matrix.asns.forEach((src, i) => {
      matrix.asns.forEach((dst, j) => {
        const status = matrix.cells[i]![j]!;
        if (status === this.current!.cells[i]![j]!) return;
        const cell = this.root.querySelector<HTMLElement>(
          `td[data-src="${src}"][data-dst="${dst}"]`,
        );
        if (cell === null) return;
        cell.className = `${cellClass(status, src === dst)} pulse`;
        changed += 1;
      });
    });

    const round = this.root.querySelector(".round");
    if (round) round.textContent = `round ${matrix.round}`;
    this.refreshBadges(matrix, diagnosis);
    this.current = matrix;
    return changed;
  }

  private refreshBadges(matrix: MatrixPayload, diagnosis: unknown): void {
    const view = buildMatrixViewModel(matrix, asDiagnosisPayload(diagnosis));
    for (const header of this.root.querySelectorAll<HTMLElement>("th[data-asn]")) {
      for (const badge of header.querySelectorAll(".badge")) badge.remove();
      const asn = Number(header.dataset.asn);
      const codes = header.classList.contains("dst")
        ? view.columnBadges.get(asn)
        : view.rowBadges.get(asn);
      for (const code of codes ?? []) {
        const badge = document.createElement("span");
        badge.className = "badge";
        badge.textContent = code;
        header.append(badge);
      }
    }
  }
}
