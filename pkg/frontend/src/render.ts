/** Pure DOM builders: every function maps a payload to a fresh element
 * and nothing else. State, polling, and diffing live elsewhere. */

import {
  asMatrixPayload,
  asDiagnosisPayload,
  asPathPayload,
  buildMatrixViewModel,
} from "./types";

export function errorBanner(message: string): HTMLElement {
  const banner = document.createElement("div");
  banner.className = "error-banner";
  banner.textContent = message;
  return banner;
}

function badgeSpan(code: string): HTMLElement {
  const badge = document.createElement("span");
  badge.className = "badge";
  badge.textContent = code;
  return badge;
}

export type CellHandler = (src: number, dst: number) => void;

/** The shared health page: one row per source AS, one column per
 * destination, the diagonal marked, findings badged onto their row or
 * column header. An invalid payload renders as a banner and nothing
 * else; an empty one as a placeholder. */
export function renderMatrix(
  payload: unknown,
  diagnosis: unknown = null,
  onCell?: CellHandler,
): HTMLElement {
  const matrix = asMatrixPayload(payload);
  if (matrix === null) return errorBanner("unexpected /matrix payload");
  if (matrix.asns.length === 0) {
    const placeholder = document.createElement("div");
    placeholder.className = "placeholder";
    placeholder.textContent = "no data";
    return placeholder;
  }
  const view = buildMatrixViewModel(matrix, asDiagnosisPayload(diagnosis));

  const root = document.createElement("div");
  root.className = "matrix";
  const round = document.createElement("div");
  round.className = "round";
  round.textContent = `round ${view.round}`;
  root.append(round);

  const table = document.createElement("table");
  table.className = "grid";
  const head = table.createTHead().insertRow();
  head.append(document.createElement("th"));
  for (const dst of view.asns) {
    const th = document.createElement("th");
    th.className = "dst";
    th.dataset.asn = String(dst);
    th.textContent = String(dst);
    for (const code of view.columnBadges.get(dst) ?? []) th.append(badgeSpan(code));
    head.append(th);
  }
  const body = table.createTBody();
  view.asns.forEach((src, i) => {
    const row = body.insertRow();
    const header = document.createElement("th");
    header.className = "src";
    header.dataset.asn = String(src);
    header.textContent = String(src);
    for (const code of view.rowBadges.get(src) ?? []) header.append(badgeSpan(code));
    row.append(header);
    view.asns.forEach((dst, j) => {
      const cell = row.insertCell();
      cell.className = cellClass(view.cells[i]![j]!, src === dst);
      cell.dataset.src = String(src);
      cell.dataset.dst = String(dst);
      cell.title = `${src} -> ${dst}`;
      if (onCell) cell.addEventListener("click", () => onCell(src, dst));
    });
  });
  root.append(table);
  return root;
}

export function cellClass(status: string, diagonal: boolean): string {
  const color = status === "g" ? "green" : "red";
  return diagonal ? `cell ${color} diagonal` : `cell ${color}`;
}

/** AS-level forwarding path with the business label of every crossing. */
export function renderPath(payload: unknown): HTMLElement {
  const path = asPathPayload(payload);
  if (path === null) return errorBanner("unexpected /path payload");
  const root = document.createElement("div");
  root.className = "path";
  const title = document.createElement("div");
  title.className = "endpoints";
  title.textContent = `AS ${path.src} to AS ${path.dst}: ${path.outcome}`;
  root.append(title);
  const hops = document.createElement("div");
  hops.className = "hops";
  path.asns.forEach((asn, index) => {
    if (index > 0) {
      const label = document.createElement("span");
      label.className = "label";
      label.textContent = ` -${path.labels[index - 1] ?? "?"}-> `;
      hops.append(label);
    }
    const node = document.createElement("span");
    node.className = "as";
    node.textContent = `AS ${asn}`;
    hops.append(node);
  });
  root.append(hops);
  const valley = document.createElement("span");
  valley.className = path.valley_free ? "valley ok" : "valley violated";
  valley.textContent = path.valley_free ? "valley-free" : "valley violation";
  root.append(valley);
  return root;
}

/** Monospaced looking-glass panel with a live substring filter. The text
 * is rendered verbatim, one span per line, and the filter only hides
 * lines, so clearing it restores the original view. */
export function renderLookingGlass(text: string): HTMLElement {
  const root = document.createElement("div");
  root.className = "lg";
  const filter = document.createElement("input");
  filter.className = "filter";
  filter.placeholder = "filter, e.g. 5.0.0.0";
  const pre = document.createElement("pre");
  pre.className = "lg-text";
  const lines = text.split(/(?<=\n)/);
  for (const line of lines) {
    const span = document.createElement("span");
    span.className = "line";
    span.textContent = line;
    pre.append(span);
  }
  filter.addEventListener("input", () => {
    const needle = filter.value;
    for (const span of pre.querySelectorAll<HTMLElement>(".line")) {
      const matches = needle === "" || (span.textContent ?? "").includes(needle);
      span.classList.toggle("hidden", !matches);
    }
  });
  root.append(filter, pre);
  return root;
}
