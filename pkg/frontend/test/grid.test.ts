/** The grid diffs successive polls instead of rebuilding the table:
 * identical payloads touch nothing, a changed payload repaints exactly
 * the changed cells and keeps every DOM node in place. */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { MatrixGrid } from "../src/grid";

function fixture(name: string): unknown {
  const url = join(process.cwd(), "test", "fixtures", name);
  return JSON.parse(readFileSync(url, "utf-8"));
}

const green = () => fixture("matrix-green-6.json");
const greenDiag = () => fixture("diagnosis-green-6.json");
const redColumn = () => fixture("matrix-red-column.json");
const redColumnDiag = () => fixture("diagnosis-red-column.json");

describe("MatrixGrid", () => {
  it("renders fully once, then leaves an unchanged matrix alone", () => {
    const grid = new MatrixGrid();
    expect(grid.apply(green(), greenDiag())).toBe(-1);
    expect(grid.root.querySelectorAll(".cell").length).toBe(36);

    const before = grid.root.querySelector('td[data-src="1"][data-dst="5"]');
    expect(grid.apply(green(), greenDiag())).toBe(0);
    expect(grid.root.querySelectorAll(".pulse").length).toBe(0);
    const after = grid.root.querySelector('td[data-src="1"][data-dst="5"]');
    expect(after).toBe(before);
  });

  it("repaints exactly the cells that changed", () => {
    const grid = new MatrixGrid();
    grid.apply(green(), greenDiag());
    const table = grid.root.querySelector("table");
    const untouched = grid.root.querySelector('td[data-src="1"][data-dst="2"]');
    const flipped = grid.root.querySelector('td[data-src="1"][data-dst="5"]');

    expect(grid.apply(redColumn(), redColumnDiag())).toBe(5);

    expect(grid.root.querySelector("table")).toBe(table);
    expect(grid.root.querySelector('td[data-src="1"][data-dst="2"]')).toBe(untouched);
    expect(untouched?.className).toBe("cell green");
    expect(grid.root.querySelector('td[data-src="1"][data-dst="5"]')).toBe(flipped);
    expect(flipped?.className).toBe("cell red pulse");

    const pulsed = [...grid.root.querySelectorAll(".pulse")];
    expect(pulsed.length).toBe(5);
    for (const cell of pulsed) {
      expect((cell as HTMLElement).dataset.dst).toBe("5");
    }
    expect(grid.root.querySelector(".round")?.textContent).toBe("round 2");
    const column = grid.root.querySelector('th.dst[data-asn="5"]');
    expect(column?.querySelector(".badge")?.textContent).toBe("MissingEbgp");
  });

  it("repaints a single flipped cell and nothing else", () => {
    const grid = new MatrixGrid();
    grid.apply(green(), greenDiag());
    expect(grid.apply(fixture("matrix-one-flip.json"), fixture("diagnosis-one-flip.json"))).toBe(1);
    const pulsed = grid.root.querySelectorAll<HTMLElement>(".pulse");
    expect(pulsed.length).toBe(1);
    expect(pulsed[0]?.dataset.src).toBe("1");
    expect(pulsed[0]?.dataset.dst).toBe("5");
    expect(pulsed[0]?.className).toBe("cell red pulse");
    const row = grid.root.querySelector('th.src[data-asn="1"]');
    expect(row?.querySelector(".badge")?.textContent).toBe("PolicyAsymmetry");
  });

  it("clears the previous pulse on the next poll", () => {
    const grid = new MatrixGrid();
    grid.apply(green(), greenDiag());
    grid.apply(redColumn(), redColumnDiag());
    expect(grid.apply(redColumn(), redColumnDiag())).toBe(0);
    expect(grid.root.querySelectorAll(".pulse").length).toBe(0);
    const column = grid.root.querySelector('th.dst[data-asn="5"]');
    expect(column?.querySelector(".badge")?.textContent).toBe("MissingEbgp");
  });

  it("drops the badge when the diagnosis clears", () => {
    const grid = new MatrixGrid();
    grid.apply(redColumn(), redColumnDiag());
    expect(grid.apply(green(), greenDiag())).toBe(5);
    expect(grid.root.querySelectorAll(".badge").length).toBe(0);
  });

  it("re-renders from scratch when the AS set changes", () => {
    const grid = new MatrixGrid();
    grid.apply(green(), greenDiag());
    const table = grid.root.querySelector("table");
    expect(grid.apply(fixture("matrix-green-20.json"), null)).toBe(-1);
    expect(grid.root.querySelector("table")).not.toBe(table);
    expect(grid.root.querySelectorAll(".cell").length).toBe(400);
  });

  it("replaces the grid with a banner on a malformed payload", () => {
    const grid = new MatrixGrid();
    grid.apply(green(), greenDiag());
    expect(grid.apply({ asns: [1], cells: [] }, null)).toBe(-1);
    expect(grid.root.querySelector(".error-banner")).not.toBeNull();
    expect(grid.root.querySelectorAll(".cell").length).toBe(0);
  });
});
