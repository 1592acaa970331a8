/** Wires the pieces into one page: the polled matrix grid, a path
 * inspector that opens when a cell is clicked, and a looking-glass
 * panel. All data comes from the monitoring API via ApiClient; nothing
 * here mutates the emulator. */

import { ApiClient } from "./client";
import { MatrixGrid } from "./grid";
import { MatrixPoller } from "./poll";
import { errorBanner, renderLookingGlass, renderPath } from "./render";

export interface ConsoleHandles {
  grid: MatrixGrid;
  poller: MatrixPoller;
}

function labelledInput(className: string, placeholder: string): HTMLInputElement {
  const input = document.createElement("input");
  input.className = className;
  input.placeholder = placeholder;
  return input;
}

export function mountConsole(
  root: HTMLElement,
  client: ApiClient,
  intervalMs = 2000,
): ConsoleHandles {
  const staleBadge = document.createElement("span");
  staleBadge.className = "stale hidden";
  staleBadge.textContent = "stale";
  const toolbar = document.createElement("div");
  toolbar.className = "toolbar";
  toolbar.append(staleBadge);

  const pathPanel = document.createElement("div");
  pathPanel.className = "path-panel";
  const grid = new MatrixGrid((src, dst) => {
    client.path(src, dst).then(
      (payload) => pathPanel.replaceChildren(renderPath(payload)),
      () => pathPanel.replaceChildren(errorBanner("path lookup failed")),
    );
  });

  const lgPanel = document.createElement("div");
  lgPanel.className = "lg-panel";
  const asnInput = labelledInput("lg-asn", "AS number");
  const deviceInput = labelledInput("lg-device", "device");
  const viewInput = labelledInput("lg-view", "view");
  viewInput.value = "bgp";
  const showButton = document.createElement("button");
  showButton.className = "lg-show";
  showButton.textContent = "show";
  const lgOutput = document.createElement("div");
  lgOutput.className = "lg-output";
  showButton.addEventListener("click", () => {
    const asn = Number(asnInput.value);
    client.lookingGlass(asn, deviceInput.value, viewInput.value).then(
      (result) => {
        if (result.ok) {
          lgOutput.replaceChildren(renderLookingGlass(result.text));
        } else if (result.status === 404) {
          lgOutput.replaceChildren(errorBanner("unknown device"));
        } else {
          lgOutput.replaceChildren(errorBanner(`error ${result.status}`));
        }
      },
      () => lgOutput.replaceChildren(errorBanner("looking glass unreachable")),
    );
  });
  lgPanel.append(asnInput, deviceInput, viewInput, showButton, lgOutput);

  root.replaceChildren(toolbar, grid.root, pathPanel, lgPanel);

  const poller = new MatrixPoller(
    client,
    {
      update: (matrix, diagnosis) => void grid.apply(matrix, diagnosis),
      stale: (isStale) => staleBadge.classList.toggle("hidden", !isStale),
    },
    intervalMs,
  );
  poller.start();
  return { grid, poller };
}
