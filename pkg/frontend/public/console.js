// src/types.ts
var CELL_STATES = /* @__PURE__ */ new Set(["g", "r"]);
function isNumberArray(value) {
  return Array.isArray(value) && value.every((item) => typeof item === "number");
}
function isStringArray(value) {
  return Array.isArray(value) && value.every((item) => typeof item === "string");
}
function asMatrixPayload(value) {
  if (typeof value !== "object" || value === null) return null;
  const { asns, cells, round } = value;
  if (!isNumberArray(asns) || typeof round !== "number") return null;
  if (!Array.isArray(cells) || cells.length !== asns.length) return null;
  for (const row of cells) {
    if (!Array.isArray(row) || row.length !== asns.length) return null;
    if (!row.every((cell) => typeof cell === "string" && CELL_STATES.has(cell))) {
      return null;
    }
  }
  return { asns, cells, round };
}
function asDiagnosisPayload(value) {
  if (typeof value !== "object" || value === null) return null;
  const { findings } = value;
  if (!Array.isArray(findings)) return null;
  const out = [];
  for (const raw of findings) {
    if (typeof raw !== "object" || raw === null) return null;
    const { asn, code, cells, note } = raw;
    if (typeof asn !== "number" || typeof code !== "string") return null;
    if (!Array.isArray(cells) || typeof note !== "string") return null;
    const pairs = [];
    for (const cell of cells) {
      if (!isNumberArray(cell) || cell.length !== 2) return null;
      pairs.push([cell[0], cell[1]]);
    }
    out.push({ asn, code, cells: pairs, note });
  }
  return { findings: out };
}
function asPathPayload(value) {
  if (typeof value !== "object" || value === null) return null;
  const data = value;
  const { src, dst, asns, labels, outcome } = data;
  if (typeof src !== "number" || typeof dst !== "number") return null;
  if (!isNumberArray(asns) || !isStringArray(labels)) return null;
  if (typeof data.valley_free !== "boolean" || typeof outcome !== "string") {
    return null;
  }
  return { src, dst, asns, labels, valley_free: data.valley_free, outcome };
}
function addBadge(badges, asn, code) {
  const codes = badges.get(asn) ?? [];
  if (!codes.includes(code)) codes.push(code);
  badges.set(asn, codes);
}
function buildMatrixViewModel(matrix, diagnosis) {
  const rowBadges = /* @__PURE__ */ new Map();
  const columnBadges = /* @__PURE__ */ new Map();
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

// src/render.ts
function errorBanner(message) {
  const banner = document.createElement("div");
  banner.className = "error-banner";
  banner.textContent = message;
  return banner;
}
function badgeSpan(code) {
  const badge = document.createElement("span");
  badge.className = "badge";
  badge.textContent = code;
  return badge;
}
function renderMatrix(payload, diagnosis = null, onCell) {
  const matrix = asMatrixPayload(payload);
  if (matrix === null) return errorBanner("unexpected /matrix payload");
  if (matrix.asns.length === 0) {
    const placeholder = document.createElement("div");
    placeholder.className = "placeholder";
    placeholder.textContent = "no data";
    return placeholder;
  }
  const view = buildMatrixViewModel(matrix, asDiagnosisPayload(diagnosis));
  const root2 = document.createElement("div");
  root2.className = "matrix";
  const round = document.createElement("div");
  round.className = "round";
  round.textContent = `round ${view.round}`;
  root2.append(round);
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
      cell.className = cellClass(view.cells[i][j], src === dst);
      cell.dataset.src = String(src);
      cell.dataset.dst = String(dst);
      cell.title = `${src} -> ${dst}`;
      if (onCell) cell.addEventListener("click", () => onCell(src, dst));
    });
  });
  root2.append(table);
  return root2;
}
function cellClass(status, diagonal) {
  const color = status === "g" ? "green" : "red";
  return diagonal ? `cell ${color} diagonal` : `cell ${color}`;
}
function renderPath(payload) {
  const path = asPathPayload(payload);
  if (path === null) return errorBanner("unexpected /path payload");
  const root2 = document.createElement("div");
  root2.className = "path";
  const title = document.createElement("div");
  title.className = "endpoints";
  title.textContent = `AS ${path.src} to AS ${path.dst}: ${path.outcome}`;
  root2.append(title);
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
  root2.append(hops);
  const valley = document.createElement("span");
  valley.className = path.valley_free ? "valley ok" : "valley violated";
  valley.textContent = path.valley_free ? "valley-free" : "valley violation";
  root2.append(valley);
  return root2;
}
function renderLookingGlass(text) {
  const root2 = document.createElement("div");
  root2.className = "lg";
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
    for (const span of pre.querySelectorAll(".line")) {
      const matches = needle === "" || (span.textContent ?? "").includes(needle);
      span.classList.toggle("hidden", !matches);
    }
  });
  root2.append(filter, pre);
  return root2;
}

// src/grid.ts
function sameAsns(a, b) {
  return a.length === b.length && a.every((value, index) => value === b[index]);
}
var MatrixGrid = class {
  constructor(onCell) {
    this.onCell = onCell;
    this.root = document.createElement("div");
    this.root.className = "matrix-host";
  }
  onCell;
  root;
  current = null;
  /** Returns how many cells were re-rendered; -1 means a full render. */
  apply(payload, diagnosis = null) {
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
        const status = matrix.cells[i][j];
        if (status === this.current.cells[i][j]) return;
        const cell = this.root.querySelector(
          `td[data-src="${src}"][data-dst="${dst}"]`
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
  refreshBadges(matrix, diagnosis) {
    const view = buildMatrixViewModel(matrix, asDiagnosisPayload(diagnosis));
    for (const header of this.root.querySelectorAll("th[data-asn]")) {
      for (const badge of header.querySelectorAll(".badge")) badge.remove();
      const asn = Number(header.dataset.asn);
      const codes = header.classList.contains("dst") ? view.columnBadges.get(asn) : view.rowBadges.get(asn);
      for (const code of codes ?? []) {
        const badge = document.createElement("span");
        badge.className = "badge";
        badge.textContent = code;
        header.append(badge);
      }
    }
  }
};

// src/poll.ts
var MatrixPoller = class {
  constructor(source, sink, intervalMs = 2e3, maxBackoff = 8) {
    this.source = source;
    this.sink = sink;
    this.intervalMs = intervalMs;
    this.maxBackoff = maxBackoff;
  }
  source;
  sink;
  intervalMs;
  maxBackoff;
  timer = null;
  inFlight = false;
  failures = 0;
  running = false;
  start() {
    if (this.running) return;
    this.running = true;
    void this.tick();
  }
  stop() {
    this.running = false;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }
  schedule() {
    if (!this.running) return;
    const factor = Math.min(2 ** this.failures, this.maxBackoff);
    this.timer = setTimeout(() => void this.tick(), this.intervalMs * factor);
  }
  async tick() {
    this.schedule();
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      const matrix = await this.source.matrix();
      const diagnosis = await this.source.diagnosis();
      this.failures = 0;
      this.sink.stale(false);
      this.sink.update(matrix, diagnosis);
    } catch {
      this.failures += 1;
      if (this.failures >= 2) this.sink.stale(true);
    } finally {
      this.inFlight = false;
    }
  }
};

// src/app.ts
function labelledInput(className, placeholder) {
  const input = document.createElement("input");
  input.className = className;
  input.placeholder = placeholder;
  return input;
}
function mountConsole(root2, client, intervalMs = 2e3) {
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
      () => pathPanel.replaceChildren(errorBanner("path lookup failed"))
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
      () => lgOutput.replaceChildren(errorBanner("looking glass unreachable"))
    );
  });
  lgPanel.append(asnInput, deviceInput, viewInput, showButton, lgOutput);
  root2.replaceChildren(toolbar, grid.root, pathPanel, lgPanel);
  const poller = new MatrixPoller(
    client,
    {
      update: (matrix, diagnosis) => void grid.apply(matrix, diagnosis),
      stale: (isStale) => staleBadge.classList.toggle("hidden", !isStale)
    },
    intervalMs
  );
  poller.start();
  return { grid, poller };
}

// src/client.ts
var ApiClient = class {
  constructor(baseUrl = "", fetchFn = (url) => fetch(url)) {
    this.baseUrl = baseUrl;
    this.fetchFn = fetchFn;
  }
  baseUrl;
  fetchFn;
  log = [];
  get(path) {
    const url = `${this.baseUrl}${path}`;
    this.log.push({ method: "GET", url });
    return this.fetchFn(url);
  }
  async matrix() {
    const res = await this.get("/matrix");
    if (!res.ok) throw new Error(`/matrix returned ${res.status}`);
    return res.json();
  }
  async diagnosis() {
    const res = await this.get("/matrix/diagnosis");
    if (!res.ok) throw new Error(`/matrix/diagnosis returned ${res.status}`);
    return res.json();
  }
  async path(src, dst) {
    const res = await this.get(`/path?src=${src}&dst=${dst}`);
    if (!res.ok) throw new Error(`/path returned ${res.status}`);
    return res.json();
  }
  async lookingGlass(asn, device, view) {
    const res = await this.get(
      `/lg/${asn}/${encodeURIComponent(device)}/${encodeURIComponent(view)}`
    );
    return { ok: res.ok, status: res.status, text: await res.text() };
  }
};

// src/main.ts
var root = document.getElementById("root");
if (root) {
  const api = new URLSearchParams(window.location.search).get("api") ?? "";
  mountConsole(root, new ApiClient(api));
}
