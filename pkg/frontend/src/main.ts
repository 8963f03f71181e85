/** Browser bootstrap: wires the six views to the state bus and the API.
 *
 * The analysis loop: pick variables (correlation matrix) -> fit + scan
 * groups -> pick the group to localize -> regionalize -> explore clusters
 * through the projection bars, map glyphs, histograms, and the detail view.
 * All statistics come from API payloads; the client only renders.
 */

import { ApiClient, GlyphPayload, ProjectionPayload } from "./api.js";
import { StateBus } from "./state.js";
import { renderClusterHistograms } from "./views/clusters.js";
import { renderParallelSets } from "./views/detail.js";
import { renderGroupTable, SortColumn } from "./views/groups.js";
import { renderMap } from "./views/map.js";
import { renderProjectionBars } from "./views/projection.js";
import { renderVariableView } from "./views/variables.js";

const api = new ApiClient("");
const bus = new StateBus();

let sortBy: SortColumn = "moran_sdm";
let sortDescending = true;

const el = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing container #${id}`);
  return node;
};

async function start(): Promise<void> {
  const datasets = await (await fetch("/api/v1/datasets")).json();
  const name = datasets.datasets[0];
  const session = await api.createSession(name);
  const meta = await api.variables(session.session_id);
  bus.setSession(session.session_id, meta.variables);
  await refreshVariableView();
}

function sid(): string {
  const id = bus.current.sessionId;
  if (!id) throw new Error("no session");
  return id;
}

async function refreshVariableView(): Promise<void> {
  const payload = await api.correlation(sid());
  el("variable-view").innerHTML = renderVariableView({
    payload,
    selected: bus.current.selectedVariables,
  });
}

async function runScan(): Promise<void> {
  await api.setSpec(sid(), { independents: bus.current.selectedVariables, include_wy: true });
  const meta = await api.variables(sid());
  const { job } = await api.groupScan(sid(), meta.demographic);
  setStatus("scanning social groups…");
  await api.waitForJob(sid(), job.job_id);
  setStatus("");
  await refreshGroupTable();
}

async function refreshGroupTable(): Promise<void> {
  const payload = await api.scan(sid());
  el("group-view").innerHTML = renderGroupTable({
    payload,
    sortBy,
    descending: sortDescending,
    selectedGroup: bus.current.selectedGroup,
  });
}

async function runLocalPipeline(): Promise<void> {
  const { job } = await api.fitLocal(sid());
  setStatus("fitting local model…");
  await api.waitForJob(sid(), job.job_id);
  await api.regionalize(sid(), bus.current.k);
  setStatus("");
  await refreshResultViews();
}

let projectionCache: ProjectionPayload | null = null;
let glyphCache: GlyphPayload | null = null;

async function refreshResultViews(): Promise<void> {
  const [projection, glyphs, histograms, geometry] = await Promise.all([
    api.projection(sid()),
    api.glyphs(sid()),
    api.histograms(sid()),
    api.geometry(sid()),
  ]);
  projectionCache = projection;
  glyphCache = glyphs;
  const mapVariable = bus.current.mapVariable ?? Object.keys(projection.variables)[0];
  const choropleth = await api.choropleth(sid(), mapVariable);

  el("projection-view").innerHTML = renderProjectionBars({
    payload: projection,
    width: el("projection-view").clientWidth || 900,
    selectedCluster: bus.current.selectedCluster,
  });
  el("map-view").innerHTML = renderMap({
    geometry,
    choropleth,
    glyphs,
    width: 520,
    height: 420,
    selectedCluster: bus.current.selectedCluster,
  });
  el("cluster-view").innerHTML = renderClusterHistograms({
    payload: histograms,
    selectedCluster: bus.current.selectedCluster,
  });
  await refreshDetailView();
}

async function refreshDetailView(): Promise<void> {
  const cluster = bus.current.selectedCluster;
  if (cluster === null) {
    el("detail-view").innerHTML = "<p class='hint'>click a glyph to inspect a cluster</p>";
    return;
  }
  const [sample, rep] = await Promise.all([
    api.parallelSets(sid(), cluster, 200, 1),
    api.representative(sid(), cluster),
  ]);
  el("detail-view").innerHTML = renderParallelSets({
    payload: sample,
    representative: rep.coordinate,
  });
}

function setStatus(message: string): void {
  el("status").textContent = message;
}

// One selection event fans out to every dependent view exactly once.
bus.subscribe((_state, event) => {
  if (event.kind === "cluster") {
    void refreshResultViews();
  }
  if (event.kind === "map-variable") {
    void refreshResultViews();
  }
  if (event.kind === "variables") {
    void refreshVariableView();
  }
});

document.addEventListener("click", (raw) => {
  const target = raw.target as HTMLElement;
  const glyph = target.closest<SVGGElement>("g.cluster-glyph");
  if (glyph) {
    bus.selectCluster(Number(glyph.dataset.cluster));
    return;
  }
  const segment = target.closest<SVGRectElement>("rect.cluster-segment");
  if (segment) {
    bus.selectCluster(Number(segment.dataset.cluster));
    return;
  }
  const cell = target.closest<SVGRectElement>("rect.projection-cell");
  if (cell && cell.dataset.variable) {
    bus.setMapVariable(cell.dataset.variable);
    return;
  }
  const row = target.closest<HTMLTableRowElement>("tr.group-row");
  if (row && row.dataset.group) {
    const group = JSON.parse(row.dataset.group) as Record<string, string>;
    void (async () => {
      await api.selectGroup(sid(), group);
      bus.selectGroup(group);
      await runLocalPipeline();
      await refreshGroupTable();
    })();
    return;
  }
  const header = target.closest<HTMLTableCellElement>("th[data-sort]");
  if (header && header.dataset.sort) {
    const column = header.dataset.sort as SortColumn;
    sortDescending = column === sortBy ? !sortDescending : true;
    sortBy = column;
    void refreshGroupTable();
    return;
  }
  const fit = target.closest<HTMLButtonElement>("button[data-action='set-spec']");
  if (fit && !fit.disabled) {
    void runScan();
  }
});

document.addEventListener("change", (raw) => {
  const input = raw.target as HTMLInputElement;
  if (input.matches("input[data-variable]")) {
    const picked = new Set(bus.current.selectedVariables);
    if (input.checked) picked.add(input.dataset.variable!);
    else picked.delete(input.dataset.variable!);
    bus.setSelectedVariables([...picked].sort());
  }
  if (input.matches("input#k-input")) {
    const k = Number(input.value);
    if (Number.isInteger(k) && k >= 1) {
      bus.setK(k);
      void (async () => {
        await api.regionalize(sid(), k);
        await refreshResultViews();
      })();
    }
  }
});

void start();

export { projectionCache, glyphCache };
