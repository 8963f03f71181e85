/** Social Group View: sortable ranking table of per-group model results. */

import { ScanPayload, ScanRow } from "../api.js";
import { h, text } from "../svg.js";

export type SortColumn = "moran_sdm" | "moran_ols" | "r2_ols" | "r2_sdm" | "coverage";

export interface GroupTableModel {
  payload: ScanPayload;
  sortBy: SortColumn;
  descending: boolean;
  selectedGroup: Record<string, string> | null;
}

export function sortRows(rows: ScanRow[], sortBy: SortColumn, descending: boolean): ScanRow[] {
  const value = (row: ScanRow): number => {
    switch (sortBy) {
      case "moran_sdm":
        return row.moran_sdm ? row.moran_sdm.i : -Infinity;
      case "moran_ols":
        return row.moran_ols ? row.moran_ols.i : -Infinity;
      case "r2_ols":
        return row.r2_ols ?? -Infinity;
      case "r2_sdm":
        return row.r2_sdm ?? -Infinity;
      case "coverage":
        return row.coverage;
    }
  };
  const sorted = [...rows].sort((a, b) => value(a) - value(b));
  if (descending) sorted.reverse();
  return sorted;
}

export function renderGroupTable(model: GroupTableModel): string {
  const rows = sortRows(model.payload.rows, model.sortBy, model.descending);
  const header = h(
    "tr",
    {},
    h("th", {}, "group"),
    ...(["moran_ols", "moran_sdm", "r2_ols", "r2_sdm", "coverage"] as SortColumn[]).map((col) =>
      h(
        "th",
        { "data-sort": col, class: model.sortBy === col ? "sorted" : "" },
        col.replace("_", " ") + (model.sortBy === col ? (model.descending ? " ↓" : " ↑") : ""),
      ),
    ),
  );
  const body = rows.map((row) => {
    const selected =
      model.selectedGroup !== null && JSON.stringify(row.group) === JSON.stringify(model.selectedGroup);
    return h(
      "tr",
      {
        class: selected ? "group-row selected" : "group-row",
        "data-group": text(JSON.stringify(row.group)),
      },
      h("td", {}, text(row.label)),
      h("td", {}, row.moran_ols ? row.moran_ols.i.toFixed(4) : "—"),
      h("td", {}, row.moran_sdm ? row.moran_sdm.i.toFixed(4) : "—"),
      h("td", {}, row.r2_ols !== null ? row.r2_ols.toFixed(3) : "—"),
      h("td", {}, row.r2_sdm !== null ? row.r2_sdm.toFixed(3) : "—"),
      h("td", {}, row.coverage.toFixed(2)),
    );
  });
  return h("table", { class: "group-table" }, header, ...body);
}
