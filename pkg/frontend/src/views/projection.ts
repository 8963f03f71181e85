/** Projection View: one horizontal bar per variable, cells in dendrogram
 * leaf order, sequential light-yellow-to-dark-red fill, cluster segment
 * bars on top. Clicking a bar switches the map variable; the selected
 * cluster's segment is highlighted in every bar. */

import { ProjectionPayload } from "../api.js";
import { clusterColor, sequentialColor } from "../scales.js";
import { h, text } from "../svg.js";

const BAR_HEIGHT = 18;
const SEGMENT_HEIGHT = 6;
const ROW_GAP = 8;
const LABEL_WIDTH = 120;

export interface ProjectionModel {
  payload: ProjectionPayload;
  width: number;
  selectedCluster: number | null;
}

export function renderProjectionBars(model: ProjectionModel): string {
  const { payload, width, selectedCluster } = model;
  const n = payload.n;
  const cellWidth = (width - LABEL_WIDTH) / n;
  const variables = Object.keys(payload.variables);

  const rows: string[] = [];
  variables.forEach((name, rowIndex) => {
    const y0 = rowIndex * (BAR_HEIGHT + SEGMENT_HEIGHT + ROW_GAP);
    const values = payload.variables[name];
    const segments = payload.segments.map(([cluster, startPos, endPos]) =>
      h("rect", {
        x: LABEL_WIDTH + startPos * cellWidth,
        y: y0,
        width: (endPos - startPos) * cellWidth,
        height: SEGMENT_HEIGHT - 1,
        fill: clusterColor(cluster),
        class:
          selectedCluster !== null && cluster === selectedCluster
            ? "cluster-segment selected"
            : "cluster-segment",
        "data-cluster": cluster,
        opacity: selectedCluster === null || cluster === selectedCluster ? 1 : 0.35,
      }),
    );
    const cells = values.map((value, pos) =>
      h("rect", {
        x: LABEL_WIDTH + pos * cellWidth,
        y: y0 + SEGMENT_HEIGHT,
        width: Math.max(cellWidth, 0.5),
        height: BAR_HEIGHT,
        fill: sequentialColor(value === null ? NaN : value),
        class: "projection-cell",
        "data-variable": text(name),
        "data-unit": payload.unit_ids[pos],
      }),
    );
    rows.push(
      h(
        "g",
        { class: "projection-row", "data-variable": text(name) },
        h(
          "text",
          { x: LABEL_WIDTH - 8, y: y0 + SEGMENT_HEIGHT + BAR_HEIGHT / 2 + 4, "text-anchor": "end", "font-size": 11 },
          text(name),
        ),
        ...segments,
        ...cells,
      ),
    );
  });

  const height = variables.length * (BAR_HEIGHT + SEGMENT_HEIGHT + ROW_GAP);
  return h("svg", { width, height, class: "projection-bars" }, rows);
}

/** Cells of one bar in drawn order (for tests and tooltips). */
export function cellOrder(payload: ProjectionPayload): string[] {
  return [...payload.unit_ids];
}
