/** Cluster View: per-variable density histograms, one polyline per cluster,
 * highlighting the selected cluster. */

import { HistogramPayload } from "../api.js";
import { clusterColor, linearScale } from "../scales.js";
import { h, text } from "../svg.js";

const PANEL_WIDTH = 220;
const PANEL_HEIGHT = 90;

export interface ClusterHistogramModel {
  payload: HistogramPayload;
  selectedCluster: number | null;
}

export function densities(counts: number[]): number[] {
  const total = counts.reduce((a, b) => a + b, 0);
  if (total === 0) return counts.map(() => 0);
  return counts.map((c) => c / total);
}

export function renderClusterHistograms(model: ClusterHistogramModel): string {
  const panels = Object.entries(model.payload.variables).map(([name, hist]) => {
    const edges = hist.bin_edges;
    const x = linearScale([edges[0], edges[edges.length - 1]], [30, PANEL_WIDTH - 8]);
    const allDensities = Object.values(hist.clusters).map(densities);
    const yMax = Math.max(...allDensities.flat(), 1e-9);
    const y = linearScale([0, yMax], [PANEL_HEIGHT - 18, 8]);

    const lines = Object.entries(hist.clusters).map(([clusterId, counts]) => {
      const cluster = Number(clusterId);
      const dens = densities(counts);
      const pts = dens
        .map((d, i) => `${x((edges[i] + edges[i + 1]) / 2).toFixed(1)},${y(d).toFixed(1)}`)
        .join(" ");
      const selected = model.selectedCluster === cluster;
      const dimmed = model.selectedCluster !== null && !selected;
      return h("polyline", {
        points: pts,
        fill: "none",
        stroke: clusterColor(cluster),
        "stroke-width": selected ? 2.5 : 1.25,
        opacity: dimmed ? 0.25 : 1,
        class: selected ? "hist-line selected" : "hist-line",
        "data-cluster": cluster,
      });
    });
    return h(
      "svg",
      { width: PANEL_WIDTH, height: PANEL_HEIGHT, class: "cluster-histogram", "data-variable": text(name) },
      h("text", { x: 4, y: 12, "font-size": 10 }, text(name)),
      lines,
    );
  });
  return h("div", { class: "cluster-view" }, panels);
}
