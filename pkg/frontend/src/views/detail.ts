/** Detail View: parallel sets over the demographic dimensions plus the
 * behavior, strand widths proportional to sampled pseudo-individual counts,
 * and an external-imagery link for the cluster's representative coordinate. */

import { Individual, ParallelSetsPayload } from "../api.js";
import { clusterColor } from "../scales.js";
import { h, text } from "../svg.js";

const WIDTH = 460;
const HEIGHT = 230;
const AXIS_GAP = 18;

export interface ParallelSetsModel {
  payload: ParallelSetsPayload;
  representative: [number, number] | null;
}

interface AxisLayout {
  dimension: string;
  categories: { name: string; count: number; y0: number; y1: number }[];
}

export function categoryOf(ind: Individual, dimension: string, behavior: string): string {
  if (dimension === behavior) return ind[behavior] ? "yes" : "no";
  return String(ind[dimension]);
}

/** Per-axis category extents with heights proportional to counts. */
export function axisLayout(payload: ParallelSetsPayload, height = HEIGHT): AxisLayout[] {
  const dims = [...payload.attributes, payload.behavior];
  const m = payload.individuals.length;
  return dims.map((dimension) => {
    const counts = new Map<string, number>();
    for (const ind of payload.individuals) {
      const cat = categoryOf(ind, dimension, payload.behavior);
      counts.set(cat, (counts.get(cat) ?? 0) + 1);
    }
    const names = [...counts.keys()].sort();
    let offset = 0;
    const usable = height - AXIS_GAP * Math.max(names.length - 1, 0);
    const categories = names.map((name) => {
      const count = counts.get(name)!;
      const extent = (count / m) * usable;
      const entry = { name, count, y0: offset, y1: offset + extent };
      offset += extent + AXIS_GAP;
      return entry;
    });
    return { dimension, categories };
  });
}

/** Strand widths between adjacent axes, keyed "left>right", in individuals. */
export function strandCounts(payload: ParallelSetsPayload): Map<string, number>[] {
  const dims = [...payload.attributes, payload.behavior];
  const out: Map<string, number>[] = [];
  for (let d = 0; d + 1 < dims.length; d++) {
    const counts = new Map<string, number>();
    for (const ind of payload.individuals) {
      const key = `${categoryOf(ind, dims[d], payload.behavior)}>${categoryOf(ind, dims[d + 1], payload.behavior)}`;
      counts.set(key, (counts.get(key) ?? 0) + 1);
    }
    out.push(counts);
  }
  return out;
}

export function renderParallelSets(model: ParallelSetsModel): string {
  const payload = model.payload;
  const axes = axisLayout(payload);
  const strands = strandCounts(payload);
  const m = payload.individuals.length;
  const axisX = axes.map((_, i) => 40 + (i * (WIDTH - 80)) / Math.max(axes.length - 1, 1));

  const axisMarks = axes.flatMap((axis, i) =>
    axis.categories.map((cat) =>
      h(
        "g",
        { class: "ps-axis-category", "data-dimension": text(axis.dimension), "data-category": text(cat.name) },
        h("rect", {
          x: axisX[i] - 4,
          y: cat.y0,
          width: 8,
          height: Math.max(cat.y1 - cat.y0, 0.5),
          fill: "#555555",
        }),
        h(
          "text",
          { x: axisX[i] + 8, y: (cat.y0 + cat.y1) / 2 + 3, "font-size": 9 },
          `${text(cat.name)} (${cat.count})`,
        ),
      ),
    ),
  );

  const ribbons: string[] = [];
  strands.forEach((counts, d) => {
    const left = axes[d];
    const right = axes[d + 1];
    const usedLeft = new Map<string, number>();
    const usedRight = new Map<string, number>();
    const keys = [...counts.keys()].sort();
    for (const key of keys) {
      const [lcat, rcat] = key.split(">");
      const count = counts.get(key)!;
      const leftCat = left.categories.find((c) => c.name === lcat)!;
      const rightCat = right.categories.find((c) => c.name === rcat)!;
      const lOff = usedLeft.get(lcat) ?? 0;
      const rOff = usedRight.get(rcat) ?? 0;
      const lSpan = ((leftCat.y1 - leftCat.y0) * count) / leftCat.count;
      const rSpan = ((rightCat.y1 - rightCat.y0) * count) / rightCat.count;
      const y0l = leftCat.y0 + lOff;
      const y0r = rightCat.y0 + rOff;
      usedLeft.set(lcat, lOff + lSpan);
      usedRight.set(rcat, rOff + rSpan);
      const x0 = axisX[d] + 4;
      const x1 = axisX[d + 1] - 4;
      const mid = (x0 + x1) / 2;
      ribbons.push(
        h("path", {
          d:
            `M ${x0} ${y0l} C ${mid} ${y0l} ${mid} ${y0r} ${x1} ${y0r} ` +
            `L ${x1} ${y0r + rSpan} C ${mid} ${y0r + rSpan} ${mid} ${y0l + lSpan} ${x0} ${y0l + lSpan} Z`,
          fill: "#8da0cb",
          "fill-opacity": 0.55,
          class: "ps-strand",
          "data-count": count,
          "data-key": text(key),
        }),
      );
    }
  });

  const link =
    model.representative !== null
      ? h(
          "a",
          {
            class: "street-link",
            href: `https://www.openstreetmap.org/?mlat=${model.representative[1]}&mlon=${model.representative[0]}#map=17/${model.representative[1]}/${model.representative[0]}`,
            target: "_blank",
          },
          `imagery near (${model.representative[1].toFixed(4)}, ${model.representative[0].toFixed(4)})`,
        )
      : "";

  return h(
    "div",
    { class: "detail-view", "data-cluster": payload.cluster },
    h(
      "svg",
      { width: WIDTH, height: HEIGHT + 10, class: "parallel-sets" },
      h("rect", {
        x: 0,
        y: 0,
        width: 6,
        height: HEIGHT,
        fill: clusterColor(payload.cluster),
      }),
      ribbons,
      axisMarks,
    ),
    h("p", { class: "sample-note" }, `${m} sampled individuals (seed ${payload.seed})`),
    link,
  );
}
