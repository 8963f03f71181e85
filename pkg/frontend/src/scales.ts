/** Color and position scales shared by all views. */

export function linearScale(domain: [number, number], range: [number, number]): (v: number) => number {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

// Light yellow (lowest) to dark red (highest); stops sampled from the
// conventional YlOrRd sequential ramp.
const RAMP: [number, number, number][] = [
  [255, 255, 204],
  [255, 237, 160],
  [254, 217, 118],
  [254, 178, 76],
  [253, 141, 60],
  [252, 78, 42],
  [227, 26, 28],
  [189, 0, 38],
  [128, 0, 38],
];

export function sequentialColor(t: number): string {
  if (!Number.isFinite(t)) return "#d4d4d4"; // missing values stay neutral
  const clamped = Math.max(0, Math.min(1, t));
  const pos = clamped * (RAMP.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.min(lo + 1, RAMP.length - 1);
  const f = pos - lo;
  const mix = RAMP[lo].map((c, i) => Math.round(c + f * (RAMP[hi][i] - c)));
  return `rgb(${mix[0]},${mix[1]},${mix[2]})`;
}

// Categorical palette keyed by cluster id; stable across views so a cluster
// keeps its hue everywhere.
const CLUSTER_PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#b07aa1",
  "#76b7b2",
  "#edc948",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
];

export function clusterColor(cluster: number): string {
  if (cluster < 0) return "#cccccc";
  return CLUSTER_PALETTE[cluster % CLUSTER_PALETTE.length];
}
