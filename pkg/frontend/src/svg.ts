/** Minimal element builder: views emit markup strings, so they stay pure
 * functions of their payloads and run under node without a DOM. */

export type Attrs = Record<string, string | number | boolean | undefined>;

const VOID_HTML = new Set(["br", "hr", "img", "input", "meta", "link"]);

export function h(tag: string, attrs: Attrs = {}, ...children: (string | string[])[]): string {
  const parts: string[] = [];
  for (const [key, value] of Object.entries(attrs)) {
    if (value === undefined || value === false) continue;
    const printed = value === true ? key : String(value);
    parts.push(`${key}="${escapeAttr(printed)}"`);
  }
  const open = parts.length > 0 ? `<${tag} ${parts.join(" ")}` : `<${tag}`;
  const body = children.flat().join("");
  if (body === "" && VOID_HTML.has(tag)) return `${open}/>`;
  return `${open}>${body}</${tag}>`;
}

export function text(value: string | number): string {
  return String(value).replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function escapeAttr(value: string): string {
  return value.replace(/&/g, "&amp;").replace(/"/g, "&quot;").replace(/</g, "&lt;");
}

/** Closed path through points with quadratic smoothing (cardinal-style). */
export function closedCurvePath(points: [number, number][]): string {
  if (points.length < 3) return "";
  const mid = (a: [number, number], b: [number, number]): [number, number] => [
    (a[0] + b[0]) / 2,
    (a[1] + b[1]) / 2,
  ];
  const n = points.length;
  let d = "";
  const start = mid(points[n - 1], points[0]);
  d += `M ${start[0].toFixed(2)} ${start[1].toFixed(2)}`;
  for (let i = 0; i < n; i++) {
    const p = points[i];
    const m = mid(p, points[(i + 1) % n]);
    d += ` Q ${p[0].toFixed(2)} ${p[1].toFixed(2)} ${m[0].toFixed(2)} ${m[1].toFixed(2)}`;
  }
  return d + " Z";
}

export function polygonPath(points: [number, number][]): string {
  return points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
}
