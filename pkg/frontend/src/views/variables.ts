/** Variable View: correlation matrix with multicollinearity flags and the
 * variable pick list that feeds the model spec. */

import { CorrelationPayload } from "../api.js";
import { h, text } from "../svg.js";

const CELL = 34;

export interface VariableViewModel {
  payload: CorrelationPayload;
  selected: string[];
}

export function renderVariableView(model: VariableViewModel): string {
  const { payload, selected } = model;
  const names = payload.variables;
  const m = names.length;
  const flaggedPairs = new Set(payload.flagged.flatMap(([a, b]) => [`${a}|${b}`, `${b}|${a}`]));

  const cells: string[] = [];
  for (let row = 0; row < m; row++) {
    for (let col = 0; col < m; col++) {
      const r = payload.matrix[row][col];
      const flagged = flaggedPairs.has(`${names[row]}|${names[col]}`);
      const fill = r === null ? "#eeeeee" : divergingColor(r);
      cells.push(
        h("rect", {
          x: col * CELL,
          y: row * CELL,
          width: CELL - 2,
          height: CELL - 2,
          fill,
          class: flagged ? "corr-cell flagged" : "corr-cell",
          "data-row": names[row],
          "data-col": names[col],
          stroke: flagged ? "#111111" : "none",
          "stroke-width": flagged ? 2 : 0,
        }),
      );
      if (row !== col && r !== null) {
        cells.push(
          h(
            "text",
            {
              x: col * CELL + CELL / 2 - 1,
              y: row * CELL + CELL / 2 + 3,
              "text-anchor": "middle",
              "font-size": 9,
              fill: Math.abs(r) > 0.6 ? "#ffffff" : "#333333",
            },
            r.toFixed(2),
          ),
        );
      }
    }
  }
  const labels = names.map((name, i) =>
    h(
      "text",
      { x: -6, y: i * CELL + CELL / 2 + 3, "text-anchor": "end", "font-size": 10 },
      text(name),
    ),
  );
  const svg = h(
    "svg",
    { width: m * CELL + 80, height: m * CELL + 10, viewBox: `-70 -5 ${m * CELL + 80} ${m * CELL + 10}` },
    cells,
    labels,
  );

  const picks = names.map((name) => {
    const checked = selected.includes(name);
    return h(
      "label",
      { class: "variable-pick" },
      h("input", { type: "checkbox", "data-variable": text(name), checked }),
      text(name),
    );
  });
  const warning =
    payload.flagged.length > 0
      ? h(
          "p",
          { class: "collinearity-warning" },
          `High correlation (|r| ≥ 0.7): ${payload.flagged
            .map(([a, b, r]) => `${a}–${b} (${r.toFixed(2)})`)
            .join(", ")}`,
        )
      : "";
  const fitDisabled = selected.length === 0;
  return h(
    "div",
    { class: "variable-view" },
    svg,
    h("div", { class: "picks" }, picks),
    warning,
    h("button", { class: "fit-action", "data-action": "set-spec", disabled: fitDisabled }, "Fit models"),
  );
}

function divergingColor(r: number): string {
  // Blue (-1) through white (0) to red (+1).
  const t = Math.max(-1, Math.min(1, r));
  const mix = (a: number, b: number, f: number) => Math.round(a + (b - a) * f);
  if (t < 0) {
    const f = 1 + t;
    return `rgb(${mix(33, 247, f)},${mix(102, 247, f)},${mix(172, 247, f)})`;
  }
  const f = t;
  return `rgb(${mix(247, 178, f)},${mix(247, 24, f)},${mix(247, 43, f)})`;
}
