/** Map View: choropleth of the selected variable plus one glyph per
 * cluster (inner radar of normalized cluster means, outer closed cardinal
 * curve over the 16 spillover sectors). Clicking a glyph broadcasts the
 * cluster selection. */

import { ChoroplethPayload, GeometryPayload, GlyphEntry, GlyphPayload } from "../api.js";
import { clusterColor, linearScale, sequentialColor } from "../scales.js";
import { closedCurvePath, h, polygonPath, text } from "../svg.js";

export interface MapModel {
  geometry: GeometryPayload;
  choropleth: ChoroplethPayload | null;
  glyphs: GlyphPayload | null;
  width: number;
  height: number;
  selectedCluster: number | null;
}

interface Projector {
  x: (lon: number) => number;
  y: (lat: number) => number;
}

function lonLatBounds(geometry: GeometryPayload): [number, number, number, number] {
  let minLon = Infinity;
  let maxLon = -Infinity;
  let minLat = Infinity;
  let maxLat = -Infinity;
  for (const feature of geometry.features) {
    for (const ring of ringsOf(feature.geometry)) {
      for (const [lon, lat] of ring) {
        minLon = Math.min(minLon, lon);
        maxLon = Math.max(maxLon, lon);
        minLat = Math.min(minLat, lat);
        maxLat = Math.max(maxLat, lat);
      }
    }
  }
  return [minLon, minLat, maxLon, maxLat];
}

function ringsOf(geometry: { type: string; coordinates: unknown }): [number, number][][] {
  if (geometry.type === "Polygon") return geometry.coordinates as [number, number][][];
  if (geometry.type === "MultiPolygon") {
    return (geometry.coordinates as [number, number][][][]).flat();
  }
  return [];
}

function makeProjector(geometry: GeometryPayload, width: number, height: number): Projector {
  const [minLon, minLat, maxLon, maxLat] = lonLatBounds(geometry);
  const pad = 8;
  return {
    x: linearScale([minLon, maxLon], [pad, width - pad]),
    y: linearScale([maxLat, minLat], [pad, height - pad]), // north up
  };
}

export function renderMap(model: MapModel): string {
  const projector = makeProjector(model.geometry, model.width, model.height);
  const values = new Map<string, number | null>();
  if (model.choropleth) {
    model.choropleth.unit_ids.forEach((uid, i) => values.set(uid, model.choropleth!.normalized[i]));
  }

  const polygons = model.geometry.features.map((feature) => {
    const uid = feature.properties.unit_id;
    const cluster = feature.properties.cluster ?? -1;
    const value = values.get(uid);
    const fill = model.choropleth ? sequentialColor(value === null || value === undefined ? NaN : value) : "#e8e8e8";
    const dim =
      model.selectedCluster !== null && cluster >= 0 && cluster !== model.selectedCluster;
    const rings = ringsOf(feature.geometry);
    const path = rings
      .map(
        (ring) =>
          "M " +
          ring.map(([lon, lat]) => `${projector.x(lon).toFixed(2)} ${projector.y(lat).toFixed(2)}`).join(" L ") +
          " Z",
      )
      .join(" ");
    return h("path", {
      d: path,
      fill,
      opacity: dim ? 0.35 : 1,
      stroke: "#ffffff",
      "stroke-width": 0.5,
      class: "map-unit",
      "data-unit": text(uid),
      "data-cluster": cluster,
    });
  });

  const glyphs = model.glyphs
    ? model.glyphs.clusters.map((entry) =>
        renderGlyph(entry, projector, model.glyphs!, model.selectedCluster),
      )
    : [];

  return h(
    "svg",
    { width: model.width, height: model.height, class: "map-view" },
    polygons,
    glyphs,
  );
}

const GLYPH_RADIUS = 34;
const RADAR_RADIUS = 16;

/** Radii of the outer curve, normalized against the strongest sector of
 * any cluster so curves are comparable across glyphs. */
export function spilloverRadii(entry: GlyphEntry, payload: GlyphPayload): number[] {
  const globalMax = Math.max(...payload.clusters.flatMap((c) => c.spillover), 1e-12);
  return entry.spillover.map((v) => (RADAR_RADIUS + 2) + (v / globalMax) * (GLYPH_RADIUS - RADAR_RADIUS - 2));
}

export function sectorPoint(center: [number, number], sector: number, radius: number): [number, number] {
  // Sector 0 = North, clockwise; SVG y grows downward.
  const angle = (sector * 22.5 * Math.PI) / 180;
  return [center[0] + radius * Math.sin(angle), center[1] - radius * Math.cos(angle)];
}

function renderGlyph(
  entry: GlyphEntry,
  projector: Projector,
  payload: GlyphPayload,
  selectedCluster: number | null,
): string {
  const [lon, lat] = entry.representative;
  const center: [number, number] = [projector.x(lon), projector.y(lat)];
  const radii = spilloverRadii(entry, payload);
  const curvePoints = radii.map((r, sector) => sectorPoint(center, sector, r));
  const selected = selectedCluster === entry.cluster;

  const radarValues = entry.radar.values;
  const radarPoints = radarValues.map((v, i) => {
    const angle = (i / radarValues.length) * 2 * Math.PI;
    const r = 3 + v * (RADAR_RADIUS - 3);
    return [center[0] + r * Math.sin(angle), center[1] - r * Math.cos(angle)] as [number, number];
  });

  return h(
    "g",
    {
      class: selected ? "cluster-glyph selected" : "cluster-glyph",
      "data-cluster": entry.cluster,
    },
    h("path", {
      d: closedCurvePath(curvePoints),
      fill: clusterColor(entry.cluster),
      "fill-opacity": 0.25,
      stroke: clusterColor(entry.cluster),
      "stroke-width": selected ? 3 : 1.5,
    }),
    h("polygon", {
      points: polygonPath(radarPoints),
      fill: clusterColor(entry.cluster),
      "fill-opacity": 0.7,
      stroke: "#333333",
      "stroke-width": 0.75,
    }),
    h("circle", { cx: center[0], cy: center[1], r: 2, fill: "#333333" }),
  );
}
