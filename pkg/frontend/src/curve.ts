// Learning-curve panel: plain SVG line of test F1 against labeled-pool
// size, with the warm-up -> hot transition marker and an optional
// supervised-baseline reference line supplied by the server.

import type { MetricsBody } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface CurveLayout {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_LAYOUT: CurveLayout = { width: 480, height: 240, pad: 32 };

export function renderCurve(
  doc: Document,
  metrics: MetricsBody,
  layout: CurveLayout = DEFAULT_LAYOUT,
): SVGSVGElement {
  const { width, height, pad } = layout;
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "learning-curve");

  const points = metrics.series.points;
  if (points.length === 0) {
    const text = doc.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(width / 2));
    text.setAttribute("y", String(height / 2));
    text.setAttribute("class", "placeholder");
    text.textContent = "no evaluations yet";
    svg.append(text);
    return svg;
  }

  const xMax = Math.max(...points.map((p) => p.x));
  const toX = (x: number) => pad + ((width - 2 * pad) * x) / xMax;
  const toY = (f1: number) => height - pad - (height - 2 * pad) * f1;

  // axes
  for (const [x1, y1, x2, y2] of [
    [pad, height - pad, width - pad, height - pad],
    [pad, pad, pad, height - pad],
  ]) {
    const axis = doc.createElementNS(SVG_NS, "line");
    axis.setAttribute("x1", String(x1));
    axis.setAttribute("y1", String(y1));
    axis.setAttribute("x2", String(x2));
    axis.setAttribute("y2", String(y2));
    axis.setAttribute("class", "axis");
    svg.append(axis);
  }

  if (metrics.baseline_f1 !== null) {
    const ref = doc.createElementNS(SVG_NS, "line");
    ref.setAttribute("x1", String(pad));
    ref.setAttribute("x2", String(width - pad));
    ref.setAttribute("y1", String(toY(metrics.baseline_f1)));
    ref.setAttribute("y2", String(toY(metrics.baseline_f1)));
    ref.setAttribute("class", "baseline");
    svg.append(ref);
  }

  const hot = metrics.annotations.find((a) => a.phase === "hot");
  if (hot && hot.pool_size <= xMax) {
    const marker = doc.createElementNS(SVG_NS, "line");
    marker.setAttribute("x1", String(toX(hot.pool_size)));
    marker.setAttribute("x2", String(toX(hot.pool_size)));
    marker.setAttribute("y1", String(pad));
    marker.setAttribute("y2", String(height - pad));
    marker.setAttribute("class", "phase-marker");
    svg.append(marker);
  }

  const line = doc.createElementNS(SVG_NS, "polyline");
  line.setAttribute(
    "points",
    points.map((p) => `${toX(p.x)},${toY(p.f1)}`).join(" "),
  );
  line.setAttribute("class", "f1-line");
  svg.append(line);

  for (const p of points) {
    const dot = doc.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", String(toX(p.x)));
    dot.setAttribute("cy", String(toY(p.f1)));
    dot.setAttribute("r", "3");
    dot.setAttribute("class", "f1-point");
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = `pool ${p.x}: F1 ${p.f1.toFixed(3)}`;
    dot.append(title);
    svg.append(dot);
  }
  return svg;
}
