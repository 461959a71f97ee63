/**
 * Minimal deterministic SVG plotting: linear/log axes, polylines, markers,
 * vertical error bars, and arrows. Output is plain text with no timestamps
 * or randomness, so identical inputs render byte-identical files.
 */

export type ScaleKind = "linear" | "log";

export interface Scale {
  kind: ScaleKind;
  domain: [number, number];
  range: [number, number];
}

export function makeScale(kind: ScaleKind, domain: [number, number],
                          range: [number, number]): Scale {
  let [lo, hi] = domain;
  if (kind === "log" && lo <= 0) {
    throw new Error(`log scale needs positive domain, got ${lo}`);
  }
  if (lo === hi) {
    // degenerate domain (single point): pad so the point sits mid-range
    if (kind === "log") {
      lo /= 2;
      hi *= 2;
    } else {
      const pad = Math.max(0.5, Math.abs(lo) * 0.5);
      lo -= pad;
      hi += pad;
    }
  }
  return { kind, domain: [lo, hi], range };
}

export function apply(scale: Scale, x: number): number {
  const [d0, d1] = scale.domain;
  const [r0, r1] = scale.range;
  const t = scale.kind === "log"
    ? (Math.log10(x) - Math.log10(d0)) / (Math.log10(d1) - Math.log10(d0))
    : (x - d0) / (d1 - d0);
  return r0 + t * (r1 - r0);
}

function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  return Number(x.toFixed(3)).toString();
}

function fmtTick(x: number): string {
  const ax = Math.abs(x);
  if (ax !== 0 && (ax >= 1e4 || ax < 1e-3)) return x.toExponential(0);
  return Number(x.toPrecision(4)).toString();
}

export function ticks(scale: Scale, want = 6): number[] {
  const [lo, hi] = scale.domain;
  if (scale.kind === "log") {
    const out: number[] = [];
    const e0 = Math.ceil(Math.log10(lo) - 1e-9);
    const e1 = Math.floor(Math.log10(hi) + 1e-9);
    for (let e = e0; e <= e1; e++) out.push(Math.pow(10, e));
    if (out.length === 0) out.push(lo, hi);
    return out;
  }
  const span = hi - lo;
  const rawStep = span / Math.max(want - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= want) ?? mag * 10;
  const out: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
    out.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return out;
}

export const PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                        "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
                        "#bcbd22", "#e377c2"];

export interface SeriesSpec {
  x: number[];
  y: number[];
  label: string;
  color: string;
  dashed?: boolean;
  markers?: boolean;
  /** symmetric vertical error-bar half-heights, same length as y */
  bars?: number[];
}

export interface PlotSpec {
  width?: number;
  height?: number;
  title: string;
  xLabel: string;
  yLabel: string;
  xKind: ScaleKind;
  yKind: ScaleKind;
  series: SeriesSpec[];
}

const MARGIN = { left: 64, right: 16, top: 28, bottom: 44 };

function finitePoints(s: SeriesSpec, yKind: ScaleKind): Array<[number, number]> {
  const pts: Array<[number, number]> = [];
  for (let i = 0; i < s.x.length; i++) {
    const x = s.x[i];
    const y = s.y[i];
    if (!Number.isFinite(x) || !Number.isFinite(y)) continue;
    if (yKind === "log" && y <= 0) continue;
    pts.push([x, y]);
  }
  return pts;
}

export function renderPlot(spec: PlotSpec): string {
  const width = spec.width ?? 560;
  const height = spec.height ?? 400;
  const allPts = spec.series.map((s) => finitePoints(s, spec.yKind));
  const xs = allPts.flat().map((p) => p[0]);
  const ys = allPts.flat().map((p) => p[1]);
  if (xs.length === 0) {
    throw new Error(`figure '${spec.title}' has no drawable points`);
  }
  const xPos = spec.xKind === "log" ? xs.filter((v) => v > 0) : xs;
  const xScale = makeScale(spec.xKind, [Math.min(...xPos), Math.max(...xPos)],
                           [MARGIN.left, width - MARGIN.right]);
  const yScale = makeScale(spec.yKind, [Math.min(...ys), Math.max(...ys)],
                           [height - MARGIN.bottom, MARGIN.top]);

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`);
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(`<text x="${width / 2}" y="16" font-family="sans-serif" font-size="13" text-anchor="middle">${escapeXml(spec.title)}</text>`);

  // axes
  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = height - MARGIN.bottom;
  const y1 = MARGIN.top;
  for (const t of ticks(xScale)) {
    const px = apply(xScale, t);
    parts.push(`<line x1="${fmt(px)}" y1="${y1}" x2="${fmt(px)}" y2="${y0}" stroke="#eeeeee"/>`);
    parts.push(`<text x="${fmt(px)}" y="${y0 + 16}" font-family="sans-serif" font-size="10" text-anchor="middle">${fmtTick(t)}</text>`);
  }
  for (const t of ticks(yScale)) {
    const py = apply(yScale, t);
    parts.push(`<line x1="${x0}" y1="${fmt(py)}" x2="${x1}" y2="${fmt(py)}" stroke="#eeeeee"/>`);
    parts.push(`<text x="${x0 - 6}" y="${fmt(py + 3)}" font-family="sans-serif" font-size="10" text-anchor="end">${fmtTick(t)}</text>`);
  }
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  parts.push(`<text x="${(x0 + x1) / 2}" y="${height - 8}" font-family="sans-serif" font-size="11" text-anchor="middle">${escapeXml(spec.xLabel)}</text>`);
  parts.push(`<text x="14" y="${(y0 + y1) / 2}" font-family="sans-serif" font-size="11" text-anchor="middle" transform="rotate(-90 14 ${(y0 + y1) / 2})">${escapeXml(spec.yLabel)}</text>`);

  spec.series.forEach((s, k) => {
    const pts = allPts[k];
    if (pts.length === 0) return;
    const coords = pts.map(([px, py]) => `${fmt(apply(xScale, px))},${fmt(apply(yScale, py))}`);
    const dash = s.dashed ? ' stroke-dasharray="6 3"' : "";
    if (pts.length > 1 && !s.markers) {
      parts.push(`<polyline fill="none" stroke="${s.color}" stroke-width="1.5"${dash} points="${coords.join(" ")}"/>`);
    } else {
      for (const c of coords) {
        const [cx, cy] = c.split(",");
        parts.push(`<circle cx="${cx}" cy="${cy}" r="3" fill="${s.color}"/>`);
      }
    }
    if (s.bars) {
      for (let i = 0; i < pts.length; i++) {
        const [px, py] = pts[i];
        const half = s.bars[i];
        if (!Number.isFinite(half) || half <= 0) continue;
        const cx = apply(xScale, px);
        const lo = spec.yKind === "log" ? Math.max(py - half, yScale.domain[0]) : py - half;
        const yTop = apply(yScale, py + half);
        const yBot = apply(yScale, lo);
        parts.push(`<line x1="${fmt(cx)}" y1="${fmt(yTop)}" x2="${fmt(cx)}" y2="${fmt(yBot)}" stroke="${s.color}" stroke-width="1"/>`);
        parts.push(`<line x1="${fmt(cx - 3)}" y1="${fmt(yTop)}" x2="${fmt(cx + 3)}" y2="${fmt(yTop)}" stroke="${s.color}" stroke-width="1"/>`);
        parts.push(`<line x1="${fmt(cx - 3)}" y1="${fmt(yBot)}" x2="${fmt(cx + 3)}" y2="${fmt(yBot)}" stroke="${s.color}" stroke-width="1"/>`);
      }
    }
  });

  // legend
  spec.series.forEach((s, k) => {
    const ly = y1 + 14 * k + 4;
    parts.push(`<line x1="${x1 - 150}" y1="${ly}" x2="${x1 - 126}" y2="${ly}" stroke="${s.color}" stroke-width="2"${s.dashed ? ' stroke-dasharray="6 3"' : ""}/>`);
    parts.push(`<text x="${x1 - 120}" y="${ly + 3}" font-family="sans-serif" font-size="10">${escapeXml(s.label)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Static grid quiver: one arrow per cell pointing along its action. */
export function renderQuiver(title: string, gridWidth: number, gridHeight: number,
                             angles: Array<number | null>, cellMask: number[]): string {
  const cell = 36;
  const width = gridWidth * cell + 32;
  const height = gridHeight * cell + 48;
  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`);
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(`<text x="${width / 2}" y="18" font-family="sans-serif" font-size="13" text-anchor="middle">${escapeXml(title)}</text>`);
  const areaColors = ["#ffffff", "#fdd3d0", "#d0e4fd", "#d4f7d0"];
  for (let r = 0; r < gridHeight; r++) {
    for (let c = 0; c < gridWidth; c++) {
      const s = r * gridWidth + c;
      const x = 16 + c * cell;
      const y = 32 + r * cell;
      const fill = areaColors[cellMask[s] ?? 0] ?? "#ffffff";
      parts.push(`<rect x="${x}" y="${y}" width="${cell}" height="${cell}" fill="${fill}" stroke="#cccccc"/>`);
      const angle = angles[s];
      if (angle === null) continue;
      const cx = x + cell / 2;
      const cy = y + cell / 2;
      const len = cell * 0.32;
      const dx = Math.cos(angle) * len;
      const dy = Math.sin(angle) * len;
      parts.push(`<line x1="${fmt(cx - dx)}" y1="${fmt(cy - dy)}" x2="${fmt(cx + dx)}" y2="${fmt(cy + dy)}" stroke="black" stroke-width="1.5"/>`);
      const hx = Math.cos(angle - 2.5) * 5;
      const hy = Math.sin(angle - 2.5) * 5;
      const gx = Math.cos(angle + 2.5) * 5;
      const gy = Math.sin(angle + 2.5) * 5;
      parts.push(`<line x1="${fmt(cx + dx)}" y1="${fmt(cy + dy)}" x2="${fmt(cx + dx + hx)}" y2="${fmt(cy + dy + hy)}" stroke="black" stroke-width="1.5"/>`);
      parts.push(`<line x1="${fmt(cx + dx)}" y1="${fmt(cy + dy)}" x2="${fmt(cx + dx + gx)}" y2="${fmt(cy + dy + gy)}" stroke="black" stroke-width="1.5"/>`);
    }
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
