import { SweepKind, SweepRow } from "./schema.js";

export interface SeriesStyle {
  label: string;
  color: string;
  marker: "plus" | "square" | "circle" | "triangle";
}

/** Fixed styling so regenerated figures stay visually comparable. */
export const SERIES_STYLES: Record<string, SeriesStyle> = {
  "mad-omp": { label: "MAD-OMP", color: "#1f4fd8", marker: "plus" },
  "pd-omp": { label: "PD-OMP", color: "#d82727", marker: "square" },
  "oracle-ls": { label: "Oracle LS", color: "#1a1a1a", marker: "circle" },
  "pd-zalms": { label: "PD-ZALMS (proposed)", color: "#1d9e3a", marker: "triangle" },
};

const WIDTH = 720;
const HEIGHT = 540;
const MARGIN = { left: 70, right: 20, top: 20, bottom: 55 };

const X_LABEL: Record<SweepKind, string> = {
  snr: "SNR [dB]",
  pilot: "Pilot length",
};

interface Scale {
  min: number;
  max: number;
  toPx(v: number): number;
}

function linearScale(min: number, max: number, pxMin: number, pxMax: number): Scale {
  const span = max - min || 1;
  return {
    min,
    max,
    toPx: (v: number) => pxMin + ((v - min) / span) * (pxMax - pxMin),
  };
}

/** Multiples of `step` covering [min, max]. */
export function tickValues(min: number, max: number, step: number): number[] {
  const first = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= max + 1e-9; v += step) {
    ticks.push(Math.abs(v) < 1e-9 ? 0 : v);
  }
  return ticks;
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function markerSvg(style: SeriesStyle, x: number, y: number): string {
  const r = 4.5;
  switch (style.marker) {
    case "plus":
      return (
        `<path d="M ${x - r} ${y} H ${x + r} M ${x} ${y - r} V ${y + r}" ` +
        `stroke="${style.color}" stroke-width="1.6" fill="none"/>`
      );
    case "square":
      return (
        `<rect x="${x - r + 1}" y="${y - r + 1}" width="${2 * r - 2}" height="${2 * r - 2}" ` +
        `stroke="${style.color}" stroke-width="1.6" fill="none"/>`
      );
    case "circle":
      return `<circle cx="${x}" cy="${y}" r="${r - 1}" stroke="${style.color}" stroke-width="1.6" fill="none"/>`;
    case "triangle":
      return (
        `<path d="M ${x} ${y - r} L ${x + r} ${y + r} L ${x - r} ${y + r} Z" ` +
        `stroke="${style.color}" stroke-width="1.6" fill="none"/>`
      );
  }
}

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(2);
}

/** Render one NMSE sweep figure as an SVG document string. */
export function renderChart(rows: SweepRow[], kind: SweepKind): string {
  const usable = rows.filter((r) => Number.isFinite(r.nmseDb) && Number.isFinite(r.sweepValue));
  if (usable.length === 0) {
    throw new Error("no plottable rows: every nmse_db value is missing");
  }
  const algorithms = [...new Set(rows.map((r) => r.algorithm))];

  const xs = usable.map((r) => r.sweepValue);
  const ys = usable.map((r) => r.nmseDb);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  // dB axis snapped to decades, mirroring the usual presentation.
  const yMin = Math.floor(Math.min(...ys) / 10) * 10;
  const yMax = Math.ceil(Math.max(...ys) / 10) * 10;

  const x = linearScale(xMin, xMax, MARGIN.left, WIDTH - MARGIN.right);
  const y = linearScale(yMin, yMax, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="DejaVu Sans, Helvetica, sans-serif">`
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);

  const plotLeft = MARGIN.left;
  const plotRight = WIDTH - MARGIN.right;
  const plotTop = MARGIN.top;
  const plotBottom = HEIGHT - MARGIN.bottom;

  // grid plus ticks: y gridlines every 10 dB, x at the sampled sweep values
  const yTicks = tickValues(yMin, yMax, 10);
  for (const v of yTicks) {
    const py = y.toPx(v);
    parts.push(
      `<line x1="${plotLeft}" y1="${py}" x2="${plotRight}" y2="${py}" stroke="#d9d9d9" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${plotLeft - 8}" y="${py + 4}" text-anchor="end" font-size="12">${fmt(v)}</text>`
    );
  }
  const xTicks = [...new Set(xs)].sort((a, b) => a - b);
  for (const v of xTicks) {
    const px = x.toPx(v);
    parts.push(
      `<line x1="${px}" y1="${plotTop}" x2="${px}" y2="${plotBottom}" stroke="#ececec" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${px}" y="${plotBottom + 18}" text-anchor="middle" font-size="12">${fmt(v)}</text>`
    );
  }
  parts.push(
    `<rect x="${plotLeft}" y="${plotTop}" width="${plotRight - plotLeft}" ` +
      `height="${plotBottom - plotTop}" fill="none" stroke="#444" stroke-width="1"/>`
  );

  // axis labels
  parts.push(
    `<text x="${(plotLeft + plotRight) / 2}" y="${HEIGHT - 14}" text-anchor="middle" ` +
      `font-size="14">${escapeXml(X_LABEL[kind])}</text>`
  );
  parts.push(
    `<text x="20" y="${(plotTop + plotBottom) / 2}" text-anchor="middle" font-size="14" ` +
      `transform="rotate(-90 20 ${(plotTop + plotBottom) / 2})">NMSE [dB]</text>`
  );

  // series
  for (const algorithm of algorithms) {
    const style = SERIES_STYLES[algorithm] ?? {
      label: algorithm,
      color: "#777777",
      marker: "circle" as const,
    };
    const points = usable
      .filter((r) => r.algorithm === algorithm)
      .sort((a, b) => a.sweepValue - b.sweepValue);
    if (points.length === 0) continue;
    const coords = points.map((p) => [x.toPx(p.sweepValue), y.toPx(p.nmseDb)]);
    if (coords.length > 1) {
      const d = coords.map(([px, py], i) => `${i === 0 ? "M" : "L"} ${px} ${py}`).join(" ");
      parts.push(
        `<path d="${d}" fill="none" stroke="${style.color}" stroke-width="1.8" class="series"/>`
      );
    }
    for (const [px, py] of coords) {
      parts.push(markerSvg(style, px, py));
    }
  }

  // legend, lower-left like the reference figures
  const legendX = plotLeft + 14;
  let legendY = plotBottom - 16 * algorithms.length - 12;
  parts.push(
    `<rect x="${legendX - 6}" y="${legendY - 14}" width="190" height="${16 * algorithms.length + 10}" ` +
      `fill="white" fill-opacity="0.85" stroke="#999" stroke-width="0.7"/>`
  );
  for (const algorithm of algorithms) {
    const style = SERIES_STYLES[algorithm] ?? {
      label: algorithm,
      color: "#777777",
      marker: "circle" as const,
    };
    parts.push(
      `<line x1="${legendX}" y1="${legendY - 4}" x2="${legendX + 22}" y2="${legendY - 4}" ` +
        `stroke="${style.color}" stroke-width="1.8"/>`
    );
    parts.push(markerSvg(style, legendX + 11, legendY - 4));
    parts.push(
      `<text x="${legendX + 28}" y="${legendY}" font-size="12.5" class="legend-label">` +
        `${escapeXml(style.label)}</text>`
    );
    legendY += 16;
  }

  parts.push("</svg>");
  return parts.join("\n");
}
