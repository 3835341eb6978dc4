/**
 * Semilog FER figure renderer.
 *
 * Log-scale y axis over FER decades, linear x axis in dB, one marked and
 * labeled curve per series, grid and legend.  The rendered SVG embeds a
 * machine-readable data layer (a <metadata> JSON block plus data-* point
 * attributes) so plotted values can be recovered exactly; output is a
 * deterministic function of the input.
 */

export interface SeriesData {
  label: string;
  /** (snr_db, fer) pairs with fer > 0, in input order. */
  points: Array<{ snr: number; fer: number }>;
}

export interface FigureOptions {
  yMin?: number; // default 1e-6
  yMax?: number; // default 1
  width?: number;
  height?: number;
  title?: string;
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARKERS = ["circle", "square", "diamond", "triangle"] as const;

const MARGIN = { left: 64, right: 16, top: 28, bottom: 44 };

function fmt(v: number): string {
  // fixed-precision coordinates keep the output stable across platforms
  return v.toFixed(2);
}

export function renderFigure(series: SeriesData[], opts: FigureOptions = {}): string {
  if (series.length === 0) {
    throw new Error("at least one series is required");
  }
  const width = opts.width ?? 720;
  const height = opts.height ?? 500;
  const yMin = opts.yMin ?? 1e-6;
  const yMax = opts.yMax ?? 1.0;
  if (!(yMin > 0) || !(yMax > yMin)) {
    throw new Error("need 0 < ymin < ymax for a log axis");
  }

  const xs = series.flatMap((s) => s.points.map((p) => p.snr));
  if (xs.length === 0) {
    throw new Error("no plottable points (all FER values were zero?)");
  }
  let xMin = Math.min(...xs);
  let xMax = Math.max(...xs);
  if (xMin === xMax) {
    xMin -= 0.5;
    xMax += 0.5;
  }

  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const x = (snr: number) =>
    MARGIN.left + ((snr - xMin) / (xMax - xMin)) * plotW;
  const logMin = Math.log10(yMin);
  const logMax = Math.log10(yMax);
  const y = (fer: number) =>
    MARGIN.top + ((logMax - Math.log10(fer)) / (logMax - logMin)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`
  );
  parts.push(
    `<metadata id="fer-data">${escapeXml(
      JSON.stringify(series.map((s) => ({ label: s.label, points: s.points })))
    )}</metadata>`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  if (opts.title) {
    parts.push(
      `<text x="${width / 2}" y="18" text-anchor="middle" font-size="14">` +
        `${escapeXml(opts.title)}</text>`
    );
  }

  // grid + y decade labels
  for (let d = Math.ceil(logMin); d <= Math.floor(logMax); d++) {
    const v = Math.pow(10, d);
    const yy = y(v);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(yy)}" x2="${width - MARGIN.right}" ` +
        `y2="${fmt(yy)}" stroke="#ddd" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(yy + 4)}" text-anchor="end">` +
        `1e${d}</text>`
    );
  }
  // x ticks: whole or half dB depending on span
  const span = xMax - xMin;
  const step = span > 6 ? 1.0 : 0.5;
  for (let v = Math.ceil(xMin / step) * step; v <= xMax + 1e-9; v += step) {
    const xx = x(v);
    parts.push(
      `<line x1="${fmt(xx)}" y1="${MARGIN.top}" x2="${fmt(xx)}" ` +
        `y2="${height - MARGIN.bottom}" stroke="#eee" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${fmt(xx)}" y="${height - MARGIN.bottom + 16}" ` +
        `text-anchor="middle">${+v.toFixed(2)}</text>`
    );
  }
  // axes + labels
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" ` +
      `height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 8}" ` +
      `text-anchor="middle">Eb/N0, dB</text>`
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">FER</text>`
  );

  // curves
  series.forEach((s, si) => {
    const color = COLORS[si % COLORS.length];
    const marker = MARKERS[si % MARKERS.length];
    const inRange = s.points.filter((p) => p.fer >= yMin && p.fer <= yMax);
    const path = inRange
      .map((p, i) => `${i === 0 ? "M" : "L"}${fmt(x(p.snr))} ${fmt(y(p.fer))}`)
      .join(" ");
    if (path) {
      parts.push(
        `<path d="${path}" fill="none" stroke="${color}" stroke-width="1.5" ` +
          `class="series" data-label="${escapeXml(s.label)}"/>`
      );
    }
    for (const p of inRange) {
      parts.push(markerShape(marker, x(p.snr), y(p.fer), color, p.snr, p.fer));
    }
  });

  // legend, entries in input order
  const legendX = width - MARGIN.right - 240;
  series.forEach((s, si) => {
    const yy = MARGIN.top + 14 + si * 18;
    const color = COLORS[si % COLORS.length];
    parts.push(
      `<line x1="${legendX}" y1="${yy}" x2="${legendX + 26}" y2="${yy}" ` +
        `stroke="${color}" stroke-width="1.5"/>`
    );
    parts.push(
      `<text x="${legendX + 32}" y="${yy + 4}" class="legend-entry">` +
        `${escapeXml(s.label)}</text>`
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function markerShape(
  kind: (typeof MARKERS)[number],
  cx: number,
  cy: number,
  color: string,
  snr: number,
  fer: number
): string {
  const data = `class="marker" data-snr="${snr}" data-fer="${fer}"`;
  switch (kind) {
    case "circle":
      return `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="3.5" fill="${color}" ${data}/>`;
    case "square":
      return (
        `<rect x="${fmt(cx - 3)}" y="${fmt(cy - 3)}" width="6" height="6" ` +
        `fill="${color}" ${data}/>`
      );
    case "diamond":
      return (
        `<path d="M${fmt(cx)} ${fmt(cy - 4)} L${fmt(cx + 4)} ${fmt(cy)} ` +
        `L${fmt(cx)} ${fmt(cy + 4)} L${fmt(cx - 4)} ${fmt(cy)} Z" ` +
        `fill="${color}" ${data}/>`
      );
    case "triangle":
      return (
        `<path d="M${fmt(cx)} ${fmt(cy - 4)} L${fmt(cx + 4)} ${fmt(cy + 3)} ` +
        `L${fmt(cx - 4)} ${fmt(cy + 3)} Z" fill="${color}" ${data}/>`
      );
  }
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Recover the plotted series from a rendered figure's data layer. */
export function extractDataLayer(svg: string): SeriesData[] {
  const m = svg.match(/<metadata id="fer-data">([\s\S]*?)<\/metadata>/);
  if (!m) {
    throw new Error("no data layer found in figure");
  }
  const json = m[1]
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"')
    .replace(/&amp;/g, "&");
  return JSON.parse(json) as SeriesData[];
}
