import assert from "node:assert/strict";
import { mkdtempSync, writeFileSync, readFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";
import { test } from "node:test";

import { parseResultCsv, SchemaError } from "../src/csv";
import { extractDataLayer, renderFigure } from "../src/figure";
import { buildSeries, main } from "../src/plot";

const HEADER = "snr_db,frames,frame_errors,bit_errors,fer,ber,wall_time_s";

function csvOf(rows: Array<[number, number]>): string {
  const body = rows
    .map(([snr, fer]) => `${snr},1000,${Math.round(fer * 1000)},0,${fer},0.0,1.0`)
    .join("\n");
  return `${HEADER}\n${body}\n`;
}

function tmpFile(name: string, content: string): string {
  const dir = mkdtempSync(path.join(tmpdir(), "plotkit-"));
  const p = path.join(dir, name);
  writeFileSync(p, content);
  return p;
}

test("csv parser round-trips the simulator schema", () => {
  const text =
    `${HEADER}\n` +
    "1.0,58,50,524,0.8620689655172413,0.2823275862068966,0.01231652300020869\n";
  const rows = parseResultCsv(text);
  assert.equal(rows.length, 1);
  assert.equal(rows[0].fer, 0.8620689655172413);
  assert.equal(rows[0].frames, 58);
});

test("csv parser names the offending column", () => {
  assert.throws(
    () => parseResultCsv("snr_db,frames,errors\n1,2,3\n", "x.csv"),
    (e: Error) => e instanceof SchemaError && /frame_errors/.test(e.message)
  );
  assert.throws(
    () => parseResultCsv(`${HEADER}\n1,2,3,4,oops,6,7\n`, "x.csv"),
    (e: Error) => e instanceof SchemaError && /'fer'/.test(e.message)
  );
});

test("single series figure has one marker per point", () => {
  const pts: Array<[number, number]> = [
    [1.0, 0.5],
    [1.5, 0.2],
    [2.0, 0.05],
    [2.5, 0.01],
    [3.0, 0.001],
  ];
  const file = tmpFile("a.csv", csvOf(pts));
  const series = buildSeries([{ file, label: "A" }]);
  const svg = renderFigure(series);
  const markers = svg.match(/class="marker"/g) ?? [];
  assert.equal(markers.length, 5);
});

test("two series produce two legend entries in input order", () => {
  const f1 = tmpFile("a.csv", csvOf([[1, 0.5], [2, 0.1]]));
  const f2 = tmpFile("b.csv", csvOf([[1, 0.4], [2, 0.08]]));
  const series = buildSeries([
    { file: f1, label: "First" },
    { file: f2, label: "Second" },
  ]);
  const svg = renderFigure(series);
  const entries = [...svg.matchAll(/class="legend-entry">([^<]*)</g)].map(
    (m) => m[1]
  );
  assert.deepEqual(entries, ["First", "Second"]);
});

test("data layer round-trips the csv values exactly", () => {
  const pts: Array<[number, number]> = [
    [1.25, 0.8620689655172413],
    [2.0, 0.016371623],
    [2.75, 0.0004211]
  ];
  const file = tmpFile("a.csv", csvOf(pts));
  const rows = parseResultCsv(readFileSync(file, "utf-8"), file);
  const series = buildSeries([{ file, label: "rt" }]);
  const svg = renderFigure(series);
  const layer = extractDataLayer(svg);
  assert.equal(layer.length, 1);
  assert.deepEqual(
    layer[0].points,
    rows.filter((r) => r.fer > 0).map((r) => ({ snr: r.snr_db, fer: r.fer }))
  );
});

test("zero-FER points are dropped with a warning, not clamped", () => {
  const file = tmpFile("a.csv", csvOf([[1, 0.5], [2, 0.0], [3, 0.01]]));
  const warnings: string[] = [];
  const series = buildSeries([{ file, label: "A" }], (m) => warnings.push(m));
  assert.equal(series[0].points.length, 2);
  assert.equal(warnings.length, 1);
  assert.match(warnings[0], /snr=2/);
  const svg = renderFigure(series);
  const markers = svg.match(/class="marker"/g) ?? [];
  assert.equal(markers.length, 2);
});

test("deterministic output for fixed inputs", () => {
  const file = tmpFile("a.csv", csvOf([[1, 0.5], [2, 0.1], [3, 0.02]]));
  const series = buildSeries([{ file, label: "A" }]);
  assert.equal(
    renderFigure(series, { yMin: 1e-6 }),
    renderFigure(series, { yMin: 1e-6 })
  );
});

test("cli writes an svg figure end to end", () => {
  const f1 = tmpFile("a.csv", csvOf([[1, 0.5], [2, 0.1]]));
  const f2 = tmpFile("b.csv", csvOf([[1, 0.3], [2, 0.05]]));
  const out = path.join(path.dirname(f1), "fig.svg");
  const code = main(["--out", out, `${f1}:Run A`, `${f2}:Run B`, "--ymin", "1e-6"]);
  assert.equal(code, 0);
  assert.ok(existsSync(out));
  const svg = readFileSync(out, "utf-8");
  assert.match(svg, /<svg /);
  assert.match(svg, /FER/);
  const layer = extractDataLayer(svg);
  assert.equal(layer.length, 2);
  assert.equal(layer[0].label, "Run A");
});

test("cli reports schema mismatch as a data error", () => {
  const bad = tmpFile("bad.csv", "a,b\n1,2\n");
  const out = path.join(path.dirname(bad), "fig.svg");
  const code = main(["--out", out, `${bad}:Bad`]);
  assert.equal(code, 2);
});
