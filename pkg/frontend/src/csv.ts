/**
 * Reader for the simulator's result CSV files.
 *
 * Expected schema (exact header):
 *   snr_db,frames,frame_errors,bit_errors,fer,ber,wall_time_s
 */

export interface ResultRow {
  snr_db: number;
  frames: number;
  frame_errors: number;
  bit_errors: number;
  fer: number;
  ber: number;
  wall_time_s: number;
}

export const CSV_COLUMNS = [
  "snr_db",
  "frames",
  "frame_errors",
  "bit_errors",
  "fer",
  "ber",
  "wall_time_s",
] as const;

export class SchemaError extends Error {}

/** Parse a result CSV, rejecting schema mismatches by column name. */
export function parseResultCsv(text: string, source = "<csv>"): ResultRow[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file`);
  }
  const header = lines[0].split(",");
  for (let i = 0; i < CSV_COLUMNS.length; i++) {
    if (header[i] !== CSV_COLUMNS[i]) {
      throw new SchemaError(
        `${source}: expected column ${i + 1} to be '${CSV_COLUMNS[i]}', ` +
          `found '${header[i] ?? "<missing>"}'`
      );
    }
  }
  if (header.length !== CSV_COLUMNS.length) {
    throw new SchemaError(
      `${source}: unexpected extra column '${header[CSV_COLUMNS.length]}'`
    );
  }
  const rows: ResultRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== CSV_COLUMNS.length) {
      throw new SchemaError(`${source}: bad row '${line}'`);
    }
    const nums = parts.map((p, i) => {
      const v = Number(p);
      if (!Number.isFinite(v)) {
        throw new SchemaError(
          `${source}: column '${CSV_COLUMNS[i]}' has non-numeric value '${p}'`
        );
      }
      return v;
    });
    rows.push({
      snr_db: nums[0],
      frames: nums[1],
      frame_errors: nums[2],
      bit_errors: nums[3],
      fer: nums[4],
      ber: nums[5],
      wall_time_s: nums[6],
    });
  }
  return rows;
}
