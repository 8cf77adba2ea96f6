/** OFPF v1 writer/reader, byte-exact little-endian:
 *  "OFPF" | version u32 = 1 | dim u32 | count u32 | records of
 *  x,y,w,h u32*4, score f32, dim f32 feature values. No padding. */

import { Proposal } from './proposals';

export const OFPF_MAGIC = Buffer.from('OFPF', 'ascii');
export const OFPF_VERSION = 1;

export function writeOfpf(proposals: Proposal[], rows: Float32Array[], dim: number): Buffer {
  if (proposals.length !== rows.length) {
    throw new Error(`feature rows (${rows.length}) != proposals (${proposals.length})`);
  }
  const recordBytes = 4 * 4 + 4 + 4 * dim;
  const out = Buffer.alloc(OFPF_MAGIC.length + 12 + recordBytes * proposals.length);
  OFPF_MAGIC.copy(out, 0);
  let cursor = OFPF_MAGIC.length;
  cursor = out.writeUInt32LE(OFPF_VERSION, cursor);
  cursor = out.writeUInt32LE(dim, cursor);
  cursor = out.writeUInt32LE(proposals.length, cursor);
  for (let i = 0; i < proposals.length; i++) {
    const p = proposals[i];
    const row = rows[i];
    if (row.length !== dim) {
      throw new Error(`row ${i} has ${row.length} values, expected ${dim}`);
    }
    cursor = out.writeUInt32LE(p.x, cursor);
    cursor = out.writeUInt32LE(p.y, cursor);
    cursor = out.writeUInt32LE(p.w, cursor);
    cursor = out.writeUInt32LE(p.h, cursor);
    cursor = out.writeFloatLE(p.score, cursor);
    for (let j = 0; j < dim; j++) {
      cursor = out.writeFloatLE(row[j], cursor);
    }
  }
  return out;
}

export interface OfpfContent {
  dim: number;
  proposals: Proposal[];
  rows: Float32Array[];
}

export function readOfpf(data: Buffer): OfpfContent {
  if (!data.subarray(0, 4).equals(OFPF_MAGIC)) {
    throw new Error(`bad magic ${JSON.stringify(data.subarray(0, 4).toString('ascii'))} (at byte 0)`);
  }
  let cursor = 4;
  const need = (n: number, what: string) => {
    if (cursor + n > data.length) {
      throw new Error(`truncated ${what}: expected ${n} bytes, got ${data.length - cursor} (at byte ${cursor})`);
    }
  };
  need(4, 'version');
  const version = data.readUInt32LE(cursor);
  cursor += 4;
  if (version !== OFPF_VERSION) throw new Error(`unsupported version ${version} (at byte 4)`);
  need(8, 'header');
  const dim = data.readUInt32LE(cursor);
  cursor += 4;
  const count = data.readUInt32LE(cursor);
  cursor += 4;
  const proposals: Proposal[] = [];
  const rows: Float32Array[] = [];
  for (let i = 0; i < count; i++) {
    need(4 * 4 + 4 + 4 * dim, `record ${i}`);
    const x = data.readUInt32LE(cursor);
    const y = data.readUInt32LE(cursor + 4);
    const w = data.readUInt32LE(cursor + 8);
    const h = data.readUInt32LE(cursor + 12);
    const score = data.readFloatLE(cursor + 16);
    cursor += 20;
    const row = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      row[j] = data.readFloatLE(cursor + 4 * j);
    }
    cursor += 4 * dim;
    proposals.push({ x, y, w, h, score });
    rows.push(row);
  }
  if (cursor !== data.length) {
    throw new Error(`${data.length - cursor} trailing bytes (at byte ${cursor})`);
  }
  return { dim, proposals, rows };
}
