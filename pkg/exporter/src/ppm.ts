/** Binary PPM (P6, maxval 255) decoding, bit-exact with byte offsets in errors. */

export interface RasterImage {
  width: number;
  height: number;
  /** row-major RGB, 3 bytes per pixel */
  pixels: Uint8Array;
}

const WHITESPACE = new Set([0x20, 0x09, 0x0a, 0x0d, 0x0b, 0x0c]);

export class PpmDecodeError extends Error {
  constructor(message: string, public readonly offset: number) {
    super(`${message} (at byte ${offset})`);
  }
}

function readToken(data: Uint8Array, pos: number): { token: string; end: number } {
  const n = data.length;
  while (pos < n) {
    if (WHITESPACE.has(data[pos])) {
      pos += 1;
    } else if (data[pos] === 0x23 /* '#' */) {
      while (pos < n && data[pos] !== 0x0a) pos += 1;
    } else {
      break;
    }
  }
  if (pos >= n) throw new PpmDecodeError('unexpected end of header', pos);
  const start = pos;
  while (pos < n && !WHITESPACE.has(data[pos])) pos += 1;
  return { token: Buffer.from(data.slice(start, pos)).toString('ascii'), end: pos };
}

function readInt(data: Uint8Array, pos: number, what: string): { value: number; end: number } {
  const { token, end } = readToken(data, pos);
  if (!/^[0-9]+$/.test(token)) {
    throw new PpmDecodeError(`expected ${what}, got ${JSON.stringify(token)}`, end - token.length);
  }
  return { value: parseInt(token, 10), end };
}

export function decodePpm(data: Uint8Array): RasterImage {
  if (data.length < 2 || data[0] !== 0x50 || data[1] !== 0x36) {
    throw new PpmDecodeError('not a P6 PPM', 0);
  }
  let cursor = 2;
  const w = readInt(data, cursor, 'width');
  cursor = w.end;
  const h = readInt(data, cursor, 'height');
  cursor = h.end;
  const maxval = readInt(data, cursor, 'maxval');
  cursor = maxval.end;
  if (w.value < 1 || h.value < 1) throw new PpmDecodeError(`invalid dimensions ${w.value}x${h.value}`, 2);
  if (maxval.value !== 255) {
    throw new PpmDecodeError(`unsupported maxval ${maxval.value}, only 255`, cursor - String(maxval.value).length);
  }
  if (cursor >= data.length || !WHITESPACE.has(data[cursor])) {
    throw new PpmDecodeError('expected single whitespace before pixel payload', cursor);
  }
  cursor += 1;
  const expected = w.value * h.value * 3;
  const available = data.length - cursor;
  if (available < expected) {
    throw new PpmDecodeError(
      `truncated pixel payload: expected ${expected} bytes, got ${available}`,
      data.length,
    );
  }
  if (available > expected) {
    throw new PpmDecodeError(`${available - expected} trailing bytes after pixel payload`, cursor + expected);
  }
  return { width: w.value, height: h.value, pixels: data.slice(cursor) };
}

export function encodePpm(image: RasterImage): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, 'ascii');
  return Buffer.concat([header, Buffer.from(image.pixels)]);
}
