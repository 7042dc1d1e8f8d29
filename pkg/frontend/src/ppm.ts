/** Decoder for the binary P6 rasters the service streams (base64 over JSON). */

export class PpmError extends Error {}

export interface Raster {
  width: number;
  height: number;
  /** RGBA byte rows, top to bottom — ready for ImageData. */
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

export function base64ToBytes(b64: string): Uint8Array {
  let binary: string;
  try {
    binary = atob(b64);
  } catch (e) {
    throw new PpmError(`bad base64 payload: ${e}`);
  }
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return bytes;
}

const HASH = 0x23; // '#'
const NEWLINE = 0x0a;

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === NEWLINE || byte === 0x0d;
}

export function decodePpm(bytes: Uint8Array): Raster {
  let pos = 0;

  function token(): string {
    while (pos < bytes.length && (isSpace(bytes[pos]) || bytes[pos] === HASH)) {
      if (bytes[pos] === HASH) {
        while (pos < bytes.length && bytes[pos] !== NEWLINE) pos++;
      } else {
        pos++;
      }
    }
    const start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) pos++;
    if (start === pos) throw new PpmError("truncated header");
    return String.fromCharCode(...bytes.subarray(start, pos));
  }

  const magic = token();
  if (magic !== "P6") throw new PpmError(`not a P6 raster (magic ${JSON.stringify(magic)})`);
  const width = dimension(token(), "width");
  const height = dimension(token(), "height");
  const maxval = token();
  if (maxval !== "255") throw new PpmError(`unsupported maxval ${maxval}`);
  pos += 1; // exactly one whitespace byte separates header and pixels

  const need = width * height * 3;
  if (bytes.length - pos < need) {
    throw new PpmError(`pixel payload ${bytes.length - pos} bytes, need ${need}`);
  }
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    rgba[i * 4] = bytes[pos + i * 3];
    rgba[i * 4 + 1] = bytes[pos + i * 3 + 1];
    rgba[i * 4 + 2] = bytes[pos + i * 3 + 2];
    rgba[i * 4 + 3] = 255;
  }
  return { width, height, rgba };
}

export function decodePpmBase64(b64: string): Raster {
  return decodePpm(base64ToBytes(b64));
}

function dimension(text: string, what: string): number {
  if (!/^[0-9]+$/.test(text)) throw new PpmError(`${what} ${JSON.stringify(text)} is not a number`);
  const value = parseInt(text, 10);
  if (value <= 0) throw new PpmError(`${what} must be positive, got ${value}`);
  return value;
}
