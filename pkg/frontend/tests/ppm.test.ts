import { describe, expect, it } from "vitest";

import { PpmError, base64ToBytes, decodePpm, decodePpmBase64 } from "../src/ppm.js";

function bytesOf(text: string): Uint8Array {
  return Uint8Array.from(text, (c) => c.charCodeAt(0));
}

describe("decodePpm", () => {
  it("decodes a 1x1 white raster", () => {
    const raster = decodePpm(bytesOf("P6\n1 1\n255\n\xff\xff\xff"));
    expect(raster.width).toBe(1);
    expect(raster.height).toBe(1);
    expect(Array.from(raster.rgba)).toEqual([255, 255, 255, 255]);
  });

  it("keeps channel and row order", () => {
    // 2x1: left pixel pure red, right pixel pure green
    const raster = decodePpm(
      bytesOf("P6\n2 1\n255\n\xff\x00\x00\x00\xff\x00"),
    );
    expect(raster.width).toBe(2);
    expect(Array.from(raster.rgba)).toEqual([255, 0, 0, 255, 0, 255, 0, 255]);
  });

  it("skips header comments", () => {
    const raster = decodePpm(bytesOf("P6\n# camera frame\n1 1\n255\n\x01\x02\x03"));
    expect(Array.from(raster.rgba)).toEqual([1, 2, 3, 255]);
  });

  it("rejects non-P6 magic", () => {
    expect(() => decodePpm(bytesOf("P5\n1 1\n255\n\xff"))).toThrow(PpmError);
  });

  it("rejects maxval other than 255", () => {
    expect(() => decodePpm(bytesOf("P6\n1 1\n65535\n\xff\xff\xff"))).toThrow(PpmError);
  });

  it("rejects truncated pixel payloads", () => {
    expect(() => decodePpm(bytesOf("P6\n2 2\n255\n\xff\xff"))).toThrow(/payload/);
  });

  it("rejects zero dimensions and garbage headers", () => {
    expect(() => decodePpm(bytesOf("P6\n0 1\n255\n"))).toThrow(PpmError);
    expect(() => decodePpm(bytesOf("P6\nx 1\n255\n\xff\xff\xff"))).toThrow(PpmError);
    expect(() => decodePpm(bytesOf("P6"))).toThrow(/truncated/);
  });
});

describe("decodePpmBase64", () => {
  it("decodes the wire encoding of a 1x1 white frame", () => {
    // base64 of "P6\n1 1\n255\n" + three 0xff bytes
    const raster = decodePpmBase64("UDYKMSAxCjI1NQr///8=");
    expect(raster.width).toBe(1);
    expect(raster.height).toBe(1);
    expect(Array.from(raster.rgba)).toEqual([255, 255, 255, 255]);
  });

  it("rejects invalid base64", () => {
    expect(() => decodePpmBase64("!!not-base64!!")).toThrow(PpmError);
  });

  it("round-trips bytes through base64ToBytes", () => {
    const bytes = base64ToBytes(Buffer.from([0, 1, 2, 250]).toString("base64"));
    expect(Array.from(bytes)).toEqual([0, 1, 2, 250]);
  });
});
