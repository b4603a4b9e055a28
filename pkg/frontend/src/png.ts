/** PNG backend: a small software rasterizer plus a from-scratch PNG encoder
 * (RGB8, filter 0, zlib via node's deflate). No native canvas, no timestamps:
 * the same scene always encodes to the same bytes. */

import * as zlib from "zlib";

import { DrawOp, Scene } from "./chart";
import { GLYPH_H, GLYPH_W, glyphFor, textWidth } from "./font";

class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array; // RGB, 3 bytes per pixel

  constructor(width: number, height: number) {
    this.width = Math.round(width);
    this.height = Math.round(height);
    this.data = new Uint8Array(this.width * this.height * 3);
  }

  set(x: number, y: number, rgb: [number, number, number]): void {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) return;
    const at = (yi * this.width + xi) * 3;
    this.data[at] = rgb[0];
    this.data[at + 1] = rgb[1];
    this.data[at + 2] = rgb[2];
  }

  fillRect(x: number, y: number, w: number, h: number, rgb: [number, number, number]): void {
    for (let yy = Math.round(y); yy < Math.round(y + h); yy++) {
      for (let xx = Math.round(x); xx < Math.round(x + w); xx++) {
        this.set(xx, yy, rgb);
      }
    }
  }

  line(x1: number, y1: number, x2: number, y2: number, width: number,
       rgb: [number, number, number]): void {
    // Bresenham; line width is faked by stamping a small square per step.
    let x = Math.round(x1);
    let y = Math.round(y1);
    const xe = Math.round(x2);
    const ye = Math.round(y2);
    const dx = Math.abs(xe - x);
    const dy = -Math.abs(ye - y);
    const sx = x < xe ? 1 : -1;
    const sy = y < ye ? 1 : -1;
    let err = dx + dy;
    const r = Math.max(0, Math.floor(width / 2));
    for (;;) {
      if (r === 0) {
        this.set(x, y, rgb);
      } else {
        this.fillRect(x - r, y - r, 2 * r + 1, 2 * r + 1, rgb);
      }
      if (x === xe && y === ye) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
    }
  }

  text(x: number, y: number, text: string, scale: number,
       anchor: "start" | "middle" | "end", rgb: [number, number, number]): void {
    const w = textWidth(text, scale);
    let left = Math.round(x);
    if (anchor === "middle") left -= Math.round(w / 2);
    if (anchor === "end") left -= w;
    const top = Math.round(y) - GLYPH_H * scale; // y is the text baseline
    for (const ch of text) {
      const glyph = glyphFor(ch);
      for (let col = 0; col < GLYPH_W; col++) {
        for (let row = 0; row < GLYPH_H; row++) {
          if ((glyph[col] >> row) & 1) {
            this.fillRect(left + col * scale, top + row * scale, scale, scale, rgb);
          }
        }
      }
      left += (GLYPH_W + 1) * scale;
    }
  }
}

function hexToRgb(hex: string): [number, number, number] {
  const h = hex.replace("#", "");
  return [
    parseInt(h.slice(0, 2), 16),
    parseInt(h.slice(2, 4), 16),
    parseInt(h.slice(4, 6), 16),
  ];
}

function drawOp(raster: Raster, op: DrawOp): void {
  switch (op.op) {
    case "rect":
      raster.fillRect(op.x, op.y, op.w, op.h, hexToRgb(op.fill));
      break;
    case "line":
      raster.line(op.x1, op.y1, op.x2, op.y2, op.width, hexToRgb(op.stroke));
      break;
    case "polyline": {
      const rgb = hexToRgb(op.stroke);
      for (let i = 1; i < op.points.length; i++) {
        raster.line(
          op.points[i - 1][0], op.points[i - 1][1],
          op.points[i][0], op.points[i][1], op.width, rgb,
        );
      }
      break;
    }
    case "text": {
      const scale = op.size >= 14 ? 2 : 1;
      raster.text(op.x, op.y, op.text, scale, op.anchor, hexToRgb(op.color));
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// PNG encoding

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Buffer): number {
  let c = 0xffffffff;
  for (const byte of buf) {
    c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, body: Buffer): Buffer {
  const len = Buffer.alloc(4);
  len.writeUInt32BE(body.length);
  const typed = Buffer.concat([Buffer.from(type, "ascii"), body]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(typed));
  return Buffer.concat([len, typed, crc]);
}

export function encodePng(width: number, height: number, rgb: Uint8Array): Buffer {
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // color type: truecolor RGB
  ihdr[10] = 0; // compression
  ihdr[11] = 0; // filter
  ihdr[12] = 0; // interlace
  const stride = width * 3;
  const raw = Buffer.alloc((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0; // filter type 0 per scanline
    raw.set(rgb.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  const idat = zlib.deflateSync(raw, { level: 9 });
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

export function renderPng(scene: Scene): Buffer {
  const raster = new Raster(scene.width, scene.height);
  raster.fillRect(0, 0, scene.width, scene.height, hexToRgb(scene.background));
  for (const op of scene.ops) {
    drawOp(raster, op);
  }
  return encodePng(raster.width, raster.height, raster.data);
}

/** Test helper: decode a filter-0 RGB PNG produced by encodePng. */
export function decodePngForTest(png: Buffer): { width: number; height: number; rgb: Buffer } {
  const width = png.readUInt32BE(16);
  const height = png.readUInt32BE(20);
  let offset = 8;
  const idatParts: Buffer[] = [];
  while (offset < png.length) {
    const len = png.readUInt32BE(offset);
    const type = png.subarray(offset + 4, offset + 8).toString("ascii");
    if (type === "IDAT") {
      idatParts.push(png.subarray(offset + 8, offset + 8 + len));
    }
    offset += 12 + len;
  }
  const raw = zlib.inflateSync(Buffer.concat(idatParts));
  const stride = width * 3;
  const rgb = Buffer.alloc(stride * height);
  for (let y = 0; y < height; y++) {
    if (raw[y * (stride + 1)] !== 0) {
      throw new Error("unexpected scanline filter");
    }
    raw.copy(rgb, y * stride, y * (stride + 1) + 1, (y + 1) * (stride + 1));
  }
  return { width, height, rgb };
}
