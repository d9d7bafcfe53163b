// ── self-contained PNG rasterizer ──
//
// Renders a scene to an RGB raster (no antialiasing, bitmap text) and
// encodes it as a PNG by hand: IHDR/IDAT/IEND chunks with CRC32, scanlines
// deflated via node:zlib.  No image libraries, no system fonts, and no
// hidden state — the same scene always encodes to the same bytes.

import { deflateSync } from "node:zlib";
import { GLYPH_H, GLYPH_W, glyphFor } from "./font.js";
import { Scene, SceneItem } from "./svg.js";

type Rgb = [number, number, number];

function parseColor(color: string): Rgb {
  const match = /^#([0-9a-fA-F]{6})$/.exec(color);
  if (!match) {
    // non-hex colors are not used by the chart builders; fail visibly
    return [255, 0, 255];
  }
  const value = parseInt(match[1] as string, 16);
  return [(value >> 16) & 0xff, (value >> 8) & 0xff, value & 0xff];
}

class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, background: Rgb) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 3);
    for (let i = 0; i < width * height; i++) {
      this.data[i * 3] = background[0];
      this.data[i * 3 + 1] = background[1];
      this.data[i * 3 + 2] = background[2];
    }
  }

  set(x: number, y: number, rgb: Rgb): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) {
      return;
    }
    const offset = (y * this.width + x) * 3;
    this.data[offset] = rgb[0];
    this.data[offset + 1] = rgb[1];
    this.data[offset + 2] = rgb[2];
  }

  fillRect(x: number, y: number, w: number, h: number, rgb: Rgb): void {
    const x0 = Math.round(x);
    const y0 = Math.round(y);
    const x1 = Math.round(x + w);
    const y1 = Math.round(y + h);
    for (let py = y0; py < Math.max(y1, y0 + 1); py++) {
      for (let px = x0; px < Math.max(x1, x0 + 1); px++) {
        this.set(px, py, rgb);
      }
    }
  }

  stamp(x: number, y: number, size: number, rgb: Rgb): void {
    const start = Math.floor(size / 2);
    for (let dy = 0; dy < size; dy++) {
      for (let dx = 0; dx < size; dx++) {
        this.set(Math.round(x) - start + dx, Math.round(y) - start + dy, rgb);
      }
    }
  }

  line(x0: number, y0: number, x1: number, y1: number, width: number, rgb: Rgb): void {
    const size = Math.max(1, Math.round(width));
    const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0)) * 2);
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      this.stamp(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, size, rgb);
    }
  }

  text(
    x: number,
    y: number,
    content: string,
    size: number,
    anchor: "start" | "middle" | "end",
    rgb: Rgb,
  ): void {
    const scale = Math.max(1, Math.round(size / GLYPH_H));
    const advance = (GLYPH_W + 1) * scale;
    const textWidth = content.length * advance - scale;
    let left = Math.round(x);
    if (anchor === "middle") {
      left -= Math.round(textWidth / 2);
    } else if (anchor === "end") {
      left -= textWidth;
    }
    const top = Math.round(y) - GLYPH_H * scale + scale; // y is the baseline
    for (const char of content) {
      const glyph = glyphFor(char);
      for (let row = 0; row < GLYPH_H; row++) {
        const bits = glyph[row] as number;
        for (let col = 0; col < GLYPH_W; col++) {
          if ((bits >> (GLYPH_W - 1 - col)) & 1) {
            this.fillRect(left + col * scale, top + row * scale, scale, scale, rgb);
          }
        }
      }
      left += advance;
    }
  }
}

function drawItem(raster: Raster, item: SceneItem): void {
  if (item.kind === "rect") {
    if (item.fill !== undefined && item.fill !== "none") {
      raster.fillRect(item.x, item.y, item.width, item.height, parseColor(item.fill));
    }
    if (item.stroke !== undefined) {
      const rgb = parseColor(item.stroke);
      const w = item.strokeWidth ?? 1;
      raster.line(item.x, item.y, item.x + item.width, item.y, w, rgb);
      raster.line(item.x + item.width, item.y, item.x + item.width, item.y + item.height, w, rgb);
      raster.line(item.x + item.width, item.y + item.height, item.x, item.y + item.height, w, rgb);
      raster.line(item.x, item.y + item.height, item.x, item.y, w, rgb);
    }
  } else if (item.kind === "polyline") {
    const rgb = parseColor(item.color);
    for (let i = 1; i < item.points.length; i++) {
      const [x0, y0] = item.points[i - 1] as [number, number];
      const [x1, y1] = item.points[i] as [number, number];
      raster.line(x0, y0, x1, y1, item.width, rgb);
    }
  } else {
    raster.text(item.x, item.y, item.text, item.size, item.anchor, parseColor(item.color));
  }
}

// ── PNG encoding ──

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

function crc32(data: Uint8Array): number {
  let crc = 0xffffffff;
  for (const byte of data) {
    crc = (CRC_TABLE[(crc ^ byte) & 0xff] as number) ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Buffer {
  const body = Buffer.concat([Buffer.from(type, "ascii"), data]);
  const out = Buffer.alloc(body.length + 8);
  out.writeUInt32BE(data.length, 0);
  body.copy(out, 4);
  out.writeUInt32BE(crc32(body), body.length + 4);
  return out;
}

function encodePng(raster: Raster): Buffer {
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(raster.width, 0);
  ihdr.writeUInt32BE(raster.height, 4);
  ihdr.writeUInt8(8, 8); // bit depth
  ihdr.writeUInt8(2, 9); // color type: truecolor RGB
  ihdr.writeUInt8(0, 10); // compression
  ihdr.writeUInt8(0, 11); // filter
  ihdr.writeUInt8(0, 12); // interlace

  const stride = raster.width * 3;
  const scanlines = Buffer.alloc((stride + 1) * raster.height);
  for (let y = 0; y < raster.height; y++) {
    scanlines[y * (stride + 1)] = 0; // filter type 0 per scanline
    scanlines.set(raster.data.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }

  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(scanlines, { level: 9 })),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

export function renderPng(scene: Scene): Buffer {
  const raster = new Raster(
    Math.ceil(scene.width),
    Math.ceil(scene.height),
    parseColor(scene.background),
  );
  for (const item of scene.extras) {
    drawItem(raster, item);
  }
  for (const panel of scene.panels) {
    for (const item of panel.items) {
      drawItem(raster, item);
    }
  }
  return encodePng(raster);
}
