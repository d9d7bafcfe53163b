// ── scene model and deterministic SVG writer ──
//
// Charts are built as a plain scene graph (panels holding rectangles,
// polylines, and text) and serialized to SVG with fixed-precision
// coordinates.  The writer is a pure function of the scene: no timestamps,
// no random ids, no environment lookups — the same scene always produces
// byte-identical output.

export interface RectItem {
  kind: "rect";
  x: number;
  y: number;
  width: number;
  height: number;
  fill?: string;
  stroke?: string;
  strokeWidth?: number;
}

export interface PolylineItem {
  kind: "polyline";
  points: Array<[number, number]>;
  color: string;
  width: number;
}

export interface TextItem {
  kind: "text";
  x: number;
  y: number;
  text: string;
  size: number;
  color: string;
  anchor: "start" | "middle" | "end";
}

export type SceneItem = RectItem | PolylineItem | TextItem;

export interface Panel {
  items: SceneItem[];
}

export interface Scene {
  width: number;
  height: number;
  background: string;
  /** Figure-level decoration (title, legend) outside any panel. */
  extras: SceneItem[];
  panels: Panel[];
}

/** Fixed two-decimal coordinate formatting keeps the output reproducible. */
function fmt(value: number): string {
  const text = value.toFixed(2);
  return text === "-0.00" ? "0.00" : text;
}

function escapeText(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function renderItem(item: SceneItem, out: string[]): void {
  if (item.kind === "rect") {
    let attrs = `x="${fmt(item.x)}" y="${fmt(item.y)}" width="${fmt(item.width)}" height="${fmt(item.height)}"`;
    attrs += ` fill="${item.fill ?? "none"}"`;
    if (item.stroke !== undefined) {
      attrs += ` stroke="${item.stroke}" stroke-width="${fmt(item.strokeWidth ?? 1)}"`;
    }
    out.push(`<rect ${attrs}/>`);
  } else if (item.kind === "polyline") {
    const points = item.points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    out.push(
      `<polyline points="${points}" fill="none" stroke="${item.color}" ` +
        `stroke-width="${fmt(item.width)}" stroke-linejoin="round" stroke-linecap="round"/>`,
    );
  } else {
    out.push(
      `<text x="${fmt(item.x)}" y="${fmt(item.y)}" font-family="Helvetica, Arial, sans-serif" ` +
        `font-size="${fmt(item.size)}" fill="${item.color}" text-anchor="${item.anchor}">` +
        `${escapeText(item.text)}</text>`,
    );
  }
}

export function renderSvg(scene: Scene): string {
  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fmt(scene.width)}" ` +
      `height="${fmt(scene.height)}" viewBox="0 0 ${fmt(scene.width)} ${fmt(scene.height)}">`,
  );
  out.push(
    `<rect x="0.00" y="0.00" width="${fmt(scene.width)}" height="${fmt(scene.height)}" fill="${scene.background}"/>`,
  );
  for (const item of scene.extras) {
    renderItem(item, out);
  }
  for (const panel of scene.panels) {
    out.push(`<g class="panel">`);
    for (const item of panel.items) {
      renderItem(item, out);
    }
    out.push(`</g>`);
  }
  out.push(`</svg>`);
  return out.join("\n") + "\n";
}
