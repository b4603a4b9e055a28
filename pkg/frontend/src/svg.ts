/** SVG backend: serializes a Scene to a standalone, timestamp-free SVG. */

import { Scene } from "./chart";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

const ANCHOR = { start: "start", middle: "middle", end: "end" } as const;

export function renderSvg(scene: Scene): string {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" height="${scene.height}" ` +
      `viewBox="0 0 ${scene.width} ${scene.height}">`,
  );
  parts.push(`<rect width="${scene.width}" height="${scene.height}" fill="${scene.background}"/>`);
  for (const op of scene.ops) {
    switch (op.op) {
      case "rect":
        parts.push(`<rect x="${op.x}" y="${op.y}" width="${op.w}" height="${op.h}" fill="${op.fill}"/>`);
        break;
      case "line":
        parts.push(
          `<line x1="${op.x1}" y1="${op.y1}" x2="${op.x2}" y2="${op.y2}" ` +
            `stroke="${op.stroke}" stroke-width="${op.width}"/>`,
        );
        break;
      case "polyline": {
        const points = op.points.map(([x, y]) => `${x},${y}`).join(" ");
        parts.push(
          `<polyline points="${points}" fill="none" stroke="${op.stroke}" ` +
            `stroke-width="${op.width}" stroke-linejoin="round"/>`,
        );
        break;
      }
      case "text":
        parts.push(
          `<text x="${op.x}" y="${op.y}" font-family="monospace" font-size="${op.size}" ` +
            `fill="${op.color}" text-anchor="${ANCHOR[op.anchor]}">${esc(op.text)}</text>`,
        );
        break;
    }
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
