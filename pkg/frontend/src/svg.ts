import { ScaleContinuousNumeric } from "d3-scale";

const XML_HEADER = '<?xml version="1.0" encoding="UTF-8"?>\n';

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Minimal SVG document builder: enough for line charts with axes. */
export class SvgDoc {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  raw(fragment: string): void {
    this.parts.push(fragment);
  }

  path(d: string, stroke: string, opts: { dash?: string; width?: number } = {}): void {
    const dash = opts.dash ? ` stroke-dasharray="${opts.dash}"` : "";
    this.parts.push(
      `<path d="${d}" fill="none" stroke="${stroke}" stroke-width="${opts.width ?? 1.5}"${dash}/>`
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1): void {
    this.parts.push(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" stroke="${stroke}" stroke-width="${width}"/>`
    );
  }

  circle(cx: number, cy: number, r: number, fill: string, stroke = "none"): void {
    this.parts.push(
      `<circle cx="${cx.toFixed(2)}" cy="${cy.toFixed(2)}" r="${r}" fill="${fill}" stroke="${stroke}"/>`
    );
  }

  text(x: number, y: number, content: string, opts: { size?: number; anchor?: string; fill?: string } = {}): void {
    this.parts.push(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${opts.size ?? 11}" ` +
        `font-family="sans-serif" text-anchor="${opts.anchor ?? "start"}" fill="${opts.fill ?? "#222"}">${esc(content)}</text>`
    );
  }

  render(): string {
    return (
      XML_HEADER +
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
      `viewBox="0 0 ${this.width} ${this.height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

export interface Frame {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

function formatTick(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) return v.toExponential(0);
  return `${parseFloat(v.toPrecision(4))}`;
}

export function drawAxes(
  doc: SvgDoc,
  frame: Frame,
  x: ScaleContinuousNumeric<number, number>,
  y: ScaleContinuousNumeric<number, number>,
  xLabel: string,
  yLabel: string,
  xTicks?: number[],
  yTicks?: number[]
): void {
  doc.line(frame.left, frame.bottom, frame.right, frame.bottom, "#222");
  doc.line(frame.left, frame.top, frame.left, frame.bottom, "#222");
  for (const t of xTicks ?? x.ticks(6)) {
    const px = x(t);
    doc.line(px, frame.bottom, px, frame.bottom + 4, "#222");
    doc.text(px, frame.bottom + 16, formatTick(t), { anchor: "middle" });
  }
  for (const t of yTicks ?? y.ticks(6)) {
    const py = y(t);
    doc.line(frame.left - 4, py, frame.left, py, "#222");
    doc.text(frame.left - 7, py + 3, formatTick(t), { anchor: "end" });
  }
  doc.text((frame.left + frame.right) / 2, frame.bottom + 32, xLabel, { anchor: "middle" });
  doc.raw(
    `<text x="14" y="${(frame.top + frame.bottom) / 2}" font-size="11" font-family="sans-serif" ` +
      `text-anchor="middle" fill="#222" transform="rotate(-90 14 ${(frame.top + frame.bottom) / 2})">${xmlSafe(
        yLabel
      )}</text>`
  );
}

function xmlSafe(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function legend(
  doc: SvgDoc,
  frame: Frame,
  entries: { label: string; color: string; dash?: string }[]
): void {
  let yPos = frame.top + 6;
  for (const e of entries) {
    doc.line(frame.right - 150, yPos, frame.right - 124, yPos, e.color, 2);
    if (e.dash) {
      doc.raw(
        `<line x1="${frame.right - 150}" y1="${yPos}" x2="${frame.right - 124}" y2="${yPos}" ` +
          `stroke="white" stroke-width="2" stroke-dasharray="2,4"/>`
      );
    }
    doc.text(frame.right - 118, yPos + 3, e.label);
    yPos += 16;
  }
}
