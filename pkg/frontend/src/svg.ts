/**
 * Minimal deterministic SVG builder: fixed-precision coordinates, no
 * timestamps, insertion-ordered output. Identical inputs yield identical
 * bytes, which is what the figure tests pin.
 */

export const WIDTH = 720;
export const HEIGHT = 420;
export const MARGIN = { top: 36, right: 24, bottom: 56, left: 64 };

export const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
export const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

export const PALETTE = ["#4878a8", "#e08a3c", "#5ea45e", "#b55451",
                        "#8064a2", "#777777"];

const fmt = (v: number): string => (Object.is(v, -0) ? "0.00" : v.toFixed(2));

export class Svg {
  private parts: string[] = [];

  constructor(title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
        `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
        `font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
    );
    this.text(WIDTH / 2, 20, title, { size: 15, anchor: "middle",
                                      weight: "bold" });
  }

  rect(x: number, y: number, w: number, h: number, fill: string,
       opacity = 1): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(Math.max(0, w))}" ` +
        `height="${fmt(Math.max(0, h))}" fill="${fill}"` +
        (opacity !== 1 ? ` fill-opacity="${fmt(opacity)}"` : "") + `/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
       width = 1, dash?: string): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" ` +
        `y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${fmt(width)}"` +
        (dash ? ` stroke-dasharray="${dash}"` : "") + `/>`,
    );
  }

  text(x: number, y: number, body: string,
       opts: { size?: number; anchor?: string; weight?: string;
               rotate?: number; fill?: string } = {}): void {
    const { size = 11, anchor = "start", weight = "normal",
            rotate, fill = "#222222" } = opts;
    const transform = rotate !== undefined
      ? ` transform="rotate(${fmt(rotate)} ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" ` +
        `text-anchor="${anchor}" font-weight="${weight}" ` +
        `fill="${fill}"${transform}>${escapeXml(body)}</text>`,
    );
  }

  axes(xLabel: string, yLabel: string): void {
    const x0 = MARGIN.left;
    const y0 = MARGIN.top + PLOT_H;
    this.line(x0, MARGIN.top, x0, y0, "#222222", 1.2);
    this.line(x0, y0, x0 + PLOT_W, y0, "#222222", 1.2);
    this.text(x0 + PLOT_W / 2, HEIGHT - 14, xLabel, { anchor: "middle",
                                                      size: 12 });
    this.text(16, MARGIN.top + PLOT_H / 2, yLabel,
              { anchor: "middle", size: 12, rotate: -90 });
  }

  yTicks(max: number, format: (v: number) => string, count = 5): void {
    for (let i = 0; i <= count; i++) {
      const v = (max * i) / count;
      const y = MARGIN.top + PLOT_H - (PLOT_H * i) / count;
      this.line(MARGIN.left - 4, y, MARGIN.left, y, "#222222");
      this.line(MARGIN.left, y, MARGIN.left + PLOT_W, y, "#dddddd", 0.6);
      this.text(MARGIN.left - 8, y + 4, format(v), { anchor: "end",
                                                     size: 10 });
    }
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function niceMax(v: number): number {
  if (v <= 0) return 1;
  const mag = Math.pow(10, Math.floor(Math.log10(v)));
  for (const m of [1, 2, 2.5, 5, 10]) {
    if (v <= m * mag) return m * mag;
  }
  return 10 * mag;
}
