/**
 * Overlaid per-frame RMSE curves (raw solve, and fine-tuned when present)
 * with a frame cursor kept in sync with the viewport. Hovering a frame
 * column moves the viewport to that frame.
 */

export interface RmseCurves {
  raw: number[];
  finetuned?: number[];
}

const WIDTH = 480;
const HEIGHT = 160;
const PAD = 10;

const CURVE_COLORS: Record<string, string> = {
  raw: "#4ea1ff",
  finetuned: "#59c96b",
};

function polyline(doc: Document, values: number[], maxVal: number, name: string): SVGPolylineElement {
  const n = values.length;
  const pts = values.map((v, f) => {
    const x = PAD + (f / Math.max(n - 1, 1)) * (WIDTH - 2 * PAD);
    const y = HEIGHT - PAD - (v / maxVal) * (HEIGHT - 2 * PAD);
    return `${x.toFixed(2)},${y.toFixed(2)}`;
  });
  const line = doc.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", pts.join(" "));
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", CURVE_COLORS[name] ?? "#999999");
  line.setAttribute("data-curve", name);
  return line;
}

export function renderRmsePlot(
  container: HTMLElement,
  curves: RmseCurves,
  currentFrame: number,
  onHoverFrame: (frame: number) => void,
): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  const n = curves.raw.length;
  if (n === 0) {
    return;
  }
  const all = [...curves.raw, ...(curves.finetuned ?? [])];
  const maxVal = Math.max(...all, 1e-12);

  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("data-role", "rmse-plot");

  svg.appendChild(polyline(doc, curves.raw, maxVal, "raw"));
  if (curves.finetuned !== undefined) {
    svg.appendChild(polyline(doc, curves.finetuned, maxVal, "finetuned"));
  }

  const cursorX = PAD + (currentFrame / Math.max(n - 1, 1)) * (WIDTH - 2 * PAD);
  const cursor = doc.createElementNS("http://www.w3.org/2000/svg", "line");
  cursor.setAttribute("x1", cursorX.toFixed(2));
  cursor.setAttribute("x2", cursorX.toFixed(2));
  cursor.setAttribute("y1", String(PAD));
  cursor.setAttribute("y2", String(HEIGHT - PAD));
  cursor.setAttribute("stroke", "#dddddd");
  cursor.setAttribute("data-role", "frame-cursor");
  svg.appendChild(cursor);

  // one invisible hover column per frame keeps hit-testing trivial
  for (let f = 0; f < n; f++) {
    const x0 = PAD + ((f - 0.5) / Math.max(n - 1, 1)) * (WIDTH - 2 * PAD);
    const rect = doc.createElementNS("http://www.w3.org/2000/svg", "rect");
    rect.setAttribute("x", x0.toFixed(2));
    rect.setAttribute("y", "0");
    rect.setAttribute("width", ((WIDTH - 2 * PAD) / Math.max(n - 1, 1)).toFixed(2));
    rect.setAttribute("height", String(HEIGHT));
    rect.setAttribute("fill", "transparent");
    rect.setAttribute("data-hover-frame", String(f));
    rect.addEventListener("mousemove", () => onHoverFrame(f));
    svg.appendChild(rect);
  }

  container.appendChild(svg);
}
