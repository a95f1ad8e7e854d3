/**
 * 2D orthographic marker viewport (front view, x/y plane).
 *
 * Draws the captured markers and the solved-rig markers for the current frame
 * as two SVG layers in distinct colors. When the error colormap is on, each
 * solved marker is tinted by its distance to the matching captured marker.
 */

import type { OverlayToggles } from "./state.js";

export type MarkerFrame = number[][]; // (n, 3)

export interface ViewportData {
  captured: MarkerFrame;
  solved: MarkerFrame | null;
  overlays: OverlayToggles;
}

const CAPTURED_COLOR = "#4ea1ff";
const SOLVED_COLOR = "#ffb13d";
const VIEW_SIZE = 400;
const MARGIN = 24;

function bounds(frames: MarkerFrame[]): { min: [number, number]; max: [number, number] } {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const frame of frames) {
    for (const m of frame) {
      const [x, y] = [m[0] ?? 0, m[1] ?? 0];
      minX = Math.min(minX, x); maxX = Math.max(maxX, x);
      minY = Math.min(minY, y); maxY = Math.max(maxY, y);
    }
  }
  return { min: [minX, minY], max: [maxX, maxY] };
}

function projector(data: ViewportData): (m: number[]) => [number, number] {
  const frames = [data.captured, ...(data.solved ? [data.solved] : [])];
  const { min, max } = bounds(frames);
  const span = Math.max(max[0] - min[0], max[1] - min[1], 1e-9);
  const scale = (VIEW_SIZE - 2 * MARGIN) / span;
  return (m) => [
    MARGIN + ((m[0] ?? 0) - min[0]) * scale,
    // screen y grows downward; flip so the face is upright
    VIEW_SIZE - MARGIN - ((m[1] ?? 0) - min[1]) * scale,
  ];
}

export function markerError(captured: number[], solved: number[]): number {
  const dx = (captured[0] ?? 0) - (solved[0] ?? 0);
  const dy = (captured[1] ?? 0) - (solved[1] ?? 0);
  const dz = (captured[2] ?? 0) - (solved[2] ?? 0);
  return Math.sqrt(dx * dx + dy * dy + dz * dz);
}

/** Green at zero error fading to red at `maxError` and beyond. */
export function errorColor(error: number, maxError: number): string {
  const t = Math.min(error / Math.max(maxError, 1e-12), 1);
  const hue = Math.round(120 * (1 - t));
  return `hsl(${hue}, 90%, 45%)`;
}

function layer(doc: Document, name: string): SVGGElement {
  const g = doc.createElementNS("http://www.w3.org/2000/svg", "g");
  g.setAttribute("data-layer", name);
  return g;
}

export function renderViewport(container: HTMLElement, data: ViewportData): void {
  const doc = container.ownerDocument;
  container.replaceChildren();

  if (data.solved === null && !data.overlays.captured) {
    const prompt = doc.createElement("p");
    prompt.className = "empty-state";
    prompt.textContent = "No solve yet. Run a raw solve to see the rig overlay.";
    container.appendChild(prompt);
    return;
  }

  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${VIEW_SIZE} ${VIEW_SIZE}`);
  svg.setAttribute("data-role", "viewport");
  const project = projector(data);

  if (data.overlays.captured) {
    const g = layer(doc, "captured");
    for (const m of data.captured) {
      const [cx, cy] = project(m);
      const dot = doc.createElementNS("http://www.w3.org/2000/svg", "circle");
      dot.setAttribute("cx", cx.toFixed(2));
      dot.setAttribute("cy", cy.toFixed(2));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", CAPTURED_COLOR);
      g.appendChild(dot);
    }
    svg.appendChild(g);
  }

  if (data.overlays.solved && data.solved !== null) {
    const errors = data.solved.map((m, i) => markerError(data.captured[i] ?? m, m));
    const maxError = Math.max(...errors, 1e-12);
    const g = layer(doc, "solved");
    data.solved.forEach((m, i) => {
      const [cx, cy] = project(m);
      const dot = doc.createElementNS("http://www.w3.org/2000/svg", "circle");
      dot.setAttribute("cx", cx.toFixed(2));
      dot.setAttribute("cy", cy.toFixed(2));
      dot.setAttribute("r", "2");
      dot.setAttribute(
        "fill",
        data.overlays.errorColormap ? errorColor(errors[i] ?? 0, maxError) : SOLVED_COLOR,
      );
      g.appendChild(dot);
    });
    svg.appendChild(g);
  }

  container.appendChild(svg);
}
