import { describe, expect, it } from "vitest";

import { errorColor, markerError, renderViewport } from "../src/viewport.js";

const overlaysOn = { captured: true, solved: true, errorColormap: false };

function circles(container: HTMLElement, layer: string): SVGCircleElement[] {
  return Array.from(container.querySelectorAll(`g[data-layer="${layer}"] circle`));
}

function coords(dot: SVGCircleElement): string {
  return `${dot.getAttribute("cx")},${dot.getAttribute("cy")}`;
}

describe("marker viewport", () => {
  const captured = [
    [0, 0, 0],
    [1, 0.5, 0],
    [2, 1, 0.2],
  ];

  it("draws both marker sets in distinct colors", () => {
    const div = document.createElement("div");
    renderViewport(div, { captured, solved: captured.map((m) => [...m]), overlays: overlaysOn });
    const cap = circles(div, "captured");
    const sol = circles(div, "solved");
    expect(cap.length).toBe(3);
    expect(sol.length).toBe(3);
    expect(cap[0]?.getAttribute("fill")).not.toBe(sol[0]?.getAttribute("fill"));
  });

  it("zero error means the two marker sets coincide on screen", () => {
    const div = document.createElement("div");
    renderViewport(div, { captured, solved: captured.map((m) => [...m]), overlays: overlaysOn });
    const cap = circles(div, "captured").map(coords);
    const sol = circles(div, "solved").map(coords);
    expect(sol).toEqual(cap);
  });

  it("toggling the solved overlay off hides exactly one layer", () => {
    const div = document.createElement("div");
    renderViewport(div, { captured, solved: captured, overlays: overlaysOn });
    expect(div.querySelectorAll("g[data-layer]").length).toBe(2);
    renderViewport(div, {
      captured,
      solved: captured,
      overlays: { ...overlaysOn, solved: false },
    });
    const layers = div.querySelectorAll("g[data-layer]");
    expect(layers.length).toBe(1);
    expect(layers[0]?.getAttribute("data-layer")).toBe("captured");
  });

  it("shows an empty-state prompt when nothing is drawable", () => {
    const div = document.createElement("div");
    renderViewport(div, {
      captured,
      solved: null,
      overlays: { captured: false, solved: true, errorColormap: false },
    });
    expect(div.querySelector(".empty-state")?.textContent).toMatch(/raw solve/i);
    expect(div.querySelector("svg")).toBeNull();
  });

  it("colormaps per-marker error when enabled", () => {
    const div = document.createElement("div");
    const solved = [
      [0, 0, 0], // exact
      [1.4, 0.5, 0], // off
      [2, 1, 0.2], // exact
    ];
    renderViewport(div, {
      captured,
      solved,
      overlays: { ...overlaysOn, errorColormap: true },
    });
    const sol = circles(div, "solved");
    expect(sol[0]?.getAttribute("fill")).toBe(errorColor(0, 1));
    expect(sol[1]?.getAttribute("fill")).not.toBe(sol[0]?.getAttribute("fill"));
  });

  it("computes Euclidean marker error", () => {
    expect(markerError([0, 0, 0], [3, 4, 0])).toBeCloseTo(5);
    expect(markerError([1, 2, 3], [1, 2, 3])).toBe(0);
  });

  it("error colors run green to red", () => {
    expect(errorColor(0, 1)).toBe("hsl(120, 90%, 45%)");
    expect(errorColor(1, 1)).toBe("hsl(0, 90%, 45%)");
    expect(errorColor(5, 1)).toBe("hsl(0, 90%, 45%)");
  });
});
