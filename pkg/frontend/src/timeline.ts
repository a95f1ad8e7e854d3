/** Timeline scrubber: one tick per frame, anchor frames badged distinctly. */

export interface TimelineData {
  nFrames: number;
  currentFrame: number;
  anchorFrames: number[];
}

export function renderTimeline(
  container: HTMLElement,
  data: TimelineData,
  onScrub: (frame: number) => void,
): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  const bar = doc.createElement("div");
  bar.className = "timeline";
  bar.setAttribute("data-role", "timeline");

  const anchors = new Set(data.anchorFrames);
  for (let f = 0; f < data.nFrames; f++) {
    const tick = doc.createElement("button");
    tick.className = "tick";
    tick.dataset.frame = String(f);
    if (f === data.currentFrame) {
      tick.classList.add("current");
    }
    if (anchors.has(f)) {
      tick.classList.add("anchor");
      const badge = doc.createElement("span");
      badge.className = "anchor-badge";
      badge.textContent = "⚓";
      tick.appendChild(badge);
    }
    tick.addEventListener("click", () => onScrub(f));
    bar.appendChild(tick);
  }
  container.appendChild(bar);
}
