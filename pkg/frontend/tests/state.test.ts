import { describe, expect, it } from "vitest";

import {
  acknowledgeRevision,
  initialViewState,
  setAnchorFrames,
  setCurrentFrame,
  setFrameRange,
  toggleChannel,
  toggleOverlay,
} from "../src/state.js";

describe("view state", () => {
  it("starts at frame 0 with both overlays on", () => {
    const s = initialViewState("s1", 50);
    expect(s.currentFrame).toBe(0);
    expect(s.selectedFrameRange).toEqual([0, 49]);
    expect(s.overlays).toEqual({ captured: true, solved: true, errorColormap: false });
  });

  it("rejects empty tracks", () => {
    expect(() => initialViewState("s1", 0)).toThrow(RangeError);
  });

  it("clamps the current frame to the track", () => {
    const s = initialViewState("s1", 10);
    expect(setCurrentFrame(s, -5).currentFrame).toBe(0);
    expect(setCurrentFrame(s, 9).currentFrame).toBe(9);
    expect(setCurrentFrame(s, 99).currentFrame).toBe(9);
    expect(setCurrentFrame(s, 4.6).currentFrame).toBe(5);
  });

  it("keeps the revision monotone non-decreasing", () => {
    let s = initialViewState("s1", 10);
    s = acknowledgeRevision(s, 3);
    expect(s.revision).toBe(3);
    s = acknowledgeRevision(s, 2);
    expect(s.revision).toBe(3);
    s = acknowledgeRevision(s, 7);
    expect(s.revision).toBe(7);
  });

  it("toggles channel selection and keeps it sorted", () => {
    let s = initialViewState("s1", 10);
    s = toggleChannel(s, 5);
    s = toggleChannel(s, 2);
    expect(s.selectedChannels).toEqual([2, 5]);
    s = toggleChannel(s, 5);
    expect(s.selectedChannels).toEqual([2]);
  });

  it("normalizes an inverted frame range", () => {
    const s = setFrameRange(initialViewState("s1", 30), 20, 4);
    expect(s.selectedFrameRange).toEqual([4, 20]);
  });

  it("toggles overlays independently", () => {
    let s = initialViewState("s1", 10);
    s = toggleOverlay(s, "solved");
    expect(s.overlays.solved).toBe(false);
    expect(s.overlays.captured).toBe(true);
  });

  it("clamps anchor frames", () => {
    const s = setAnchorFrames(initialViewState("s1", 10), [3, 40]);
    expect(s.anchorFrames).toEqual([3, 9]);
  });
});
