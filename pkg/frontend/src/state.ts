/**
 * Client-side view state. This is pure UI bookkeeping: which frame is shown,
 * which channels and frames are selected, which overlays are visible. Solve
 * data itself lives on the server and is only ever changed by posting
 * actions; nothing in this module mutates weights or markers.
 */

export interface OverlayToggles {
  captured: boolean;
  solved: boolean;
  errorColormap: boolean;
}

export interface ViewState {
  sessionId: string;
  nFrames: number;
  currentFrame: number;
  selectedChannels: number[];
  selectedFrameRange: [number, number];
  overlays: OverlayToggles;
  anchorFrames: number[];
  revision: number;
}

export function initialViewState(sessionId: string, nFrames: number): ViewState {
  if (nFrames < 1) {
    throw new RangeError("session has no frames");
  }
  return {
    sessionId,
    nFrames,
    currentFrame: 0,
    selectedChannels: [],
    selectedFrameRange: [0, nFrames - 1],
    overlays: { captured: true, solved: true, errorColormap: false },
    anchorFrames: [],
    revision: 0,
  };
}

function clampFrame(state: ViewState, frame: number): number {
  return Math.min(Math.max(Math.round(frame), 0), state.nFrames - 1);
}

export function setCurrentFrame(state: ViewState, frame: number): ViewState {
  return { ...state, currentFrame: clampFrame(state, frame) };
}

/** Revision is monotone non-decreasing; a stale value is ignored. */
export function acknowledgeRevision(state: ViewState, revision: number): ViewState {
  return revision > state.revision ? { ...state, revision } : state;
}

export function toggleChannel(state: ViewState, channel: number): ViewState {
  const selected = state.selectedChannels.includes(channel)
    ? state.selectedChannels.filter((c) => c !== channel)
    : [...state.selectedChannels, channel].sort((a, b) => a - b);
  return { ...state, selectedChannels: selected };
}

export function setFrameRange(state: ViewState, first: number, last: number): ViewState {
  const a = clampFrame(state, first);
  const b = clampFrame(state, last);
  return { ...state, selectedFrameRange: a <= b ? [a, b] : [b, a] };
}

export function toggleOverlay(state: ViewState, which: keyof OverlayToggles): ViewState {
  return { ...state, overlays: { ...state.overlays, [which]: !state.overlays[which] } };
}

export function setAnchorFrames(state: ViewState, frames: number[]): ViewState {
  return { ...state, anchorFrames: frames.map((f) => clampFrame(state, f)) };
}
