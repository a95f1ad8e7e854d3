"""Shared time-series containers and their JSON envelopes.

Formats:
  MarkerTrack   {"n": int, "frames": [[[x,y,z], ...] per frame]}
  AnimationClip {"channels": [names], "frames": [[w, ...] per frame],
                 "fps": float, "label": str}
  WeightTrack   same envelope as AnimationClip (weights are the payload)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

__all__ = ["MarkerTrack", "AnimationClip", "WeightTrack"]


@dataclass
class MarkerTrack:
    frames: np.ndarray  # (T, n, 3)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or self.frames.shape[2] != 3:
            raise ValidationError(f"marker track must be (T, n, 3), got {self.frames.shape}")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_markers(self) -> int:
        return self.frames.shape[1]

    def to_document(self) -> dict:
        return {"n": self.n_markers, "frames": self.frames.tolist()}

    @classmethod
    def from_document(cls, document: dict) -> "MarkerTrack":
        try:
            track = cls(np.asarray(document["frames"], dtype=np.float64))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"$.frames: {exc}") from exc
        if "n" in document and int(document["n"]) != track.n_markers:
            raise ParseError(f"$.n: declared {document['n']} markers, frames have {track.n_markers}")
        return track


@dataclass
class WeightTrack:
    frames: np.ndarray  # (T, D)
    channels: list[str] | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ValidationError(f"weight track must be (T, D), got {self.frames.shape}")
        if self.channels is not None and len(self.channels) != self.frames.shape[1]:
            raise ValidationError("channel name count does not match weight dimension")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_channels(self) -> int:
        return self.frames.shape[1]

    def to_document(self) -> dict:
        doc: dict = {"frames": self.frames.tolist()}
        if self.channels is not None:
            doc["channels"] = list(self.channels)
        return doc

    @classmethod
    def from_document(cls, document: dict) -> "WeightTrack":
        try:
            return cls(
                np.asarray(document["frames"], dtype=np.float64),
                list(document["channels"]) if "channels" in document else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"$.frames: {exc}") from exc


@dataclass
class AnimationClip:
    """A weight animation: T frames of D channel weights in [0, 1]."""

    frames: np.ndarray  # (T, D)
    fps: float = 24.0
    label: str = "clip"
    channels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise ValidationError(f"clip frames must be (T, D), got {self.frames.shape}")
        if np.any(self.frames < 0) or np.any(self.frames > 1) or not np.all(np.isfinite(self.frames)):
            raise ValidationError("clip weights must be finite and within [0, 1]")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_channels(self) -> int:
        return self.frames.shape[1]

    def weight_track(self) -> WeightTrack:
        return WeightTrack(self.frames.copy(), list(self.channels) or None)

    def to_document(self) -> dict:
        return {
            "channels": list(self.channels),
            "frames": self.frames.tolist(),
            "fps": self.fps,
            "label": self.label,
        }

    @classmethod
    def from_document(cls, document: dict) -> "AnimationClip":
        try:
            return cls(
                np.asarray(document["frames"], dtype=np.float64),
                fps=float(document.get("fps", 24.0)),
                label=str(document.get("label", "clip")),
                channels=list(document.get("channels", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"$.frames: {exc}") from exc
