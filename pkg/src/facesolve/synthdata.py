"""Synthetic training data: one-hot channel ramps, smooth pseudo range-of-motion
clips, marker baking through the rig, Gaussian augmentation, and salient
(redundancy-removing) sample selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import ParseError, ValidationError
from .rig import Rig, evaluate
from .tracks import AnimationClip, MarkerTrack

__all__ = [
    "NoiseProfile",
    "TrainingSet",
    "generate_one_hot_facs",
    "generate_rom",
    "bake_markers",
    "augment",
    "simulate_shot",
    "select_salient",
    "median_heuristic_gamma",
]

# Fixed contrast gain for ROM curves: filtered uniform noise is re-spread
# around 0.5 and clamped, so an infinitely smooth curve degenerates to a
# constant rather than being re-normalized back to full range.
_ROM_GAIN = 6.0


@dataclass
class NoiseProfile:
    """Per-marker-per-axis Gaussian stds (model units) plus the draw seed."""

    stds: np.ndarray  # (n, 3), >= 0
    seed: int = 0

    def __post_init__(self):
        self.stds = np.asarray(self.stds, dtype=np.float64)
        if self.stds.ndim != 2 or self.stds.shape[1] != 3:
            raise ValidationError(f"noise stds must be (n, 3), got {self.stds.shape}")
        if np.any(self.stds < 0) or not np.all(np.isfinite(self.stds)):
            raise ValidationError("noise stds must be finite and non-negative")

    def to_document(self) -> dict:
        return {"stds": self.stds.tolist(), "seed": int(self.seed)}

    @classmethod
    def from_document(cls, document: dict) -> "NoiseProfile":
        try:
            return cls(np.asarray(document["stds"], dtype=np.float64), int(document.get("seed", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"$.stds: {exc}") from exc


@dataclass
class TrainingSet:
    """N (marker set, weight vector) pairs plus per-sample provenance tags."""

    markers: np.ndarray  # (N, n, 3)
    weights: np.ndarray  # (N, D)
    provenance: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.markers = np.asarray(self.markers, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.markers.shape[0] != self.weights.shape[0]:
            raise ValidationError("marker and weight sample counts differ")
        if not self.provenance:
            self.provenance = ["?"] * self.markers.shape[0]

    @property
    def n_samples(self) -> int:
        return self.markers.shape[0]

    def subset(self, indices) -> "TrainingSet":
        idx = list(indices)
        return TrainingSet(
            self.markers[idx], self.weights[idx], [self.provenance[i] for i in idx]
        )

    @staticmethod
    def concatenate(sets: list["TrainingSet"]) -> "TrainingSet":
        return TrainingSet(
            np.concatenate([s.markers for s in sets]),
            np.concatenate([s.weights for s in sets]),
            [tag for s in sets for tag in s.provenance],
        )


def _ramp(frames_per_channel: int) -> np.ndarray:
    if frames_per_channel == 2:
        return np.array([0.0, 1.0])
    peak = frames_per_channel // 2
    return np.interp(
        np.arange(frames_per_channel),
        [0, peak, frames_per_channel - 1],
        [0.0, 1.0, 0.0],
    )


def generate_one_hot_facs(rig: Rig, frames_per_channel: int) -> AnimationClip:
    """One channel at a time ramped 0 -> 1 -> 0; T = D * frames_per_channel."""
    if frames_per_channel < 2:
        raise ValidationError("frames_per_channel must be >= 2")
    d = rig.n_channels
    ramp = _ramp(frames_per_channel)
    frames = np.zeros((d * frames_per_channel, d))
    for k in range(d):
        frames[k * frames_per_channel : (k + 1) * frames_per_channel, k] = ramp
    return AnimationClip(frames, label="facs", channels=rig.channel_names)


def generate_rom(rig: Rig, n_frames: int, seed: int, smoothness: float = 8.0) -> AnimationClip:
    """Pseudo range-of-motion: low-pass-filtered uniform noise per channel,
    mixed with a shared per-region curve so co-activations look plausible.
    Deterministic for a given seed; smoother filters flatten toward 0.5."""
    if n_frames < 1:
        raise ValidationError("n_frames must be >= 1")
    rng = np.random.default_rng(seed)
    d = rig.n_channels

    def curve() -> np.ndarray:
        raw = rng.uniform(0.0, 1.0, n_frames)
        if n_frames > 1 and smoothness > 0:
            raw = gaussian_filter1d(raw, smoothness, mode="nearest")
        return raw

    region_of = {}
    for rname, region in rig.regions.items():
        for c in region.channels:
            region_of[c] = rname
    shared = {rname: curve() for rname in rig.regions} if rig.regions else {}

    frames = np.zeros((n_frames, d))
    for k in range(d):
        own = curve()
        if k in region_of:
            own = 0.7 * own + 0.3 * shared[region_of[k]]
        frames[:, k] = np.clip(0.5 + (own - 0.5) * _ROM_GAIN, 0.0, 1.0)
    return AnimationClip(frames, label="rom", channels=rig.channel_names)


def bake_markers(rig: Rig, clip: AnimationClip) -> MarkerTrack:
    """Drive the rig with the clip: frame f markers = evaluate(rig, w_f)."""
    if clip.n_channels != rig.n_channels:
        raise ValidationError(
            f"clip has {clip.n_channels} channels, rig has {rig.n_channels}"
        )
    frames = np.stack([evaluate(rig, w) for w in clip.frames])
    return MarkerTrack(frames)


def augment(track: MarkerTrack, profile: NoiseProfile) -> MarkerTrack:
    """Independent Gaussian jitter per marker axis, seeded by the profile."""
    if profile.stds.shape[0] != track.n_markers:
        raise ValidationError(
            f"profile covers {profile.stds.shape[0]} markers, track has {track.n_markers}"
        )
    rng = np.random.default_rng(profile.seed)
    noise = rng.standard_normal(track.frames.shape) * profile.stds[None, :, :]
    return MarkerTrack(track.frames + noise)


def simulate_shot(rig: Rig, clip: AnimationClip, drift: np.ndarray, profile: NoiseProfile) -> MarkerTrack:
    """Desk-scale stand-in for a captured shot: bake, apply a constant
    per-marker drift (day-to-day shape mismatch), then jitter."""
    drift = np.asarray(drift, dtype=np.float64)
    if drift.shape != (rig.n_markers, 3):
        raise ValidationError(f"drift must be (n, 3), got {drift.shape}")
    baked = bake_markers(rig, clip)
    return augment(MarkerTrack(baked.frames + drift[None, :, :]), profile)


def _flat(markers: np.ndarray) -> np.ndarray:
    x = np.asarray(markers, dtype=np.float64)
    return x.reshape(x.shape[0], -1)


def median_heuristic_gamma(markers: np.ndarray, max_samples: int = 256) -> float:
    """Bandwidth default: median pairwise sample distance over a subsample,
    normalized by sqrt(marker count) to match the kernel's 1/n scaling."""
    x = _flat(markers)
    n_markers = x.shape[1] // 3
    if x.shape[0] > max_samples:
        step = x.shape[0] / max_samples
        x = x[(np.arange(max_samples) * step).astype(int)]
    d = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))
    med = float(np.median(d[np.triu_indices(len(x), k=1)])) if len(x) > 1 else 1.0
    if med <= 0:
        med = 1.0
    return med / np.sqrt(n_markers)


def select_salient(samples, sigma: float, gamma: float) -> list[int]:
    """Greedy redundancy filter over sample marker sets (array or TrainingSet).

    Kernel k(x, x') = exp(-|x - x'|^2 / (2 gamma^2 n)); a sample is kept iff
    its mean similarity to the already-kept samples is below sigma. The first
    sample is always kept, so an all-duplicates set keeps exactly one.
    """
    markers = samples.markers if isinstance(samples, TrainingSet) else samples
    if len(markers) == 0:
        raise ValidationError("cannot select from an empty sample set")
    x = _flat(markers)
    if not 0 < sigma <= 1:
        raise ValidationError("sigma must lie in (0, 1]")
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    n_markers = x.shape[1] // 3
    denom = 2.0 * gamma * gamma * n_markers
    kept = [0]
    kept_x = [x[0]]
    for i in range(1, x.shape[0]):
        sq = ((np.asarray(kept_x) - x[i]) ** 2).sum(axis=1)
        if float(np.mean(np.exp(-sq / denom))) < sigma:
            kept.append(i)
            kept_x.append(x[i])
    return kept
