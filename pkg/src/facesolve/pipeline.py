"""Multi-stage solve: anchor-pose alignment, jaw-first regression,
jaw-conditioned region solves, optional fine-tuning, and RMSE reporting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .features import extract, region_marker_indices
from .neural import InputStandardizer, Network, forward, load_network, save_network
from .optimize import FinetuneSpec, finetune
from .rig import Rig, clamp_weights, evaluate
from .tracks import MarkerTrack, WeightTrack

__all__ = [
    "REQUIRED_REGIONS",
    "JAW_CONDITIONED_REGIONS",
    "RegionModel",
    "SolverBundle",
    "AnchorPose",
    "SolveReport",
    "solve_jaw",
    "solve_raw",
    "align_with_anchor",
    "run_session",
    "rmse",
]

REQUIRED_REGIONS = (
    "upper-face", "lower-face", "jaw", "lips", "cheek", "eye-lids", "eyeballs",
)
JAW_CONDITIONED_REGIONS = ("lower-face", "lips", "cheek")

BUNDLE_FORMAT_VERSION = 1


@dataclass
class RegionModel:
    network: Network
    standardizer: InputStandardizer
    variant: str
    marker_indices: list[int]
    channel_indices: list[int]
    jaw_cond: bool = False


@dataclass
class SolverBundle:
    """The seven trained region solvers plus the rig they were trained on."""

    rig: Rig
    regions: dict[str, RegionModel]

    def __post_init__(self):
        missing = set(REQUIRED_REGIONS) - set(self.regions)
        if missing:
            raise ValidationError(f"bundle is missing regions {sorted(missing)}")
        extra = set(self.regions) - set(REQUIRED_REGIONS)
        if extra:
            raise ValidationError(f"bundle has unknown regions {sorted(extra)}")
        for name in JAW_CONDITIONED_REGIONS:
            if not self.regions[name].jaw_cond:
                raise ValidationError(f"region '{name}' must be jaw-conditioned")
        for name in set(REQUIRED_REGIONS) - set(JAW_CONDITIONED_REGIONS):
            if self.regions[name].jaw_cond:
                raise ValidationError(f"region '{name}' must not be jaw-conditioned")

    @property
    def jaw_channels(self) -> list[int]:
        return self.regions["jaw"].channel_indices

    def to_document(self) -> dict:
        return {
            "version": BUNDLE_FORMAT_VERSION,
            "rig_name": self.rig.name,
            "regions": {
                name: {
                    "model": save_network(rm.network, rm.standardizer),
                    "variant": rm.variant,
                    "markers": list(rm.marker_indices),
                    "channels": list(rm.channel_indices),
                    "jaw_cond": rm.jaw_cond,
                }
                for name, rm in self.regions.items()
            },
        }

    @classmethod
    def from_document(cls, document: dict, rig: Rig) -> "SolverBundle":
        if document.get("version") != BUNDLE_FORMAT_VERSION:
            raise ParseError(f"$.version: incompatible bundle format {document.get('version')}")
        regions = {}
        for name, rdoc in document.get("regions", {}).items():
            net, std = load_network(rdoc["model"])
            regions[name] = RegionModel(
                network=net, standardizer=std, variant=str(rdoc["variant"]),
                marker_indices=[int(i) for i in rdoc["markers"]],
                channel_indices=[int(i) for i in rdoc["channels"]],
                jaw_cond=bool(rdoc["jaw_cond"]),
            )
        return cls(rig, regions)


@dataclass
class AnchorPose:
    """Artist-picked (frame, weights) pair used to propagate marker offsets."""

    frame: int
    weights: np.ndarray
    bandwidth: float | None = None  # None = 25% of RMS frame-to-anchor distance

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)


@dataclass
class SolveReport:
    raw: WeightTrack
    aligned: MarkerTrack
    finetuned: WeightTrack | None
    rmse_raw: np.ndarray  # raw weights vs the input (unaligned) track
    rmse_aligned: np.ndarray  # raw weights vs the aligned track
    rmse_finetuned: np.ndarray | None

    def to_document(self) -> dict:
        doc = {
            "raw": self.raw.to_document(),
            "aligned": self.aligned.to_document(),
            "rmse": {
                "raw": self.rmse_raw.tolist(),
                "aligned": self.rmse_aligned.tolist(),
            },
        }
        if self.finetuned is not None:
            doc["finetuned"] = self.finetuned.to_document()
            doc["rmse"]["finetuned"] = self.rmse_finetuned.tolist()
        return doc

    def curves_csv(self) -> str:
        lines = ["frame,raw,aligned,finetuned"]
        for f in range(len(self.rmse_raw)):
            fin = "" if self.rmse_finetuned is None else repr(float(self.rmse_finetuned[f]))
            lines.append(f"{f},{self.rmse_raw[f]!r},{self.rmse_aligned[f]!r},{fin}")
        return "\n".join(lines) + "\n"


def _region_features(bundle: SolverBundle, region: str, track: MarkerTrack) -> np.ndarray:
    rm = bundle.regions[region]
    rig = bundle.rig
    feats = [extract(frame, rig.neutral, region, rm.variant, rig) for frame in track.frames]
    return rm.standardizer.apply(np.asarray(feats))


def solve_jaw(bundle: SolverBundle, track: MarkerTrack) -> WeightTrack:
    """Per-frame forward pass of the jaw regressor, clamped to [0, 1]."""
    rm = bundle.regions["jaw"]
    out = forward(rm.network, _region_features(bundle, "jaw", track))
    names = [bundle.rig.channels[k].name for k in rm.channel_indices]
    return WeightTrack(np.clip(out, 0.0, 1.0), names)


def solve_raw(bundle: SolverBundle, track: MarkerTrack, jaw: WeightTrack) -> WeightTrack:
    """All-region forward solve; jaw-conditioned regions receive the supplied
    jaw values and the jaw channels of the output are that track verbatim."""
    rig = bundle.rig
    if jaw.n_frames != track.n_frames:
        raise ValidationError("jaw track and marker track lengths differ")
    if jaw.n_channels != len(bundle.jaw_channels):
        raise ValidationError(
            f"jaw track has {jaw.n_channels} channels, bundle expects {len(bundle.jaw_channels)}"
        )
    out = np.zeros((track.n_frames, rig.n_channels))
    out[:, bundle.jaw_channels] = jaw.frames
    for name, rm in bundle.regions.items():
        if name == "jaw":
            continue
        feats = _region_features(bundle, name, track)
        pred = forward(rm.network, feats, jaw=jaw.frames if rm.jaw_cond else None)
        out[:, rm.channel_indices] = np.clip(pred, 0.0, 1.0)
    return WeightTrack(out, rig.channel_names)


def align_with_anchor(track: MarkerTrack, anchor: AnchorPose, rig: Rig,
                      is_first: bool = False) -> MarkerTrack:
    """Subtract the anchor-frame marker offset, faded by pose similarity.

    d_a = x_a - g(w_a); frame f becomes x_f - q_f * d_a with the scalar
    q_f = exp(-|x_a - x_f|^2 / (2 h^2 n)) broadcast over all marker axes,
    except q = 1 everywhere for the first anchor.
    """
    a = anchor.frame
    if not 0 <= a < track.n_frames:
        raise ValidationError(f"anchor frame {a} outside track of {track.n_frames} frames")
    x_a = track.frames[a]
    d_a = x_a - evaluate(rig, clamp_weights(anchor.weights))
    if is_first:
        q = np.ones(track.n_frames)
    else:
        sq = ((track.frames - x_a[None, :, :]) ** 2).sum(axis=(1, 2))
        h = anchor.bandwidth
        if h is None:
            h = 0.25 * float(np.sqrt(np.mean(sq)))
        if h <= 0:
            h = 1.0
        q = np.exp(-sq / (2.0 * h * h * track.n_markers))
    return MarkerTrack(track.frames - q[:, None, None] * d_a[None, :, :])


def rmse(rig: Rig, weights: WeightTrack, track: MarkerTrack, marker_subset=None) -> np.ndarray:
    """Per-frame RMS over subset markers of per-marker Euclidean error."""
    if weights.n_frames != track.n_frames:
        raise ValidationError("weight track and marker track lengths differ")
    idx = list(marker_subset) if marker_subset is not None else list(range(track.n_markers))
    out = np.empty(track.n_frames)
    for f in range(track.n_frames):
        err = evaluate(rig, weights.frames[f]) - track.frames[f]
        out[f] = np.sqrt(np.mean(np.sum(err[idx] ** 2, axis=1)))
    return out


def run_session(rig: Rig, bundle: SolverBundle, track: MarkerTrack,
                anchors: list[AnchorPose] | None = None,
                finetune_spec: FinetuneSpec | None = None,
                jaw_override: WeightTrack | None = None) -> SolveReport:
    """Full solve: sequential anchor alignment (first anchor q = 1), jaw pass
    (or the supplied artist-corrected jaw), region solves, optional finetune.
    The bundle is reused untouched; no stage retrains."""
    aligned = track
    for i, anchor in enumerate(anchors or []):
        aligned = align_with_anchor(aligned, anchor, rig, is_first=(i == 0))
    jaw = jaw_override if jaw_override is not None else solve_jaw(bundle, aligned)
    raw = solve_raw(bundle, aligned, jaw)
    finetuned = None
    rmse_finetuned = None
    if finetune_spec is not None:
        finetuned = finetune(rig, aligned, raw, finetune_spec)
        rmse_finetuned = rmse(rig, finetuned, aligned)
    return SolveReport(
        raw=raw,
        aligned=aligned,
        finetuned=finetuned,
        rmse_raw=rmse(rig, raw, track),
        rmse_aligned=rmse(rig, raw, aligned),
        rmse_finetuned=rmse_finetuned,
    )
