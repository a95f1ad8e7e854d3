"""Graph features over marker subsets: pairwise distance, pairwise
direction, and delta pose, concatenated per region in canonical order."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .rig import Rig

__all__ = [
    "VARIANTS",
    "variant_components",
    "pairwise_distance",
    "pairwise_direction",
    "delta_pose",
    "feature_dim",
    "extract",
    "region_marker_indices",
]

# Canonical component order is dist, dir, delta for whichever are present.
VARIANTS = ("dist", "dir", "delta", "dist-dir", "dist-delta", "dir-delta", "dist-dir-delta")

# Pairs closer than this are treated as coincident; their direction is the
# zero vector (the only value symmetric under pair reversal).
COINCIDENT_EPS = 1e-9


def variant_components(variant: str) -> tuple[str, ...]:
    if variant not in VARIANTS:
        raise ValidationError(f"unknown feature variant '{variant}'")
    return tuple(c for c in ("dist", "dir", "delta") if c in variant.split("-"))


def pairwise_distance(markers: np.ndarray) -> np.ndarray:
    """Euclidean distances over all m^2 ordered pairs, row-major, diagonal 0."""
    m = np.asarray(markers, dtype=np.float64)
    diff = m[:, None, :] - m[None, :, :]
    return np.linalg.norm(diff, axis=2).reshape(-1)


def pairwise_direction(markers: np.ndarray) -> np.ndarray:
    """Unit direction per ordered pair (3m^2 values); coincident pairs give 0."""
    m = np.asarray(markers, dtype=np.float64)
    diff = m[:, None, :] - m[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    safe = np.where(dist < COINCIDENT_EPS, 1.0, dist)
    unit = diff / safe[:, :, None]
    unit[dist < COINCIDENT_EPS] = 0.0
    return unit.reshape(-1)


def delta_pose(markers: np.ndarray, neutral: np.ndarray) -> np.ndarray:
    """Per-marker coordinate offsets from the neutral pose (3m values)."""
    m = np.asarray(markers, dtype=np.float64)
    m0 = np.asarray(neutral, dtype=np.float64)
    if m.shape != m0.shape:
        raise ValidationError(f"pose shape {m.shape} != neutral shape {m0.shape}")
    return (m - m0).reshape(-1)


def feature_dim(variant: str, m: int) -> int:
    dims = {"dist": m * m, "dir": 3 * m * m, "delta": 3 * m}
    return sum(dims[c] for c in variant_components(variant))


def region_marker_indices(rig: Rig, region: str) -> list[int]:
    """The region's markers plus the nose-bridge marker, sorted."""
    if region not in rig.regions:
        raise ValidationError(f"unknown region '{region}'")
    return sorted(set(rig.regions[region].markers) | {rig.nose_bridge_index})


def extract(markers: np.ndarray, neutral: np.ndarray, region: str, variant: str, rig: Rig) -> np.ndarray:
    """Feature vector for one region at one frame.

    Selects the region's marker subset (nose bridge always included) and
    concatenates the variant's components in dist, dir, delta order.
    """
    idx = region_marker_indices(rig, region)
    sub = np.asarray(markers, dtype=np.float64)[idx]
    sub0 = np.asarray(neutral, dtype=np.float64)[idx]
    parts = []
    for comp in variant_components(variant):
        if comp == "dist":
            parts.append(pairwise_distance(sub))
        elif comp == "dir":
            parts.append(pairwise_direction(sub))
        else:
            parts.append(delta_pose(sub, sub0))
    return np.concatenate(parts)
