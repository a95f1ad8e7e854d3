"""Blendshape rig: loading, validation, and (non)linear evaluation.

The rig is a neutral marker set plus D weighted delta channels, optionally
carrying in-between shapes (piecewise-linear along a channel's weight) and
pairwise corrective shapes (activated by the product of two weights).
Markers are the only geometry; there is no mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "Channel",
    "Corrective",
    "Region",
    "Rig",
    "load_rig",
    "save_rig",
    "validate_rig",
    "evaluate",
    "evaluate_jacobian",
    "clamp_weights",
]


@dataclass(frozen=True)
class Channel:
    """One blendshape channel: a delta target and optional in-between knots."""

    name: str
    delta: np.ndarray  # (3n,) full-weight delta from neutral
    inbetweens: tuple[tuple[float, np.ndarray], ...] = ()


@dataclass(frozen=True)
class Corrective:
    """Corrective delta activated by the product w_i * w_j."""

    i: int
    j: int
    delta: np.ndarray  # (3n,)


@dataclass(frozen=True)
class Region:
    """Marker and channel index subsets owned by one face region."""

    markers: tuple[int, ...]
    channels: tuple[int, ...]


@dataclass(frozen=True)
class Rig:
    name: str
    neutral: np.ndarray  # (n, 3)
    nose_bridge_index: int
    channels: tuple[Channel, ...]
    correctives: tuple[Corrective, ...] = ()
    regions: dict[str, Region] = field(default_factory=dict)

    @property
    def n_markers(self) -> int:
        return self.neutral.shape[0]

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def channel_names(self) -> list[str]:
        return [c.name for c in self.channels]

    def channel_index(self, name: str) -> int:
        for k, c in enumerate(self.channels):
            if c.name == name:
                return k
        raise KeyError(name)

    def basis(self) -> np.ndarray:
        """Full-weight delta targets stacked as a 3n x D matrix."""
        return np.stack([c.delta for c in self.channels], axis=1)

    def bounding_box_diagonal(self) -> float:
        lo = self.neutral.min(axis=0)
        hi = self.neutral.max(axis=0)
        return float(np.linalg.norm(hi - lo))


def clamp_weights(w) -> np.ndarray:
    """Clamp a raw weight vector elementwise to [0, 1]. Idempotent."""
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise ValidationError("weight vector contains non-finite values")
    return np.clip(w, 0.0, 1.0)


def _inbetween_knots(channel: Channel, n3: int):
    """Knot positions and deltas including the implicit (0, 0) and (1, full)."""
    ts = [0.0] + [t for t, _ in channel.inbetweens] + [1.0]
    ds = [np.zeros(n3)] + [d for _, d in channel.inbetweens] + [channel.delta]
    return np.asarray(ts), ds


def _channel_contribution(channel: Channel, w_k: float, n3: int) -> np.ndarray:
    if not channel.inbetweens:
        return w_k * channel.delta
    ts, ds = _inbetween_knots(channel, n3)
    # segment index: rightmost segment whose left knot is <= w_k
    seg = min(int(np.searchsorted(ts, w_k, side="right")) - 1, len(ts) - 2)
    t0, t1 = ts[seg], ts[seg + 1]
    alpha = (w_k - t0) / (t1 - t0)
    return ds[seg] + alpha * (ds[seg + 1] - ds[seg])


def _channel_slope(channel: Channel, w_k: float, n3: int) -> np.ndarray:
    if not channel.inbetweens:
        return channel.delta
    ts, ds = _inbetween_knots(channel, n3)
    seg = min(int(np.searchsorted(ts, w_k, side="right")) - 1, len(ts) - 2)
    return (ds[seg + 1] - ds[seg]) / (ts[seg + 1] - ts[seg])


def evaluate(rig: Rig, w) -> np.ndarray:
    """Evaluate the rig at weights w, returning an (n, 3) marker set.

    Evaluation order is fixed: in-between-interpolated base deltas first,
    then pairwise correctives. evaluate(rig, zeros) is bitwise the neutral.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (rig.n_channels,):
        raise ValidationError(
            f"weight vector has shape {w.shape}, rig has {rig.n_channels} channels"
        )
    n3 = 3 * rig.n_markers
    offset = np.zeros(n3)
    for k, channel in enumerate(rig.channels):
        if w[k] != 0.0 or channel.inbetweens:
            offset += _channel_contribution(channel, float(w[k]), n3)
    for corr in rig.correctives:
        scale = w[corr.i] * w[corr.j]
        if scale != 0.0:
            offset += scale * corr.delta
    return rig.neutral + offset.reshape(-1, 3)


def evaluate_jacobian(rig: Rig, w, channel_subset) -> tuple[np.ndarray, np.ndarray]:
    """Markers at w plus analytic partials d(markers)/d(w_k) for k in the subset.

    Returns (markers (n,3), jacobian (3n, len(subset))). In-between channels
    contribute their active segment slope; a corrective (i, j) contributes
    w_j * delta to the column of i and w_i * delta to the column of j.
    """
    w = np.asarray(w, dtype=np.float64)
    subset = [int(k) for k in channel_subset]
    for k in subset:
        if not 0 <= k < rig.n_channels:
            raise ValidationError(f"channel index {k} out of range")
    n3 = 3 * rig.n_markers
    markers = evaluate(rig, w)
    jac = np.zeros((n3, len(subset)))
    col = {k: c for c, k in enumerate(subset)}
    for k in subset:
        jac[:, col[k]] = _channel_slope(rig.channels[k], float(w[k]), n3)
    for corr in rig.correctives:
        if corr.i in col:
            jac[:, col[corr.i]] += w[corr.j] * corr.delta
        if corr.j in col:
            jac[:, col[corr.j]] += w[corr.i] * corr.delta
    return markers, jac


def validate_rig(rig: Rig) -> None:
    """Check every rig invariant; raise ValidationError naming the offender."""
    n = rig.n_markers
    n3 = 3 * n
    d = rig.n_channels
    if rig.neutral.shape != (n, 3) or not np.all(np.isfinite(rig.neutral)):
        raise ValidationError("neutral markers must be a finite n x 3 array")
    if not 0 <= rig.nose_bridge_index < n:
        raise ValidationError(f"nose_bridge_index {rig.nose_bridge_index} out of range")
    for channel in rig.channels:
        if channel.delta.shape != (n3,):
            raise ValidationError(
                f"channel '{channel.name}': delta has length {channel.delta.size}, expected {n3}"
            )
        knots = [t for t, _ in channel.inbetweens]
        if any(not 0.0 < t < 1.0 for t in knots):
            raise ValidationError(f"channel '{channel.name}': in-between knots must lie in (0,1)")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValidationError(f"channel '{channel.name}': in-between knots must be strictly increasing")
        for _, delta in channel.inbetweens:
            if delta.shape != (n3,):
                raise ValidationError(f"channel '{channel.name}': in-between delta has wrong length")
    for corr in rig.correctives:
        if corr.i == corr.j:
            raise ValidationError("corrective trigger channels must differ")
        if not (0 <= corr.i < d and 0 <= corr.j < d):
            raise ValidationError(f"corrective trigger ({corr.i}, {corr.j}) out of range")
        if corr.delta.shape != (n3,):
            raise ValidationError("corrective delta has wrong length")
    if rig.regions:
        seen: set[int] = set()
        for name, region in rig.regions.items():
            if any(not 0 <= m < n for m in region.markers):
                raise ValidationError(f"region '{name}': marker index out of range")
            if any(not 0 <= c < d for c in region.channels):
                raise ValidationError(f"region '{name}': channel index out of range")
            if rig.nose_bridge_index not in region.markers:
                raise ValidationError(f"region '{name}': nose bridge marker missing")
            overlap = seen.intersection(region.channels)
            if overlap:
                raise ValidationError(f"region '{name}': channels {sorted(overlap)} claimed twice")
            seen.update(region.channels)
        if seen != set(range(d)):
            missing = sorted(set(range(d)) - seen)
            raise ValidationError(f"channels {missing} not covered by any region")


def _require(document: dict, key: str, path: str):
    if key not in document:
        raise ParseError(f"{path}.{key}: missing required key")
    return document[key]


def load_rig(document: dict) -> Rig:
    """Build a validated Rig from a parsed rig JSON document.

    Each region's marker set is normalized to include the nose-bridge marker.
    """
    if not isinstance(document, dict):
        raise ParseError("$: rig document must be a JSON object")
    name = _require(document, "name", "$")
    try:
        neutral = np.asarray(_require(document, "markers", "$"), dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"$.markers: {exc}") from exc
    if neutral.ndim != 2 or neutral.shape[1] != 3:
        raise ParseError("$.markers: expected a list of [x, y, z] triples")
    nose = int(_require(document, "nose_bridge_index", "$"))

    channels = []
    for idx, cdoc in enumerate(_require(document, "channels", "$")):
        path = f"$.channels[{idx}]"
        try:
            delta = np.asarray(_require(cdoc, "delta", path), dtype=np.float64)
            inbetweens = tuple(
                (float(ib["t"]), np.asarray(ib["delta"], dtype=np.float64))
                for ib in cdoc.get("inbetweens", [])
            )
        except (TypeError, ValueError, KeyError) as exc:
            raise ParseError(f"{path}: {exc}") from exc
        channels.append(Channel(str(_require(cdoc, "name", path)), delta, inbetweens))

    correctives = []
    for idx, xdoc in enumerate(document.get("correctives", [])):
        path = f"$.correctives[{idx}]"
        try:
            correctives.append(
                Corrective(
                    int(_require(xdoc, "i", path)),
                    int(_require(xdoc, "j", path)),
                    np.asarray(_require(xdoc, "delta", path), dtype=np.float64),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: {exc}") from exc

    regions = {}
    for rname, rdoc in document.get("regions", {}).items():
        path = f"$.regions.{rname}"
        markers = sorted(set(int(m) for m in _require(rdoc, "markers", path)) | {nose})
        chans = sorted(int(c) for c in _require(rdoc, "channels", path))
        regions[rname] = Region(tuple(markers), tuple(chans))

    rig = Rig(
        name=str(name),
        neutral=neutral,
        nose_bridge_index=nose,
        channels=tuple(channels),
        correctives=tuple(correctives),
        regions=regions,
    )
    validate_rig(rig)
    return rig


def save_rig(rig: Rig) -> dict:
    """Inverse of load_rig (up to float round-trip through JSON text)."""
    return {
        "name": rig.name,
        "markers": rig.neutral.tolist(),
        "nose_bridge_index": rig.nose_bridge_index,
        "channels": [
            {
                "name": c.name,
                "delta": c.delta.tolist(),
                "inbetweens": [{"t": t, "delta": d.tolist()} for t, d in c.inbetweens],
            }
            for c in rig.channels
        ],
        "correctives": [
            {"i": x.i, "j": x.j, "delta": x.delta.tolist()} for x in rig.correctives
        ],
        "regions": {
            name: {"markers": list(r.markers), "channels": list(r.channels)}
            for name, r in rig.regions.items()
        },
    }
