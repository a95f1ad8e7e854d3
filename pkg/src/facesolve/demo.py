"""Shipped demo rig: a schematic 40-marker face with 24 channels in 7 regions.

Coordinates are model units (roughly centimetres), x to the actor's left,
y up, z out of the face. The rig is hand-authored but procedurally
assembled; it includes two in-between shapes and two correctives so the
nonlinear evaluation paths are exercised by every downstream stage.
"""

from __future__ import annotations

import numpy as np

from .rig import Rig, load_rig

__all__ = ["demo_rig_document", "demo_rig", "demo_noise_stds"]

# fmt: off
_MARKERS = [
    ( 0.0,  2.0,  9.0),   # 0  nose bridge (shared across all regions)
    (-1.5,  5.0,  8.5),   # 1  inner brow L
    ( 1.5,  5.0,  8.5),   # 2  inner brow R
    (-3.5,  5.2,  7.8),   # 3  mid brow L
    ( 3.5,  5.2,  7.8),   # 4  mid brow R
    (-5.5,  4.8,  6.5),   # 5  outer brow L
    ( 5.5,  4.8,  6.5),   # 6  outer brow R
    (-2.0,  7.5,  8.0),   # 7  forehead L
    ( 2.0,  7.5,  8.0),   # 8  forehead R
    (-3.0,  3.6,  7.5),   # 9  upper lid L
    ( 3.0,  3.6,  7.5),   # 10 upper lid R
    (-3.0,  2.4,  7.5),   # 11 lower lid L
    ( 3.0,  2.4,  7.5),   # 12 lower lid R
    (-4.6,  3.0,  6.8),   # 13 outer eye corner L
    ( 4.6,  3.0,  6.8),   # 14 outer eye corner R
    (-1.6,  3.0,  7.8),   # 15 inner eye corner L
    ( 1.6,  3.0,  7.8),   # 16 inner eye corner R
    ( 0.0,  0.0, 10.5),   # 17 nose tip
    (-1.2, -0.5,  9.0),   # 18 nostril L
    ( 1.2, -0.5,  9.0),   # 19 nostril R
    (-4.5,  1.0,  6.5),   # 20 upper cheek L
    ( 4.5,  1.0,  6.5),   # 21 upper cheek R
    (-5.0, -1.5,  6.0),   # 22 lower cheek L
    ( 5.0, -1.5,  6.0),   # 23 lower cheek R
    (-6.5,  0.5,  4.5),   # 24 outer cheek L
    ( 6.5,  0.5,  4.5),   # 25 outer cheek R
    ( 0.0, -2.0,  9.5),   # 26 upper lip mid
    ( 0.0, -3.4,  9.3),   # 27 lower lip mid
    (-2.4, -2.7,  8.4),   # 28 lip corner L
    ( 2.4, -2.7,  8.4),   # 29 lip corner R
    (-1.2, -2.1,  9.1),   # 30 upper lip quarter L
    ( 1.2, -2.1,  9.1),   # 31 upper lip quarter R
    (-1.2, -3.3,  9.0),   # 32 lower lip quarter L
    ( 1.2, -3.3,  9.0),   # 33 lower lip quarter R
    ( 0.0, -5.0,  8.8),   # 34 chin mid
    (-1.8, -4.8,  8.0),   # 35 chin L
    ( 1.8, -4.8,  8.0),   # 36 chin R
    (-4.5, -3.5,  5.5),   # 37 jawline L
    ( 4.5, -3.5,  5.5),   # 38 jawline R
    ( 0.0, -6.2,  7.5),   # 39 under chin
]
# fmt: on

_N = len(_MARKERS)

# Channel deltas as sparse {marker: (dx, dy, dz)} maps, full-weight amplitude.
# Apex movements are 0.5-2.5 units against a ~26-unit bounding-box diagonal.
_CHANNEL_MOVES: dict[str, dict[int, tuple[float, float, float]]] = {
    # jaw region
    "jawOpen": {
        26: (0, -0.3, 0.0), 27: (0, -1.6, -0.3), 28: (-0.1, -1.0, -0.2),
        29: (0.1, -1.0, -0.2), 30: (0, -0.4, 0), 31: (0, -0.4, 0),
        32: (0, -1.5, -0.3), 33: (0, -1.5, -0.3), 34: (0, -2.5, -0.8),
        35: (0, -2.3, -0.7), 36: (0, -2.3, -0.7), 37: (0, -1.2, -0.4),
        38: (0, -1.2, -0.4), 39: (0, -2.6, -1.0), 22: (0, -0.4, -0.1),
        23: (0, -0.4, -0.1),
    },
    "jawThrust": {
        27: (0, 0, 0.7), 32: (0, 0, 0.6), 33: (0, 0, 0.6), 34: (0, 0.1, 1.0),
        35: (0, 0, 0.9), 36: (0, 0, 0.9), 37: (0, 0, 0.5), 38: (0, 0, 0.5),
        39: (0, 0.1, 1.0), 28: (0, 0, 0.3), 29: (0, 0, 0.3),
    },
    "jawSideways": {
        27: (0.8, 0, 0), 32: (0.7, 0, 0), 33: (0.7, 0, 0), 34: (1.2, 0, 0),
        35: (1.1, 0, 0), 36: (1.1, 0, 0), 37: (0.6, 0, 0), 38: (0.6, 0, 0),
        39: (1.2, 0, 0), 28: (0.4, 0, 0), 29: (0.4, 0, 0),
    },
    # eyeballs region (lid markers act as projected eye-surface proxies)
    "eyeLeftRight": {
        9: (0.5, 0, 0), 10: (0.5, 0, 0), 11: (0.5, 0, -0.05), 12: (0.5, 0, -0.05),
    },
    "eyeUpDown": {
        9: (0, 0.45, 0.1), 10: (0, 0.45, 0.1), 11: (0, 0.35, 0.05), 12: (0, 0.35, 0.05),
    },
    # eye-lids region
    "eyeCloseL": {9: (0, -0.9, -0.1), 11: (0, 0.25, 0.0), 13: (0.1, -0.15, 0), 15: (-0.05, -0.1, 0)},
    "eyeCloseR": {10: (0, -0.9, -0.1), 12: (0, 0.25, 0.0), 14: (-0.1, -0.15, 0), 16: (0.05, -0.1, 0)},
    # upper-face region
    "innerBrowRaiserL": {1: (0.1, 0.9, 0.1), 3: (0, 0.35, 0.05), 7: (0, 0.3, 0)},
    "innerBrowRaiserR": {2: (-0.1, 0.9, 0.1), 4: (0, 0.35, 0.05), 8: (0, 0.3, 0)},
    "outerBrowRaiserL": {5: (0, 0.9, 0.1), 3: (0, 0.4, 0.05), 13: (0, 0.15, 0)},
    "outerBrowRaiserR": {6: (0, 0.9, 0.1), 4: (0, 0.4, 0.05), 14: (0, 0.15, 0)},
    "browLowerer": {
        1: (0.3, -0.7, 0), 2: (-0.3, -0.7, 0), 3: (0.15, -0.5, 0),
        4: (-0.15, -0.5, 0), 7: (0, -0.3, 0), 8: (0, -0.3, 0),
    },
    # cheek region
    "cheekRaiserL": {20: (0, 0.8, 0.2), 22: (0, 0.5, 0.1), 11: (0, 0.2, 0), 24: (0, 0.3, 0)},
    "cheekRaiserR": {21: (0, 0.8, 0.2), 23: (0, 0.5, 0.1), 12: (0, 0.2, 0), 25: (0, 0.3, 0)},
    "noseWrinkler": {
        17: (0, 0.5, -0.2), 18: (-0.1, 0.45, -0.1), 19: (0.1, 0.45, -0.1),
        20: (0, 0.3, 0), 21: (0, 0.3, 0),
    },
    "cheekPuff": {
        20: (-0.3, 0, 0.6), 21: (0.3, 0, 0.6), 22: (-0.4, -0.1, 0.8),
        23: (0.4, -0.1, 0.8), 24: (-0.5, 0, 0.4), 25: (0.5, 0, 0.4),
    },
    # lower-face region
    "lipRaiser": {26: (0, 0.6, 0.1), 30: (0, 0.55, 0.1), 31: (0, 0.55, 0.1), 18: (0, 0.2, 0), 19: (0, 0.2, 0)},
    "lipDepressor": {28: (-0.2, -0.8, 0), 29: (0.2, -0.8, 0), 32: (0, -0.5, 0), 33: (0, -0.5, 0)},
    "chinRaiser": {34: (0, 0.8, 0.4), 35: (0, 0.7, 0.3), 36: (0, 0.7, 0.3), 27: (0, 0.4, 0.2), 39: (0, 0.5, 0.3)},
    "lipPressor": {26: (0, -0.3, -0.2), 27: (0, 0.3, -0.2), 30: (0, -0.25, -0.15), 31: (0, -0.25, -0.15), 32: (0, 0.25, -0.15), 33: (0, 0.25, -0.15)},
    # lips region
    "lipPuckererL": {28: (1.0, 0.1, 0.5), 30: (0.4, 0, 0.3), 32: (0.4, 0, 0.3), 26: (0.15, 0, 0.1), 27: (0.15, 0, 0.1)},
    "lipPuckererR": {29: (-1.0, 0.1, 0.5), 31: (-0.4, 0, 0.3), 33: (-0.4, 0, 0.3), 26: (-0.15, 0, 0.1), 27: (-0.15, 0, 0.1)},
    "lipFunneler": {
        26: (0, 0.25, 0.7), 27: (0, -0.25, 0.7), 30: (-0.1, 0.2, 0.5),
        31: (0.1, 0.2, 0.5), 32: (-0.1, -0.2, 0.5), 33: (0.1, -0.2, 0.5),
        28: (0.5, 0, 0.2), 29: (-0.5, 0, 0.2),
    },
    "lipTightener": {
        28: (0.6, 0, -0.3), 29: (-0.6, 0, -0.3), 26: (0, -0.1, -0.25),
        27: (0, 0.1, -0.25), 30: (0.15, 0, -0.2), 31: (-0.15, 0, -0.2),
        32: (0.15, 0, -0.2), 33: (-0.15, 0, -0.2),
    },
}

_REGION_CHANNELS = {
    "jaw": ["jawOpen", "jawThrust", "jawSideways"],
    "eyeballs": ["eyeLeftRight", "eyeUpDown"],
    "eye-lids": ["eyeCloseL", "eyeCloseR"],
    "upper-face": ["innerBrowRaiserL", "innerBrowRaiserR", "outerBrowRaiserL",
                   "outerBrowRaiserR", "browLowerer"],
    "cheek": ["cheekRaiserL", "cheekRaiserR", "noseWrinkler", "cheekPuff"],
    "lower-face": ["lipRaiser", "lipDepressor", "chinRaiser", "lipPressor"],
    "lips": ["lipPuckererL", "lipPuckererR", "lipFunneler", "lipTightener"],
}

_REGION_MARKERS = {
    "jaw": list(range(26, 40)) + [22, 23],
    "eyeballs": list(range(9, 17)),
    "eye-lids": list(range(9, 17)),
    "upper-face": list(range(1, 9)) + [9, 10],
    "cheek": list(range(20, 26)) + [17, 18, 19],
    "lower-face": list(range(26, 40)),
    "lips": list(range(26, 40)),
}


def _delta_vector(moves: dict[int, tuple[float, float, float]]) -> list[float]:
    delta = np.zeros((_N, 3))
    for idx, off in moves.items():
        delta[idx] = off
    return delta.reshape(-1).tolist()


def _scaled(moves: dict[int, tuple[float, float, float]], s: float):
    return {i: (s * x, s * y, s * z) for i, (x, y, z) in moves.items()}


def demo_rig_document() -> dict:
    """The demo rig as a plain rig-JSON document."""
    order = [name for names in _REGION_CHANNELS.values() for name in names]
    channels = []
    for name in order:
        cdoc = {"name": name, "delta": _delta_vector(_CHANNEL_MOVES[name]), "inbetweens": []}
        channels.append(cdoc)

    # jawOpen rotates the chin: its half-open in-between sags less in z than
    # the linear midpoint, giving the channel a curved marker path.
    jaw_half = _scaled(_CHANNEL_MOVES["jawOpen"], 0.5)
    jaw_half = {i: (x, y, z + 0.15) for i, (x, y, z) in jaw_half.items()}
    channels[order.index("jawOpen")]["inbetweens"] = [
        {"t": 0.5, "delta": _delta_vector(jaw_half)}
    ]
    # cheekPuff bulges outward faster than linearly near full activation
    puff_half = _scaled(_CHANNEL_MOVES["cheekPuff"], 0.4)
    channels[order.index("cheekPuff")]["inbetweens"] = [
        {"t": 0.5, "delta": _delta_vector(puff_half)}
    ]

    correctives = [
        # open jaw flattens the funneler's forward push
        {
            "i": order.index("jawOpen"),
            "j": order.index("lipFunneler"),
            "delta": _delta_vector({26: (0, 0, -0.2), 27: (0, 0, -0.2), 28: (-0.1, 0, -0.1), 29: (0.1, 0, -0.1)}),
        },
        # puffed cheeks push tightened lip corners outward
        {
            "i": order.index("cheekPuff"),
            "j": order.index("lipTightener"),
            "delta": _delta_vector({28: (-0.15, 0, 0.1), 29: (0.15, 0, 0.1)}),
        },
    ]

    name_to_idx = {n: i for i, n in enumerate(order)}
    regions = {
        rname: {
            "markers": sorted(set(_REGION_MARKERS[rname]) | {0}),
            "channels": sorted(name_to_idx[c] for c in _REGION_CHANNELS[rname]),
        }
        for rname in _REGION_CHANNELS
    }

    return {
        "name": "demo-face",
        "markers": [list(m) for m in _MARKERS],
        "nose_bridge_index": 0,
        "channels": channels,
        "correctives": correctives,
        "regions": regions,
    }


def demo_rig() -> Rig:
    return load_rig(demo_rig_document())


def demo_noise_stds(base: float = 0.01) -> np.ndarray:
    """Default augmentation profile: lower-face jitter is 3x the nose bridge."""
    stds = np.full((_N, 3), 2.0 * base)
    stds[0] = base  # nose bridge is the steadiest marker
    for idx in range(26, 40):  # lips and chin wobble the most
        stds[idx] = 3.0 * base
    return stds
