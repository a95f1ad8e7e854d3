"""Matching-approach solvers: box-constrained least squares on the linear
basis (accelerated projected gradient), per-frame projected L-BFGS
fine-tuning on the full nonlinear rig, and a brute-force grid oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .rig import Rig, evaluate, evaluate_jacobian
from .tracks import MarkerTrack, WeightTrack

__all__ = [
    "MatchProblem",
    "FinetuneSpec",
    "FrameFinetuneInfo",
    "objective",
    "qp_match",
    "finetune",
    "finetune_detailed",
    "brute_force_match",
]


@dataclass
class MatchProblem:
    """min ||b0 + B w - x||^2 over per-channel box bounds within [0, 1]."""

    basis: np.ndarray  # (3n, D)
    neutral: np.ndarray  # (3n,)
    target: np.ndarray  # (3n,)
    marker_mask: list[int] | None = None  # marker indices; None = all
    bounds: np.ndarray | None = None  # (D, 2); None = [0, 1] everywhere

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=np.float64)
        self.neutral = np.asarray(self.neutral, dtype=np.float64).reshape(-1)
        self.target = np.asarray(self.target, dtype=np.float64).reshape(-1)
        if self.basis.shape[0] != self.neutral.size or self.target.size != self.neutral.size:
            raise ValidationError("basis, neutral, and target dimensions disagree")
        d = self.basis.shape[1]
        if self.bounds is None:
            self.bounds = np.column_stack([np.zeros(d), np.ones(d)])
        else:
            self.bounds = np.asarray(self.bounds, dtype=np.float64)
            if self.bounds.shape != (d, 2) or np.any(self.bounds[:, 0] > self.bounds[:, 1]):
                raise ValidationError("bounds must be (D, 2) with lo <= hi")

    def rows(self) -> np.ndarray:
        if self.marker_mask is None:
            return np.arange(self.neutral.size)
        return np.concatenate([[3 * m, 3 * m + 1, 3 * m + 2] for m in self.marker_mask])


@dataclass
class FinetuneSpec:
    """Artist-scoped fine-tune: which channels, frames, and markers."""

    channel_subset: list[int]
    frame_range: tuple[int, int]  # inclusive
    marker_subset: list[int] | None = None
    max_iters: int = 50
    grad_tol: float = 1e-8
    history_size: int = 10

    def __post_init__(self):
        if not self.channel_subset:
            raise ValidationError("channel subset must be non-empty")
        if self.frame_range[0] > self.frame_range[1]:
            raise ValidationError("frame range must satisfy f0 <= f1")


@dataclass
class FrameFinetuneInfo:
    frame: int
    initial_objective: float
    final_objective: float
    iterations: int


def _marker_rows(n_markers: int, marker_subset) -> np.ndarray:
    if marker_subset is None:
        return np.arange(3 * n_markers)
    return np.concatenate([[3 * m, 3 * m + 1, 3 * m + 2] for m in marker_subset])


def objective(rig: Rig, w, x, marker_subset=None) -> float:
    """Sum of squared residuals between g(w) and x over the marker subset."""
    markers = evaluate(rig, w)
    resid = (markers - np.asarray(x, dtype=np.float64).reshape(-1, 3)).reshape(-1)
    return float(np.sum(resid[_marker_rows(rig.n_markers, marker_subset)] ** 2))


def qp_match(p: MatchProblem, tol: float = 1e-9, max_iters: int = 2000) -> tuple[np.ndarray, float]:
    """Nesterov-accelerated projected gradient with step 1/L.

    L is twice the largest eigenvalue of A^T A (power iteration). Returns the
    best (lowest-objective) feasible iterate, so the result never exceeds the
    objective at the zero vector.
    """
    rows = p.rows()
    a = p.basis[rows]
    r = p.target[rows] - p.neutral[rows]
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(r))):
        raise ValidationError("non-finite problem data")
    lo, hi = p.bounds[:, 0], p.bounds[:, 1]
    d = a.shape[1]

    ata = a.T @ a
    # power iteration for the Lipschitz constant of the gradient
    v = np.ones(d) / np.sqrt(d)
    lam = 1.0
    for _ in range(100):
        v_new = ata @ v
        norm = np.linalg.norm(v_new)
        if norm < 1e-30:
            break
        lam = norm
        v = v_new / norm
    step = 1.0 / (2.0 * lam) if lam > 0 else 1.0

    def f(w):
        resid = a @ w - r
        return float(resid @ resid)

    def grad(w):
        return 2.0 * (ata @ w - a.T @ r)

    w = np.clip(np.zeros(d), lo, hi)
    y = w.copy()
    t_acc = 1.0
    best_w, best_f = w.copy(), f(w)
    for _ in range(max_iters):
        g = grad(y)
        w_new = np.clip(y - step * g, lo, hi)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        y = w_new + ((t_acc - 1.0) / t_new) * (w_new - w)
        y = np.clip(y, lo, hi)
        w, t_acc = w_new, t_new
        fw = f(w)
        if fw < best_f:
            best_f, best_w = fw, w.copy()
        pg = np.linalg.norm(w - np.clip(w - grad(w), lo, hi))
        if pg < tol:
            break
    return best_w, best_f


def brute_force_match(p: MatchProblem, resolution: float) -> tuple[np.ndarray, float]:
    """Exhaustive grid search oracle; D <= 3 only."""
    d = p.basis.shape[1]
    if d > 3:
        raise ValidationError("brute force supports at most 3 channels")
    rows = p.rows()
    a = p.basis[rows]
    r = p.target[rows] - p.neutral[rows]
    axes = [
        np.arange(p.bounds[k, 0], p.bounds[k, 1] + resolution / 2, resolution)
        for k in range(d)
    ]
    grids = np.meshgrid(*axes, indexing="ij")
    candidates = np.stack([g.reshape(-1) for g in grids], axis=1)
    resid = candidates @ a.T - r
    vals = np.sum(resid * resid, axis=1)
    best = int(np.argmin(vals))
    return candidates[best], float(vals[best])


def _finetune_frame(rig: Rig, x_frame: np.ndarray, w0: np.ndarray,
                    spec: FinetuneSpec) -> tuple[np.ndarray, FrameFinetuneInfo, int]:
    sub = list(spec.channel_subset)
    rows = _marker_rows(rig.n_markers, spec.marker_subset)
    w_full = w0.copy()

    def f_and_g(w_sub):
        w_full[sub] = w_sub
        markers, jac = evaluate_jacobian(rig, w_full, sub)
        resid = (markers.reshape(-1) - x_frame.reshape(-1))[rows]
        return float(resid @ resid), 2.0 * jac[rows].T @ resid

    w = np.clip(w0[sub].copy(), 0.0, 1.0)
    f, g = f_and_g(w)
    f_init = f
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    iters = 0
    for _ in range(spec.max_iters):
        # projected-gradient stationarity test on the box [0, 1]
        if np.linalg.norm(w - np.clip(w - g, 0.0, 1.0)) < spec.grad_tol:
            break
        # two-loop recursion
        q = g.copy()
        alphas = []
        rhos = [1.0 / float(y @ s) for s, y in zip(s_hist, y_hist)]
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rhos)):
            alpha = rho * (s @ q)
            q -= alpha * y
            alphas.append(alpha)
        if s_hist:
            s, y = s_hist[-1], y_hist[-1]
            q *= (s @ y) / (y @ y)
        for (s, y, rho), alpha in zip(zip(s_hist, y_hist, rhos), reversed(alphas)):
            beta = rho * (y @ q)
            q += (alpha - beta) * s
        direction = -q
        if direction @ g >= 0:  # not a descent direction; fall back
            direction = -g

        # Armijo backtracking on projected trial points
        step_len = 1.0
        accepted = False
        for _ls in range(30):
            w_new = np.clip(w + step_len * direction, 0.0, 1.0)
            move = w_new - w
            if np.linalg.norm(move) < 1e-16:
                break
            f_new, g_new = f_and_g(w_new)
            if f_new <= f and f_new <= f + 1e-4 * (g @ move):
                accepted = True
                break
            step_len *= 0.5
        if not accepted:
            break
        s_vec = w_new - w
        y_vec = g_new - g
        if s_vec @ y_vec > 1e-12:
            s_hist.append(s_vec)
            y_hist.append(y_vec)
            if len(s_hist) > spec.history_size:
                s_hist.pop(0)
                y_hist.pop(0)
        w, f, g = w_new, f_new, g_new
        iters += 1

    # only selected channels may move; guaranteed monotone (Armijo accepts
    # strict-descent steps only, and f <= f_init when no step is taken)
    out = w0.copy()
    out[sub] = w if f <= f_init else np.clip(w0[sub], 0.0, 1.0)
    f_final = min(f, f_init)
    return out, FrameFinetuneInfo(0, f_init, f_final, iters), iters


def finetune_detailed(rig: Rig, track: MarkerTrack, w_init: WeightTrack,
                      spec: FinetuneSpec) -> tuple[WeightTrack, list[FrameFinetuneInfo]]:
    """Projected L-BFGS over the selected channels, frame by frame.

    Non-selected channels are copied bit-identically from w_init; the
    per-frame objective never exceeds its value at the initialization.
    """
    f0, f1 = spec.frame_range
    if f0 < 0 or f1 >= track.n_frames:
        raise ValidationError(f"frame range ({f0}, {f1}) outside track of {track.n_frames} frames")
    if w_init.n_frames != track.n_frames:
        raise ValidationError("initial weights and marker track lengths differ")
    for k in spec.channel_subset:
        if not 0 <= k < rig.n_channels:
            raise ValidationError(f"channel index {k} out of range")
    out = w_init.frames.copy()
    infos = []
    for frame in range(f0, f1 + 1):
        solved, info, _ = _finetune_frame(rig, track.frames[frame], w_init.frames[frame], spec)
        out[frame] = solved
        info.frame = frame
        infos.append(info)
    return WeightTrack(out, w_init.channels), infos


def finetune(rig: Rig, track: MarkerTrack, w_init: WeightTrack, spec: FinetuneSpec) -> WeightTrack:
    result, _ = finetune_detailed(rig, track, w_init, spec)
    return result
