import numpy as np
import pytest

from facesolve.errors import ValidationError
from facesolve.optimize import (
    FinetuneSpec,
    MatchProblem,
    brute_force_match,
    finetune,
    finetune_detailed,
    objective,
    qp_match,
)
from facesolve.rig import evaluate
from facesolve.synthdata import bake_markers, generate_rom
from facesolve.tracks import MarkerTrack, WeightTrack


def one_channel_problem(rig, w_true):
    b = rig.basis()[:, :1]
    x = rig.neutral.reshape(-1) + b[:, 0] * w_true
    return MatchProblem(b, rig.neutral.reshape(-1), x)


def test_objective_zero_at_match(rig):
    w = np.full(rig.n_channels, 0.25)
    assert objective(rig, w, evaluate(rig, w)) == pytest.approx(0.0, abs=1e-20)


def test_objective_single_marker_offset(rig):
    w = np.zeros(rig.n_channels)
    x = rig.neutral.copy()
    x[5, 0] += 1.0
    assert objective(rig, w, x) == pytest.approx(1.0)


def test_objective_marker_mask(rig):
    w = np.zeros(rig.n_channels)
    x = rig.neutral.copy()
    x[5, 0] += 3.0  # excluded marker differs
    assert objective(rig, w, x, marker_subset=[0, 1, 2]) == pytest.approx(0.0, abs=1e-20)


def test_qp_neutral_target(rig):
    p = MatchProblem(rig.basis(), rig.neutral.reshape(-1), rig.neutral.reshape(-1))
    w, obj = qp_match(p)
    assert np.allclose(w, 0.0, atol=1e-6)
    assert obj < 1e-10


def test_qp_one_channel_interior(rig):
    w, _ = qp_match(one_channel_problem(rig, 0.5))
    assert w[0] == pytest.approx(0.5, abs=1e-6)


def test_qp_one_channel_clamped(rig):
    w, _ = qp_match(one_channel_problem(rig, 2.0))
    assert w[0] == pytest.approx(1.0, abs=1e-9)


def test_qp_within_bounds_always(rig):
    rng = np.random.default_rng(0)
    b = rig.basis()[:, :3]
    for _ in range(10):
        x = rig.neutral.reshape(-1) + rng.normal(0, 1.0, b.shape[0])
        w, _ = qp_match(MatchProblem(b, rig.neutral.reshape(-1), x))
        assert np.all(w >= 0.0) and np.all(w <= 1.0)


def test_qp_matches_brute_force_oracle(rig):
    rng = np.random.default_rng(1)
    b0 = rig.neutral.reshape(-1)
    for trial in range(50):
        cols = rng.choice(rig.n_channels, size=rng.integers(1, 3), replace=False)
        basis = rig.basis()[:, cols]
        w_true = rng.uniform(-0.5, 1.5, len(cols))
        x = b0 + basis @ w_true + rng.normal(0, 0.05, b0.size)
        p = MatchProblem(basis, b0, x)
        _, obj_qp = qp_match(p)
        _, obj_grid = brute_force_match(p, 1e-3)
        assert obj_qp <= obj_grid + 1e-6


def test_brute_force_resolution_one_corners(rig):
    p = one_channel_problem(rig, 0.4)
    w, _ = brute_force_match(p, 1.0)
    assert w[0] in (0.0, 1.0)


def test_brute_force_analytic_1d(rig):
    p = one_channel_problem(rig, 0.731)
    w, _ = brute_force_match(p, 1e-3)
    assert w[0] == pytest.approx(0.731, abs=1e-3)


def test_brute_force_dimension_guard(rig):
    p = MatchProblem(rig.basis()[:, :4], rig.neutral.reshape(-1), rig.neutral.reshape(-1))
    with pytest.raises(ValidationError):
        brute_force_match(p, 0.5)


def finetune_setup(rig, seed=0, n_frames=6):
    clip = generate_rom(rig, n_frames, seed=seed)
    track = bake_markers(rig, clip)
    return clip, track


def test_finetune_stationary_at_truth(rig):
    clip, track = finetune_setup(rig)
    w_init = WeightTrack(clip.frames.copy(), rig.channel_names)
    spec = FinetuneSpec(list(range(rig.n_channels)), (0, track.n_frames - 1))
    out = finetune(rig, track, w_init, spec)
    assert np.allclose(out.frames, w_init.frames, atol=1e-7)


def test_finetune_freeze_contract_bitwise(rig):
    clip, track = finetune_setup(rig, seed=3)
    rng = np.random.default_rng(4)
    w_init = WeightTrack(np.clip(clip.frames + rng.normal(0, 0.15, clip.frames.shape), 0, 1),
                         rig.channel_names)
    subset = [0, 5, 9]
    frozen = [k for k in range(rig.n_channels) if k not in subset]
    spec = FinetuneSpec(subset, (0, track.n_frames - 1))
    out = finetune(rig, track, w_init, spec)
    assert np.array_equal(out.frames[:, frozen], w_init.frames[:, frozen])


def test_finetune_monotone_objective(rig):
    clip, track = finetune_setup(rig, seed=5)
    rng = np.random.default_rng(6)
    w_init = WeightTrack(np.clip(clip.frames + rng.normal(0, 0.2, clip.frames.shape), 0, 1),
                         rig.channel_names)
    spec = FinetuneSpec(list(range(rig.n_channels)), (0, track.n_frames - 1))
    _, infos = finetune_detailed(rig, track, w_init, spec)
    for info in infos:
        assert info.final_objective <= info.initial_objective
        assert info.final_objective < info.initial_objective * 0.5  # actually improves


def test_finetune_warm_start_beats_zero_start(rig):
    clip, track = finetune_setup(rig, seed=7, n_frames=8)
    rng = np.random.default_rng(8)
    warm = WeightTrack(np.clip(clip.frames + rng.normal(0, 0.05, clip.frames.shape), 0, 1),
                       rig.channel_names)
    cold = WeightTrack(np.zeros_like(clip.frames), rig.channel_names)
    spec = FinetuneSpec(list(range(rig.n_channels)), (0, track.n_frames - 1), max_iters=25)
    _, warm_infos = finetune_detailed(rig, track, warm, spec)
    _, cold_infos = finetune_detailed(rig, track, cold, spec)
    assert sum(i.iterations for i in warm_infos) <= sum(i.iterations for i in cold_infos)
    assert sum(i.final_objective for i in warm_infos) <= sum(i.final_objective for i in cold_infos) + 1e-9


def test_finetune_frame_range_guard(rig):
    clip, track = finetune_setup(rig)
    w_init = WeightTrack(clip.frames, rig.channel_names)
    with pytest.raises(ValidationError):
        finetune(rig, track, w_init, FinetuneSpec([0], (0, 99)))


def test_finetune_empty_channels_rejected():
    with pytest.raises(ValidationError):
        FinetuneSpec([], (0, 1))


def test_qp_deterministic(rig):
    rng = np.random.default_rng(9)
    b0 = rig.neutral.reshape(-1)
    basis = rig.basis()[:, :2]
    x = b0 + rng.normal(0, 0.3, b0.size)
    p = MatchProblem(basis, b0, x)
    w1, o1 = qp_match(p)
    w2, o2 = qp_match(p)
    assert np.array_equal(w1, w2) and o1 == o2
