"""End-to-end acceptance suite.

Each test covers one acceptance criterion and emits a single
"ACCEPTANCE <name>: PASS|FAIL (<detail>)" line on the live terminal.
The heavyweight fixtures (full-budget region training) are module-scoped
so the whole suite stays well inside its runtime budget.
"""

import dataclasses
import hashlib
import json
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from facesolve.cli import main as cli_main
from facesolve.demo import demo_noise_stds, demo_rig
from facesolve.neural import (
    NetworkArch,
    forward,
    init_network,
    loss_and_grad,
)
from facesolve.optimize import (
    FinetuneSpec,
    MatchProblem,
    brute_force_match,
    finetune_detailed,
    qp_match,
)
from facesolve.pipeline import (
    AnchorPose,
    align_with_anchor,
    rmse,
    run_session,
)
from facesolve.rig import evaluate, evaluate_jacobian
from facesolve.synthdata import (
    NoiseProfile,
    TrainingSet,
    augment,
    bake_markers,
    generate_one_hot_facs,
    generate_rom,
    median_heuristic_gamma,
    select_salient,
    simulate_shot,
)
from facesolve.tracks import AnimationClip, MarkerTrack, WeightTrack
from facesolve.training import DEFAULT_REGION_SPECS, train_bundle


def report(capfd, name: str, ok: bool, detail: str) -> None:
    with capfd.disabled():
        print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def full_rig():
    return demo_rig()


@pytest.fixture(scope="module")
def full_bundle(full_rig):
    """Seven regions trained at the production-table scale (rb_dim <= 256)
    on one-hot ramps (~500 frames) plus a range-of-motion clip (~2000)."""
    rig = full_rig
    facs = generate_one_hot_facs(rig, 21)          # 24 channels x 21 = 504
    rom = generate_rom(rig, 2000, seed=7)
    profile = NoiseProfile(demo_noise_stds(0.01), seed=11)
    parts = []
    for clip, tag in [(facs, "facs"), (rom, "rom")]:
        noisy = augment(bake_markers(rig, clip), profile)
        parts.append(TrainingSet(noisy.frames, clip.frames, [tag] * clip.n_frames))
    training = TrainingSet.concatenate(parts)
    start = time.monotonic()
    bundle, _ = train_bundle(training, rig, seed=0)
    return bundle, time.monotonic() - start


@pytest.fixture(scope="module")
def held_out(full_rig):
    clip = generate_rom(full_rig, 300, seed=99)
    return clip, bake_markers(full_rig, clip)


def test_gradient_oracle(full_rig, capfd):
    start = time.monotonic()
    rng = np.random.default_rng(1234)

    # network parameter gradients vs central differences, every coordinate
    worst_net = 0.0
    for trial in range(12):
        arch = NetworkArch(
            input_dim=int(rng.integers(3, 8)), rb_dim=int(rng.integers(4, 10)),
            n_rb=int(rng.integers(1, 3)), output_dim=int(rng.integers(1, 4)),
            jaw_cond=bool(trial % 2), jaw_dim=int(rng.integers(1, 4)),
        )
        net = init_network(arch, seed=trial)
        for name in net.params:
            net.params[name] = net.params[name] + rng.normal(0, 0.2, net.params[name].shape)
        x = rng.normal(0, 1, (5, arch.input_dim))
        y = rng.normal(0, 1, (5, arch.output_dim))
        jaw = rng.normal(0, 1, (5, arch.jaw_dim)) if arch.jaw_cond else None
        _, grads = loss_and_grad(net, x, y, jaw=jaw, l2=1e-3)
        for name, param in net.params.items():
            flat = param.reshape(-1)
            g = grads[name].reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + 1e-6
                lp, _ = loss_and_grad(net, x, y, jaw=jaw, l2=1e-3)
                flat[i] = orig - 1e-6
                lm, _ = loss_and_grad(net, x, y, jaw=jaw, l2=1e-3)
                flat[i] = orig
                fd = (lp - lm) / 2e-6
                worst_net = max(worst_net, abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-6))

    # rig Jacobian vs central differences, away from in-between knots
    worst_rig = 0.0
    rig = full_rig
    for trial in range(10):
        w = rng.uniform(0.05, 0.45, rig.n_channels)
        _, jac = evaluate_jacobian(rig, w, range(rig.n_channels))
        for k in range(rig.n_channels):
            hi = evaluate(rig, np.where(np.arange(rig.n_channels) == k, w + 1e-6, w))
            lo = evaluate(rig, np.where(np.arange(rig.n_channels) == k, w - 1e-6, w))
            fd_col = (hi - lo).reshape(-1) / 2e-6
            scale = max(np.abs(fd_col).max(), np.abs(jac[:, k]).max(), 1e-8)
            worst_rig = max(worst_rig, np.abs(jac[:, k] - fd_col).max() / scale)

    elapsed = time.monotonic() - start
    ok = worst_net < 1e-4 and worst_rig < 1e-5 and elapsed < 60
    report(capfd, "gradient-oracle", ok,
           f"net rel err {worst_net:.2e} < 1e-4, rig rel err {worst_rig:.2e} < 1e-5, {elapsed:.1f}s")


def test_qp_oracle_equivalence(capfd):
    start = time.monotonic()
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(50):
        d = int(rng.integers(1, 3))
        rows = int(rng.integers(2, 9)) * 3
        basis = rng.normal(0, 1, (rows, d))
        neutral = rng.normal(0, 1, rows)
        target = neutral + basis @ rng.uniform(-0.4, 1.4, d) + rng.normal(0, 0.1, rows)
        problem = MatchProblem(basis=basis, neutral=neutral, target=target)
        w_qp, f_qp = qp_match(problem)
        _, f_bf = brute_force_match(problem, resolution=1e-3)
        worst = max(worst, f_qp - f_bf)
        assert np.all(w_qp >= 0) and np.all(w_qp <= 1)
    elapsed = time.monotonic() - start
    # the continuous solver may only beat the 1e-3 grid, never trail it by > 1e-6
    ok = worst < 1e-6 and elapsed < 60
    report(capfd, "qp-oracle-equivalence", ok,
           f"max objective gap {worst:.2e} < 1e-6 over 50 problems, {elapsed:.1f}s")


def test_round_trip_solve(full_rig, full_bundle, held_out, capfd):
    start = time.monotonic()
    rig = full_rig
    bundle, train_seconds = full_bundle
    clip, clean = held_out

    solve_report = run_session(rig, bundle, clean)
    diag = rig.bounding_box_diagonal()
    raw_pct = solve_report.rmse_aligned.mean() / diag * 100

    spec = FinetuneSpec(list(range(rig.n_channels)), (0, clean.n_frames - 1), max_iters=50)
    tuned = run_session(rig, bundle, clean, finetune_spec=spec)
    tuned_pct = tuned.rmse_finetuned.mean() / diag * 100

    total = train_seconds + (time.monotonic() - start)
    ok = raw_pct <= 2.0 and tuned_pct <= 1.0 and total <= 1800
    report(capfd, "round-trip-solve", ok,
           f"raw RMSE {raw_pct:.3f}% <= 2% of bbox diag, finetuned {tuned_pct:.3f}% <= 1%, "
           f"{total:.0f}s <= 1800s")


def test_anchor_effect(full_rig, full_bundle, capfd):
    start = time.monotonic()
    rig = full_rig
    bundle, _ = full_bundle

    clip = generate_rom(rig, 120, seed=55)
    clean = bake_markers(rig, clip)
    drift = np.random.default_rng(5).normal(0, 0.6, (rig.n_markers, 3))
    shot = simulate_shot(rig, clip, drift, NoiseProfile(np.zeros((rig.n_markers, 3)), seed=0))

    anchor = AnchorPose(frame=0, weights=clip.frames[0])
    no_anchor = run_session(rig, bundle, shot)
    with_anchor = run_session(rig, bundle, shot, anchors=[anchor])
    err_no = rmse(rig, no_anchor.raw, clean).mean()
    err_with = rmse(rig, with_anchor.raw, clean).mean()
    reduction = (1 - err_with / err_no) * 100

    # true anchor weights + zero noise: alignment restores clean markers exactly
    aligned = align_with_anchor(shot, anchor, rig, is_first=True)
    recovery = np.abs(aligned.frames - clean.frames).max()

    elapsed = time.monotonic() - start
    ok = reduction >= 50 and recovery < 1e-9 and elapsed < 300
    report(capfd, "anchor-effect", ok,
           f"RMSE reduced {reduction:.1f}% >= 50%, drift recovery {recovery:.2e} < 1e-9, "
           f"{elapsed:.0f}s")


def test_finetune_monotonicity(full_rig, full_bundle, held_out, capfd):
    rig = full_rig
    bundle, _ = full_bundle
    clip, clean = held_out
    track = MarkerTrack(clean.frames[:40])

    raw = run_session(rig, bundle, track).raw
    subset = [rig.channel_index(n) for n in
              ("jawOpen", "lipFunneler", "innerBrowRaiserL", "cheekPuff")]
    spec = FinetuneSpec(subset, (0, track.n_frames - 1), max_iters=40)
    tuned, infos = finetune_detailed(rig, track, raw, spec)

    worst_rise = max(info.final_objective - info.initial_objective for info in infos)
    frozen = [k for k in range(rig.n_channels) if k not in subset]
    frozen_ok = np.array_equal(tuned.frames[:, frozen], raw.frames[:, frozen])

    ok = worst_rise <= 0 and frozen_ok
    report(capfd, "finetune-monotonicity", ok,
           f"max objective rise {worst_rise:.2e} <= 0 over {len(infos)} frames, "
           f"frozen channels bit-identical: {frozen_ok}")


def test_salient_selection_ablation(full_rig, capfd, tmp_path):
    start = time.monotonic()
    rig = full_rig
    rng = np.random.default_rng(17)

    # deliberately imbalanced set: 70% near-neutral frames (jittered repeats
    # of a dozen low-activation poses), 30% genuinely varied frames
    varied = np.vstack([
        generate_one_hot_facs(rig, 9).frames,
        generate_rom(rig, 400, seed=3).frames,
    ])
    n_varied = len(varied)
    n_neutral = int(np.ceil(n_varied * 7 / 3))
    base_poses = rng.uniform(0.0, 0.05, (12, rig.n_channels))
    neutral_w = np.repeat(base_poses, -(-n_neutral // 12), axis=0)[:n_neutral]
    weights = np.vstack([neutral_w, varied])
    clip = AnimationClip(weights, channels=rig.channel_names)
    profile = NoiseProfile(demo_noise_stds(0.01), seed=11)
    markers = augment(bake_markers(rig, clip), profile)
    training = TrainingSet(markers.frames, weights,
                           ["neutral"] * n_neutral + ["varied"] * n_varied)

    held_clip = generate_rom(rig, 150, seed=123)
    held_clean = bake_markers(rig, held_clip)
    gamma = median_heuristic_gamma(training.markers)
    specs = {
        name: dataclasses.replace(spec, rb_dim=64, n_rb=2, epochs=max(20, spec.epochs // 2))
        for name, spec in DEFAULT_REGION_SPECS.items()
    }

    def evaluate_subset(subset: TrainingSet) -> float:
        # equal optimizer-update budget regardless of subset size
        scale = training.n_samples / subset.n_samples
        bundle, _ = train_bundle(subset, rig, seed=0, region_specs=specs,
                                 epochs_scale=scale)
        return float(run_session(rig, bundle, held_clean).rmse_aligned.mean())

    rows = ["setting,sigma,n_samples,mean_rmse"]
    results = {}
    for sigma in (0.1, 0.3, 0.5):
        kept = select_salient(training, sigma, gamma)
        subset = training.subset(kept)
        err = evaluate_subset(subset)
        results[sigma] = (len(kept), err)
        rows.append(f"sigma,{sigma},{len(kept)},{err!r}")
    full_err = evaluate_subset(training)
    rows.append(f"full,,{training.n_samples},{full_err!r}")
    csv_path = tmp_path / "ablate_salient.csv"
    csv_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    n_kept, err_03 = results[0.3]
    frac = n_kept / training.n_samples
    ratio = err_03 / full_err
    elapsed = time.monotonic() - start
    ok = frac <= 0.7 and ratio <= 1.1 and csv_path.exists() and elapsed <= 1800
    report(capfd, "salient-selection-ablation", ok,
           f"sigma=0.3 kept {frac * 100:.0f}% <= 70% of samples, "
           f"RMSE ratio {ratio:.3f} <= 1.1 vs full, sweep CSV written, {elapsed:.0f}s")


def test_cli_determinism(capfd, tmp_path):
    runner = CliRunner()
    config = {
        "rig": "rig.json",
        "out_dir": "out",
        "seed": 0,
        "data": {
            "facs_frames_per_channel": 3,
            "rom_frames": 60,
            "noise_base": 0.005,
            "shot_frames": 6,
            "shot_drift": 0.3,
        },
        "train": {
            "epochs_scale": 0.05,
            "regions": {name: {"rb_dim": 32, "n_rb": 1} for name in DEFAULT_REGION_SPECS},
        },
    }
    (tmp_path / "config.json").write_text(json.dumps(config), encoding="utf-8")
    cfg = ["--config", str(tmp_path / "config.json")]
    commands = [
        ["gen-rig", "--out", str(tmp_path / "rig.json")],
        ["gen-data", *cfg],
        ["select", *cfg],
        ["train", *cfg],
        ["solve", *cfg],
        ["finetune", *cfg, "--channels", "jawOpen,lipFunneler"],
        ["eval", *cfg, "--weights", "out/solved_weights.json"],
        ["ablate", *cfg, "--experiment", "anchor"],
        ["ablate", *cfg, "--experiment", "salient", "--sigmas", "0.3"],
    ]

    def run_all() -> dict[str, str]:
        for args in commands:
            result = runner.invoke(cli_main, args, catch_exceptions=False)
            assert result.exit_code == 0, result.output
        out = tmp_path / "out"
        digests = {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(out.iterdir())
        }
        digests["rig.json"] = hashlib.sha256((tmp_path / "rig.json").read_bytes()).hexdigest()
        return digests

    first = run_all()
    second = run_all()
    differing = sorted(name for name in first if first[name] != second.get(name))
    ok = not differing and set(first) == set(second)
    report(capfd, "cli-determinism", ok,
           f"{len(first)} artifacts byte-identical across re-runs"
           + (f"; differing: {differing}" if differing else ""))
