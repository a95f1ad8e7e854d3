"""Command-line entry point: data generation, training, solving, fine-tuning,
evaluation, ablations, and the session server.

All stages read one JSON project config; flags override config keys which
override built-in defaults. Outputs are deterministic for fixed seeds; the
only timestamps go to stderr logging, never into artifacts.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from .demo import demo_noise_stds, demo_rig_document
from .errors import FaceSolveError
from .optimize import FinetuneSpec, finetune_detailed
from .pipeline import AnchorPose, SolverBundle, rmse, run_session
from .rig import Rig, load_rig
from .synthdata import (
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
from .tracks import AnimationClip, MarkerTrack, WeightTrack
from .training import DEFAULT_REGION_SPECS, RegionSpec, train_region_models

DEFAULT_CONFIG = {
    "rig": "rig.json",
    "out_dir": "out",
    "seed": 0,
    "data": {
        "facs_frames_per_channel": 21,
        "rom_frames": 2000,
        "rom_seed": 7,
        "noise_base": 0.01,
        "noise_seed": 11,
        "shot_frames": 300,
        "shot_seed": 99,
        "shot_drift": 0.5,
        "shot_noise": 0.0,
    },
    "selection": {"sigma": 0.3, "gamma": None},
    "train": {"epochs_scale": 1.0, "regions": {}},
    "finetune": {"channels": None, "frame_range": None, "markers": None, "max_iters": 50},
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _load_config(path: str | None) -> dict:
    cfg = DEFAULT_CONFIG
    if path:
        with open(path, encoding="utf-8") as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise click.ClickException(f"config: invalid JSON ({exc})")
        unknown = set(user) - set(DEFAULT_CONFIG)
        if unknown:
            raise click.ClickException(f"config: unknown keys {sorted(unknown)}")
        cfg = _deep_merge(cfg, user)
        cfg["_dir"] = str(Path(path).resolve().parent)
    else:
        cfg["_dir"] = os.getcwd()
    return cfg


def _resolve(cfg: dict, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else Path(cfg["_dir"]) / p


def _out_dir(cfg: dict, out: str | None) -> Path:
    directory = _resolve(cfg, out or cfg["out_dir"])
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write_json(path: Path, document) -> None:
    path.write_text(json.dumps(document, sort_keys=True), encoding="utf-8")


def _read_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_rig_from(cfg: dict) -> Rig:
    return load_rig(_read_json(_resolve(cfg, cfg["rig"])))


def _noise_profile(rig: Rig, cfg: dict) -> NoiseProfile:
    data = cfg["data"]
    if "noise_stds" in data:
        stds = np.asarray(data["noise_stds"], dtype=np.float64)
    else:
        stds = demo_noise_stds(float(data["noise_base"]))[: rig.n_markers]
    return NoiseProfile(stds, seed=int(data["noise_seed"]))


def _training_set_doc(training: TrainingSet) -> dict:
    return {
        "markers": training.markers.tolist(),
        "weights": training.weights.tolist(),
        "provenance": training.provenance,
    }


def _training_set_from_doc(doc: dict) -> TrainingSet:
    return TrainingSet(
        np.asarray(doc["markers"], dtype=np.float64),
        np.asarray(doc["weights"], dtype=np.float64),
        list(doc["provenance"]),
    )


def _build_training_set(rig: Rig, cfg: dict) -> tuple[TrainingSet, AnimationClip, AnimationClip]:
    data = cfg["data"]
    facs = generate_one_hot_facs(rig, int(data["facs_frames_per_channel"]))
    rom = generate_rom(rig, int(data["rom_frames"]), seed=int(data["rom_seed"]))
    profile = _noise_profile(rig, cfg)
    parts = []
    for clip, tag in [(facs, "facs"), (rom, "rom")]:
        noisy = augment(bake_markers(rig, clip), profile)
        parts.append(TrainingSet(noisy.frames, clip.frames, [tag] * clip.n_frames))
    return TrainingSet.concatenate(parts), facs, rom


def _region_specs(cfg: dict) -> dict[str, RegionSpec]:
    specs = dict(DEFAULT_REGION_SPECS)
    for name, overrides in cfg["train"].get("regions", {}).items():
        if name not in specs:
            raise click.ClickException(f"config: train.regions.{name}: unknown region")
        base = specs[name].__dict__ | overrides
        specs[name] = RegionSpec(**base)
    return specs


def _parse_anchor(rig: Rig, cfg: dict, spec: str) -> AnchorPose:
    try:
        frame_text, path = spec.split(":", 1)
        frame = int(frame_text)
    except ValueError:
        raise click.ClickException(f"--anchor '{spec}': expected FRAME:WEIGHTS_PATH")
    doc = _read_json(_resolve(cfg, path))
    weights = np.asarray(doc["weights"] if isinstance(doc, dict) else doc, dtype=np.float64)
    if weights.shape != (rig.n_channels,):
        raise click.ClickException(f"--anchor '{spec}': weights must have length {rig.n_channels}")
    return AnchorPose(frame, weights)


def _channel_indices(rig: Rig, channels) -> list[int]:
    out = []
    for c in channels:
        if isinstance(c, str):
            try:
                out.append(rig.channel_index(c))
            except KeyError:
                raise click.ClickException(f"unknown channel '{c}'")
        else:
            out.append(int(c))
    return out


@click.group()
def main():
    """Marker-driven blendshape solver toolkit."""


@main.command("gen-rig")
@click.option("--out", default="rig.json", show_default=True)
def gen_rig(out):
    """Write the shipped demo rig."""
    _write_json(Path(out), demo_rig_document())
    click.echo(f"wrote {out}")


@main.command("gen-data")
@click.option("--config", "config_path", default=None)
@click.option("--out", default=None, help="Output directory (default: config out_dir).")
@click.option("--seed", type=int, default=None)
def gen_data(config_path, out, seed):
    """Generate FACS + ROM clips, a baked+augmented training set, and a
    drifted synthetic shot with its ground-truth weights."""
    cfg = _load_config(config_path)
    if seed is not None:
        cfg["seed"] = seed
    rig = _load_rig_from(cfg)
    out_dir = _out_dir(cfg, out)

    training, facs, rom = _build_training_set(rig, cfg)
    _write_json(out_dir / "facs_clip.json", facs.to_document())
    _write_json(out_dir / "rom_clip.json", rom.to_document())
    _write_json(out_dir / "training_set.json", _training_set_doc(training))

    data = cfg["data"]
    shot_clip = generate_rom(rig, int(data["shot_frames"]), seed=int(data["shot_seed"]))
    drift_rng = np.random.default_rng(int(data["shot_seed"]) + 1)
    drift = drift_rng.normal(0.0, float(data["shot_drift"]), (rig.n_markers, 3))
    shot_profile = NoiseProfile(
        np.full((rig.n_markers, 3), float(data["shot_noise"])), seed=int(data["noise_seed"]) + 1
    )
    shot = simulate_shot(rig, shot_clip, drift, shot_profile)
    _write_json(out_dir / "shot_track.json", shot.to_document())
    _write_json(out_dir / "shot_truth.json", shot_clip.to_document())
    click.echo(f"wrote training set ({training.n_samples} samples) and shot to {out_dir}")


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--out", default=None)
def select(config_path, sigma, out):
    """Salient-subset report for the generated training set."""
    cfg = _load_config(config_path)
    rig = _load_rig_from(cfg)
    out_dir = _out_dir(cfg, out)
    training = _training_set_from_doc(_read_json(out_dir / "training_set.json"))
    sigma = sigma if sigma is not None else float(cfg["selection"]["sigma"])
    gamma = cfg["selection"]["gamma"]
    gamma = float(gamma) if gamma else median_heuristic_gamma(training.markers)
    indices = select_salient(training, sigma, gamma)
    _write_json(
        out_dir / "selection.json",
        {
            "sigma": sigma,
            "gamma": gamma,
            "kept": indices,
            "n_total": training.n_samples,
            "n_kept": len(indices),
        },
    )
    click.echo(f"kept {len(indices)}/{training.n_samples} samples (sigma={sigma})")


def _train_regions(training, rig, cfg, region_names, out_dir):
    specs = _region_specs(cfg)
    seed = int(cfg["seed"])
    scale = float(cfg["train"]["epochs_scale"])
    threads = int(os.environ.get("FACESOLVE_THREADS", "1"))

    def one(region):
        trained, hist = train_region_models(
            training, rig, seed=seed, region_specs=specs, regions=[region], epochs_scale=scale,
        )
        return region, trained[region], hist[region]

    models, histories = {}, {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for region, model, history in pool.map(one, region_names):
                models[region], histories[region] = model, history
    else:
        for region in region_names:
            region, model, history = one(region)
            models[region], histories[region] = model, history
    for region in sorted(histories):
        lines = ["epoch,train_loss,val_loss"]
        for rec in histories[region]:
            lines.append(f"{rec['epoch']},{rec['train_loss']!r},{rec.get('val_loss', '')!r}")
        (out_dir / f"history_{region}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return models


def _train_one_shot(training, rig, cfg, out_dir):
    """Train all seven regions and write bundle + per-region history CSVs."""
    models = _train_regions(training, rig, cfg, list(DEFAULT_REGION_SPECS), out_dir)
    bundle = SolverBundle(rig, models)
    _write_json(out_dir / "bundle.json", bundle.to_document())
    return bundle


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--region", "regions", multiple=True, help="Train only the named regions.")
@click.option("--use-selection", is_flag=True, help="Train on the salient subset.")
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None)
def train(config_path, regions, use_selection, seed, out):
    """Train region networks; writes bundle.json and history CSVs."""
    cfg = _load_config(config_path)
    if seed is not None:
        cfg["seed"] = seed
    rig = _load_rig_from(cfg)
    out_dir = _out_dir(cfg, out)
    training = _training_set_from_doc(_read_json(out_dir / "training_set.json"))
    if use_selection:
        kept = _read_json(out_dir / "selection.json")["kept"]
        training = training.subset(kept)

    # partial region training updates an existing bundle when present
    if regions:
        bundle_path = out_dir / "bundle.json"
        existing = {}
        if bundle_path.exists():
            existing = SolverBundle.from_document(_read_json(bundle_path), rig).regions
        models = _train_regions(training, rig, cfg, list(regions), out_dir)
        merged = {**existing, **models}
        if set(merged) == set(DEFAULT_REGION_SPECS):
            _write_json(bundle_path, SolverBundle(rig, merged).to_document())
            click.echo(f"updated bundle with regions {', '.join(regions)}")
        else:
            from .neural import save_network

            for name, model in models.items():
                _write_json(
                    out_dir / f"model_{name}.json",
                    {
                        "model": save_network(model.network, model.standardizer),
                        "variant": model.variant,
                        "markers": model.marker_indices,
                        "channels": model.channel_indices,
                        "jaw_cond": model.jaw_cond,
                    },
                )
            click.echo(f"trained regions {', '.join(regions)} (no full bundle yet)")
    else:
        _train_one_shot(training, rig, cfg, out_dir)
        click.echo(f"trained all regions into {out_dir / 'bundle.json'}")


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--track", "track_path", default=None, help="Marker track (default: generated shot).")
@click.option("--anchor", "anchors", multiple=True, metavar="FRAME:WEIGHTS_PATH")
@click.option("--jaw-override", "jaw_override_path", default=None)
@click.option("--out", default=None)
def solve(config_path, track_path, anchors, jaw_override_path, out):
    """Raw solve with optional anchors and jaw override; writes report files."""
    cfg = _load_config(config_path)
    rig = _load_rig_from(cfg)
    out_dir = _out_dir(cfg, out)
    bundle = SolverBundle.from_document(_read_json(out_dir / "bundle.json"), rig)
    track_file = _resolve(cfg, track_path) if track_path else out_dir / "shot_track.json"
    track = MarkerTrack.from_document(_read_json(track_file))
    anchor_list = [_parse_anchor(rig, cfg, a) for a in anchors]
    jaw_override = None
    if jaw_override_path:
        jaw_override = WeightTrack.from_document(_read_json(_resolve(cfg, jaw_override_path)))
    report = run_session(rig, bundle, track, anchor_list, jaw_override=jaw_override)
    _write_json(out_dir / "report.json", report.to_document())
    _write_json(out_dir / "solved_weights.json", report.raw.to_document())
    (out_dir / "rmse.csv").write_text(report.curves_csv(), encoding="utf-8")
    click.echo(f"mean RMSE vs aligned: {report.rmse_aligned.mean():.6f}")


@main.command("finetune")
@click.option("--config", "config_path", default=None)
@click.option("--track", "track_path", default=None)
@click.option("--weights", "weights_path", default=None, help="Init weights (default: solved).")
@click.option("--channels", default=None, help="Comma-separated channel names or indices.")
@click.option("--frames", default=None, help="f0:f1 inclusive frame range.")
@click.option("--out", default=None)
def finetune_cmd(config_path, track_path, weights_path, channels, frames, out):
    """Projected L-BFGS fine-tune over selected channels."""
    cfg = _load_config(config_path)
    rig = _load_rig_from(cfg)
    out_dir = _out_dir(cfg, out)
    track_file = _resolve(cfg, track_path) if track_path else out_dir / "shot_track.json"
    track = MarkerTrack.from_document(_read_json(track_file))
    weights_file = _resolve(cfg, weights_path) if weights_path else out_dir / "solved_weights.json"
    w_init = WeightTrack.from_document(_read_json(weights_file))

    ft_cfg = cfg["finetune"]
    channel_sel = (
        [c.strip() for c in channels.split(",")] if channels else ft_cfg["channels"]
    ) or rig.channel_names
    subset = _channel_indices(rig, channel_sel)
    if frames:
        f0, f1 = (int(v) for v in frames.split(":"))
    else:
        f0, f1 = ft_cfg["frame_range"] or (0, track.n_frames - 1)
    spec = FinetuneSpec(
        channel_subset=subset, frame_range=(f0, f1),
        marker_subset=ft_cfg["markers"], max_iters=int(ft_cfg["max_iters"]),
    )
    result, infos = finetune_detailed(rig, track, w_init, spec)
    _write_json(out_dir / "finetuned_weights.json", result.to_document())
    lines = ["frame,initial_objective,final_objective,iterations"]
    for info in infos:
        lines.append(f"{info.frame},{info.initial_objective!r},{info.final_objective!r},{info.iterations}")
    (out_dir / "finetune_report.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"finetuned frames {f0}..{f1} over {len(subset)} channels")


@main.command("eval")
@click.option("--config", "config_path", default=None)
@click.option("--weights", "weights_path", required=True)
@click.option("--track", "track_path", default=None)
@click.option("--out", default=None)
def eval_cmd(config_path, weights_path, track_path, out):
    """Per-frame RMSE of a weight track against a marker track (CSV)."""
    cfg = _load_config(config_path)
    rig = _load_rig_from(cfg)
    out_dir = _out_dir(cfg, out)
    track_file = _resolve(cfg, track_path) if track_path else out_dir / "shot_track.json"
    track = MarkerTrack.from_document(_read_json(track_file))
    weights = WeightTrack.from_document(_read_json(_resolve(cfg, weights_path)))
    curve = rmse(rig, weights, track)
    lines = ["frame,rmse"] + [f"{f},{v!r}" for f, v in enumerate(curve)]
    (out_dir / "eval_rmse.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo(f"mean RMSE {curve.mean():.6f} over {len(curve)} frames")


@main.command()
@click.option("--config", "config_path", default=None)
@click.option("--experiment", type=click.Choice(["salient", "anchor"]), required=True)
@click.option("--sigmas", default="0.1,0.3,0.5", show_default=True)
@click.option("--out", default=None)
def ablate(config_path, experiment, sigmas, out):
    """Ablation harnesses: the salient-selection sigma sweep and the
    anchor-pose drift experiment."""
    cfg = _load_config(config_path)
    rig = _load_rig_from(cfg)
    out_dir = _out_dir(cfg, out)
    training = _training_set_from_doc(_read_json(out_dir / "training_set.json"))
    shot = MarkerTrack.from_document(_read_json(out_dir / "shot_track.json"))
    truth = AnimationClip.from_document(_read_json(out_dir / "shot_truth.json"))
    clean = bake_markers(rig, truth)

    if experiment == "anchor":
        bundle = SolverBundle.from_document(_read_json(out_dir / "bundle.json"), rig)
        anchor_frame = int(np.argmin(np.linalg.norm(truth.frames, axis=1)))  # most neutral
        anchor = AnchorPose(anchor_frame, truth.frames[anchor_frame])
        rows = ["setting,mean_rmse"]
        no_anchor = run_session(rig, bundle, shot)
        rows.append(f"no_anchor,{rmse(rig, no_anchor.raw, clean).mean()!r}")
        with_anchor = run_session(rig, bundle, shot, anchors=[anchor])
        rows.append(f"one_anchor,{rmse(rig, with_anchor.raw, clean).mean()!r}")
        (out_dir / "ablate_anchor.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        click.echo("\n".join(rows))
        return

    gamma = cfg["selection"]["gamma"]
    gamma = float(gamma) if gamma else median_heuristic_gamma(training.markers)
    sweep = [s.strip() for s in sigmas.split(",") if s.strip()]
    rows = ["setting,sigma,n_samples,mean_rmse"]
    for label in sweep + ["full"]:
        if label == "full":
            subset = training
            sigma_text = ""
        else:
            kept = select_salient(training, float(label), gamma)
            subset = training.subset(kept)
            sigma_text = label
        bundle = _train_one_shot(subset, rig, cfg, out_dir)
        report = run_session(rig, bundle, clean)
        rows.append(f"{'full' if label == 'full' else 'sigma'},{sigma_text},{subset.n_samples},{report.rmse_aligned.mean()!r}")
    (out_dir / "ablate_salient.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    click.echo("\n".join(rows))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8040, show_default=True)
def serve(host, port):
    """Start the HTTP session server."""
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="warning")


def entry() -> int:
    try:
        main(standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except FaceSolveError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(entry())
