"""Region training: feature extraction + standardization + Adam loop, plus
the default per-region hyperparameters (production table scaled to desk size)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .features import extract, region_marker_indices
from .neural import (
    InputStandardizer,
    Network,
    NetworkArch,
    TrainConfig,
    init_network,
    train_loop,
)
from .pipeline import JAW_CONDITIONED_REGIONS, RegionModel, SolverBundle
from .rig import Rig
from .synthdata import TrainingSet

__all__ = ["RegionSpec", "DEFAULT_REGION_SPECS", "train_region", "train_bundle"]


@dataclass(frozen=True)
class RegionSpec:
    """Feature variant, width/depth, and optimizer settings for one region."""

    variant: str
    rb_dim: int
    n_rb: int
    jaw_cond: bool
    lr: float
    dropout: float
    batch_size: int
    epochs: int
    l2: float


# Production-table settings with widths scaled down (rb_dim <= 256) so the
# whole seven-region training fits a desktop CPU budget. Learning rates are
# raised in proportion for the smaller nets; eyelid/eyeball dropout is 0.
DEFAULT_REGION_SPECS: dict[str, RegionSpec] = {
    "lower-face": RegionSpec("dist-delta", 128, 3, True, 1e-3, 0.01, 64, 150, 1e-5),
    "upper-face": RegionSpec("dist-dir", 96, 3, False, 1e-3, 0.01, 64, 120, 1e-5),
    "cheek": RegionSpec("dist-delta", 96, 2, True, 1e-3, 0.01, 64, 120, 1e-5),
    "eye-lids": RegionSpec("dist-dir", 96, 2, False, 1e-3, 0.0, 64, 120, 1e-5),
    "eyeballs": RegionSpec("dist-dir", 64, 2, False, 1e-3, 0.0, 64, 100, 1e-5),
    "jaw": RegionSpec("dir-delta", 128, 2, False, 1e-3, 0.01, 64, 120, 1e-5),
    "lips": RegionSpec("dir", 128, 3, True, 1e-3, 0.01, 64, 150, 1e-5),
}


def train_region(training: TrainingSet, region: str, rig: Rig, variant: str,
                 arch: NetworkArch, cfg: TrainConfig,
                 jaw_truth: np.ndarray | None = None
                 ) -> tuple[Network, InputStandardizer, list[dict]]:
    """Train one region regressor on extracted, standardized features.

    Jaw-conditioned regions receive the ground-truth jaw weights as auxiliary
    inputs during training (solve time substitutes the solved/corrected jaw).
    """
    if training.n_samples == 0:
        raise ValidationError("training set is empty")
    if region not in rig.regions:
        raise ValidationError(f"unknown region '{region}'")
    if arch.jaw_cond and jaw_truth is None:
        raise ValidationError(f"region '{region}' is jaw-conditioned: jaw_truth required")

    feats = np.asarray([
        extract(m, rig.neutral, region, variant, rig) for m in training.markers
    ])
    standardizer = InputStandardizer.fit(feats)
    x = standardizer.apply(feats)
    y = training.weights[:, rig.regions[region].channels]
    jaw = np.asarray(jaw_truth, dtype=np.float64) if arch.jaw_cond else None

    net = init_network(arch, cfg.seed)
    history = train_loop(net, x, y, cfg, jaw=jaw)
    return net, standardizer, history


def _arch_for(rig: Rig, region: str, spec: RegionSpec, jaw_dim: int) -> NetworkArch:
    from .features import feature_dim

    m = len(region_marker_indices(rig, region))
    return NetworkArch(
        input_dim=feature_dim(spec.variant, m),
        rb_dim=spec.rb_dim,
        n_rb=spec.n_rb,
        output_dim=len(rig.regions[region].channels),
        jaw_cond=spec.jaw_cond,
        jaw_dim=jaw_dim,
        dropout=spec.dropout,
    )


def train_bundle(training: TrainingSet, rig: Rig, seed: int = 0,
                 region_specs: dict[str, RegionSpec] | None = None,
                 regions: list[str] | None = None,
                 epochs_scale: float = 1.0,
                 existing: dict[str, RegionModel] | None = None,
                 ) -> tuple[SolverBundle, dict[str, list[dict]]]:
    """Train all (or the named) regions and assemble a SolverBundle.

    Ground-truth jaw weights for the conditioned regions come straight from
    the training weights' jaw channels.
    """
    models, histories = train_region_models(
        training, rig, seed=seed, region_specs=region_specs,
        regions=regions, epochs_scale=epochs_scale,
    )
    if existing:
        models = {**existing, **models}
    return SolverBundle(rig, models), histories


def train_region_models(training: TrainingSet, rig: Rig, seed: int = 0,
                        region_specs: dict[str, RegionSpec] | None = None,
                        regions: list[str] | None = None,
                        epochs_scale: float = 1.0,
                        ) -> tuple[dict[str, RegionModel], dict[str, list[dict]]]:
    """Train the named regions (all by default) without bundle assembly."""
    specs = region_specs or DEFAULT_REGION_SPECS
    jaw_channels = list(rig.regions["jaw"].channels)
    jaw_truth = training.weights[:, jaw_channels]
    models: dict[str, RegionModel] = {}
    histories: dict[str, list[dict]] = {}
    for region in regions or list(specs):
        spec = specs[region]
        arch = _arch_for(rig, region, spec, jaw_dim=len(jaw_channels))
        cfg = TrainConfig(
            lr=spec.lr, batch_size=spec.batch_size,
            epochs=max(1, int(round(spec.epochs * epochs_scale))),
            l2=spec.l2, dropout=spec.dropout, seed=seed,
        )
        net, std, history = train_region(
            training, region, rig, spec.variant, arch, cfg,
            jaw_truth=jaw_truth if spec.jaw_cond else None,
        )
        models[region] = RegionModel(
            network=net, standardizer=std, variant=spec.variant,
            marker_indices=region_marker_indices(rig, region),
            channel_indices=list(rig.regions[region].channels),
            jaw_cond=spec.jaw_cond,
        )
        histories[region] = history
    return models, histories
