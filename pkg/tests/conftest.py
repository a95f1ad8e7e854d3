import numpy as np
import pytest

from facesolve.demo import demo_noise_stds, demo_rig
from facesolve.pipeline import SolverBundle
from facesolve.synthdata import (
    NoiseProfile,
    TrainingSet,
    augment,
    bake_markers,
    generate_one_hot_facs,
    generate_rom,
)
from facesolve.training import DEFAULT_REGION_SPECS, RegionSpec, train_bundle

# Slimmed-down training budget for wiring tests: small nets, few epochs.
FAST_SPECS = {
    name: RegionSpec(
        variant=spec.variant, rb_dim=32, n_rb=1, jaw_cond=spec.jaw_cond,
        lr=3e-3, dropout=spec.dropout, batch_size=64, epochs=60, l2=1e-6,
    )
    for name, spec in DEFAULT_REGION_SPECS.items()
}


@pytest.fixture(scope="session")
def rig():
    return demo_rig()


@pytest.fixture(scope="session")
def train_set(rig):
    facs = generate_one_hot_facs(rig, 9)
    rom = generate_rom(rig, 500, seed=7)
    profile = NoiseProfile(demo_noise_stds(0.005), seed=11)
    parts = []
    for clip, tag in [(facs, "facs"), (rom, "rom")]:
        noisy = augment(bake_markers(rig, clip), profile)
        parts.append(TrainingSet(noisy.frames, clip.frames, [tag] * clip.n_frames))
    return TrainingSet.concatenate(parts)


@pytest.fixture(scope="session")
def fast_bundle(rig, train_set) -> SolverBundle:
    bundle, _ = train_bundle(train_set, rig, seed=0, region_specs=FAST_SPECS)
    return bundle
