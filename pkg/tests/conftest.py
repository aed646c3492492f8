import json

import numpy as np
import pytest

from flrw_dust.background import CosmologyParams, background_closed_form
from flrw_dust.config import NumericsConfig, OutputConfig, RunConfig, config_to_dict
from flrw_dust.evolution import StepperConfig
from flrw_dust.grid import Grid3
from flrw_dust.initial_data import Mode, PerturbationSpec, initial_state
from flrw_dust.state import FieldState
from flrw_dust.verify import random_band_limited, random_lorentzian_points, random_near_flrw_state

__all__ = [
    "random_band_limited",
    "random_lorentzian_points",
    "random_near_flrw_state",
]


def de_sitter() -> CosmologyParams:
    """Λ = 3, no dust: H = ω = 1 for all time."""
    return CosmologyParams(3.0, 0.0)


def dusty() -> CosmologyParams:
    """Λ = 3 with ϱ̄ = 3."""
    return CosmologyParams(3.0, 3.0)


def make_flrw_state(params: CosmologyParams, n: int = 8, t: float = 0.0) -> FieldState:
    """Exact FLRW data on an n³ grid."""
    return FieldState.flrw(Grid3(n), params, t)


def make_perturbed_state(
    params: CosmologyParams,
    n: int = 8,
    amplitude: float = 1e-3,
    modes=(Mode((1, 0, 0), "h12"), Mode((0, 1, 1), "rho"), Mode((1, 1, 0), "u2")),
) -> FieldState:
    """Gauge-consistent perturbed FLRW data at t = 0."""
    return initial_state(params, PerturbationSpec(amplitude=amplitude, modes=tuple(modes)), Grid3(n))


def make_random_state(params: CosmologyParams, n: int = 8, amplitude: float = 0.05, t: float = 0.3, seed: int = 7):
    """A generic near-FLRW state (not gauge-consistent) and its background."""
    state = random_near_flrw_state(params, Grid3(n), np.random.default_rng(seed), amplitude, t)
    return state, background_closed_form(params, t)


def make_run_config(
    directory: str,
    *,
    params: CosmologyParams | None = None,
    n: int = 8,
    dt: float = 0.05,
    t_final: float = 0.5,
    perturbation: PerturbationSpec = PerturbationSpec(amplitude=0.0),
    sample_every: int = 2,
    checkpoint_every: int = 0,
) -> RunConfig:
    """A small run configuration writing into ``directory``."""
    return RunConfig(
        cosmology=params if params is not None else de_sitter(),
        numerics=NumericsConfig(StepperConfig(dt, t_final), n),
        perturbation=perturbation,
        output=OutputConfig(str(directory), sample_every, checkpoint_every),
    )


def write_config(path, cfg: RunConfig) -> str:
    """Serialize ``cfg`` to ``path`` and return the path as a string."""
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh)
    return str(path)


@pytest.fixture
def rng():
    """Provide a seeded random generator."""
    yield np.random.default_rng(12345)


@pytest.fixture
def grid8():
    """Provide an 8³ grid."""
    yield Grid3(8)


@pytest.fixture
def grid16():
    """Provide a 16³ grid."""
    yield Grid3(16)


@pytest.fixture
def run_dir(tmp_path, monkeypatch):
    """Provide an output directory with FLRW_DUST_OUTPUT_ROOT unset."""
    monkeypatch.delenv("FLRW_DUST_OUTPUT_ROOT", raising=False)
    out = tmp_path / "run"
    yield out
