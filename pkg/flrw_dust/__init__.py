"""Dust-Einstein evolution with positive cosmological constant on the 3-torus.

The reduced (wave-gauge) Einstein-dust system is evolved pseudo-spectrally
about the FLRW background, with the weighted norm and energy hierarchy, the
breakdown monitor and the verification suites that go with it.
"""

from . import error
from .background import (
    BackgroundState,
    CosmologyParams,
    background_closed_form,
    background_ode_integrate,
    flrw_background,
)
from .checkpoint import Checkpoint, read_checkpoint, write_checkpoint
from .config import RunConfig, config_hash, dump_config, load_config
from .diagnostics import (
    DiagnosticsRecord,
    NormConfig,
    compute_energies,
    compute_norms,
    fit_decay,
    norm_energy_ratio,
)
from .elliptic import elliptic_identity_residual, top_order_spatial
from .evolution import BreakdownReport, MonitorConfig, Scenario, StepperConfig, monitor, run, sample, step
from .grid import Grid3
from .initial_data import GeometricData, Mode, PerturbationSpec, initial_state
from .linear_oracle import ModeState, evolve_mode, jacobian_action
from .rhs import assemble_rates
from .state import FieldState

__all__ = [
    "error",
    "BackgroundState",
    "CosmologyParams",
    "background_closed_form",
    "background_ode_integrate",
    "flrw_background",
    "Checkpoint",
    "read_checkpoint",
    "write_checkpoint",
    "RunConfig",
    "config_hash",
    "dump_config",
    "load_config",
    "DiagnosticsRecord",
    "NormConfig",
    "compute_energies",
    "compute_norms",
    "fit_decay",
    "norm_energy_ratio",
    "sample",
    "elliptic_identity_residual",
    "top_order_spatial",
    "BreakdownReport",
    "MonitorConfig",
    "Scenario",
    "StepperConfig",
    "monitor",
    "run",
    "step",
    "Grid3",
    "GeometricData",
    "Mode",
    "PerturbationSpec",
    "initial_state",
    "ModeState",
    "evolve_mode",
    "jacobian_action",
    "assemble_rates",
    "FieldState",
]
