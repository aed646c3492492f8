"""Time integration, step-size control and the breakdown monitor."""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np

from .background import BackgroundState, CosmologyParams, flrw_background
from .checkpoint import Checkpoint
from .diagnostics import (
    DiagnosticsRecord,
    NormConfig,
    RatioDriftTracker,
    compute_energies,
    compute_norms,
    du_commutator_max,
    kinematics,
    norm_energy_ratio,
)
from .elliptic import elliptic_coefficients
from .error import (
    CheckpointMismatch,
    DegenerateG00Upper,
    GeometryError,
    NotLorentzian,
    SpacelikeVelocity,
)
from .grid import Grid3
from .initial_data import initial_state, slice_constraint_residuals
from .lorentz import gauge_residual, min_eigenvalue
from .rhs import DEFAULT_G00_FLOOR, assemble_rates
from .state import FieldState, build_geometry

if TYPE_CHECKING:
    from .config import RunConfig

logger = logging.getLogger(__name__)

__all__ = [
    "Integrator",
    "StepperConfig",
    "MonitorConfig",
    "Scenario",
    "BreakdownReport",
    "RunResult",
    "cfl_bound",
    "effective_dt",
    "step",
    "monitor",
    "bootstrap_check",
    "breakdown_from_error",
    "sample",
    "run",
]

BackgroundProvider = Callable[[float], BackgroundState]


class Integrator(str, enum.Enum):
    RK4 = "RK4"
    RK2 = "RK2"


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_final: float
    cfl_safety: float = 0.5
    integrator: Integrator = Integrator.RK4

    def problems(self) -> list[str]:
        out = []
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            out.append(f"numerics.stepper.dt must be > 0, got {self.dt!r}")
        if not (self.t_final > 0.0 and math.isfinite(self.t_final)):
            out.append(f"numerics.stepper.t_final must be > 0, got {self.t_final!r}")
        if not 0.0 < self.cfl_safety <= 1.0:
            out.append(f"numerics.stepper.cfl_safety must be in (0, 1], got {self.cfl_safety!r}")
        return out


@dataclass(frozen=True)
class MonitorConfig:
    """Breakdown thresholds and the rough bootstrap constants."""

    g00_floor: float = 0.1
    eig_floor: float = 1e-3
    blowup_ceiling: float = 1e6
    g00_upper_floor: float = DEFAULT_G00_FLOOR
    bootstrap_eta: float = 0.1
    bootstrap_c1: float = 2.0

    def problems(self) -> list[str]:
        out = []
        if not 0.0 < self.g00_floor < 1.0:
            out.append("monitor.g00_floor must be in (0, 1)")
        if not 0.0 < self.eig_floor < 1.0:
            out.append("monitor.eig_floor must be in (0, 1)")
        if not self.blowup_ceiling > 0.0:
            out.append("monitor.blowup_ceiling must be > 0")
        if not 0.0 < self.g00_upper_floor < 1.0:
            out.append("monitor.g00_upper_floor must be in (0, 1)")
        if not self.bootstrap_eta > 0.0:
            out.append("monitor.bootstrap_eta must be > 0")
        if not self.bootstrap_c1 >= 1.0:
            out.append("monitor.bootstrap_c1 must be >= 1")
        return out


class Scenario(str, enum.Enum):
    NONE = "None"
    G00_TO_ZERO = "G00ToZero"
    SPATIAL_METRIC_DEGENERATE = "SpatialMetricDegenerate"
    CNORM_BLOWUP = "CNormBlowup"

    @property
    def exit_code(self) -> int:
        return _EXIT_CODES[self]


_EXIT_CODES = {
    Scenario.NONE: 0,
    Scenario.G00_TO_ZERO: 10,
    Scenario.SPATIAL_METRIC_DEGENERATE: 11,
    Scenario.CNORM_BLOWUP: 12,
}


@dataclass(frozen=True)
class BreakdownReport:
    scenario: Scenario
    time: float
    witness: tuple[int, ...] | None = None
    value: float | None = None
    message: str = ""

    @property
    def triggered(self) -> bool:
        return self.scenario is not Scenario.NONE

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.value,
            "time": self.time,
            "witness": list(self.witness) if self.witness is not None else None,
            "value": self.value,
            "message": self.message,
        }


def _argmax(values: np.ndarray) -> tuple[tuple[int, ...], float]:
    idx = np.unravel_index(int(np.argmax(values)), values.shape)
    return tuple(int(i) for i in idx), float(values[idx])


# ─── step size ───────────────────────────────────────────────────────────────


def cfl_bound(state: FieldState, bg: BackgroundState, safety: float) -> float:
    """safety · dx · min over the grid of sqrt(−g⁰⁰ / λ_max(g^{ab}))."""
    inv = build_geometry(state, bg).jet.inverse
    lam_max = np.linalg.eigvalsh(np.moveaxis(inv.gusp, (0, 1), (-2, -1)))[..., -1]
    speed = np.sqrt(-np.asarray(inv.gu00) / lam_max)
    return float(safety * state.grid.dx * np.min(speed))


def effective_dt(state: FieldState, bg: BackgroundState, cfg: StepperConfig) -> float:
    """min(dt, CFL bound), shortened so the last step lands on t_final."""
    dt = min(cfg.dt, cfl_bound(state, bg, cfg.cfl_safety))
    remaining = cfg.t_final - state.t
    if dt >= remaining * (1.0 - 1e-12):
        dt = remaining
    return dt


# ─── stepping ────────────────────────────────────────────────────────────────


def step(
    state: FieldState,
    bg_provider: BackgroundProvider,
    params: CosmologyParams,
    cfg: StepperConfig,
    dt: float | None = None,
    floor: float = DEFAULT_G00_FLOOR,
) -> FieldState:
    """One explicit Runge–Kutta step; the background is re-evaluated at every stage."""
    if dt is None:
        dt = effective_dt(state, bg_provider(state.t), cfg)
    t0, y0 = state.t, state.data

    def f(t: float, y: np.ndarray) -> np.ndarray:
        return assemble_rates(state.replace(t, y), bg_provider(t), params, floor).data

    if cfg.integrator is Integrator.RK4:
        k1 = f(t0, y0)
        k2 = f(t0 + 0.5 * dt, y0 + 0.5 * dt * k1)
        k3 = f(t0 + 0.5 * dt, y0 + 0.5 * dt * k2)
        k4 = f(t0 + dt, y0 + dt * k3)
        y1 = y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        k1 = f(t0, y0)
        k2 = f(t0 + 0.5 * dt, y0 + 0.5 * dt * k1)
        y1 = y0 + dt * k2
    return state.replace(t0 + dt, y1)


# ─── monitor ─────────────────────────────────────────────────────────────────


def monitor(state: FieldState, cfg: MonitorConfig = MonitorConfig()) -> BreakdownReport:
    """Check the three breakdown scenarios; the first one found is reported."""
    t = state.t
    if not state.is_finite():
        where = np.argwhere(~np.isfinite(state.data))[0]
        return BreakdownReport(Scenario.CNORM_BLOWUP, t, tuple(int(i) for i in where), math.nan, "non-finite field")

    where, value = _argmax(state.g00)
    if value > -cfg.g00_floor:
        return BreakdownReport(Scenario.G00_TO_ZERO, t, where, value, f"max g00 above {-cfg.g00_floor}")

    # eig(g_jk) < floor·e^{2Ω} is eig(h_jk) < floor
    lam = min_eigenvalue(state.hsym)
    where, neg = _argmax(-lam)
    if -neg < cfg.eig_floor:
        return BreakdownReport(
            Scenario.SPATIAL_METRIC_DEGENERATE, t, where, -neg, f"min eigenvalue of h below {cfg.eig_floor}"
        )

    # C_b proxy: every field and its first two spatial derivatives
    grid = state.grid
    proxies = (np.abs(state.data), np.abs(grid.gradient(state.data)), np.abs(grid.hessian(state.data)))
    worst = max(float(p.max()) for p in proxies)
    if worst > cfg.blowup_ceiling:
        for p in proxies:
            if float(p.max()) == worst:
                where, _ = _argmax(p)
                break
        return BreakdownReport(
            Scenario.CNORM_BLOWUP, state.t, where[-3:], worst, f"C^2 proxy above {cfg.blowup_ceiling:g}"
        )
    return BreakdownReport(Scenario.NONE, state.t)


def bootstrap_check(
    state: FieldState,
    bg: BackgroundState,
    eta: float,
    c1: float,
    q: float,
) -> dict[str, bool]:
    """Rough bootstrap bounds on the metric and the inverse-metric estimates they imply.

    Never raises; a failed inversion marks every inverse-metric check as failed.
    """
    Omega = bg.Omega
    slack = 1e-12
    lam = np.linalg.eigvalsh(np.moveaxis(state.hsym, (0, 1), (-2, -1)))
    g0_sq = np.sum(state.g0**2, axis=0)
    out = {
        "g00": bool(np.max(np.abs(state.g00 + 1.0)) <= eta),
        "h_eig": bool(lam[..., 0].min() >= 1.0 / c1 and lam[..., -1].max() <= c1),
        "g0": bool(g0_sq.max() <= eta / c1 * math.exp(2.0 * (1.0 - q) * Omega)),
    }
    try:
        geo = build_geometry(state, bg)
        inv = geo.jet.inverse
    except GeometryError:
        out.update(gu00=False, gu0=False, gusp_eig=False)
        return out
    gu0_norm = np.sqrt(np.sum(inv.gu0**2, axis=0))
    lam_up = np.linalg.eigvalsh(np.moveaxis(math.exp(2.0 * Omega) * inv.gusp, (0, 1), (-2, -1)))
    out["gu00"] = bool(np.max(np.abs(inv.gu00 + 1.0)) <= 4.0 * eta)
    out["gu0"] = bool(np.all(gu0_norm <= 2.0 * c1 * math.exp(-2.0 * Omega) * np.sqrt(g0_sq) + slack))
    out["gusp_eig"] = bool(lam_up[..., 0].min() >= 2.0 / (3.0 * c1) and lam_up[..., -1].max() <= 1.5 * c1)
    return out


def breakdown_from_error(exc: GeometryError, t: float) -> BreakdownReport:
    """Map a pointwise geometry failure raised inside a step to its breakdown scenario."""
    if isinstance(exc, NotLorentzian):
        scenario = Scenario.SPATIAL_METRIC_DEGENERATE if exc.spatial else Scenario.G00_TO_ZERO
    elif isinstance(exc, DegenerateG00Upper):
        scenario = Scenario.G00_TO_ZERO
    elif isinstance(exc, SpacelikeVelocity):
        scenario = Scenario.CNORM_BLOWUP
    else:
        scenario = Scenario.CNORM_BLOWUP
    value = float(exc.value) if exc.value is not None else None
    witness = tuple(exc.witness[-3:]) if exc.witness else None
    return BreakdownReport(scenario, t, witness, value, str(exc))


# ─── samples ─────────────────────────────────────────────────────────────────


def sample(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    cfg: NormConfig,
    step: int,
    monitor_cfg: MonitorConfig | None = None,
    breakdown: Scenario = Scenario.NONE,
) -> DiagnosticsRecord:
    """One full diagnostics sample of ``state``, flagged with ``breakdown``."""
    monitor_cfg = monitor_cfg if monitor_cfg is not None else MonitorConfig()
    kin = kinematics(state, bg, params, monitor_cfg.g00_upper_floor)
    norms = compute_norms(state, bg, params, cfg, kin)
    energies = compute_energies(state, bg, params, cfg, kin)
    grid = state.grid
    gauss, codazzi = slice_constraint_residuals(state, bg, params)
    checks = bootstrap_check(state, bg, monitor_cfg.bootstrap_eta, monitor_cfg.bootstrap_c1, cfg.q)
    if not all(checks.values()):
        logger.warning(
            "rough bootstrap bounds violated at t=%.4g: %s", state.t, ", ".join(k for k, ok in checks.items() if not ok)
        )
    record = DiagnosticsRecord(
        t=state.t,
        step=step,
        norms=norms,
        energies=energies,
        gauge_resid_max=float(np.max(np.abs(gauge_residual(kin.geo.jet)))),
        gauss_resid_l2=float(grid.l2_norm(gauss)),
        codazzi_resid_l2=float(np.sqrt(np.sum(grid.l2_norm(codazzi) ** 2))),
        min_eig_g=float(math.exp(2.0 * bg.Omega) * np.min(min_eigenvalue(state.hsym))),
        max_g00=float(np.max(state.g00)),
        H_elliptic_min_eig=float(np.min(elliptic_coefficients(kin.geo).min_eigenvalue())),
        du_commutator_max=du_commutator_max(kin, cfg.sobolev_order),
        bootstrap_ok=all(checks.values()),
        breakdown=breakdown.value,
        ratios=norm_energy_ratio(norms, energies),
    )
    logger.debug(
        "sample step=%d t=%.4g S_Total=%.3e E_Total=%.3e gauge_resid_max=%.2e",
        step, state.t, norms.S_Total, energies.E_Total, record.gauge_resid_max,
    )
    return record


# ─── run loop ────────────────────────────────────────────────────────────────


@dataclass
class RunResult:
    final: FieldState
    records: list["DiagnosticsRecord"]
    report: BreakdownReport
    steps: int
    wall_time: float = 0.0
    ratio_drift: dict[str, float] = field(default_factory=dict)


def run(
    cfg: "RunConfig",
    *,
    resume: Checkpoint | None = None,
    on_sample: Callable[[DiagnosticsRecord], None] | None = None,
    on_checkpoint: Callable[[int, FieldState], None] | None = None,
    drift: RatioDriftTracker | None = None,
) -> RunResult:
    """Evolve the configured data to t_final or to the first breakdown.

    Diagnostics are sampled at step 0 (unless resuming), every
    ``output.sample_every`` steps and at the final step. A breakdown adds
    one last sample of the last finite state, flagged with its scenario.
    The loop is deterministic: the same config, or a checkpoint of it,
    gives bitwise identical samples. Pass ``drift`` seeded from the rows
    already written to carry the ratio drift across a resume.
    """
    from .config import config_hash

    cfg.validate()
    started = time.perf_counter()
    params = cfg.cosmology
    stepper = cfg.numerics.stepper
    mon = cfg.monitor
    provider = flrw_background(params)
    digest = config_hash(cfg)
    logger.info("run start: config %s, n=%d, t_final=%g", digest[:12], cfg.numerics.n, stepper.t_final)

    if resume is not None:
        if resume.config_hash != bytes.fromhex(digest):
            raise CheckpointMismatch("checkpoint was written for a different configuration")
        state, steps = resume.state, resume.step
        logger.info("resuming at step %d, t=%.6g", steps, state.t)
    else:
        state = initial_state(params, cfg.perturbation, Grid3(cfg.numerics.n))
        steps = 0

    records: list[DiagnosticsRecord] = []
    drift = drift if drift is not None else RatioDriftTracker()

    def take_sample(s: FieldState, index: int, scenario: Scenario = Scenario.NONE) -> None:
        if scenario is Scenario.NONE:
            rec = sample(s, provider(s.t), params, cfg.norms, index, mon)
        elif not s.is_finite():
            rec = DiagnosticsRecord.unavailable(s.t, index, scenario.value)
        else:
            try:
                rec = sample(s, provider(s.t), params, cfg.norms, index, mon, scenario)
            except (GeometryError, np.linalg.LinAlgError) as exc:
                logger.warning("breakdown state at t=%.4g cannot be sampled: %s", s.t, exc)
                rec = DiagnosticsRecord.unavailable(s.t, index, scenario.value)
        for name in drift.update(rec):
            logger.warning("norm/energy ratio %s drifted by more than 2x (t=%.4g)", name, s.t)
        records.append(rec)
        if on_sample is not None:
            on_sample(rec)

    report = BreakdownReport(Scenario.NONE, state.t)
    try:
        if resume is None:
            take_sample(state, steps)
        while state.t < stepper.t_final * (1.0 - 1e-14):
            report = monitor(state, mon)
            if report.triggered:
                break
            try:
                dt = effective_dt(state, provider(state.t), stepper)
                new = step(state, provider, params, stepper, dt, mon.g00_upper_floor)
            except GeometryError as exc:
                report = breakdown_from_error(exc, state.t)
                break
            if not new.is_finite():
                report = BreakdownReport(
                    Scenario.CNORM_BLOWUP, state.t, None, None, "step produced non-finite values; last finite state kept"
                )
                break
            if stepper.t_final - new.t < 1e-12 * stepper.t_final:
                new = new.replace(stepper.t_final, new.data)
            state = new
            steps += 1
            done = state.t >= stepper.t_final
            if steps % cfg.output.sample_every == 0 or done:
                take_sample(state, steps)
            if on_checkpoint is not None and cfg.output.checkpoint_every and steps % cfg.output.checkpoint_every == 0:
                on_checkpoint(steps, state)
        else:
            report = monitor(state, mon)
    except GeometryError as exc:
        report = breakdown_from_error(exc, state.t)
    if report.triggered:
        take_sample(state, steps, report.scenario)

    wall = time.perf_counter() - started
    if report.triggered:
        logger.error(
            "breakdown %s at t=%.6g (witness %s, value %s): %s",
            report.scenario.value, report.time, report.witness, report.value, report.message,
        )
    logger.info("run finished: %d steps, t=%.6g, %.2fs wall", steps, state.t, wall)
    return RunResult(state, records, report, steps, wall, drift.drift())
