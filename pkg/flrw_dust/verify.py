"""Executable acceptance suites.

Each suite returns a list of :class:`Criterion` records holding the measured
value, the tolerance and the verdict. ``--quick`` shrinks sample counts and
resolutions but keeps every criterion.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .background import (
    CosmologyParams,
    background_closed_form,
    background_ode_integrate,
    flrw_background,
)
from .elliptic import elliptic_identity_residual
from .diagnostics import fit_decay, kinematics
from .evolution import Integrator, StepperConfig, step
from .grid import Grid3
from .initial_data import Mode, PerturbationSpec, initial_state
from .linear_oracle import ModeState, consistent_mode, evolve_mode, jacobian_action, mode_field, oracle_grid
from .lorentz import (
    Metric,
    MetricJet,
    christoffel_first_kind,
    contracted_christoffel,
    delta_A,
    delta_C,
    delta_christoffel,
    invert_metric,
    modified_A,
    principal_christoffel,
    raise_christoffel,
)
from .rhs import fluid_rhs, fluid_rhs_direct, gauge_source_residual, wave_rhs, wave_rhs_direct
from .state import NFIELDS, FieldState, flrw_vector

logger = logging.getLogger(__name__)

__all__ = [
    "Criterion",
    "VerifyReport",
    "SUITES",
    "random_lorentzian_points",
    "random_band_limited",
    "random_near_flrw_state",
    "run_suites",
]


@dataclass(frozen=True)
class Criterion:
    suite: str
    name: str
    value: float
    tolerance: float | tuple[float, float]
    passed: bool
    detail: str = ""

    @classmethod
    def at_most(cls, suite: str, name: str, value: float, tol: float, detail: str = "") -> "Criterion":
        return cls(suite, name, float(value), tol, bool(value <= tol), detail)

    @classmethod
    def at_least(cls, suite: str, name: str, value: float, tol: float, detail: str = "") -> "Criterion":
        return cls(suite, name, float(value), tol, bool(value >= tol), detail)

    @classmethod
    def within(cls, suite: str, name: str, value: float, lo: float, hi: float, detail: str = "") -> "Criterion":
        return cls(suite, name, float(value), (lo, hi), bool(lo <= value <= hi), detail)


@dataclass
class VerifyReport:
    criteria: list[Criterion] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "wall_time": self.wall_time,
            "criteria": [asdict(c) for c in self.criteria],
        }


# ─── random configurations ───────────────────────────────────────────────────


def random_lorentzian_points(rng: np.random.Generator, count: int) -> tuple[Metric, np.ndarray]:
    """Near-Minkowski Lorentzian metrics and arbitrary first derivatives at ``count`` points.

    Returns ``(metric, dg)`` with dg[λ, μ, ν] symmetric in (μ, ν).
    """
    g00 = -1.0 + 0.3 * rng.uniform(-1.0, 1.0, count)
    g0 = 0.1 * rng.uniform(-1.0, 1.0, (3, count))
    a = 0.2 * rng.uniform(-1.0, 1.0, (3, 3, count))
    gsp = np.eye(3)[:, :, None] + 0.5 * (a + np.swapaxes(a, 0, 1))
    gsp = gsp + np.einsum("ajn,bjn->abn", a, a)
    dg = rng.uniform(-1.0, 1.0, (4, 4, 4, count))
    dg = 0.5 * (dg + np.swapaxes(dg, 1, 2))
    return Metric(g00, g0, gsp), dg


def random_band_limited(grid: Grid3, rng: np.random.Generator, *lead: int) -> np.ndarray:
    """Smooth random fields inside the dealias band, scaled to max |f| = 1 per field."""
    noise = rng.standard_normal((*lead, *grid.shape))
    k1, k2, k3 = grid.wavenumbers
    envelope = np.exp(-0.25 * (k1**2 + k2**2 + k3**2)) * grid.dealias_mask
    f = grid.to_physical(envelope * grid.to_spectral(noise))
    peak = np.max(np.abs(f), axis=(-3, -2, -1), keepdims=True)
    return f / np.where(peak > 0.0, peak, 1.0)


def random_near_flrw_state(
    params: CosmologyParams,
    grid: Grid3,
    rng: np.random.Generator,
    amplitude: float = 0.05,
    t: float = 0.0,
) -> FieldState:
    """FLRW plus ``amplitude`` times independent band-limited fields in all 24 rows."""
    data = flrw_vector(params)[:, None, None, None] + amplitude * random_band_limited(grid, rng, NFIELDS)
    return FieldState(t, data, grid)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


# ─── suites ──────────────────────────────────────────────────────────────────


def suite_identities(quick: bool = False) -> list[Criterion]:
    name = "identities"
    rng = np.random.default_rng(20240601)
    npts = 1_000 if quick else 10_000
    nconf = 3 if quick else 20
    n = 16 if quick else 32
    out: list[Criterion] = []

    metric, dg = random_lorentzian_points(rng, npts)
    g = metric.full()
    ginv = invert_metric(metric).full()
    direct = np.moveaxis(np.linalg.inv(np.moveaxis(g, (0, 1), (-2, -1))), (-2, -1), (0, 1))
    out.append(Criterion.at_most(name, "inverse_metric", _rel(ginv, direct), 1e-10, f"{npts} points"))

    gamma1 = christoffel_first_kind(dg)
    raised = raise_christoffel(ginv, gamma1)
    # Γ^α_{μν} = ½g^{αλ}(∂_μ g_{λν} + ∂_ν g_{λμ} − ∂_λ g_{μν}) with the matrix inverse
    bracket = dg + np.einsum("nlm...->mln...", dg) - np.einsum("lmn...->mln...", dg)
    by_definition = 0.5 * np.einsum("al...,mln...->amn...", direct, bracket)
    out.append(Criterion.at_most(name, "christoffel_raise", _rel(raised, by_definition), 1e-10))

    worst_c = worst_a = worst_a0j = worst_ajk = 0.0
    for omega in (0.0, 0.7, 1.3):
        jet = MetricJet.build(metric, dg, omega)
        gamma2 = raise_christoffel(jet.ginv, jet.gamma1)
        split = principal_christoffel(metric, omega) + delta_christoffel(jet).full()
        worst_c = max(worst_c, _rel(split, gamma2))
        inv = jet.inverse
        a = modified_A(jet)
        d_a = delta_A(jet)
        a00 = (
            3.0 * omega**2
            - omega * np.einsum("ab...,ab...->...", inv.gusp, dg[0, 1:, 1:])
            + 2.0 * omega * np.einsum("ab...,ab...->...", inv.gusp, dg[1:, 0, 1:])
            + d_a[0, 0]
        )
        worst_a = max(worst_a, _rel(a00, a[0, 0]))
        # A_0j + 2ω(3ωg_0j − Γ_j) = 4ω²g_0j − ωg^{ab}Γ_{ajb} + Δ_{A,0j} + Δ_{C,0j}
        low, _ = contracted_christoffel(jet.ginv, jet.gamma1)
        lhs = a[0, 1:] + 2.0 * omega * (3.0 * omega * metric.g0 - low[1:])
        rhs = (
            4.0 * omega**2 * metric.g0
            - omega * np.einsum("ab...,ajb...->j...", inv.gusp, jet.gamma1[1:, 1:, 1:])
            + d_a[0, 1:]
            + delta_C(jet)[1]
        )
        worst_a0j = max(worst_a0j, _rel(rhs, lhs))
        ajk = 2.0 * omega * inv.gu00 * (dg[0, 1:, 1:] - omega * metric.gsp) + d_a[1:, 1:]
        worst_ajk = max(worst_ajk, _rel(ajk, a[1:, 1:]))
    out.append(Criterion.at_most(name, "christoffel_decomposition", worst_c, 1e-10))
    out.append(Criterion.at_most(name, "A00_decomposition", worst_a, 1e-10))
    out.append(Criterion.at_most(name, "A0j_decomposition", worst_a0j, 1e-10))
    out.append(Criterion.at_most(name, "Ajk_decomposition", worst_ajk, 1e-10))

    grid = Grid3(n)
    params = CosmologyParams(3.0, 1.0)
    worst = {"wave_rhs": 0.0, "fluid_rhs": 0.0, "second_time_derivative": 0.0, "elliptic": 0.0}
    for i in range(nconf):
        t = 0.4 * i / max(nconf - 1, 1)
        state = random_near_flrw_state(params, grid, rng, 0.05, t)
        bg = background_closed_form(params, t)
        kin = kinematics(state, bg, params)
        geo = kin.geo
        decomposed = wave_rhs(state, bg, params, geo)
        worst["wave_rhs"] = max(worst["wave_rhs"], _rel(decomposed, wave_rhs_direct(state, bg, params, geo)))
        d_rho, d_u = fluid_rhs(state, bg, params, geo)
        r_rho, r_u = fluid_rhs_direct(state, bg, params, geo)
        worst["fluid_rhs"] = max(worst["fluid_rhs"], _rel(d_rho, r_rho), _rel(d_u, r_u))
        inv = geo.jet.inverse
        box = (
            inv.gu00 * kin.wave_tt
            + 2.0 * np.einsum("a...,av...->v...", inv.gu0, geo.grad_wave_t)
            + np.einsum("ab...,abv...->v...", inv.gusp, geo.hess_wave)
        )
        worst["second_time_derivative"] = max(worst["second_time_derivative"], _rel(box, decomposed))
        for c in range(10):
            resid = elliptic_identity_residual(state, bg, params, c, kin)
            scale = max(float(np.max(np.abs(geo.hess_wave[:, :, c]))), 1e-300)
            worst["elliptic"] = max(worst["elliptic"], float(np.max(np.abs(resid))) / scale)
    for key, value in worst.items():
        out.append(Criterion.at_most(name, key, value, 1e-10, f"{nconf} configurations, n={n}"))

    worst_gauge = 0.0
    gauge_grid = Grid3(16)
    for seed in range(3 if quick else 10):
        spec = PerturbationSpec(amplitude=1e-3, seed=seed, random_modes=6)
        state = initial_state(params, spec, gauge_grid)
        resid = gauge_source_residual(state, background_closed_form(params, 0.0))
        worst_gauge = max(worst_gauge, float(np.max(np.abs(resid))))
    out.append(Criterion.at_most(name, "gauge_at_t0", worst_gauge, 1e-10))
    return out


def suite_background(quick: bool = False) -> list[Criterion]:
    name = "background"
    out: list[Criterion] = []
    ts = np.linspace(0.0, 10.0, 101)
    de_sitter = CosmologyParams(3.0, 0.0)
    err = max(abs(background_closed_form(de_sitter, t).a / math.exp(t) - 1.0) for t in ts)
    out.append(Criterion.at_most(name, "closed_form_de_sitter", err, 1e-12))
    for rho_bar in (0.0, 1.0, 3.0):
        params = CosmologyParams(3.0, rho_bar)
        traj = background_ode_integrate(params, 1.0, 1e-2 if quick else 1e-3)
        err = max(abs(s.a / background_closed_form(params, s.t).a - 1.0) for s in traj)
        out.append(Criterion.at_most(name, f"ode_vs_closed_form_rho{rho_bar:g}", err, 1e-9))
    return out


def _evolve(state: FieldState, params: CosmologyParams, dt: float, t_final: float, integrator=Integrator.RK4) -> FieldState:
    provider = flrw_background(params)
    cfg = StepperConfig(dt, t_final, 1.0, integrator)
    steps = int(round((t_final - state.t) / dt))
    for _ in range(steps):
        state = step(state, provider, params, cfg, dt)
    return state


def suite_convergence(quick: bool = False) -> list[Criterion]:
    name = "convergence"
    out: list[Criterion] = []
    params = CosmologyParams(3.0, 1.0)
    grid = Grid3(8)
    spec = PerturbationSpec(amplitude=0.05, modes=(Mode((1, 0, 0), "h12"), Mode((0, 1, 1), "rho"), Mode((1, 1, 0), "u3")))
    start = initial_state(params, spec, grid)
    t_final = 0.5
    dts = [0.05, 0.025, 0.0125, 0.00625]
    reference = _evolve(start, params, dts[-1] / 4.0, t_final).data
    errors = [float(np.max(np.abs(_evolve(start, params, dt, t_final).data - reference))) for dt in dts]
    slope = stats.linregress(np.log(dts), np.log(errors)).slope
    detail = f"dt {dts} against a dt/4 reference (smaller dt reach roundoff); errors {errors}"
    out.append(Criterion.within(name, "rk4_order", slope, 3.7, 4.3, detail))

    rk2 = _evolve(start, params, dts[1], t_final, Integrator.RK2).data
    rk2_half = _evolve(start, params, dts[2], t_final, Integrator.RK2).data
    e1 = float(np.max(np.abs(rk2 - reference)))
    e2 = float(np.max(np.abs(rk2_half - reference)))
    out.append(Criterion.within(name, "rk2_order", math.log2(e1 / e2), 1.7, 2.3))

    factors = []
    for n in (8, 16):
        coarse, fine = Grid3(n), Grid3(2 * n)
        errs = []
        for g in (coarse, fine):
            x, y, z = g.coords
            f = np.exp(0.5 * np.sin(x) + 0.3 * np.cos(y) * np.sin(z))
            exact = 0.5 * np.cos(x) * f
            errs.append(float(np.max(np.abs(g.ddx(f, 0) - exact))))
        factors.append(errs[0] / max(errs[1], 1e-300))
    out.append(Criterion.at_least(name, "spectral_self_convergence", min(factors), 10.0, f"factors {factors}"))
    return out


def _nonlinear_mode_run(params: CosmologyParams, wavevector, component: str, amplitude: float, times, dt: float):
    grid = oracle_grid(wavevector)
    spec = PerturbationSpec(amplitude=amplitude, modes=(Mode(tuple(wavevector), component),))
    state = initial_state(params, spec, grid)
    snaps = [state.perturbation(params)]
    for t in times[1:]:
        state = _evolve(state, params, dt, t)
        snaps.append(state.perturbation(params))
    return grid, state, np.array(snaps)


def suite_oracle(quick: bool = False) -> list[Criterion]:
    name = "oracle"
    out: list[Criterion] = []
    desitter = CosmologyParams(3.0, 0.0)
    H = desitter.H

    times = np.linspace(0.0, 2.0, 9)
    u_mode = ModeState.single((0, 0, 0), "u1", 1.0)
    series = evolve_mode(desitter, u_mode, 2.0, times)
    err = float(np.max(np.abs(series.field("u1").real / np.exp(-2.0 * H * times) - 1.0)))
    out.append(Criterion.at_most(name, "homogeneous_velocity_mode", err, 1e-8))

    rho_series = evolve_mode(desitter, ModeState.single((0, 0, 0), "rho", 1.0), 2.0, times)
    err = float(np.max(np.abs(rho_series.field("rho").real - 1.0)))
    out.append(Criterion.at_most(name, "homogeneous_density_mode", err, 1e-8))

    bg = background_closed_form(desitter, 0.0)
    lapse = jacobian_action(desitter, bg, ModeState.single((0, 0, 0), "g00", 1.0))
    rate = jacobian_action(desitter, bg, ModeState.single((0, 0, 0), "dg00", 1.0))
    coeffs = np.array([-lapse["dg00"].real, -rate["dg00"].real])
    err = float(np.max(np.abs(coeffs - np.array([6.0 * H * H, 5.0 * H]))))
    out.append(Criterion.at_most(name, "lapse_damping_coefficients", err, 1e-6, f"measured {coeffs.tolist()}"))

    params = CosmologyParams(3.0, 1.0)
    k, comp = (1, 0, 0), "h12"
    t_final = 1.5 if quick else 3.0
    times = np.linspace(0.0, t_final, 7)
    amplitude = 1e-5
    grid, _, nonlinear = _nonlinear_mode_run(params, k, comp, amplitude, times, 0.025)
    mode0 = consistent_mode(params, k, comp, amplitude)
    lin = evolve_mode(params, mode0, t_final, times)
    predicted = np.array([mode_field(lin.at(i), grid) for i in range(len(times))])
    dev = float(np.max(np.abs(nonlinear - predicted))) / float(np.max(np.abs(predicted)))
    out.append(Criterion.at_most(name, "nonlinear_vs_linear", dev, 1e-2, f"amplitude {amplitude:g}"))

    # linear parts cancel in N(A) − 2N(A/2), leaving the quadratic response
    def quadratic(a: float) -> float:
        _, full, _ = _nonlinear_mode_run(params, k, comp, a, times[:3], 0.025)
        _, half, _ = _nonlinear_mode_run(params, k, comp, 0.5 * a, times[:3], 0.025)
        return float(np.max(np.abs(full.perturbation(params) - 2.0 * half.perturbation(params))))

    for a in (1e-5, 1e-4):
        ratio = quadratic(2.0 * a) / quadratic(a)
        out.append(Criterion.within(name, f"quadratic_signature_A{a:g}", ratio, 3.0, 5.0))
    return out


def suite_decay(quick: bool = False) -> list[Criterion]:
    name = "decay"
    out: list[Criterion] = []
    params = CosmologyParams(3.0, 0.0)
    H = params.H
    grid = Grid3(8)
    dt = 0.05
    t_final = 3.0

    spec = PerturbationSpec(amplitude=1e-5, modes=(Mode((0, 0, 0), "u1"),))
    state = initial_state(params, spec, grid)
    times, norms = [state.t], [float(grid.l2_norm(state.u[0]))]
    while state.t < t_final - 1e-12:
        state = _evolve(state, params, dt, state.t + dt)
        times.append(state.t)
        norms.append(float(grid.l2_norm(state.u[0])))
    fit = fit_decay(times, norms, (1.0, t_final))
    out.append(
        Criterion.at_most(name, "velocity_decay_exponent", abs(fit.exponent / (-2.0 * H) - 1.0), 0.05, f"fitted {fit.exponent:.6f}")
    )

    spec = PerturbationSpec(amplitude=1e-5, modes=(Mode((0, 0, 0), "rho"),))
    state = initial_state(params, spec, grid)
    rho0 = state.rho.copy()
    state = _evolve(state, params, dt, t_final)
    drift = float(np.max(np.abs(state.rho / rho0 - 1.0)))
    out.append(Criterion.at_most(name, "density_constant", drift, 1e-6))
    return out


SUITES: dict[str, Callable[[bool], list[Criterion]]] = {
    "identities": suite_identities,
    "background": suite_background,
    "convergence": suite_convergence,
    "oracle": suite_oracle,
    "decay": suite_decay,
}


def run_suites(names, quick: bool = False) -> VerifyReport:
    started = time.perf_counter()
    report = VerifyReport()
    for suite in names:
        t0 = time.perf_counter()
        criteria = SUITES[suite](quick)
        report.criteria.extend(criteria)
        failed = [c.name for c in criteria if not c.passed]
        logger.info(
            "verify %s: %s (%.1fs)%s",
            suite,
            "pass" if not failed else "FAIL",
            time.perf_counter() - t0,
            f", failed: {', '.join(failed)}" if failed else "",
        )
    report.wall_time = time.perf_counter() - started
    return report
