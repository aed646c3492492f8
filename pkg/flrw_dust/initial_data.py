"""Initial data: geometric data sets, perturbed FLRW families, and constraints.

Geometric data (g̊_jk, K̊_jk, ρ̊, ů^j) is turned into data for the gauge-reduced
system by fixing g00 = −1 and g0j = 0 on the initial slice and choosing ∂_t g00
and ∂_t g0j so that the gauge condition holds there. The Gauss and Codazzi
constraints are only evaluated, never solved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .background import BackgroundState, CosmologyParams, background_closed_form
from .error import AmplitudeTooLarge, ConfigInvalid, NotLorentzian
from .grid import Grid3
from .lorentz import (
    _ein,
    _witness,
    christoffel_first_kind,
    min_eigenvalue,
    raise_christoffel,
    spatial_inverse,
)
from .state import SYM_PAIRS, FieldState, build_geometry

logger = logging.getLogger(__name__)

__all__ = [
    "PERTURBABLE",
    "GeometricData",
    "Mode",
    "Bump",
    "PerturbationSpec",
    "perturbed_flrw",
    "construct_modified_data",
    "constraint_residuals",
    "slice_constraint_residuals",
    "initial_state",
]

Array = NDArray[np.float64]

_SYM_NAMES = tuple(f"{a + 1}{b + 1}" for a, b in SYM_PAIRS)
PERTURBABLE: tuple[str, ...] = (
    tuple("h" + s for s in _SYM_NAMES)
    + tuple("K" + s for s in _SYM_NAMES)
    + ("rho", "u1", "u2", "u3")
)


@dataclass(frozen=True, eq=False)
class GeometricData:
    """Induced metric, second fundamental form, density and velocity on T³."""

    gsp0: Array
    K0: Array
    rho0: Array
    usp0: Array

    def validate(self) -> None:
        lam = min_eigenvalue(self.gsp0)
        if np.any(~(lam > 0.0)):
            where, value = _witness(-lam)
            raise NotLorentzian("initial spatial metric not positive definite", where, -value, spatial=True)
        if np.any(self.rho0 < 0.0):
            raise ValueError("initial density must be nonnegative")

    @classmethod
    def flrw(cls, grid: Grid3, params: CosmologyParams) -> "GeometricData":
        w0 = background_closed_form(params, 0.0).omega
        eye = np.broadcast_to(np.eye(3)[:, :, None, None, None], (3, 3, *grid.shape))
        return cls(
            gsp0=np.array(eye),
            K0=w0 * eye,
            rho0=np.full(grid.shape, params.rho_bar),
            usp0=grid.zeros(3),
        )


@dataclass(frozen=True)
class Mode:
    """One real Fourier mode cos(k·x + phase) added to ``component``."""

    wavevector: tuple[int, int, int]
    component: str
    phase: float = 0.0
    weight: float = 1.0


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported density bump exp(1 − 1/(1 − r²/R²)), peak ``height``."""

    center: tuple[float, float, float]
    radius: float
    height: float = 1.0


@dataclass(frozen=True)
class PerturbationSpec:
    amplitude: float = 1e-3
    modes: tuple[Mode, ...] = ()
    seed: int = 0
    random_modes: int = 0
    bumps: tuple[Bump, ...] = field(default=())

    def problems(self, grid: Grid3) -> list[str]:
        """Every violated precondition, for :class:`ConfigInvalid`."""
        out = []
        if not np.isfinite(self.amplitude) or self.amplitude < 0.0:
            out.append(f"perturbation.amplitude must be finite and >= 0, got {self.amplitude!r}")
        if self.random_modes < 0:
            out.append("perturbation.random_modes must be >= 0")
        for i, m in enumerate(self.modes):
            if m.component not in PERTURBABLE:
                out.append(f"perturbation.modes[{i}].component {m.component!r} not one of {', '.join(PERTURBABLE)}")
            if len(m.wavevector) != 3 or any(abs(int(k)) > grid.cutoff for k in m.wavevector):
                out.append(
                    f"perturbation.modes[{i}].wavevector {tuple(m.wavevector)} outside the dealias band |k_i| <= {grid.cutoff}"
                )
        for i, b in enumerate(self.bumps):
            if not 0.0 < b.radius <= np.pi:
                out.append(f"perturbation.bumps[{i}].radius must be in (0, pi], got {b.radius!r}")
        return out

    def all_modes(self, grid: Grid3) -> list[Mode]:
        """Explicit modes followed by ``random_modes`` draws from ``default_rng(seed)``."""
        modes = list(self.modes)
        if self.random_modes:
            rng = np.random.default_rng(self.seed)
            c = grid.cutoff
            for _ in range(self.random_modes):
                k = tuple(int(x) for x in rng.integers(-c, c + 1, size=3))
                comp = PERTURBABLE[int(rng.integers(len(PERTURBABLE)))]
                phase = float(rng.uniform(0.0, 2.0 * np.pi))
                weight = float(rng.uniform(-1.0, 1.0))
                modes.append(Mode(k, comp, phase, weight))
        return modes


def _bump_field(grid: Grid3, bump: Bump) -> Array:
    # periodic distance to the centre
    d = grid.coords - np.asarray(bump.center, dtype=float).reshape(3, 1, 1, 1)
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    s = np.sum(d * d, axis=0) / bump.radius**2
    out = np.zeros(grid.shape)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
    return bump.height * out


def perturbed_flrw(params: CosmologyParams, spec: PerturbationSpec, grid: Grid3) -> GeometricData:
    """FLRW data plus ``spec.amplitude`` times the requested band-limited fields.

    g̊ = Id + A·δg, K̊ = ω(0)g̊ + A·δK, ρ̊ = ϱ̄ + A·δρ (clipped at 0), ů = A·δu.
    """
    problems = spec.problems(grid)
    if problems:
        raise ConfigInvalid(problems)
    amp = spec.amplitude
    w0 = background_closed_form(params, 0.0).omega
    dg = grid.zeros(3, 3)
    dK = grid.zeros(3, 3)
    drho = grid.zeros()
    du = grid.zeros(3)

    for m in spec.all_modes(grid):
        f = m.weight * grid.mode(m.wavevector, m.phase)
        name = m.component
        if name[0] in "hK":
            a, b = int(name[1]) - 1, int(name[2]) - 1
            target = dg if name[0] == "h" else dK
            target[a, b] += f
            if a != b:
                target[b, a] += f
        elif name == "rho":
            drho += f
        else:
            du[int(name[1]) - 1] += f

    if spec.bumps:
        bumps = sum(_bump_field(grid, b) for b in spec.bumps)
        drho += grid.dealias(bumps)

    gsp0 = np.eye(3)[:, :, None, None, None] + amp * dg
    lam = min_eigenvalue(gsp0)
    if np.any(~(lam > 0.0)):
        where, value = _witness(-lam)
        raise AmplitudeTooLarge(
            f"amplitude {amp} leaves the initial metric indefinite at {where} (min eigenvalue {-value:.3e})"
        )
    rho0 = params.rho_bar + amp * drho
    if np.any(rho0 < 0.0):
        logger.warning(
            "initial density negative at %d points (min %.3e); clipped to 0",
            int(np.count_nonzero(rho0 < 0.0)),
            float(rho0.min()),
        )
        rho0 = np.maximum(rho0, 0.0)
    return GeometricData(
        gsp0=gsp0,
        K0=w0 * gsp0 + amp * dK,
        rho0=rho0,
        usp0=amp * du,
    )


def construct_modified_data(data: GeometricData, bg: BackgroundState, grid: Grid3) -> FieldState:
    """Data for the reduced system on the slice t = bg.t.

    g00 = −1, g0j = 0, g_jk = g̊_jk, ∂_t g_jk = 2K̊_jk,
    ∂_t g00 = 2(3ω − g̊^{ab}K̊_ab), ∂_t g0j = g̊^{ab}(∂_a g̊_bj − ½∂_j g̊_ab),
    ϱ = e^{3Ω}ρ̊, u^j = ů^j.
    """
    data.validate()
    e2 = np.exp(2.0 * bg.Omega)
    ginv = spatial_inverse(data.gsp0)
    h = data.gsp0 / e2
    kh = 2.0 * data.K0 / e2 - 2.0 * bg.omega * h
    k00 = 2.0 * (3.0 * bg.omega - _ein("ab...,ab...->...", ginv, data.K0))
    dg = grid.gradient(data.gsp0)  # dg[c, a, b] = ∂_c g̊_ab
    k0 = _ein("ab...,abj...->j...", ginv, dg) - 0.5 * _ein("ab...,jab...->j...", ginv, dg)
    return FieldState.from_parts(
        grid,
        bg.t,
        g00=-np.ones(grid.shape),
        g0=grid.zeros(3),
        h=h,
        k00=k00,
        k0=k0,
        kh=kh,
        rho=np.exp(3.0 * bg.Omega) * data.rho0,
        u=data.usp0,
    )


def initial_state(params: CosmologyParams, spec: PerturbationSpec, grid: Grid3) -> FieldState:
    """perturbed_flrw followed by construct_modified_data at t = 0."""
    return construct_modified_data(
        perturbed_flrw(params, spec, grid), background_closed_form(params, 0.0), grid
    )


# ─── constraints ─────────────────────────────────────────────────────────────


def _constraints(
    grid: Grid3,
    g: Array,
    K: Array,
    energy: Array,
    momentum: Array,
    Lambda: float,
) -> tuple[Array, Array]:
    """Gauss and Codazzi residuals for induced data with matter terms T(N̂,N̂), T(N̂,∂_j)."""
    ginv = spatial_inverse(g)
    dg = grid.gradient(g)
    gamma2 = raise_christoffel(ginv, christoffel_first_kind(dg))  # Γ^k_ij as [k, i, j]

    # R_ij = ∂_k Γ^k_ij − ∂_j Γ^k_ik + Γ^k_kl Γ^l_ij − Γ^k_jl Γ^l_ik
    dgamma = grid.gradient(gamma2)  # [m, k, i, j]
    contracted = _ein("kik...->i...", gamma2)
    ricci = (
        _ein("kkij...->ij...", dgamma)
        - np.swapaxes(grid.gradient(contracted), 0, 1)
        + _ein("l...,lij...->ij...", contracted, gamma2)
        - _ein("kjl...,lik...->ij...", gamma2, gamma2)
    )
    scalar = _ein("ij...,ij...->...", ginv, ricci)

    Kup = _ein("ac...,bd...,cd...->ab...", ginv, ginv, K)
    trK = _ein("ab...,ab...->...", ginv, K)
    gauss = scalar - _ein("ab...,ab...->...", Kup, K) + trK**2 - 2.0 * Lambda - 2.0 * energy

    # D_c K_ab = ∂_c K_ab − Γ^d_ca K_db − Γ^d_cb K_ad
    dK = grid.gradient(K)
    DK = dK - _ein("dca...,db...->cab...", gamma2, K) - _ein("dcb...,ad...->cab...", gamma2, K)
    codazzi = (
        _ein("ab...,baj...->j...", ginv, DK)
        - _ein("ab...,jab...->j...", ginv, DK)
        - momentum
    )
    return gauss, codazzi


def constraint_residuals(data: GeometricData, params: CosmologyParams, grid: Grid3) -> tuple[Array, Array]:
    """(Gauss residual, Codazzi residuals (3, ...)) of a geometric data set.

    The slice is taken with unit lapse and zero shift, so u⁰ = sqrt(1 + g̊_ab ů^a ů^b),
    T(N̂,N̂) = ρ̊(u⁰)² and T(N̂,∂_j) = −ρ̊u⁰g̊_ja ů^a.
    """
    u = data.usp0
    u0 = np.sqrt(1.0 + _ein("ab...,a...,b...->...", data.gsp0, u, u))
    energy = data.rho0 * u0**2
    momentum = -data.rho0 * u0 * _ein("ja...,a...->j...", data.gsp0, u)
    return _constraints(grid, data.gsp0, data.K0, energy, momentum, params.Lambda)


def slice_constraint_residuals(
    state: FieldState, bg: BackgroundState, params: CosmologyParams
) -> tuple[Array, Array]:
    """Constraint residuals of the t = const slice of an evolved state.

    With lapse N = (−g⁰⁰)^{−1/2} and shift β_j = g0j,
    K_ij = (∂_t g_ij − D_iβ_j − D_jβ_i)/(2N), T(N̂,N̂) = ρN²(u⁰)², T(N̂,∂_j) = −ρNu⁰u_j.
    """
    geo = build_geometry(state, bg)
    grid = state.grid
    m, inv = geo.metric, geo.jet.inverse
    g = m.gsp
    lapse = 1.0 / np.sqrt(-np.asarray(inv.gu00))
    ginv = spatial_inverse(g)
    gamma2 = raise_christoffel(ginv, christoffel_first_kind(geo.jet.dg[1:, 1:, 1:]))
    Dbeta = grid.gradient(m.g0) - _ein("kij...,k...->ij...", gamma2, m.g0)
    K = (geo.jet.dg[0, 1:, 1:] - Dbeta - np.swapaxes(Dbeta, 0, 1)) / (2.0 * lapse)

    rho = np.exp(-3.0 * bg.Omega) * state.rho
    u0 = geo.u0
    _, lowsp = geo.lowered
    energy = rho * lapse**2 * u0**2
    momentum = -rho * lapse * u0 * lowsp
    return _constraints(grid, g, K, energy, momentum, params.Lambda)

