"""Right-hand sides of the reduced Einstein–dust system.

The wave part is written as □̂v = RHS_v for the ten metric components, with the
source split into its FLRW principal part and the error terms Δ. The dust part
is first order in (ϱ, u^j).

``wave_rhs_direct`` and ``fluid_rhs_direct`` rebuild the same quantities from
the unsplit definitions (□̂g from the Ricci identity, the fluid from the
geodesic and continuity equations); they are slower and serve as oracles.
"""

from __future__ import annotations

import logging

import numpy as np
from numpy.typing import NDArray

from .background import BackgroundState, CosmologyParams
from .error import DegenerateG00Upper
from .lorentz import (
    _ein,
    _witness,
    contracted_christoffel,
    delta_A,
    delta_C,
    delta_christoffel,
    gauge_residual,
    modified_A,
    raise_christoffel,
)
from .state import (
    RHO,
    U,
    WAVE,
    WAVE_COMPONENTS,
    WAVE_T,
    FieldRates,
    FieldState,
    Geometry,
    SYM_PAIRS,
    build_geometry,
    pack_sym,
)

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_G00_FLOOR",
    "wave_rhs",
    "wave_rhs_direct",
    "second_time_derivative",
    "second_time_derivatives",
    "fluid_rhs",
    "fluid_rhs_direct",
    "assemble_rates",
    "gauge_source_residual",
]

Array = NDArray[np.float64]

DEFAULT_G00_FLOOR = 0.1


def _geometry(state: FieldState, bg: BackgroundState, geo: Geometry | None) -> Geometry:
    return geo if geo is not None else build_geometry(state, bg)


def _stack_wave(r00: Array, r0: Array, rh: Array) -> Array:
    """(scalar, (3, ...), (3, 3, ...)) -> (10, ...) in wave-component order."""
    return np.concatenate([r00[None], r0, pack_sym(rh)])


# ─── wave part ───────────────────────────────────────────────────────────────


def wave_rhs(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    geo: Geometry | None = None,
) -> Array:
    """RHS of □̂v for v = g00, g0j, h_jk, stacked as (10, ...).

    RHS00 = 5Hk00 + 6H²(g00+1) + Δ00
    RHS0j = 3Hk0j + 2H²g0j − 2Hg^{ab}Γ_ajb + Δ0j
    RHSjk = 3Hk_jk + Δjk
    """
    geo = _geometry(state, bg, geo)
    jet = geo.jet
    H, w = params.H, bg.omega
    rb = params.rho_bar
    e3 = np.exp(-3.0 * bg.Omega)
    e2m = np.exp(-2.0 * bg.Omega)
    e5 = np.exp(-5.0 * bg.Omega)

    g00, g0, k00, k0 = state.g00, state.g0, state.k00, state.k0
    hsym, khsym = state.hsym, state.khsym
    rho = state.rho
    low0, lowsp = geo.lowered
    inv = jet.inverse

    dA = delta_A(jet)
    dC00, dC0j = delta_C(jet)
    gamma_sp = _ein("ab...,ajb...->j...", inv.gusp, jet.gamma1[1:, 1:, 1:])

    d00 = (
        -(g00 + 1.0) * e3 * rb
        - e3 * (rho - rb)
        + 2.0 * e3 * rho * (1.0 - low0**2)
        - e3 * rho * (g00 + 1.0)
        + 2.0 * (dA[0, 0] + dC00)
        + 5.0 * (w - H) * k00
        + 6.0 * (w * w - H * H) * (g00 + 1.0)
    )
    d0j = (
        0.5 * e3 * rb * g0
        - 2.0 * e3 * rho * low0 * lowsp
        - e3 * rho * g0
        + 2.0 * (w * w - H * H) * g0
        + 3.0 * (w - H) * k0
        - 2.0 * (w - H) * gamma_sp
        + 2.0 * (dA[0, 1:] + dC0j)
    )
    grad_h = _unpack_grad(geo.grad_wave[:, 4:10])
    djk = (
        rb * e3 * (inv.gu00 + 1.0) * hsym
        - e3 * (rho - rb) * hsym
        - 2.0 * e5 * rho * lowsp[:, None] * lowsp[None, :]
        + 3.0 * (w - H) * khsym
        - 4.0 * w * _ein("a...,ajk...->jk...", inv.gu0, grad_h)
        + 2.0 * e2m * dA[1:, 1:]
    )

    r00 = 5.0 * H * k00 + 6.0 * H * H * (g00 + 1.0) + d00
    r0 = 3.0 * H * k0 + 2.0 * H * H * g0 - 2.0 * H * gamma_sp + d0j
    rh = 3.0 * H * khsym + djk
    return _stack_wave(r00, r0, rh)


def _unpack_grad(packed: Array) -> Array:
    """(3, 6, ...) gradient of packed h -> (3, 3, 3, ...) indexed [a, j, k]."""
    out = np.empty((packed.shape[0], 3, 3, *packed.shape[2:]))
    for i, (a, b) in enumerate(SYM_PAIRS):
        out[:, a, b] = packed[:, i]
        out[:, b, a] = packed[:, i]
    return out


def wave_rhs_direct(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    geo: Geometry | None = None,
) -> Array:
    """Same quantity as :func:`wave_rhs`, built from the unsplit reduced equations.

    □̂g_μν = −2Ric_μν + (gauge and Λ terms) is expanded with A_μν, the
    contracted Christoffels and the dust stress, then the spatial block is
    converted from □̂g_jk to □̂h_jk.
    """
    geo = _geometry(state, bg, geo)
    jet = geo.jet
    w, wd, lam = bg.omega, bg.omega_dot, params.Lambda
    e2 = np.exp(2.0 * bg.Omega)
    m, inv, D = jet.metric, jet.inverse, jet.dg
    rho = np.exp(-3.0 * bg.Omega) * state.rho
    low0, lowsp = geo.lowered

    A = modified_A(jet)
    low, up = contracted_christoffel(jet.ginv, jet.gamma1)

    b00 = (
        6.0 * m.g00 * wd
        + 3.0 * w * D[0, 0, 0]
        + 2.0 * (A[0, 0] + 2.0 * w * up[0] - 6.0 * w * w)
        - 2.0 * lam * m.g00
        - 2.0 * rho * (low0**2 + 0.5 * m.g00)
    )
    b0j = (
        3.0 * wd * m.g0
        + 3.0 * w * D[0, 0, 1:]
        + 2.0 * (A[0, 1:] + 2.0 * w * (3.0 * w * m.g0 - low[1:]))
        - 2.0 * lam * m.g0
        - 2.0 * rho * (low0 * lowsp + 0.5 * m.g0)
    )
    bjk = (
        3.0 * w * D[0, 1:, 1:]
        + 2.0 * A[1:, 1:]
        - 2.0 * lam * m.gsp
        - 2.0 * rho * lowsp[:, None] * lowsp[None, :]
        - rho * m.gsp
    )

    hsym, khsym = state.hsym, state.khsym
    grad_h = _unpack_grad(geo.grad_wave[:, 4:10])
    rh = (
        bjk / e2
        - 4.0 * w * inv.gu00 * khsym
        - 4.0 * w * _ein("a...,ajk...->jk...", inv.gu0, grad_h)
        - inv.gu00 * (4.0 * w * w + 2.0 * wd) * hsym
    )
    return _stack_wave(b00, b0j, rh)


def second_time_derivatives(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    geo: Geometry | None = None,
    floor: float = DEFAULT_G00_FLOOR,
    rhs: Array | None = None,
) -> Array:
    """∂_t²v = (RHS_v − 2g^{0a}∂_a∂_t v − g^{ab}∂_a∂_b v)/g⁰⁰ for all ten components.

    Raises :class:`DegenerateG00Upper` when min |g⁰⁰| < ``floor``.
    """
    geo = _geometry(state, bg, geo)
    inv = geo.jet.inverse
    gu00 = np.asarray(inv.gu00)
    if np.any(~(np.abs(gu00) >= floor)):
        where, value = _witness(-np.abs(gu00))
        raise DegenerateG00Upper(f"|g^00| below {floor}", where, -value)
    if rhs is None:
        rhs = wave_rhs(state, bg, params, geo)
    num = (
        rhs
        - 2.0 * _ein("a...,av...->v...", inv.gu0, geo.grad_wave_t)
        - _ein("ab...,abv...->v...", inv.gusp, geo.hess_wave)
    )
    return num / gu00


def second_time_derivative(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    which: str,
    geo: Geometry | None = None,
    floor: float = DEFAULT_G00_FLOOR,
) -> Array:
    """∂_t² of one wave component, named as in ``WAVE_COMPONENTS`` (e.g. ``"h12"``)."""
    try:
        idx = WAVE_COMPONENTS.index(which)
    except ValueError:
        raise ValueError(f"unknown wave component {which!r}; expected one of {WAVE_COMPONENTS}") from None
    return second_time_derivatives(state, bg, params, geo, floor)[idx]


# ─── dust part ───────────────────────────────────────────────────────────────


def fluid_rhs(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    geo: Geometry | None = None,
) -> tuple[Array, Array]:
    """(∂_t ϱ, ∂_t u^j) in the Δ-split form.

    u⁰∂_t u^j = −u^a∂_a u^j − 2ωu⁰u^j − u⁰Δ^j_00 + Δ^j
    u⁰∂_t ϱ = Δ − u^a∂_a ϱ
    """
    geo = _geometry(state, bg, geo)
    jet = geo.jet
    w = bg.omega
    rho, usp = state.rho, state.u
    u0 = geo.u0
    low0, lowsp = geo.lowered
    dc = delta_christoffel(jet)
    grad_u = geo.grad_u

    delta_j = (
        -u0 * (u0 - 1.0) * dc.dj_00
        - 2.0 * u0 * _ein("ja...,a...->j...", dc.dj_0k, usp)
        - _ein("jab...,a...,b...->j...", dc.dk_ij, usp, usp)
    )
    advect_u = _ein("a...,aj...->j...", usp, grad_u)
    du = (-advect_u - 2.0 * w * u0 * usp - u0 * dc.dj_00 + delta_j) / u0

    div_u = _ein("aa...->...", grad_u)
    trace_delta = _ein("aab...,b...->...", dc.full(), geo.ufull)
    metric_dot = (
        state.k00 * u0 * u0
        + 2.0 * u0 * _ein("a...,a...->...", state.k0, usp)
        + _ein("ab...,a...,b...->...", jet.T + 2.0 * w * jet.metric.gsp, usp, usp)
    )
    big_delta = (
        -rho * div_u
        - rho / (low0 * u0) * _ein("a...,a...->...", lowsp, advect_u)
        - 2.0 * w * rho / low0 * _ein("a...,a...->...", lowsp, usp)
        - rho / low0 * _ein("a...,a...->...", lowsp, dc.dj_00)
        + rho / (low0 * u0) * _ein("a...,a...->...", lowsp, delta_j)
        - rho * trace_delta
        + rho / (2.0 * low0) * metric_dot
    )
    drho = (big_delta - _ein("a...,a...->...", usp, geo.grad_rho)) / u0
    return drho, du


def fluid_rhs_direct(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    geo: Geometry | None = None,
) -> tuple[Array, Array]:
    """(∂_t ϱ, ∂_t u^j) from u^α∇_α u^β = 0 and ∇_α(ρu^α) = 0 directly."""
    geo = _geometry(state, bg, geo)
    jet = geo.jet
    w = bg.omega
    rho, usp = state.rho, state.u
    u0, uf = geo.u0, geo.ufull
    low0, lowsp = geo.lowered
    gamma2 = raise_christoffel(jet.ginv, jet.gamma1)
    grad_u = geo.grad_u

    du = -(
        _ein("a...,aj...->j...", usp, grad_u)
        + _ein("jab...,a...,b...->j...", gamma2[1:], uf, uf)
    ) / u0
    du0 = -(
        _ein("a...,a...->...", lowsp, du)
        + 0.5 * _ein("ab...,a...,b...->...", jet.dg[0], uf, uf)
    ) / low0
    trace = _ein("aab...,b...->...", gamma2, uf)
    drho = (
        -_ein("a...,a...->...", usp, geo.grad_rho)
        - rho * (du0 + _ein("aa...->...", grad_u))
        - rho * (trace - 3.0 * w * u0)
    ) / u0
    return drho, du


# ─── assembly ────────────────────────────────────────────────────────────────


def assemble_rates(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    floor: float = DEFAULT_G00_FLOOR,
    dealias: bool = True,
) -> FieldRates:
    """∂_t of every evolved field; the whole vector is dealiased once at the end."""
    geo = build_geometry(state, bg)
    out = np.empty_like(state.data)
    out[WAVE] = state.wave_t
    out[WAVE_T] = second_time_derivatives(state, bg, params, geo, floor)
    drho, du = fluid_rhs(state, bg, params, geo)
    out[RHO] = drho
    out[U] = du
    if dealias:
        out = state.grid.dealias(out)
    return FieldRates(out)


def gauge_source_residual(state: FieldState, bg: BackgroundState) -> Array:
    """Γ^μ − 3ωδ^μ_0 on the grid, (4, n, n, n)."""
    return gauge_residual(build_geometry(state, bg).jet)

