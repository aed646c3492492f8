"""The elliptic identity for top-order spatial derivatives.

With the inverse Riemannian metric

    Hⁱʲ = e^{2Ω}[gⁱʲ + g⁰⁰uⁱuʲ/(u⁰)² − g⁰ⁱuʲ/u⁰ − g⁰ʲuⁱ/u⁰]

every scalar v satisfies

    Hᵃᵇ∂_a∂_b v = e^{2Ω}□̂_g v − e^{2Ω}(g⁰⁰/u⁰)∂_u∂_t v
                  + e^{2Ω}{g⁰⁰uᵃ/(u⁰)² − 2g⁰ᵃ/u⁰}∂_u∂_a v,

so ∂_a∂_b v is controlled by □̂_g v and ∂_u derivatives alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .background import BackgroundState, CosmologyParams
from .diagnostics import Kinematics, du_apply, kinematics
from .lorentz import _ein, min_eigenvalue
from .state import WAVE_COMPONENTS, FieldState, Geometry

__all__ = [
    "EllipticCoefficients",
    "TopOrder",
    "elliptic_coefficients",
    "elliptic_identity_sides",
    "elliptic_identity_residual",
    "top_order_spatial",
]

Array = NDArray[np.float64]


@dataclass(frozen=True)
class EllipticCoefficients:
    Hij: Array

    def min_eigenvalue(self) -> Array:
        return min_eigenvalue(self.Hij)


def elliptic_coefficients(geo: Geometry) -> EllipticCoefficients:
    inv = geo.jet.inverse
    u0, u = geo.u0, geo.state.u
    cross = inv.gu0[:, None] * u[None, :] / u0
    H = inv.gusp + inv.gu00 * u[:, None] * u[None, :] / u0**2 - cross - np.swapaxes(cross, 0, 1)
    return EllipticCoefficients(math.exp(2.0 * geo.bg.Omega) * H)


def _component(which: int | str) -> int:
    if isinstance(which, str):
        try:
            return WAVE_COMPONENTS.index(which)
        except ValueError:
            raise ValueError(f"unknown wave component {which!r}; expected one of {WAVE_COMPONENTS}") from None
    if not 0 <= which < len(WAVE_COMPONENTS):
        raise ValueError(f"wave component index {which} out of range")
    return which


def elliptic_identity_sides(geo: Geometry, v: Array, v_t: Array, v_tt: Array) -> tuple[Array, Array]:
    """(left, right) of the identity for an arbitrary scalar field v.

    The left side contracts Hⁱʲ with spectral second derivatives; the right side
    assembles □̂_g v from its definition and the ∂_u derivatives via ``du_apply``.
    """
    grid = geo.grid
    inv = geo.jet.inverse
    u0, u = geo.u0, geo.state.u
    e2 = math.exp(2.0 * geo.bg.Omega)
    grad_v, grad_vt, hess_v = grid.gradient(v), grid.gradient(v_t), grid.hessian(v)

    left = _ein("ab...,ab...->...", elliptic_coefficients(geo).Hij, hess_v)

    box = inv.gu00 * v_tt + 2.0 * _ein("a...,a...->...", inv.gu0, grad_vt) + _ein("ab...,ab...->...", inv.gusp, hess_v)
    du_dt = du_apply(u0, u, v_t, v_tt, grad_vt)
    du_da = np.stack([du_apply(u0, u, grad_v[a], grad_vt[a], hess_v[:, a]) for a in range(3)])
    coeff = inv.gu00 * u / u0**2 - 2.0 * inv.gu0 / u0
    right = e2 * (box - inv.gu00 / u0 * du_dt + _ein("a...,a...->...", coeff, du_da))
    return left, right


def elliptic_identity_residual(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    which: int | str,
    kin: Kinematics | None = None,
) -> Array:
    """Left minus right side of the identity for one wave component."""
    kin = kin if kin is not None else kinematics(state, bg, params)
    c = _component(which)
    left, right = elliptic_identity_sides(kin.geo, state.wave[c], state.wave_t[c], kin.wave_tt[c])
    return left - right


@dataclass(frozen=True)
class TopOrder:
    hessian: Array
    """hessian[a, b] = ∂_a∂_b v."""
    lhs: float
    """Σ_ab ‖∂_a∂_b v‖_{L²}."""
    bound: float
    """The right-hand side of the top-order estimate, without its constant."""

    @property
    def ratio(self) -> float:
        return self.lhs / self.bound if self.bound > 0.0 else math.nan


def top_order_spatial(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    which: int | str,
    q: float = 0.1,
    kin: Kinematics | None = None,
) -> TopOrder:
    """All ∂_a∂_b v with Σ‖∂_a∂_b v‖ and the quantity bounding it:

    e^{2Ω}‖□̂_g v‖ + e^{2Ω}‖∂_t∂_u v‖ + Σ_a e^{(1−q)Ω}‖∂_a∂_u v‖
    + e^{(2−q)Ω}‖∂_t v‖ + Σ_a e^{(1−q)Ω}‖∂_a v‖.
    """
    kin = kin if kin is not None else kinematics(state, bg, params)
    geo, grid = kin.geo, state.grid
    inv = geo.jet.inverse
    c = _component(which)
    v, v_t, v_tt = state.wave[c], state.wave_t[c], kin.wave_tt[c]
    grad_v, grad_vt = geo.grad_wave[:, c], geo.grad_wave_t[:, c]
    hess = geo.hess_wave[:, :, c]
    u0, u = geo.u0, state.u
    Om = bg.Omega

    box = inv.gu00 * v_tt + 2.0 * _ein("a...,a...->...", inv.gu0, grad_vt) + _ein("ab...,ab...->...", inv.gusp, hess)
    du_v = du_apply(u0, u, v, v_t, grad_v)
    dt_du = du_apply(u0, u, v_t, v_tt, grad_vt) + kin.u0_t * v_t + _ein("a...,a...->...", kin.u_t, grad_v)
    da_du = grid.gradient(du_v)

    l2 = grid.l2_norm
    bound = (
        math.exp(2 * Om) * float(l2(box))
        + math.exp(2 * Om) * float(l2(dt_du))
        + math.exp((1 - q) * Om) * float(np.sum(l2(da_du)))
        + math.exp((2 - q) * Om) * float(l2(v_t))
        + math.exp((1 - q) * Om) * float(np.sum(l2(grad_v)))
    )
    return TopOrder(hess, float(np.sum(l2(hess))), bound)
