"""Pointwise Lorentzian algebra in the 3+1 split.

Tensor indices are leading array axes and whatever follows them (nothing, a batch
of sample points, or the three grid axes) is carried along by ``...`` in every
``einsum``. Index 0 is time, 1..3 are space; spatial-only blocks are indexed
0..2 inside their own arrays.

Christoffel symbols of the first kind use the middle-lowered convention
Γ_{μλν} = ½(∂_μ g_{λν} + ∂_ν g_{μλ} − ∂_λ g_{μν}), and Γ^α_{μν} = g^{αλ}Γ_{μλν}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from .error import NotLorentzian, SpacelikeVelocity

__all__ = [
    "Metric",
    "InverseMetric",
    "MetricJet",
    "DeltaChristoffel",
    "principal_christoffel",
    "invert_metric",
    "solve_u0",
    "christoffel_first_kind",
    "raise_christoffel",
    "contracted_christoffel",
    "gauge_residual",
    "delta_christoffel",
    "delta_A",
    "delta_C",
    "modified_A",
    "spatial_inverse",
    "min_eigenvalue",
]

Array = NDArray[np.float64]


def _ein(spec: str, *ops):
    return np.einsum(spec, *ops, optimize=True)


def _witness(mask_or_values: Array, largest: bool = True) -> tuple[tuple[int, ...], float]:
    values = np.asarray(mask_or_values)
    if values.ndim == 0:
        return (), float(values)
    flat = np.argmax(values) if largest else np.argmin(values)
    idx = np.unravel_index(flat, values.shape)
    return tuple(int(i) for i in idx), float(values[idx])


def spatial_inverse(gsp: Array) -> Array:
    """Inverse of a (3, 3, ...) stack of symmetric matrices."""
    moved = np.moveaxis(gsp, (0, 1), (-2, -1))
    inv = np.linalg.inv(moved)
    inv = 0.5 * (inv + np.swapaxes(inv, -1, -2))
    return np.moveaxis(inv, (-2, -1), (0, 1))


def min_eigenvalue(sym: Array) -> Array:
    """Smallest eigenvalue of a (3, 3, ...) stack of symmetric matrices."""
    return np.linalg.eigvalsh(np.moveaxis(sym, (0, 1), (-2, -1)))[..., 0]


@dataclass(frozen=True)
class Metric:
    """g_{μν} split as g00, g0j (3, ...), g_jk (3, 3, ...)."""

    g00: Array
    g0: Array
    gsp: Array

    @classmethod
    def from_full(cls, g: Array) -> "Metric":
        return cls(g[0, 0], g[0, 1:], g[1:, 1:])

    def full(self) -> Array:
        g00 = np.asarray(self.g00, dtype=float)
        out = np.empty((4, 4, *g00.shape))
        out[0, 0] = g00
        out[0, 1:] = self.g0
        out[1:, 0] = self.g0
        out[1:, 1:] = self.gsp
        return out

    def lower(self, u0: Array, usp: Array) -> tuple[Array, Array]:
        """u_μ = g_{μα}u^α as (u_0, u_j)."""
        low0 = self.g00 * u0 + _ein("a...,a...->...", self.g0, usp)
        lowsp = self.g0 * u0 + _ein("ja...,a...->j...", self.gsp, usp)
        return low0, lowsp


@dataclass(frozen=True)
class InverseMetric:
    gu00: Array
    gu0: Array
    gusp: Array

    def full(self) -> Array:
        gu00 = np.asarray(self.gu00, dtype=float)
        out = np.empty((4, 4, *gu00.shape))
        out[0, 0] = gu00
        out[0, 1:] = self.gu0
        out[1:, 0] = self.gu0
        out[1:, 1:] = self.gusp
        return out


def invert_metric(m: Metric, check_spatial: bool = True) -> InverseMetric:
    """Inverse metric from g⁰⁰ = 1/(g00 − d²), d² = (g♭⁻¹)^{ab}g0a g0b.

    The remaining components are g⁰ʲ = (g♭⁻¹)^{aj}g0a/(d² − g00) and
    gʲᵏ = (g♭⁻¹)^{jk} + g⁰ʲg⁰ᵏ/g⁰⁰.
    """
    if check_spatial:
        lam = min_eigenvalue(m.gsp)
        if np.any(~(lam > 0.0)):
            where, value = _witness(-lam)
            raise NotLorentzian("spatial metric not positive definite", where, -value, spatial=True)
    ginv = spatial_inverse(m.gsp)
    d2 = _ein("ab...,a...,b...->...", ginv, m.g0, m.g0)
    lapse = m.g00 - d2
    if np.any(~(lapse < 0.0)):
        where, value = _witness(lapse)
        raise NotLorentzian("g00 - d^2 must be negative", where, value)
    gu00 = 1.0 / lapse
    gu0 = _ein("aj...,a...->j...", ginv, m.g0) / (d2 - m.g00)
    gusp = ginv + gu0[:, None] * gu0[None, :] / gu00
    return InverseMetric(gu00, gu0, gusp)


def solve_u0(m: Metric, usp: Array) -> Array:
    """Future-directed u⁰ from g_{αβ}u^αu^β = −1.

    u⁰ = −p + sqrt(1 + p² − g_ab u^a u^b/g00 − (g00+1)/g00) with p = g0a u^a/g00.
    """
    p = _ein("a...,a...->...", m.g0, usp) / m.g00
    quad = _ein("ab...,a...,b...->...", m.gsp, usp, usp)
    disc = 1.0 + p * p - quad / m.g00 - (m.g00 + 1.0) / m.g00
    if np.any(~(disc > 0.0)):
        where, value = _witness(-disc)
        raise SpacelikeVelocity("u^0 discriminant not positive", where, -value)
    return -p + np.sqrt(disc)


def christoffel_first_kind(dg: Array) -> Array:
    """Γ_{μλν} from dg[λ, μ, ν] = ∂_λ g_{μν}; symmetric in (μ, ν)."""
    return 0.5 * (dg + np.einsum("nml...->mln...", dg) - np.einsum("lmn...->mln...", dg))


def raise_christoffel(ginv: Array, gamma1: Array) -> Array:
    """Γ^α_{μν} = g^{αλ}Γ_{μλν}, indexed [α, μ, ν]."""
    return _ein("al...,mln...->amn...", ginv, gamma1)


def contracted_christoffel(ginv: Array, gamma1: Array) -> tuple[Array, Array]:
    """(Γ_λ, Γ^μ) with Γ_λ = g^{αβ}Γ_{αλβ} and Γ^μ = g^{μλ}Γ_λ."""
    low = _ein("ab...,alb...->l...", ginv, gamma1)
    return low, _ein("ml...,l...->m...", ginv, low)


@dataclass(frozen=True)
class DeltaChristoffel:
    """Error parts of Γ^α_{μν} beyond the FLRW principal terms ωδʲₖ and ωg_jk.

    Component arrays: ``d0_00`` is Δ⁰₀₀, ``d0_j0[j]`` is Δ⁰ⱼ₀, ``dj_00[j]`` is
    Δʲ₀₀, ``dj_0k[j, k]`` is Δʲ₀ₖ, ``d0_jk[j, k]`` is Δ⁰ⱼₖ, ``dk_ij[k, i, j]`` is
    Δᵏᵢⱼ.
    """

    d0_00: Array
    d0_j0: Array
    dj_00: Array
    dj_0k: Array
    d0_jk: Array
    dk_ij: Array

    def full(self) -> Array:
        """Δ^α_{μν} as a (4, 4, 4, ...) array indexed [α, μ, ν]."""
        shape = np.shape(self.d0_00)
        out = np.empty((4, 4, 4, *shape))
        out[0, 0, 0] = self.d0_00
        out[0, 1:, 0] = self.d0_j0
        out[0, 0, 1:] = self.d0_j0
        out[1:, 0, 0] = self.dj_00
        out[1:, 0, 1:] = self.dj_0k
        out[1:, 1:, 0] = self.dj_0k
        out[0, 1:, 1:] = self.d0_jk
        out[1:, 1:, 1:] = self.dk_ij
        return out


def principal_christoffel(metric: Metric, omega: float) -> Array:
    """The FLRW principal part of Γ^α_{μν}: Γʲ₀ₖ = ωδʲₖ, Γ⁰ⱼₖ = ωg_jk, the rest zero."""
    shape = np.shape(metric.g00)
    out = np.zeros((4, 4, 4, *shape))
    eye = np.eye(3).reshape(3, 3, *([1] * len(shape)))
    out[1:, 0, 1:] = omega * eye
    out[1:, 1:, 0] = omega * eye
    out[0, 1:, 1:] = omega * metric.gsp
    return out


@dataclass(frozen=True, eq=False)
class MetricJet:
    """Metric, inverse and first derivatives at the points of interest.

    ``dg[λ, μ, ν]`` is ∂_λ g_{μν}. ``dth`` is e^{2Ω}∂_t h_jk for the spatial
    block; when omitted it is reconstructed as ∂_t g_jk − 2ωg_jk.
    """

    metric: Metric
    inverse: InverseMetric
    dg: Array
    omega: float
    dth: Array | None = None

    @classmethod
    def build(cls, metric: Metric, dg: Array, omega: float, dth: Array | None = None) -> "MetricJet":
        return cls(metric, invert_metric(metric), dg, float(omega), dth)

    @cached_property
    def ginv(self) -> Array:
        return self.inverse.full()

    @cached_property
    def gamma1(self) -> Array:
        return christoffel_first_kind(self.dg)

    @cached_property
    def T(self) -> Array:
        """e^{2Ω}∂_t h_ab, the small part of ∂_t g_ab."""
        if self.dth is not None:
            return self.dth
        return self.dg[0, 1:, 1:] - 2.0 * self.omega * self.metric.gsp

    @cached_property
    def X(self) -> Array:
        """X[b, l] = g^{ab}∂_t g_al − 2ωδ^b_l = e^{2Ω}g^{ab}∂_t h_al − 2ωg^{0b}g_0l."""
        inv = self.inverse
        return _ein("ab...,al...->bl...", inv.gusp, self.T) - 2.0 * self.omega * (
            inv.gu0[:, None] * self.metric.g0[None, :]
        )


def gauge_residual(jet: MetricJet) -> Array:
    """D^μ = g^{αβ}Γ^μ_{αβ} − 3ωδ^μ₀ as a (4, ...) array."""
    _, up = contracted_christoffel(jet.ginv, jet.gamma1)
    out = np.array(up, copy=True)
    out[0] -= 3.0 * jet.omega
    return out


def delta_christoffel(jet: MetricJet) -> DeltaChristoffel:
    m, inv, D, w = jet.metric, jet.inverse, jet.dg, jet.omega
    u00, u0, us = inv.gu00, inv.gu0, inv.gusp
    T, X = jet.T, jet.X
    dtg00, dtg0, dg00 = D[0, 0, 0], D[0, 0, 1:], D[1:, 0, 0]
    dg0, ds = D[1:, 0, 1:], D[1:, 1:, 1:]
    curl0 = dg0 - np.swapaxes(dg0, 0, 1)  # curl0[a, b] = ∂_a g0b − ∂_b g0a

    d0_00 = 0.5 * (
        u00 * dtg00
        + 2.0 * _ein("a...,a...->...", u0, dtg0)
        - _ein("a...,a...->...", u0, dg00)
    )
    d0_j0 = 0.5 * (
        u00 * dg00
        + _ein("a...,ja...->j...", u0, curl0)
        + 2.0 * w * _ein("a...,ja...->j...", u0, m.gsp)
        + _ein("a...,ja...->j...", u0, T)
    )
    dj_00 = 0.5 * (
        u0 * dtg00
        + 2.0 * _ein("ja...,a...->j...", us, dtg0)
        - _ein("ja...,a...->j...", us, dg00)
    )
    dj_0k = 0.5 * (
        u0[:, None] * dg00[None, :]
        + _ein("ja...,ka...->jk...", us, curl0)
        + X
    )
    sym0 = dg0 + np.swapaxes(dg0, 0, 1)
    d0_jk = 0.5 * (
        u00 * sym0
        + _ein("a...,jak...->jk...", u0, ds)
        + _ein("a...,kaj...->jk...", u0, ds)
        - _ein("a...,ajk...->jk...", u0, ds)
        + T
        - 2.0 * w * (u00 + 1.0) * m.gsp
        - (u00 + 1.0) * T
    )
    dk_ij = 0.5 * (
        u0[:, None, None] * sym0[None]
        - u0[:, None, None] * T[None]
        - 2.0 * w * u0[:, None, None] * m.gsp[None]
        + _ein("ka...,iaj...->kij...", us, ds)
        + _ein("ka...,jia...->kij...", us, ds)
        - _ein("ka...,aij...->kij...", us, ds)
    )
    return DeltaChristoffel(d0_00, d0_j0, dj_00, dj_0k, d0_jk, dk_ij)


def delta_A(jet: MetricJet) -> Array:
    """Error terms Δ_{A,μν} of A_{μν} as a symmetric (4, 4, ...) array."""
    m, inv, D, C, w = jet.metric, jet.inverse, jet.dg, jet.gamma1, jet.omega
    u00, u0, us = inv.gu00, inv.gu0, inv.gusp
    T, X = jet.T, jet.X
    g0 = m.g0
    dtg00, dtg0, dg00 = D[0, 0, 0], D[0, 0, 1:], D[1:, 0, 0]
    dg0, dts, ds = D[1:, 0, 1:], D[0, 1:, 1:], D[1:, 1:, 1:]
    C000, C00a, C0j0 = C[0, 0, 0], C[0, 0, 1:], C[0, 1:, 0]
    Ca0b, C0ja, Cajb = C[1:, 0, 1:], C[0, 1:, 1:], C[1:, 1:, 1:]
    dg0T = np.swapaxes(dg0, 0, 1)  # dg0T[a, b] = ∂_b g0a
    sym0 = dg0 + dg0T
    curl0 = dg0 - dg0T

    # ─── Δ_{A,00} ───
    a00 = u00**2 * (dtg00**2 - C000**2)
    a00 = a00 + u00 * _ein(
        "a...,a...->...", u0, 2.0 * dtg00 * (dtg0 + dg00) - 4.0 * C000 * C00a
    )
    a00 = a00 + u00 * (
        _ein("ab...,a...,b...->...", us, dtg0, dtg0)
        + _ein("ab...,a...,b...->...", us, dg00, dg00)
        - 2.0 * _ein("ab...,a...,b...->...", us, C00a, C00a)
    )
    a00 = a00 + _ein(
        "a...,b...,ab...->...",
        u0,
        u0,
        2.0 * dtg00 * dg0
        + 2.0 * dg00[:, None] * dtg0[None, :]
        - 2.0 * C000 * Ca0b
        - 2.0 * C00a[:, None] * C00a[None, :],
    )
    a00 = a00 + (
        2.0 * _ein("ab...,l...,a...,lb...->...", us, u0, dtg0, dg0)
        + 2.0 * _ein("ab...,l...,b...,al...->...", us, u0, dg00, dg0)
        - 4.0 * _ein("ab...,l...,a...,lb...->...", us, u0, C00a, Ca0b)
    )
    a00 = a00 + _ein("ab...,lm...,al...,bm...->...", us, us, dg0, dg0)
    a00 = a00 + 0.5 * _ein("lm...,bl...,bm...->...", us, X, sym0)
    a00 = a00 - 0.25 * _ein("ab...,lm...,al...,bm...->...", us, us, dg0T + dg0, sym0)
    a00 = a00 - 0.25 * _ein("bl...,lb...->...", X, X)

    # ─── Δ_{A,0j} ───
    a0j = u00**2 * (dtg00 * dtg0 - C000 * C0j0)
    a0j = a0j + u00 * (
        _ein("a...,aj...->j...", u0, dtg00 * (dts + dg0))
        + dtg0 * _ein("a...,a...->...", u0, dtg0 + dg00)
        - 2.0 * C000 * _ein("a...,ja...->j...", u0, C0ja)
        - 2.0 * C0j0 * _ein("a...,a...->...", u0, C00a)
    )
    a0j = a0j + u00 * _ein("aj...,a...->j...", X, dtg0 - 0.5 * dg00)
    a0j = a0j + 0.5 * u00 * _ein("ab...,a...,bj...->j...", us, dg00, sym0)
    a0j = a0j + (
        dtg00 * _ein("a...,b...,abj...->j...", u0, u0, ds)
        + _ein("a...,b...,b...,aj...->j...", u0, u0, dtg0, dg0)
        + _ein("a...,b...,a...,bj...->j...", u0, u0, dg00, dts)
        + dtg0 * _ein("a...,b...,ab...->...", u0, u0, dg0)
        - C000 * _ein("a...,b...,ajb...->j...", u0, u0, Cajb)
        - 2.0 * _ein("a...,b...,b...,ja...->j...", u0, u0, C00a, C0ja)
        - C0j0 * _ein("a...,b...,ab...->...", u0, u0, Ca0b)
    )
    a0j = a0j + (
        _ein("ab...,l...,a...,lbj...->j...", us, u0, dtg0, ds)
        + _ein("ab...,l...,la...,bj...->j...", us, u0, dg0, dts)
        + _ein("ab...,l...,b...,alj...->j...", us, u0, dg00, ds)
        + _ein("ab...,l...,bl...,aj...->j...", us, u0, dg0, dg0)
        - 2.0 * _ein("ab...,l...,a...,ljb...->j...", us, u0, C00a, Cajb)
    )
    # (∂_l g0a + ∂_a g0l) Γ_0jb − ½ ∂_t g_la (∂_b g0j − ∂_j g0b)
    a0j = a0j - (
        _ein("ab...,l...,la...,jb...->j...", us, u0, sym0, C0ja)
        - 0.5 * _ein("ab...,l...,la...,bj...->j...", us, u0, dts, curl0)
    )
    a0j = a0j + w * _ein("a...,aj...->j...", u0, T)
    a0j = a0j + 0.5 * _ein("l...,bl...,bj...->j...", u0, X, dts)
    a0j = a0j + (
        _ein("ab...,lm...,al...,bmj...->j...", us, us, dg0, ds)
        - 0.5 * _ein("ab...,lm...,al...,bjm...->j...", us, us, sym0, Cajb)
    )
    a0j = a0j + 0.5 * _ein("ab...,ma...,bjm...->j...", us, X, Cajb)

    # ─── Δ_{A,jk} ───
    ajk = u00**2 * (dtg0[:, None] * dtg0[None, :] - C0j0[:, None] * C0j0[None, :])
    p = _ein("a...,ak...->k...", u0, dts + dg0)  # g^{0a}(∂_t g_ak + ∂_a g0k)
    q = _ein("a...,ka...->k...", u0, C0ja)  # g^{0a}Γ_0ka
    ajk = ajk + u00 * (
        dtg0[:, None] * p[None, :]
        + p[:, None] * dtg0[None, :]
        - 2.0 * C0j0[:, None] * q[None, :]
        - 2.0 * q[:, None] * C0j0[None, :]
    )
    ajk = ajk + u00 * (
        _ein("ab...,aj...,bk...->jk...", us, dg0, dg0)
        - 0.5 * _ein("ab...,aj...,bk...->jk...", us, curl0, curl0)
    )
    ajk = ajk - 0.5 * u00 * (
        _ein("bj...,bk...->jk...", X, curl0) + _ein("ak...,aj...->jk...", X, curl0)
    )
    ajk = ajk - w * u00 * _ein("a...,k...,aj...->jk...", u0, g0, dts)
    ajk = ajk + 0.5 * u00 * _ein("bj...,bk...->jk...", X, T)
    ajk = ajk + (
        _ein("a...,b...,j...,abk...->jk...", u0, u0, dtg0, ds)
        + _ein("a...,b...,bj...,ak...->jk...", u0, u0, dts, dg0)
        + _ein("a...,b...,aj...,bk...->jk...", u0, u0, dg0, dts)
        + _ein("a...,b...,abj...,k...->jk...", u0, u0, ds, dtg0)
        - _ein("a...,b...,j...,akb...->jk...", u0, u0, C0j0, Cajb)
        - 2.0 * _ein("a...,b...,jb...,ka...->jk...", u0, u0, C0ja, C0ja)
        - _ein("a...,b...,ajb...,k...->jk...", u0, u0, Cajb, C0j0)
    )
    ajk = ajk + (
        _ein("ab...,l...,aj...,lbk...->jk...", us, u0, dts, ds)
        + _ein("ab...,l...,laj...,bk...->jk...", us, u0, ds, dts)
        + _ein("ab...,l...,bj...,alk...->jk...", us, u0, dg0, ds)
        + _ein("ab...,l...,blj...,ak...->jk...", us, u0, ds, dg0)
        - 2.0 * _ein("ab...,l...,ja...,lkb...->jk...", us, u0, C0ja, Cajb)
        - 2.0 * _ein("ab...,l...,lja...,kb...->jk...", us, u0, Cajb, C0ja)
    )
    ajk = ajk + (
        _ein("ab...,ml...,alj...,bmk...->jk...", us, us, ds, ds)
        - _ein("ab...,ml...,ajl...,bkm...->jk...", us, us, Cajb, Cajb)
    )

    out = np.empty((4, 4, *np.shape(u00)))
    out[0, 0] = a00
    out[0, 1:] = a0j
    out[1:, 0] = a0j
    out[1:, 1:] = ajk
    return out


def delta_C(jet: MetricJet) -> tuple[Array, Array]:
    """(Δ_{C,00}, Δ_{C,0j}) for the gauge-source combinations A + I.

    Δ_{C,00} includes ω[((g⁰⁰)²−1)∂_t g00 + g⁰⁰g^{0a}(∂_a g00 + 2∂_t g0a)]; without
    it the 00 identity does not close once g⁰⁰ ≠ −1 or g^{0a} ≠ 0.
    """
    m, inv, D, C, w = jet.metric, jet.inverse, jet.dg, jet.gamma1, jet.omega
    u00, u0, us = inv.gu00, inv.gu0, inv.gusp
    T, X = jet.T, jet.X
    dtg00, dtg0, dg00, dg0 = D[0, 0, 0], D[0, 0, 1:], D[1:, 0, 0], D[1:, 0, 1:]

    c00 = -6.0 * w**2 / m.g00 * ((m.g00 + 1.0) ** 2 - _ein("a...,a...->...", u0, m.g0))
    c00 = c00 - w * (u00 + 1.0) * _ein("aa...->...", X)
    c00 = c00 + 2.0 * w * (u00 + 1.0) * _ein("ab...,ab...->...", us, dg0)
    c00 = c00 + 4.0 * w * _ein("a...,b...,ab...->...", u0, u0, C[0, 1:, 1:])
    c00 = c00 + 2.0 * w * _ein("ab...,l...,alb...->...", us, u0, C[1:, 1:, 1:])
    c00 = c00 + w * (
        (u00 + 1.0) * (u00 - 1.0) * dtg00
        + u00 * _ein("a...,a...->...", u0, dg00 + 2.0 * dtg0)
    )

    c0j = 2.0 * w**2 * (u00 + 1.0) * m.g0 - 2.0 * w * _ein(
        "a...,aj...->j...", u0, T + dg0 - np.swapaxes(dg0, 0, 1)
    )
    return c00, c0j


def modified_A(jet: MetricJet) -> Array:
    """A_{μν} = g^{αβ}g^{κλ}[∂_α g_{νκ}∂_β g_{μλ} − Γ_{ανκ}Γ_{βμλ}] from its definition."""
    G, D, C = jet.ginv, jet.dg, jet.gamma1
    return _ein("ab...,kl...,ank...,bml...->mn...", G, G, D, D) - _ein(
        "ab...,kl...,ank...,bml...->mn...", G, G, C, C
    )
