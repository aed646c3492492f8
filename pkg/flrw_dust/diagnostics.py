"""Norms, energies, ∂_u derivatives, equivalence ratios and decay fits.

All Sobolev norms are taken at order N−1 (``NormConfig.sobolev_order``) and
summed, not root-summed, over tensor components; symmetric spatial pairs j ≠ k
count twice. Energies are reported as E, not E².
"""

from __future__ import annotations

import csv
import logging
import math
import os
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from .background import BackgroundState, CosmologyParams
from .error import MissingColumn, NonCoerciveWarning, WindowTooShort
from .grid import multi_indices
from .rhs import DEFAULT_G00_FLOOR, fluid_rhs, second_time_derivatives
from .state import FieldState, Geometry, build_geometry, flrw_vector

logger = logging.getLogger(__name__)

__all__ = [
    "EnergyConstants",
    "NormConfig",
    "Kinematics",
    "NormSet",
    "EnergySet",
    "DiagnosticsRecord",
    "DecayFit",
    "RatioDriftTracker",
    "CSV_COLUMNS",
    "RATIO_PAIRS",
    "du_apply",
    "kinematics",
    "compute_norms",
    "compute_energies",
    "energy_block",
    "du_commutator_max",
    "norm_energy_ratio",
    "fit_decay",
    "DiagnosticsWriter",
    "read_csv",
]

Array = NDArray[np.float64]

# multiplicity of each packed pair (11, 12, 13, 22, 23, 33) in a sum over j, k
PAIR_MULT = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 1.0])
_G00, _G0, _H = slice(0, 1), slice(1, 4), slice(4, 10)


@dataclass(frozen=True)
class EnergyConstants:
    """(γ, δ) per metric block; the h block always uses (0, 0)."""

    g00: tuple[float, float] = (1.0, 11.0)
    g00_du: tuple[float, float] = (1.0, 13.0)
    g0: tuple[float, float] = (2.0 / 3.0, 4.0)
    g0_du: tuple[float, float] = (2.0 / 3.0, 16.0 / 3.0)


@dataclass(frozen=True)
class NormConfig:
    q: float = 0.1
    sobolev_order: int = 3
    energy_constants: EnergyConstants = EnergyConstants()

    def problems(self) -> list[str]:
        out = []
        if not 0.0 < self.q <= 0.125:
            out.append(f"norms.q must be in (0, 1/8], got {self.q!r}")
        if not 1 <= self.sobolev_order <= 4:
            out.append(f"norms.sobolev_order must be in [1, 4], got {self.sobolev_order!r}")
        for name in ("g00", "g00_du", "g0", "g0_du"):
            gamma, delta = getattr(self.energy_constants, name)
            if not delta > gamma * gamma:
                out.append(f"norms.energy_constants.{name}: need delta > gamma^2 for coercivity")
        return out


# ─── ∂_u and time derivatives ────────────────────────────────────────────────


def du_apply(u0: Array, usp: Array, f: Array, f_t: Array, grad_f: Array) -> Array:
    """∂_u f = u⁰∂_t f + u^a∂_a f; ``f`` may carry leading component axes."""
    return u0 * f_t + sum(usp[a] * grad_f[a] for a in range(3))


@dataclass(frozen=True, eq=False)
class Kinematics:
    """Geometry plus every time derivative the norms and energies need."""

    geo: Geometry
    wave_tt: Array
    rho_t: Array
    u_t: Array
    u0_t: Array

    @property
    def state(self) -> FieldState:
        return self.geo.state

    def du(self, f: Array, f_t: Array, grad_f: Array | None = None) -> Array:
        if grad_f is None:
            grad_f = self.geo.grid.gradient(f)
        return du_apply(self.geo.u0, self.state.u, f, f_t, grad_f)


def kinematics(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    floor: float = DEFAULT_G00_FLOOR,
) -> Kinematics:
    geo = build_geometry(state, bg)
    wave_tt = second_time_derivatives(state, bg, params, geo, floor)
    rho_t, u_t = fluid_rhs(state, bg, params, geo)
    # ∂_t u⁰ from differentiating g_αβ u^α u^β = −1 in time
    low0, lowsp = geo.lowered
    uf = geo.ufull
    u0_t = -(
        np.sum(lowsp * u_t, axis=0)
        + 0.5 * np.einsum("ab...,a...,b...->...", geo.jet.dg[0], uf, uf)
    ) / low0
    return Kinematics(geo, wave_tt, rho_t, u_t, u0_t)


# ─── norms ───────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class NormSet:
    S_g00: float
    S_g00_du: float
    S_g00_ell: float
    S_g0: float
    S_g0_du: float
    S_g0_ell: float
    S_h: float
    S_h_du: float
    S_h_ell: float
    S_u: float
    S_u_top: float
    S_u_du: float
    S_rho: float
    S_rho_du: float
    S_g: float
    S_gu: float
    S_ell: float
    S_belowtop: float
    S_belowtop_du: float
    S_Total: float


def compute_norms(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    cfg: NormConfig = NormConfig(),
    kin: Kinematics | None = None,
) -> NormSet:
    """Every S-norm of the metric and fluid hierarchy with its e^{cΩ} weight."""
    kin = kin if kin is not None else kinematics(state, bg, params)
    geo = kin.geo
    grid = state.grid
    order, q, Om = cfg.sobolev_order, cfg.q, bg.Omega

    def w(c: float) -> float:
        return math.exp(c * Om)

    def sob(f: Array, k: int = order) -> Array:
        return grid.sobolev_norm(f, k)

    pert = state.wave - flrw_vector(params)[:10, None, None, None]
    vt, vtt = state.wave_t, kin.wave_tt
    gv, gvt, hv = geo.grad_wave, geo.grad_wave_t, geo.hess_wave
    du_v = kin.du(state.wave, vt, gv)
    du_vt = kin.du(vt, vtt, gvt)
    du_gv = np.stack([kin.du(gv[i], gvt[i], hv[:, i]) for i in range(3)])

    def block(sl: slice, mult: Array | float, c0: float) -> tuple[float, float, float]:
        """(plain, ∂_u, elliptic) norms of one block; c0 is the weight of its v term."""
        plain = np.sum(mult * (w(c0) * sob(vt[sl]) + w(c0) * sob(pert[sl]) + w(c0 - 1) * sob(gv[:, sl]).sum(axis=0)))
        du = np.sum(
            mult * (w(c0) * sob(du_vt[sl]) + w(c0) * sob(du_v[sl]) + w(c0 - 1) * sob(du_gv[:, sl]).sum(axis=0))
        )
        ell = np.sum(mult * (w(c0 - 1) * sob(gvt[:, sl]).sum(axis=0) + w(c0 - 2) * sob(hv[:, :, sl]).sum(axis=(0, 1))))
        return float(plain), float(du), float(ell)

    S_g00, S_g00_du, S_g00_ell = block(_G00, 1.0, q)
    S_g0, S_g0_du, S_g0_ell = block(_G0, 1.0, q - 1)

    m = PAIR_MULT
    S_h = float(np.sum(m * (w(q) * sob(vt[_H]) + sob(gv[:, _H], order - 1).sum(axis=0) + w(q - 1) * sob(gv[:, _H]).sum(axis=0))))
    S_h_du = float(
        np.sum(
            m
            * (
                w(q) * sob(du_vt[_H])
                + w(q) * sob(du_v[_H])
                + w(q) * sob(du_gv[:, _H], order - 1).sum(axis=0)
                + w(q - 1) * sob(du_gv[:, _H]).sum(axis=0)
            )
        )
    )
    S_h_ell = float(np.sum(m * (w(q - 1) * sob(gvt[:, _H]).sum(axis=0) + w(q - 2) * sob(hv[:, :, _H]).sum(axis=(0, 1)))))

    u, gu = state.u, geo.grad_u
    du_u = kin.du(u, kin.u_t, gu)
    du_rho = kin.du(state.rho, kin.rho_t, geo.grad_rho)
    S_u = w(1 + q) * float(np.sum(sob(u)))
    S_u_top = w(q) * float(np.sum(sob(gu)))
    S_u_du = w(1 + q) * float(np.sum(sob(du_u)))
    S_rho = float(sob(state.rho - params.rho_bar))
    S_rho_du = w(q) * float(sob(du_rho))

    S_g = S_g00 + S_g0 + S_h
    S_gu = S_g00_du + S_g0_du + S_h_du
    S_ell = S_g00_ell + S_g0_ell + S_h_ell
    S_belowtop = S_g + S_u + S_rho
    S_belowtop_du = S_gu + S_u_du + S_rho_du
    return NormSet(
        S_g00=S_g00,
        S_g00_du=S_g00_du,
        S_g00_ell=S_g00_ell,
        S_g0=S_g0,
        S_g0_du=S_g0_du,
        S_g0_ell=S_g0_ell,
        S_h=S_h,
        S_h_du=S_h_du,
        S_h_ell=S_h_ell,
        S_u=S_u,
        S_u_top=S_u_top,
        S_u_du=S_u_du,
        S_rho=S_rho,
        S_rho_du=S_rho_du,
        S_g=S_g,
        S_gu=S_gu,
        S_ell=S_ell,
        S_belowtop=S_belowtop,
        S_belowtop_du=S_belowtop_du,
        S_Total=S_belowtop + S_belowtop_du + S_ell + S_u_top,
    )


# ─── energies ────────────────────────────────────────────────────────────────


def energy_block(
    grid,
    gu00: Array,
    gusp: Array,
    H: float,
    v: Array,
    v_t: Array,
    grad_v: Array,
    gamma: float,
    delta: float,
) -> float:
    """E²_{(γ,δ)}[v, ∂v] = ½∫{−g⁰⁰(∂_t v)² + g^{ab}∂_a v∂_b v − 2γHg⁰⁰v∂_t v + δH²v²}.

    ``v`` may carry leading component axes; the result is summed over them.
    """
    spatial = sum(gusp[a, b] * grad_v[a] * grad_v[b] for a in range(3) for b in range(3))
    density = -gu00 * v_t**2 + spatial - 2.0 * gamma * H * gu00 * v * v_t + delta * H * H * v**2
    return float(0.5 * np.sum(grid.integrate(density)))


@dataclass(frozen=True)
class EnergySet:
    E_g00: float
    E_g00_du: float
    E_g0: float
    E_g0_du: float
    E_h_low: float
    E_dh: float
    E_dh_du: float
    E_u: float
    E_u_top: float
    E_rho: float
    E_g: float
    E_gu: float
    E_belowtop: float
    E_Total: float


def _alpha_sweep(kin: Kinematics, order: int):
    """Per multi-index α: (α, ∂_α v, ∂_α ∂_t v, ∇∂_α v, ∂_u∂_α v, ∂_t(∂_u∂_α v), ∇(∂_u∂_α v))."""
    state, grid = kin.state, kin.geo.grid
    u0, u, u0_t, u_t = kin.geo.u0, state.u, kin.u0_t, kin.u_t
    v, vt, vtt = state.wave, state.wave_t, kin.wave_tt
    for alpha in multi_indices(order):
        dv = grid.partial(v, alpha)
        dvt = grid.partial(vt, alpha)
        dvtt = grid.partial(vtt, alpha)
        g_dv = grid.gradient(dv)
        g_dvt = grid.gradient(dvt)
        w = du_apply(u0, u, dv, dvt, g_dv)
        w_t = (
            u0_t * dvt
            + u0 * dvtt
            + sum(u_t[a] * g_dv[a] for a in range(3))
            + sum(u[a] * g_dvt[a] for a in range(3))
        )
        yield alpha, dv, dvt, g_dv, w, w_t, grid.gradient(w)


def compute_energies(
    state: FieldState,
    bg: BackgroundState,
    params: CosmologyParams,
    cfg: NormConfig = NormConfig(),
    kin: Kinematics | None = None,
) -> EnergySet:
    """Every E of the metric and fluid hierarchy.

    Warns with :class:`NonCoerciveWarning` when g⁰⁰ > −0.5 somewhere.
    """
    kin = kin if kin is not None else kinematics(state, bg, params)
    inv = kin.geo.jet.inverse
    gu00, gusp = inv.gu00, inv.gusp
    if float(np.max(gu00)) > -0.5:
        warnings.warn(
            f"g^00 reaches {float(np.max(gu00)):.3f} > -0.5; energy coercivity margin is shrinking",
            NonCoerciveWarning,
            stacklevel=2,
        )
    grid = state.grid
    H, q, Om = params.H, cfg.q, bg.Omega
    ec = cfg.energy_constants
    w2q, w2q1 = math.exp(2 * q * Om), math.exp(2 * (q - 1) * Om)
    mult = PAIR_MULT.reshape(6, 1, 1, 1)

    def E2(v, v_t, grad, gd):
        return energy_block(grid, gu00, gusp, H, v, v_t, grad, gd[0], gd[1])

    e00 = e00u = e0 = e0u = elow = edh = edhu = 0.0
    for alpha, dv, dvt, g_dv, w, w_t, g_w in _alpha_sweep(kin, cfg.sobolev_order):
        v00 = dv[0] + 1.0 if not any(alpha) else dv[0]
        e00 += w2q * E2(v00, dvt[0], g_dv[:, 0], ec.g00)
        e00u += w2q * E2(w[0], w_t[0], g_w[:, 0], ec.g00_du)
        e0 += w2q1 * E2(dv[_G0], dvt[_G0], g_dv[:, _G0], ec.g0)
        e0u += w2q1 * E2(w[_G0], w_t[_G0], g_w[:, _G0], ec.g0_du)
        zero = np.zeros_like(dv[_H])
        edh += w2q * E2(zero, np.sqrt(mult) * dvt[_H], np.sqrt(mult) * g_dv[:, _H], (0.0, 0.0))
        edhu += w2q * E2(zero, np.sqrt(mult) * w_t[_H], np.sqrt(mult) * g_w[:, _H], (0.0, 0.0))
        if any(alpha):
            elow += 0.5 * H * H * float(np.sum(PAIR_MULT * grid.integrate(dv[_H] ** 2)))

    u, gu = state.u, kin.geo.grad_u
    sob = grid.sobolev_norm
    order = cfg.sobolev_order
    E_u = math.exp((1 + q) * Om) * math.sqrt(float(np.sum(sob(u, order) ** 2)))
    E_u_top = math.exp(q * Om) * math.sqrt(float(np.sum(sob(gu, order) ** 2)))
    E_rho = float(sob(state.rho - params.rho_bar, order))

    E_g00, E_g00_du = math.sqrt(e00), math.sqrt(e00u)
    E_g0, E_g0_du = math.sqrt(e0), math.sqrt(e0u)
    E_h_low, E_dh, E_dh_du = math.sqrt(elow), math.sqrt(edh), math.sqrt(edhu)
    E_g = E_g00 + E_g0 + E_dh + E_h_low
    E_gu = E_g00_du + E_g0_du + E_dh_du
    E_belowtop = E_g + E_u + E_rho
    return EnergySet(
        E_g00=E_g00,
        E_g00_du=E_g00_du,
        E_g0=E_g0,
        E_g0_du=E_g0_du,
        E_h_low=E_h_low,
        E_dh=E_dh,
        E_dh_du=E_dh_du,
        E_u=E_u,
        E_u_top=E_u_top,
        E_rho=E_rho,
        E_g=E_g,
        E_gu=E_gu,
        E_belowtop=E_belowtop,
        E_Total=E_belowtop + E_gu + E_u_top,
    )


def du_commutator_max(kin: Kinematics, order: int) -> float:
    """max over components and |α| ≤ order of ‖∂_u∂_α v − ∂_α∂_u v‖_{L²}."""
    state, grid = kin.state, kin.geo.grid
    du_v = kin.du(state.wave, state.wave_t, kin.geo.grad_wave)
    worst = 0.0
    for alpha, _, _, _, w, _, _ in _alpha_sweep(kin, order):
        diff = w - grid.partial(du_v, alpha)
        worst = max(worst, float(np.max(grid.l2_norm(diff))))
    return worst


# ─── ratios ──────────────────────────────────────────────────────────────────

RATIO_PAIRS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "g00": (("S_g00",), ("E_g00",)),
    "g0": (("S_g0",), ("E_g0",)),
    "h": (("S_h",), ("E_h_low", "E_dh")),
    "g": (("S_g",), ("E_g",)),
    "g00_full": (("S_g00", "S_g00_du"), ("E_g00", "E_g00_du")),
    "g0_full": (("S_g0", "S_g0_du"), ("E_g0", "E_g0_du")),
    "h_full": (("S_h", "S_h_du"), ("E_h_low", "E_dh", "E_dh_du")),
    "belowtop": (("S_belowtop",), ("E_belowtop",)),
    "belowtop_full": (("S_belowtop", "S_belowtop_du"), ("E_belowtop", "E_gu")),
    "u_top": (("S_u_top",), ("E_u_top",)),
    "total": (("S_Total",), ("E_Total",)),
}

_ABSENT = 1e-14


def norm_energy_ratio(norms: NormSet, energies: EnergySet) -> dict[str, float | None]:
    """S/E for every equivalent pair; ``None`` when both sides are below 1e-14."""
    out: dict[str, float | None] = {}
    for name, (num, den) in RATIO_PAIRS.items():
        s = sum(getattr(norms, k) for k in num)
        e = sum(getattr(energies, k) for k in den)
        if s < _ABSENT and e < _ABSENT:
            out[name] = None
        elif e < _ABSENT:
            out[name] = math.inf
        else:
            out[name] = s / e
    return out


class RatioDriftTracker:
    """Running min/max of every ratio; flags a ratio once its max/min exceeds ``factor``."""

    def __init__(self, factor: float = 2.0):
        self.factor = factor
        self._lo: dict[str, float] = {}
        self._hi: dict[str, float] = {}
        self._flagged: set[str] = set()

    def update(self, record: "DiagnosticsRecord") -> list[str]:
        return self._observe(record.ratios)

    def drift(self) -> dict[str, float]:
        return {k: self._hi[k] / self._lo[k] for k in self._lo}

    @classmethod
    def from_rows(cls, rows: Iterable[Mapping[str, object]], factor: float = 2.0) -> "RatioDriftTracker":
        """Rebuild the tracker from diagnostics CSV rows; ratios already past ``factor`` are not flagged again."""
        tracker = cls(factor)
        count = 0
        for row in rows:
            ratios = {}
            for name in RATIO_PAIRS:
                cell = row.get(f"ratio_{name}", "")
                ratios[name] = float(cell) if cell not in ("", None) else None
            tracker._observe(ratios)
            count += 1
        logger.debug("ratio drift tracker seeded from %d rows", count)
        return tracker

    def _observe(self, ratios: dict[str, float | None]) -> list[str]:
        new = []
        for name, r in ratios.items():
            if r is None or not math.isfinite(r) or r <= 0.0:
                continue
            self._lo[name] = min(self._lo.get(name, r), r)
            self._hi[name] = max(self._hi.get(name, r), r)
            if name not in self._flagged and self._hi[name] > self.factor * self._lo[name]:
                self._flagged.add(name)
                new.append(name)
        return new


# ─── decay fits ──────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    residual: float
    samples: int


def fit_decay(
    times: Sequence[float],
    values: Sequence[float],
    window: tuple[float, float] | None = None,
) -> DecayFit:
    """Least-squares slope of log(value) against t over ``window``.

    ``residual`` is the RMS deviation of log(value) from the fitted line.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, y = t[keep], y[keep]
    if t.size < 8:
        raise WindowTooShort(f"decay fit needs at least 8 samples in the window, got {t.size}")
    if np.any(~(y > 0.0)):
        raise ValueError("decay fit needs strictly positive values")
    logy = np.log(y)
    fit = stats.linregress(t, logy)
    resid = logy - (fit.intercept + fit.slope * t)
    return DecayFit(float(fit.slope), float(fit.intercept), float(np.sqrt(np.mean(resid**2))), int(t.size))


# ─── records ─────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    step: int
    norms: NormSet
    energies: EnergySet
    gauge_resid_max: float
    gauss_resid_l2: float
    codazzi_resid_l2: float
    min_eig_g: float
    max_g00: float
    H_elliptic_min_eig: float
    du_commutator_max: float
    bootstrap_ok: bool
    breakdown: str = "None"
    ratios: dict[str, float | None] = field(default_factory=dict)

    @classmethod
    def unavailable(cls, t: float, step: int, breakdown: str) -> "DiagnosticsRecord":
        """A record for a state the norms cannot be evaluated on: every number NaN."""
        nan = math.nan
        return cls(
            t=t,
            step=step,
            norms=NormSet(**{f.name: nan for f in fields(NormSet)}),
            energies=EnergySet(**{f.name: nan for f in fields(EnergySet)}),
            gauge_resid_max=nan,
            gauss_resid_l2=nan,
            codazzi_resid_l2=nan,
            min_eig_g=nan,
            max_g00=nan,
            H_elliptic_min_eig=nan,
            du_commutator_max=nan,
            bootstrap_ok=False,
            breakdown=breakdown,
            ratios={k: None for k in RATIO_PAIRS},
        )

    def row(self) -> dict[str, object]:
        out: dict[str, object] = {"step": self.step, "t": self.t}
        out.update(asdict(self.norms))
        out.update(asdict(self.energies))
        out.update({f"ratio_{k}": ("" if v is None else v) for k, v in self.ratios.items()})
        for name in _EXTRA_COLUMNS:
            value = getattr(self, name)
            out[name] = int(value) if isinstance(value, bool) else value
        return out


_EXTRA_COLUMNS = (
    "gauge_resid_max",
    "gauss_resid_l2",
    "codazzi_resid_l2",
    "min_eig_g",
    "max_g00",
    "H_elliptic_min_eig",
    "du_commutator_max",
    "bootstrap_ok",
    "breakdown",
)

CSV_COLUMNS: tuple[str, ...] = (
    ("step", "t")
    + tuple(f.name for f in fields(NormSet))
    + tuple(f.name for f in fields(EnergySet))
    + tuple(f"ratio_{k}" for k in RATIO_PAIRS)
    + _EXTRA_COLUMNS
)


# ─── CSV ─────────────────────────────────────────────────────────────────────

SCHEMA_VERSION = 1


class DiagnosticsWriter:
    """Streams records to CSV: one schema comment line, a header row, one row per sample."""

    def __init__(self, path: str | os.PathLike, append: bool = False):
        self.path = Path(path)
        fresh = not (append and self.path.exists())
        self._fh = open(self.path, "a" if not fresh else "w", newline="")
        self._writer = csv.DictWriter(self._fh, fieldnames=CSV_COLUMNS)
        if fresh:
            self._fh.write(f"# flrw-dust diagnostics schema v{SCHEMA_VERSION}; columns: {','.join(CSV_COLUMNS)}\n")
            self._writer.writeheader()

    def write(self, record: DiagnosticsRecord) -> None:
        self._writer.writerow(record.row())
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "DiagnosticsWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def truncate_csv(path: str | os.PathLike, last_step: int) -> None:
    """Drop every data row with step > ``last_step``, keeping comments and header."""
    path = Path(path)
    lines = path.read_text().splitlines(keepends=True)
    kept, header_seen = [], False
    for line in lines:
        if line.startswith("#") or not header_seen:
            kept.append(line)
            header_seen = header_seen or not line.startswith("#")
            continue
        if int(line.split(",", 1)[0]) <= last_step:
            kept.append(line)
    path.write_text("".join(kept))


def read_csv(path: str | os.PathLike) -> tuple[list[str], list[dict[str, str]]]:
    """(column names, rows) of a diagnostics CSV, skipping comment lines."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def select_columns(columns: Sequence[str], wanted: Iterable[str]) -> list[str]:
    """Expand ``all-energies`` / ``all-norms`` and check every name exists."""
    out: list[str] = []
    missing: list[str] = []
    for name in wanted:
        if name == "all-energies":
            out.extend(c for c in columns if c.startswith("E_"))
        elif name == "all-norms":
            out.extend(c for c in columns if c.startswith("S_"))
        elif name in columns:
            out.append(name)
        else:
            missing.append(name)
    if missing:
        raise MissingColumn(missing, columns)
    return out
