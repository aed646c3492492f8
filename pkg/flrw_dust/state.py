"""Evolved fields, their rates, and the per-evaluation geometry cache.

The evolved variables live in one ``(24, n, n, n)`` array::

    0        g00
    1..3     g0j
    4..9     h_jk   (pairs 11, 12, 13, 22, 23, 33)
    10       k00 = ∂_t g00
    11..13   k0j = ∂_t g0j
    14..19   k_jk = ∂_t h_jk
    20       ϱ = e^{3Ω}ρ
    21..23   u^j

so the ten wave components occupy rows 0..9 and their time derivatives rows
10..19, in the same order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from .background import BackgroundState, CosmologyParams
from .grid import Grid3
from .lorentz import Metric, MetricJet, solve_u0

__all__ = [
    "SYM_PAIRS",
    "FIELD_NAMES",
    "WAVE_COMPONENTS",
    "NFIELDS",
    "pack_sym",
    "unpack_sym",
    "FieldState",
    "FieldRates",
    "Geometry",
    "build_geometry",
    "flrw_vector",
]

SYM_PAIRS: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))

G00, G0, H = 0, slice(1, 4), slice(4, 10)
K00, K0, KH = 10, slice(11, 14), slice(14, 20)
RHO, U = 20, slice(21, 24)
WAVE, WAVE_T = slice(0, 10), slice(10, 20)
NFIELDS = 24

WAVE_COMPONENTS: tuple[str, ...] = (
    "g00", "g01", "g02", "g03", "h11", "h12", "h13", "h22", "h23", "h33",
)
FIELD_NAMES: tuple[str, ...] = (
    WAVE_COMPONENTS
    + tuple("d" + c for c in WAVE_COMPONENTS)
    + ("rho", "u1", "u2", "u3")
)


def pack_sym(full: NDArray) -> NDArray:
    """(3, 3, ...) symmetric array -> (6, ...) upper-triangle storage."""
    return np.stack([full[a, b] for a, b in SYM_PAIRS])


def unpack_sym(packed: NDArray) -> NDArray:
    """(6, ...) storage -> (3, 3, ...) with [a, b] and [b, a] bitwise equal."""
    out = np.empty((3, 3, *packed.shape[1:]))
    for i, (a, b) in enumerate(SYM_PAIRS):
        out[a, b] = packed[i]
        out[b, a] = packed[i]
    return out


def flrw_vector(params: CosmologyParams) -> NDArray[np.float64]:
    """The exact FLRW solution in evolved variables; constant in time."""
    v = np.zeros(NFIELDS)
    v[G00] = -1.0
    v[H] = [1.0 if a == b else 0.0 for a, b in SYM_PAIRS]
    v[RHO] = params.rho_bar
    return v


@dataclass(frozen=True, eq=False)
class FieldState:
    """All evolved fields on one time slice."""

    t: float
    data: NDArray[np.float64]
    grid: Grid3 = field(repr=False)

    def __post_init__(self):
        if self.data.shape != (NFIELDS, *self.grid.shape):
            raise ValueError(f"state data has shape {self.data.shape}")

    @classmethod
    def from_parts(cls, grid: Grid3, t: float, *, g00, g0, h, k00, k0, kh, rho, u) -> "FieldState":
        """Assemble from named parts; ``h`` and ``kh`` may be (3, 3, ...) or packed (6, ...)."""
        data = np.empty((NFIELDS, *grid.shape))
        data[G00] = g00
        data[G0] = g0
        data[H] = pack_sym(h) if np.shape(h)[:2] == (3, 3) else h
        data[K00] = k00
        data[K0] = k0
        data[KH] = pack_sym(kh) if np.shape(kh)[:2] == (3, 3) else kh
        data[RHO] = rho
        data[U] = u
        return cls(float(t), data, grid)

    @classmethod
    def flrw(cls, grid: Grid3, params: CosmologyParams, t: float = 0.0) -> "FieldState":
        data = np.broadcast_to(flrw_vector(params)[:, None, None, None], (NFIELDS, *grid.shape))
        return cls(float(t), np.array(data), grid)

    def replace(self, t: float, data: NDArray[np.float64]) -> "FieldState":
        return FieldState(float(t), data, self.grid)

    g00 = property(lambda self: self.data[G00])
    g0 = property(lambda self: self.data[G0])
    h = property(lambda self: self.data[H])
    k00 = property(lambda self: self.data[K00])
    k0 = property(lambda self: self.data[K0])
    kh = property(lambda self: self.data[KH])
    rho = property(lambda self: self.data[RHO])
    u = property(lambda self: self.data[U])
    wave = property(lambda self: self.data[WAVE])
    wave_t = property(lambda self: self.data[WAVE_T])

    @property
    def hsym(self) -> NDArray:
        return unpack_sym(self.h)

    @property
    def khsym(self) -> NDArray:
        return unpack_sym(self.kh)

    def perturbation(self, params: CosmologyParams) -> NDArray[np.float64]:
        """Deviation of every evolved variable from exact FLRW."""
        return self.data - flrw_vector(params)[:, None, None, None]

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())


@dataclass(frozen=True, eq=False)
class FieldRates:
    """Time derivative of every evolved field, in the FieldState layout."""

    data: NDArray[np.float64]

    def as_state(self, like: FieldState) -> FieldState:
        return like.replace(like.t, self.data)


@dataclass(frozen=True, eq=False)
class Geometry:
    """Derived quantities of one state at one background time.

    Built once per right-hand-side evaluation and shared by every consumer.
    """

    state: FieldState
    bg: BackgroundState
    metric: Metric
    jet: MetricJet

    @property
    def grid(self) -> Grid3:
        return self.state.grid

    @cached_property
    def u0(self) -> NDArray:
        return solve_u0(self.metric, self.state.u)

    @cached_property
    def ufull(self) -> NDArray:
        return np.concatenate([self.u0[None], self.state.u])

    @cached_property
    def lowered(self) -> tuple[NDArray, NDArray]:
        """(u_0, u_j)."""
        return self.metric.lower(self.u0, self.state.u)

    @cached_property
    def grad_rho(self) -> NDArray:
        return self.grid.gradient(self.state.rho)

    @cached_property
    def grad_u(self) -> NDArray:
        """grad_u[a, j] = ∂_a u^j."""
        return self.grid.gradient(self.state.u)

    @cached_property
    def grad_wave(self) -> NDArray:
        """grad_wave[a, v] = ∂_a of wave component v."""
        return self.grid.gradient(self.state.wave)

    @cached_property
    def grad_wave_t(self) -> NDArray:
        return self.grid.gradient(self.state.wave_t)

    @cached_property
    def hess_wave(self) -> NDArray:
        return self.grid.hessian(self.state.wave)


def build_geometry(state: FieldState, bg: BackgroundState) -> Geometry:
    """Metric, inverse and first derivatives of g_{μν} from the evolved fields.

    g_jk = e^{2Ω}h_jk and ∂_t g_jk = e^{2Ω}(k_jk + 2ωh_jk).
    """
    e2 = np.exp(2.0 * bg.Omega)
    w = bg.omega
    hsym = state.hsym
    khsym = state.khsym
    metric = Metric(state.g00, state.g0, e2 * hsym)

    grad = state.grid.gradient(state.wave)
    dg = np.empty((4, 4, 4, *state.grid.shape))
    dg[0, 0, 0] = state.k00
    dg[0, 0, 1:] = state.k0
    dg[0, 1:, 0] = state.k0
    dg[0, 1:, 1:] = e2 * (khsym + 2.0 * w * hsym)
    dg[1:, 0, 0] = grad[:, 0]
    dg[1:, 0, 1:] = grad[:, 1:4]
    dg[1:, 1:, 0] = grad[:, 1:4]
    for i, (a, b) in enumerate(SYM_PAIRS):
        dg[1:, 1 + a, 1 + b] = e2 * grad[:, 4 + i]
        dg[1:, 1 + b, 1 + a] = e2 * grad[:, 4 + i]

    jet = MetricJet.build(metric, dg, w, dth=e2 * khsym)
    geo = Geometry(state, bg, metric, jet)
    # reuse the gradient already taken
    geo.__dict__["grad_wave"] = grad
    return geo
