"""Single Fourier modes under the numerically linearized reduced system.

A mode is the real field Re(A e^{ik·x}) for a complex amplitude vector A with
one entry per evolved field. At FLRW the linearized system is translation
invariant, so a mode stays a mode and only A evolves. The linearization is the
central difference of the full nonlinear right-hand side on the smallest grid
that resolves k.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from .background import BackgroundState, CosmologyParams, background_closed_form
from .error import ToleranceNotMet
from .grid import Grid3
from .initial_data import Mode, PerturbationSpec, initial_state
from .rhs import assemble_rates
from .state import FIELD_NAMES, NFIELDS, FieldState, flrw_vector

logger = logging.getLogger(__name__)

__all__ = [
    "ModeState",
    "ModeSeries",
    "oracle_grid",
    "mode_field",
    "project_mode",
    "consistent_mode",
    "jacobian_action",
    "evolve_mode",
]


@dataclass(frozen=True, eq=False)
class ModeState:
    """Complex amplitudes of the 24 perturbation fields on one wavevector.

    For k = 0 only the real parts are meaningful.
    """

    wavevector: tuple[int, int, int]
    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (NFIELDS,):
            raise ValueError(f"mode amplitudes must have shape ({NFIELDS},), got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "wavevector", tuple(int(k) for k in self.wavevector))

    @classmethod
    def single(cls, wavevector, field: str, amplitude: complex) -> "ModeState":
        amps = np.zeros(NFIELDS, dtype=complex)
        amps[FIELD_NAMES.index(field)] = amplitude
        return cls(tuple(wavevector), amps)

    @property
    def is_homogeneous(self) -> bool:
        return not any(self.wavevector)

    def __getitem__(self, field: str) -> complex:
        return complex(self.amplitudes[FIELD_NAMES.index(field)])


@dataclass(frozen=True, eq=False)
class ModeSeries:
    wavevector: tuple[int, int, int]
    times: NDArray[np.float64]
    amplitudes: NDArray[np.complex128]
    """amplitudes[i, f] at times[i]."""

    def field(self, name: str) -> NDArray[np.complex128]:
        return self.amplitudes[:, FIELD_NAMES.index(name)]

    def at(self, i: int) -> ModeState:
        return ModeState(self.wavevector, self.amplitudes[i])


def oracle_grid(wavevector) -> Grid3:
    """Smallest power-of-two grid (at least 8) whose dealias band contains k."""
    kmax = max(abs(int(k)) for k in wavevector)
    n = 8
    while n // 3 < kmax:
        n *= 2
    return Grid3(n)


def mode_field(mode: ModeState, grid: Grid3) -> NDArray[np.float64]:
    """Re(A e^{ik·x}) = Re(A)cos(k·x) − Im(A)sin(k·x), shape (24, n, n, n)."""
    cos = grid.mode(mode.wavevector)
    if mode.is_homogeneous:
        return mode.amplitudes.real[:, None, None, None] * cos
    minus_sin = grid.mode(mode.wavevector, 0.5 * np.pi)
    a = mode.amplitudes
    return a.real[:, None, None, None] * cos + a.imag[:, None, None, None] * minus_sin


def project_mode(field: NDArray[np.float64], grid: Grid3, wavevector) -> ModeState:
    """Inverse of :func:`mode_field` on the e^{ik·x} component of ``field``."""
    k = np.asarray(wavevector, dtype=float).reshape(3, 1, 1, 1)
    phase = np.exp(-1j * np.sum(k * grid.coords, axis=0))
    c = np.mean(field * phase, axis=(-3, -2, -1))
    if not any(int(x) for x in wavevector):
        return ModeState(tuple(wavevector), c.real.astype(complex))
    return ModeState(tuple(wavevector), 2.0 * c)


def consistent_mode(
    params: CosmologyParams,
    wavevector,
    component: str,
    amplitude: float,
    phase: float = 0.0,
) -> ModeState:
    """The mode carried by gauge-consistent perturbed-FLRW data of one geometric component.

    ``component`` is one of ``initial_data.PERTURBABLE``.
    """
    grid = oracle_grid(wavevector)
    spec = PerturbationSpec(amplitude=amplitude, modes=(Mode(tuple(wavevector), component, phase),))
    state = initial_state(params, spec, grid)
    return project_mode(state.perturbation(params), grid, wavevector)


def jacobian_action(
    params: CosmologyParams,
    bg: BackgroundState,
    mode: ModeState,
    eps: float = 1e-6,
) -> ModeState:
    """(R(FLRW + εδ) − R(FLRW − εδ))/(2ε) projected back onto the mode.

    δ is the mode rescaled so its largest amplitude is 1; the result is scaled
    back, so the action is linear in ``mode.amplitudes``.
    """
    scale = float(np.max(np.abs(mode.amplitudes)))
    if scale == 0.0:
        return ModeState(mode.wavevector, np.zeros(NFIELDS, dtype=complex))
    grid = oracle_grid(mode.wavevector)
    base = np.broadcast_to(flrw_vector(params)[:, None, None, None], (NFIELDS, *grid.shape))
    delta = mode_field(ModeState(mode.wavevector, mode.amplitudes / scale), grid)

    def rates(sign: float) -> NDArray[np.float64]:
        state = FieldState(bg.t, base + sign * eps * delta, grid)
        return assemble_rates(state, bg, params).data

    diff = (rates(1.0) - rates(-1.0)) * (scale / (2.0 * eps))
    return project_mode(diff, grid, mode.wavevector)


def _pack(amps: NDArray[np.complex128]) -> NDArray[np.float64]:
    return np.concatenate([amps.real, amps.imag])


def _unpack(y: NDArray[np.float64]) -> NDArray[np.complex128]:
    return y[:NFIELDS] + 1j * y[NFIELDS:]


def evolve_mode(
    params: CosmologyParams,
    mode0: ModeState,
    t_final: float,
    t_eval=None,
    *,
    t0: float = 0.0,
    rtol: float = 1e-10,
    atol: float = 1e-16,
    eps: float = 1e-6,
) -> ModeSeries:
    """Integrate dA/dt = J(t)A with DOP853, the background taken from the closed form.

    Raises :class:`ToleranceNotMet` when the integrator fails.
    """
    if not t_final > t0:
        raise ValueError(f"t_final must exceed {t0}, got {t_final!r}")
    k = mode0.wavevector

    def f(t: float, y: NDArray[np.float64]) -> NDArray[np.float64]:
        bg = background_closed_form(params, t)
        return _pack(jacobian_action(params, bg, ModeState(k, _unpack(y)), eps).amplitudes)

    scale = max(float(np.max(np.abs(mode0.amplitudes))), 1e-300)
    sol = solve_ivp(
        f,
        (t0, t_final),
        _pack(mode0.amplitudes),
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol * scale,
    )
    if sol.status != 0:
        raise ToleranceNotMet(f"linear mode integration failed at rtol={rtol}: {sol.message}")
    logger.debug("mode %s integrated to t=%g in %d evaluations", k, t_final, sol.nfev)
    amps = np.array([_unpack(col) for col in sol.y.T])
    return ModeSeries(k, np.asarray(sol.t), amps)
