"""FLRW background: scale factor, Ω = ln a, ω = ȧ/a and ω̇.

The simulator uses the closed form everywhere. The ODE integrator is kept as an
independent cross-check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.integrate import solve_ivp

from .error import StepTooLarge

logger = logging.getLogger(__name__)

__all__ = [
    "CosmologyParams",
    "BackgroundState",
    "background_closed_form",
    "background_ode_integrate",
    "background_bounds_check",
    "omega_decay_constant",
    "flrw_background",
]


@dataclass(frozen=True)
class CosmologyParams:
    """Cosmological constant Λ and initial rescaled dust density ϱ̄.

    Λ = 0 is admitted only so that constraint evaluators can be pointed at
    Minkowski slices; every background function requires Λ > 0.
    """

    Lambda: float
    rho_bar: float = 0.0

    def __post_init__(self):
        if not (self.Lambda >= 0.0 and math.isfinite(self.Lambda)):
            raise ValueError(f"Lambda must be finite and >= 0, got {self.Lambda!r}")
        if not (self.rho_bar >= 0.0 and math.isfinite(self.rho_bar)):
            raise ValueError(f"rho_bar must be finite and >= 0, got {self.rho_bar!r}")

    @property
    def H(self) -> float:
        return math.sqrt(self.Lambda / 3.0)

    @property
    def omega_max(self) -> float:
        """Upper bound sqrt(H² + ϱ̄/3), attained at t = 0."""
        return math.sqrt(self.H**2 + self.rho_bar / 3.0)


@dataclass(frozen=True)
class BackgroundState:
    t: float
    a: float
    Omega: float
    omega: float
    omega_dot: float


def _require_expanding(params: CosmologyParams) -> float:
    H = params.H
    if H <= 0.0:
        raise ValueError("background quantities need Lambda > 0")
    return H


def _state_from_omega(params: CosmologyParams, t: float, Omega: float) -> BackgroundState:
    H = params.H
    dust = params.rho_bar * math.exp(-3.0 * Omega)
    return BackgroundState(
        t=t,
        a=math.exp(Omega),
        Omega=Omega,
        omega=math.sqrt(H * H + dust / 3.0),
        omega_dot=-0.5 * dust,
    )


def background_closed_form(params: CosmologyParams, t: float) -> BackgroundState:
    """Evaluate a(t) = {sinh(3Ht/2)·s + cosh(3Ht/2)}^{2/3}, s = sqrt(ϱ̄/(3H²)+1).

    The bracket is rewritten as ½e^x[(s+1) − (s−1)e^{−2x}] with x = 3Ht/2 and
    evaluated in log space, so Ω stays finite long after e^x overflows.
    """
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    H = _require_expanding(params)
    s = math.sqrt(params.rho_bar / (3.0 * H * H) + 1.0)
    x = 1.5 * H * t
    inner = 0.5 * (s + 1.0) - 0.5 * (s - 1.0) * math.exp(-2.0 * x)
    Omega = (2.0 / 3.0) * (x + math.log(inner))
    if t == 0.0:
        Omega = 0.0
    return _state_from_omega(params, float(t), Omega)


def flrw_background(params: CosmologyParams):
    """Background provider t -> BackgroundState used by the time stepper."""

    def provider(t: float) -> BackgroundState:
        return background_closed_form(params, t)

    return provider


def background_ode_integrate(
    params: CosmologyParams,
    t_final: float,
    dt: float,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> list[BackgroundState]:
    """Integrate the Friedmann equation from a(0) = 1 and sample every ``dt``.

    The unknown is Ω = ln a, for which da/dt = a·sqrt(Λ/3 + ϱ̄/(3a³)) reads
    dΩ/dt = sqrt(H² + ϱ̄e^{−3Ω}/3). The integrator is DOP853 with its step
    capped at ``dt``.
    """
    if t_final <= 0.0 or dt <= 0.0:
        raise ValueError("t_final and dt must be positive")
    H = _require_expanding(params)
    rho_bar = params.rho_bar

    def rate(_t, y):
        return [math.sqrt(H * H + rho_bar * math.exp(-3.0 * y[0]) / 3.0)]

    steps = int(round(t_final / dt))
    t_eval = np.minimum(np.arange(steps + 1) * dt, t_final)
    t_eval[-1] = t_final
    sol = solve_ivp(
        rate,
        (0.0, t_final),
        [0.0],
        method="DOP853",
        t_eval=t_eval,
        max_step=dt,
        first_step=min(dt, t_final),
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise StepTooLarge(f"background integration failed: {sol.message}")
    logger.debug("background ODE: %d evaluations over [0, %g]", sol.nfev, t_final)
    return [_state_from_omega(params, float(t), float(y)) for t, y in zip(sol.t, sol.y[0])]


def background_bounds_check(params: CosmologyParams, state: BackgroundState, rtol: float = 1e-12) -> bool:
    """True iff 2^{-2/3}e^{Ht} ≤ a ≤ A e^{Ht} and H ≤ ω ≤ sqrt(H²+ϱ̄/3)."""
    H = _require_expanding(params)
    if not state.a > 0.0:
        return False
    s = math.sqrt(params.rho_bar / (3.0 * H * H) + 1.0)
    log_a = math.log(state.a)
    log_lower = (2.0 / 3.0) * math.log(0.5) + H * state.t
    log_upper = (2.0 / 3.0) * math.log(0.5 * (s + 1.0)) + H * state.t
    slack = rtol * max(1.0, abs(log_a))
    if not (log_lower - slack <= log_a <= log_upper + slack):
        return False
    return H * (1.0 - rtol) <= state.omega <= params.omega_max * (1.0 + rtol)


def omega_decay_constant(params: CosmologyParams, times: Iterable[float]) -> float:
    """Smallest C̃ with |ω(t) − H| ≤ C̃e^{−3Ht} on the sampled times."""
    H = _require_expanding(params)
    c = 0.0
    for t in times:
        bg = background_closed_form(params, t)
        gap = abs(bg.omega - H)
        if gap > 0.0:
            c = max(c, math.exp(math.log(gap) + 3.0 * H * t))
    return c
