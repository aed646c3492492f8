import time

import numpy as np

from flrw_dust.background import CosmologyParams, background_closed_form, flrw_background
from flrw_dust.diagnostics import NormConfig
from flrw_dust.evolution import StepperConfig, sample, step
from flrw_dust.grid import Grid3
from flrw_dust.initial_data import PerturbationSpec, initial_state
from flrw_dust.rhs import assemble_rates

PARAMS = CosmologyParams(3.0, 1.0)
SIZES = [16, 32, 64]


# --- Setup Helpers -----------------------------------------------------------


def make_state(n):
    """Perturbed FLRW data with a few random modes on an n^3 grid"""
    return initial_state(PARAMS, PerturbationSpec(amplitude=1e-3, seed=1, random_modes=8), Grid3(n))


def timed(fn, repeat=5):
    """Best wall time of ``repeat`` calls, in milliseconds"""
    best = np.inf
    for _ in range(repeat):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return 1e3 * best


# --- Kernels -----------------------------------------------------------------


def bench_rates(state):
    bg = background_closed_form(PARAMS, state.t)
    return timed(lambda: assemble_rates(state, bg, PARAMS))


def bench_step(state):
    provider = flrw_background(PARAMS)
    cfg = StepperConfig(0.01, 1.0, 1.0)
    return timed(lambda: step(state, provider, PARAMS, cfg, 0.01))


def bench_sample(state):
    bg = background_closed_form(PARAMS, state.t)
    return timed(lambda: sample(state, bg, PARAMS, NormConfig(), 0), repeat=3)


# --- Main --------------------------------------------------------------------


def main():
    print(f"{'n':>4} {'rates [ms]':>12} {'RK4 step [ms]':>14} {'sample [ms]':>12}")
    for n in SIZES:
        state = make_state(n)
        print(f"{n:>4} {bench_rates(state):>12.1f} {bench_step(state):>14.1f} {bench_sample(state):>12.1f}")


if __name__ == "__main__":
    main()
