"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from degenwave import _backend
from degenwave.bessel import bessel_apply
from degenwave.model import Grid1D, ModelParams, Profile
from degenwave.shooter import ShooterConfig, critical_speed
from degenwave.simulator import initial_state, run


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def shooter_case(backend):
    p = ModelParams(2, chi=0.05)
    grid = Grid1D.uniform(-20, 40, 1e-3)
    x = grid.points
    prof = Profile(grid, np.where(x > 0, 1 - np.exp(-0.5 * np.maximum(x, 0)), 0.0), 0.0)
    signal = bessel_apply(prof, 1.0, p)
    cfg = ShooterConfig(backend=backend)
    return lambda: critical_speed(signal, p, config=cfg)


def pde_case(backend):
    p = ModelParams(2, chi=0.05)
    s0 = initial_state(p, -30, 5, 0.05)
    return lambda: run(p, s0, 2.0, margin=5.0, backend=backend)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    try:
        _backend.get("compiled")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run pip install -e . --no-build-isolation")
    print(f"{'case':<28}{'compiled [s]':>14}{'python [s]':>14}{'speedup':>10}")
    for label, case in (("critical speed (bisection)", shooter_case),
                        ("PDE run, T=2, h=0.05", pde_case)):
        tc = best_of(case("compiled"), args.repeat)
        tp = best_of(case("python"), args.repeat)
        print(f"{label:<28}{tc:>14.3f}{tp:>14.3f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
