"""Time each hot kernel on its numba and numpy paths.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-``repeat`` wall time per call and the speedup; the first
(compiling) numba call is excluded.
"""
import argparse
import timeit

import numpy as np

from bgkbaro import kernels
from bgkbaro.equilibrium import make_regime
from bgkbaro.grid import PhaseGrid


def cases():
    rng = np.random.default_rng(0)
    grid = PhaseGrid(1, 1.0, 256, 2.0, 256)
    g = rng.random((256, 1, 256))
    shifts = 0.9 * grid.v_centers / grid.Vmax  # v dt / dx at CFL 0.9
    yield "shift_columns 256x256", kernels.shift_columns_nb, kernels.shift_columns_np, (g, shifts)

    vals = rng.random((256, 256))
    yield "moments 256x256", kernels.moments_nb, kernels.moments_np, (vals, grid.vel_points, grid.v2_flat)

    conv = rng.random((256, 256))
    weights = rng.random(13)
    yield "convolve_periodic 256x256 w13", kernels.convolve_periodic_nb, kernels.convolve_periodic_np, (conv, weights)

    regime = make_regime(1, 5.0 / 3.0)
    rho = rng.uniform(0.5, 1.5, 256)
    u = rng.uniform(-0.3, 0.3, (256, 1))
    eq_args = (rho, u, rho, rho[:, None] * u, grid.vel_points, grid.dvvol, False, 0.0, regime.c,
               regime.n / 2.0, regime.gamma, 1, (1.5 * grid.dv) ** 2)
    yield "sample_equilibrium 256x256", kernels.sample_equilibrium_nb, kernels.sample_equilibrium_np, eq_args

    pair = (2, 1.1, 0.9, 0.2, 0.0, 0.7, False, regime.c, 1.0, kernels.COS_FRAC, kernels.COS_JAC,
            kernels.COS_FRAC_OUT, kernels.COS_JAC_OUT)
    yield "l12_pair 2D", kernels.l12_pair_nb, kernels.l12_pair_np, pair


def best(fn, args, repeat):
    number = 5
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    print(f"{'kernel':32s} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8}")
    for name, nb, np_, fargs in cases():
        nb(*fargs)  # compile
        t_nb, t_np = best(nb, fargs, args.repeat), best(np_, fargs, args.repeat)
        print(f"{name:32s} {1e3 * t_nb:11.3f} {1e3 * t_np:11.3f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
