"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs the three hot kernels on identical inputs under both backends and
reports wall times and speedups, plus an end-to-end bootstrap timing.
Results are identical bit-for-bit by contract; this measures speed only.

Usage: python3 benchmarks/bench_kernels.py [--n 200000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from trialengage._kernels import _fallback
from trialengage.data import CompositeDataset
from trialengage.estimators import bootstrap_ci, point_estimator
from trialengage.scm import baseline_spec, generate, to_composite, unit_uniforms

try:
    from trialengage._kernels import _core
except ImportError:
    _core = None


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_simulate(impl, spec, n, repeats):
    un = unit_uniforms(17, 0, n)
    args = (un, spec.x_cdf, np.asarray(spec.u_given_x, dtype=np.float64),
            spec.p_v, spec.v_block is not None, spec.ps_table, spec.e_trial,
            spec.pa_table, spec.means, spec.delta_v,
            spec.coupling == "shared-latent")
    return best_of(repeats, impl.simulate_columns, *args)


def bench_counts(impl, data: CompositeDataset, repeats):
    cells, codes = data.cells()
    return best_of(repeats, impl.cell_counts, codes, data.s, data.a, data.y,
                   data.control, len(cells))


def bench_resample(impl, data: CompositeDataset, repeats):
    cells, codes = data.cells()
    idx = np.random.default_rng(3).integers(0, data.n, data.n)
    return best_of(repeats, impl.resampled_cell_counts, codes, data.s,
                   data.a, data.y, data.control, idx, len(cells))


def bench_bootstrap(data: CompositeDataset, repeats):
    est = point_estimator("om_all")

    def run():
        bootstrap_ci(data, est, n_replicates=500, level=0.95, seed=11)

    return best_of(repeats, run)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200_000,
                        help="units for the simulation kernels")
    parser.add_argument("--repeats", type=int, default=5,
                        help="take the best of this many runs")
    args = parser.parse_args()

    spec = baseline_spec()
    data = to_composite(generate(spec, args.n, seed=17))

    rows = [
        ("simulate_columns", bench_simulate, (spec, args.n, args.repeats)),
        ("cell_counts", bench_counts, (data, args.repeats)),
        ("resampled_cell_counts", bench_resample, (data, args.repeats)),
    ]
    print(f"n = {args.n}, best of {args.repeats}")
    print(f"{'kernel':<24}{'python':>12}{'compiled':>12}{'speedup':>9}")
    for name, fn, fn_args in rows:
        t_py = fn(_fallback, *fn_args)
        if _core is None:
            print(f"{name:<24}{t_py * 1e3:>10.2f}ms{'-':>12}{'-':>9}")
            continue
        t_c = fn(_core, *fn_args)
        print(f"{name:<24}{t_py * 1e3:>10.2f}ms{t_c * 1e3:>10.2f}ms"
              f"{t_py / t_c:>8.1f}x")

    t_boot = bench_bootstrap(data, max(1, args.repeats // 2))
    backend = "compiled" if _core is not None else "python"
    print(f"\nbootstrap_ci B=500 on n={args.n} ({backend} active backend): "
          f"{t_boot:.2f}s")


if __name__ == "__main__":
    main()
