"""Numba vs pure-numpy timing of the two hot kernels.

    python3 benchmarks/bench_kernels.py [--config sap] [--horizon 20] [--repeats 3]

The mild-solution sweep is timed on one path of the chosen shipped config, the
Mittag-Leffler table on a dense argument grid.  Both backends are called
directly, so the FRACSAP_DISABLE_NUMBA flag does not matter here.  JIT
compilation is triggered once before timing.
"""

import argparse
import dataclasses
import time

import numpy as np

from fracsap import _kernels
from fracsap import mittag_leffler as ml
from fracsap.config import load_config, shipped
from fracsap.noise import derive_seed, sample_path
from fracsap.solver import Prepared


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_sweep(cfg_name, horizon, repeats):
    cfg = load_config(shipped(cfg_name))
    solver = dataclasses.replace(cfg.solver, horizon=horizon)
    prep = Prepared(cfg.model, solver)
    noise = sample_path(cfg.model.noise, prep.grid, derive_seed(0, 0))
    jstep = prep.jump_steps(noise)

    def run(kernel):
        def go():
            saved = _kernels.sweep
            _kernels.sweep = kernel
            try:
                X = prep.new_values()
                prep.sweep(X, X, noise, jstep)
                return X
            finally:
                _kernels.sweep = saved
        return go

    run(_kernels._sweep_numba)()
    t_nb, x_nb = best_of(run(_kernels._sweep_numba), repeats)
    t_np, x_np = best_of(run(_kernels._sweep_numpy), repeats)
    return t_nb, t_np, float(np.max(np.abs(x_nb - x_np))), prep.N


def bench_table(alpha, n, repeats):
    x = np.linspace(0.0, 200.0, n)
    edges, coefs, a, beta, kind, asym = ml.get_table(alpha).kernel_args()

    def run(kernel):
        def go():
            out = np.empty_like(x)
            kernel(x, edges, coefs, a, beta, kind, asym, out)
            return out
        return go

    run(ml._table_eval_numba)()
    t_nb, y_nb = best_of(run(ml._table_eval_numba), repeats)
    t_np, y_np = best_of(run(ml._table_eval_numpy), repeats)
    return t_nb, t_np, float(np.max(np.abs(y_nb - y_np)))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--config", default="sap")
    p.add_argument("--horizon", type=float, default=20.0)
    p.add_argument("--points", type=int, default=200_000)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args(argv)

    t_nb, t_np, diff, n = bench_sweep(args.config, args.horizon, args.repeats)
    print(f"sweep ({args.config}, {n} steps)      numba {t_nb * 1e3:9.2f} ms   numpy {t_np * 1e3:9.2f} ms"
          f"   speedup {t_np / t_nb:6.1f}x   max diff {diff:.1e}")
    t_nb, t_np, diff = bench_table(1.5, args.points, args.repeats)
    print(f"ML table ({args.points} points)   numba {t_nb * 1e3:9.2f} ms   numpy {t_np * 1e3:9.2f} ms"
          f"   speedup {t_np / t_nb:6.1f}x   max diff {diff:.1e}")


if __name__ == "__main__":
    main()
