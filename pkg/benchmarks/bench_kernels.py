"""Numba kernels against their numpy twins, plus a whole run under each backend.

    python benchmarks/bench_kernels.py [--sizes 256 4096 65536] [--repeat 200]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from ostrovsky import kernels

RUN_SCRIPT = """
import json, math, time
from ostrovsky import _accel
from ostrovsky.evolution import SolverConfig, prepare_initial_data, run
from ostrovsky.flux import burgers_flux
from ostrovsky.grid import make_grid
u0, _ = prepare_initial_data("sine", make_grid(math.pi, {N}))
cfg = SolverConfig(dt=1e-3, t_end=0.2)
run(u0, cfg, burgers_flux())  # warm-up (and jit)
t0 = time.perf_counter()
run(u0, cfg, burgers_flux())
print(json.dumps([_accel.backend_name(), time.perf_counter() - t0]))
"""


def cases(n, rng):
    m = n // 2 + 1
    c = [rng.standard_normal(m) + 1j * rng.standard_normal(m) for _ in range(9)]
    s = rng.standard_normal(n)
    return {
        "etd_stage": c[:4],
        "etd_stage_c": c[:5],
        "etd_combine": c,
        "cumulative_trapezoid": (s, 0.01),
        "periodic_backward_sweep": (s, 0.97),
        "splitmix64_uniform": (np.uint64(7), n),
    }


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'N':>8}{'numba us':>12}{'numpy us':>12}{'ratio':>8}")
    for n in sizes:
        for name, args in cases(n, rng).items():
            fa = getattr(kernels, name + "_numba")
            fb = getattr(kernels, name + "_numpy")
            fa(*args)  # compile outside the timing
            ta = min(timeit.repeat(lambda: fa(*args), number=repeat, repeat=3)) / repeat
            tb = min(timeit.repeat(lambda: fb(*args), number=repeat, repeat=3)) / repeat
            print(f"{name:<26}{n:>8}{ta * 1e6:>12.2f}{tb * 1e6:>12.2f}{tb / ta:>8.2f}")


def bench_runs(sizes):
    print(f"\n{'whole run (200 steps)':<26}{'N':>8}{'numba s':>12}{'numpy s':>12}")
    for n in sizes:
        out = {}
        for flag in ("0", "1"):
            env = dict(os.environ, OSTROVSKY_DISABLE_NUMBA=flag)
            res = subprocess.run([sys.executable, "-c", RUN_SCRIPT.format(N=n)], env=env,
                                 capture_output=True, text=True, check=True)
            name, seconds = json.loads(res.stdout)
            out[name] = seconds
        print(f"{'':<26}{n:>8}{out['numba']:>12.3f}{out['numpy']:>12.3f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 4096, 65536])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    bench_kernels(args.sizes, args.repeat)
    bench_runs(args.sizes[:2])


if __name__ == "__main__":
    main()
