"""Time energy + gradient evaluation: compiled kernel against the numpy path.

    python3 benchmarks/bench_kernels.py [--sizes 64x8 400x16 1600x32] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from heteroclinic import _stencil
from heteroclinic.coefficients import build_coefficient
from heteroclinic.orlicz import build_truncated
from heteroclinic.potentials import build_potential
from heteroclinic.strip import Grid, StripProblem


def bench(nx, ny, repeat, rng):
    nf = build_truncated(1.0)
    V = build_potential("ginzburg-landau", -0.1, 0.1)
    prob = StripProblem(Grid.for_potential(20.0, nx, ny, V), nf, build_coefficient(1), V)
    u = rng.uniform(-0.1, 0.1, (nx, ny))
    out = {}
    for backend in ("python", "compiled"):
        if backend == "compiled" and not _stencil.compiled_available():
            continue
        _stencil.set_backend(backend)
        prob.energy_and_gradient(u)  # warm up
        t = timeit.repeat(lambda: prob.energy_and_gradient(u), number=1, repeat=repeat)
        out[backend] = (min(t), prob.energy_and_gradient(u))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", nargs="+", default=["64x8", "400x16", "1600x32"])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    initial = _stencil.get_backend()
    print(f"{'grid':>10} {'python [ms]':>12} {'compiled [ms]':>14} {'speedup':>8} {'max |dg|':>10}")
    try:
        for s in args.sizes:
            nx, ny = (int(v) for v in s.split("x"))
            r = bench(nx, ny, args.repeat, rng)
            tp = r["python"][0] * 1e3
            if "compiled" in r:
                tc = r["compiled"][0] * 1e3
                dg = np.abs(r["python"][1][1] - r["compiled"][1][1]).max()
                print(f"{s:>10} {tp:12.3f} {tc:14.3f} {tp / tc:8.1f} {dg:10.2e}")
            else:
                print(f"{s:>10} {tp:12.3f} {'n/a':>14} {'n/a':>8} {'n/a':>10}")
    finally:
        _stencil.set_backend(initial)


if __name__ == "__main__":
    main()
