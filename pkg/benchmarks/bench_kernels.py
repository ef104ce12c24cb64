"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from holderlab.flux import FluxModel
from holderlab.kernels import compiled_kernels, python_kernels


def cases(rng):
    pp, pm = FluxModel.burgers(2).eo_parts(0)
    u = rng.uniform(0.1, 0.9, (256, 256))
    eo = (u, 0.4, pp.x, pp.c, pm.c)
    ua, ub = rng.uniform(0, 1, 200_000), rng.uniform(0, 1, 200_000)
    w = rng.uniform(0, 1e-3, 200_000)
    levels = np.linspace(0.005, 0.995, 100)
    return {
        "eo_sweep 256x256": ("eo_sweep", eo),
        "superlevel_sum 2e5 x 100": ("superlevel_sum", (ua, ub, w, levels)),
        "hypograph_sum 2e5": ("hypograph_sum", (ua, ub, w, 0.3, 0.1)),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if compiled_kernels is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s} {'max diff':>10s}")
    for label, (name, a) in cases(rng).items():
        fp, fc = getattr(python_kernels, name), getattr(compiled_kernels, name)
        tp = min(timeit.repeat(lambda: fp(*a), number=1, repeat=args.repeat)) * 1e3
        tc = min(timeit.repeat(lambda: fc(*a), number=1, repeat=args.repeat)) * 1e3
        diff = np.max(np.abs(np.asarray(fp(*a)) - np.asarray(fc(*a))))
        print(f"{label:28s} {tp:12.2f} {tc:12.2f} {tp / tc:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
