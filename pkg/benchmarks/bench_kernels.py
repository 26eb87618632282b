"""Time the numba and pure-numpy kernel paths on acquisition-sized inputs.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Shapes mirror one GA generation of the multi-surrogate acquisition: 50
candidates, 2 objectives, 1000 samples for the Gumbel fit and 1000 Monte
Carlo draws.  Both paths are checked for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from rmbo import _kernels as K


def _inputs(rng, batch, m, n_fit, n_mc, n_train, dim):
    means = rng.normal(size=(batch, m))
    stds = rng.uniform(0.05, 1.0, (batch, m))
    z = rng.standard_normal((n_fit, m))
    samples = K.max_gaussian_np(means, stds, z)
    loc = rng.normal(size=batch)
    scale = rng.uniform(0.1, 1.0, batch)
    best = np.full(batch, 0.2)
    base = rng.gumbel(size=n_mc)
    X1 = rng.random((batch, dim))
    X2 = rng.random((n_train, dim))
    ls = rng.uniform(0.2, 1.0, dim)
    return {
        "max_gaussian": (means, stds, z),
        "gumbel_fit": (samples,),
        "ei_gumbel": (loc, scale, best, base),
        "scaled_sqdist": (X1, X2, ls),
    }


def _check(name, a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-8, atol=1e-12, err_msg=name)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--batch", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not K.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1

    data = _inputs(np.random.default_rng(args.seed), args.batch, 2, 1000, 1000, 150, 5)
    print(f"{'kernel':<15}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, inp in data.items():
        f_np = getattr(K, f"{name}_np")
        f_nb = getattr(K, f"{name}_nb")
        _check(name, f_np(*inp), f_nb(*inp))  # also triggers compilation
        t_np = min(timeit.repeat(lambda: f_np(*inp), number=10, repeat=args.repeat)) / 10
        t_nb = min(timeit.repeat(lambda: f_nb(*inp), number=10, repeat=args.repeat)) / 10
        print(f"{name:<15}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
