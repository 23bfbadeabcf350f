"""Benchmark the compiled kernels against the numpy fallback.

Both implementations are imported side by side, so no environment variable
is needed here; NBPACK_PURE_PYTHON only matters for the import-time backend
selection in nbpack._backend. Run as:

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from nbpack import Family, SetFunction
from nbpack import _kernels_py as pure
from nbpack.setfn import popcount

try:
    from nbpack import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def random_profile(n: int, width: int, masks: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    q = np.zeros((n, width))
    for i in range(n):
        support = (masks & (1 << i)) != 0
        raw = rng.random(int(support.sum()))
        q[i, support] = raw / raw.sum()
    return q


def build_cases(rng: np.random.Generator):
    cases = []

    n = 16
    table = rng.standard_normal(1 << n)
    table[0] = 0.0
    cases.append(("mobius_dense  n=16", "mobius_dense", (table, n)))
    cases.append(("zeta_dense    n=16", "zeta_dense", (table, n)))

    n = 8
    table8 = rng.random(1 << n)
    table8[0] = 0.0
    mu8 = pure.mobius_dense(table8, n)
    q8 = random_profile(n, 1 << n, np.arange(1 << n), rng)
    cases.append(("worth_dense   n=8", "worth_dense", (q8, mu8)))
    cases.append(("grad_dense    n=8", "grad_dense", (q8, mu8)))

    n = 16
    pool = [m for m in range(1, 1 << n) if popcount(m) >= 2]
    picks = rng.choice(len(pool), size=300, replace=False)
    fam = Family.closed(n, [pool[int(p)] for p in picks])
    weights = {m: float(rng.random()) for m in fam.members if m != 0}
    w = SetFunction.over_family(fam, weights)
    mu = w.mobius()
    qf = random_profile(n, len(fam), fam.masks_array(), rng)
    args = (qf, mu, fam.sub_ptr, fam.sub_idx, fam.elem_ptr, fam.elem_idx)
    cases.append(("worth_family  |F|=317 n=16", "worth_family", args))
    cases.append(("grad_family   |F|=317 n=16", "grad_family", args))
    return cases


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    opts = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = build_cases(rng)

    print(f"{'kernel':<28} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for label, name, args in cases:
        t_pure = best_of(getattr(pure, name), args, opts.repeat)
        if compiled is None:
            print(f"{label:<28} {t_pure * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>8}")
            continue
        t_comp = best_of(getattr(compiled, name), args, opts.repeat)
        out_p = getattr(pure, name)(*args)
        out_c = getattr(compiled, name)(*args)
        assert np.allclose(out_p, out_c, atol=1e-10), f"{name} outputs differ"
        print(f"{label:<28} {t_pure * 1e3:>10.3f}ms {t_comp * 1e3:>10.3f}ms"
              f" {t_pure / t_comp:>7.1f}x")


if __name__ == "__main__":
    main()
