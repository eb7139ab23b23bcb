#!/usr/bin/env python3
"""Inner-integral throughput: numba kernel against the numpy fallback.

Integrates all five inner components for a batch of random (p, q) pairs with
both backends, reports wall time per pair and the largest relative
disagreement, and exits non-zero if the backends disagree beyond --rtol.
"""
import argparse
import json
import sys
import time

import numpy as np

from relzeta._inner import integrate_inner
from relzeta.checks import CANONICAL, random_momenta
from relzeta.kinematics import pair_invariants


def batch(n, seed):
    rng = np.random.default_rng(seed)
    inv = pair_invariants(random_momenta(rng, n, 50.0), random_momenta(rng, n, 50.0))
    keep = inv.g > 1e-6
    return tuple(np.asarray(x)[keep] for x in (inv.s, inv.g2, inv.l, inv.j))


def timed(pairs, cfg, backend, repeats):
    integrate_inner(tuple(x[:4] for x in pairs), cfg, backend=backend)  # warm-up / compile
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = integrate_inner(pairs, cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, out[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rtol", type=float, default=1e-12)
    args = ap.parse_args(argv)

    pairs = batch(args.pairs, args.seed)
    rows, ok = [], True
    for cfg in CANONICAL:
        t_nb, v_nb = timed(pairs, cfg, "numba", args.repeats)
        t_np, v_np = timed(pairs, cfg, "numpy", args.repeats)
        scale = np.maximum(np.abs(v_np), 1e-300)
        worst = float(np.max(np.abs(v_nb - v_np) / scale))
        ok &= worst <= args.rtol
        rows.append({"kernel": cfg.describe(), "pairs": len(pairs[0]),
                     "numba_us_per_pair": 1e6 * t_nb / len(pairs[0]),
                     "numpy_us_per_pair": 1e6 * t_np / len(pairs[0]),
                     "speedup": t_np / t_nb, "max_rel_diff": worst})
    print(json.dumps(rows, indent=2))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
