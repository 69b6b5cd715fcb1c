"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--sizes 64 256 1024] [--repeat 3] [--json out.json]

Inputs are Schreier graphs of lamplighter and torus quotients, so the
numbers reflect the shapes the solvers see.  The first numba call of each
kernel is excluded (compilation is cached on disk after that).
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from boxdim import kernels
from boxdim.groups import FreeAbelian, MarkedGroup, WreathLamp
from boxdim.quotients import build_quotient, congruence_spec, wreath_level_spec


def inputs(size: int):
    if size <= 0:
        raise ValueError("size must be positive")
    side = max(2, int(round(size**0.5)))
    Q = build_quotient(congruence_spec(MarkedGroup(FreeAbelian(2)), side))
    yield f"torus {side}x{side}", Q
    n = 1
    while n * 2**n < size:
        n += 1
    yield f"lamplighter W[{n}]", build_quotient(wreath_level_spec(MarkedGroup(WreathLamp(2)), n))


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(Q):
    nbr, wts = Q.nbr, Q.wts
    dist = Q.space.dist
    rng = np.random.default_rng(0)
    members = [np.sort(rng.choice(Q.n, size=min(Q.n, 8), replace=False)) for _ in range(max(1, Q.n // 4))]
    ptr = np.zeros(len(members) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(m) for m in members])
    idx = np.concatenate(members).astype(np.int64)
    mask = np.ones(Q.n, dtype=bool)
    thr = int(2 * Q.scale)
    return {
        "apsp_schreier": ((nbr, wts), kernels._nb_apsp_schreier, kernels._np_apsp_schreier),
        "member_diameters": ((dist, ptr, idx), kernels._nb_member_diameters, kernels._np_member_diameters),
        "threshold_components": ((dist, thr, mask), kernels._nb_threshold_components, kernels._np_threshold_components),
        "metric_violations": ((dist,), kernels._nb_metric_violations, kernels._np_metric_violations),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 256, 1024])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write the rows here as JSON")
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba is disabled or missing; both columns would time the same code")
    rows = []
    print(f"{'input':<22}{'n':>6}  {'kernel':<22}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for size in args.sizes:
        for label, Q in inputs(size):
            for name, (a, nb, npf) in cases(Q).items():
                if name == "metric_violations" and Q.n > 1100:
                    continue  # cubic; the numpy side takes minutes
                ref = npf(*a)
                got = nb(*a)  # also compiles
                if not np.array_equal(np.asarray(ref), np.asarray(got)):
                    raise SystemExit(f"{name} disagrees on {label}")
                t_nb = best_of(lambda: nb(*a), args.repeat)
                t_np = best_of(lambda: npf(*a), args.repeat)
                rows.append({"input": label, "n": Q.n, "kernel": name, "numba": t_nb, "numpy": t_np})
                print(f"{label:<22}{Q.n:>6}  {name:<22}{t_nb:>10.4f}{t_np:>10.4f}{t_np / max(t_nb, 1e-9):>8.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
