"""Compare the numba and numpy backends of the hot kernels.

Each kernel is called once per backend to warm up (this also triggers JIT
compilation), then timed over ``--repeat`` calls; the best time is reported
together with the largest difference between the two outputs.

    python3 benchmarks/bench_kernels.py --n 128 --repeat 3
"""
import argparse
import json
import time

import numpy as np

from mpk import kernels
from mpk.grid import GridFunction
from mpk.metaplectic import apply_metaplectic
from mpk.symplectic import chirp_matrix, dilation, frft_matrix


def _best(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _cases(n, L, rng):
    f1 = GridFunction.from_function(lambda x: np.exp(-np.pi * (x[..., 0] - 0.3) ** 2) * (1 + 0.5j * x[..., 0]), 1, n, L)
    f2 = GridFunction.from_function(lambda x: np.exp(-np.pi * np.sum(x * x, -1)) * (1 + 0.3j * x[..., 1]), 2, n // 2, L / 2)

    pts = rng.uniform(-2, 2, size=(20_000, 2))
    yield "interp_cubic (d=2, 20k points)", lambda b: kernels.interp_cubic(
        f2.upsampled, -f2.L, f2.fine_step, pts, backend=b)

    X = rng.normal(size=(400, 1)) * 0.6
    XI = rng.normal(size=(400, 1)) * 0.6
    box = f1.support_box()
    yield "wigner_sum (d=1, 400 points)", lambda b: kernels.wigner_sum(
        f1.upsampled, f1.upsampled, -f1.L, f1.fine_step, X, XI, f1.fine_step, box, box, backend=b)

    # rank-one B in d = 2: the fiber quadrature route
    S = dilation([[1.1, 0.2], [0.0, 0.9]]) @ chirp_matrix([[0.3, 0.1], [0.1, -0.2]]) @ frft_matrix([np.pi / 2, 0.0])
    yield f"apply_metaplectic (d=2, n={n // 2}, rank B = 1)", lambda b: apply_metaplectic(S, f2, backend=b).samples


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--L", type=float, default=float(np.sqrt(32.0)))
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print one JSON object instead of a table")
    args = ap.parse_args(argv)

    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    rows = []
    for name, fn in _cases(args.n, args.L, rng):
        t_nb, out_nb = _best(lambda: fn("numba"), args.repeat)
        t_np, out_np = _best(lambda: fn("numpy"), args.repeat)
        diff = float(np.abs(out_nb - out_np).max() / max(np.abs(out_np).max(), 1e-300))
        rows.append({"kernel": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb, "rel_diff": diff})

    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'kernel':44s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s} {'rel diff':>9s}")
    for r in rows:
        print(f"{r['kernel']:44s} {r['numba_s']:10.4f} {r['numpy_s']:10.4f} {r['speedup']:8.1f} {r['rel_diff']:9.1e}")


if __name__ == "__main__":
    main()
