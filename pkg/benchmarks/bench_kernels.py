"""Compare the compiled kernels with the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--n 32] [--json out.json]

Times ``fuse_gates`` on one noisy QFT gate list, ``ar1_filter`` on a long
innovation series, and a full noisy trajectory with each backend swapped in.
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from tcmps import _kernels_py, kernels
from tcmps.circuit import noisy_gate_arrays, qft_schedule, simulate_noisy
from tcmps.mps import random_mps
from tcmps.noise import OUParams, arma_from_ou, generate_trajectory

try:
    from tcmps import _kernels
except ImportError:
    _kernels = None


def best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def use_backend(mod) -> None:
    kernels.fuse_gates = mod.fuse_gates
    kernels.ar1_filter = mod.ar1_filter


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=32, help="qubits for the gate-list and trajectory cases")
    ap.add_argument("--steps", type=int, default=10**6, help="length of the AR(1) series")
    ap.add_argument("--json", help="write timings here")
    args = ap.parse_args(argv)

    backends = {"python": _kernels_py}
    if _kernels is None:
        print("compiled extension not built; timing the fallback only", file=sys.stderr)
    else:
        backends["cython"] = _kernels

    sched = qft_schedule(args.n)
    model = arma_from_ou(OUParams.from_alpha(1.0, 2.0))
    ang = generate_trajectory(model, args.n, sched.depth, 0, 0).angles
    codes, sites, angles = noisy_gate_arrays(sched, ang)
    x = np.random.default_rng(0).standard_normal(args.steps)
    state = random_mps(args.n, 4, seed=0)

    original = (kernels.fuse_gates, kernels.ar1_filter)
    rows = {}
    try:
        for name, mod in backends.items():
            use_backend(mod)
            rows[name] = {
                "fuse_gates": best(lambda: mod.fuse_gates(codes, sites, angles, args.n), args.repeat),
                "ar1_filter": best(lambda: mod.ar1_filter(x, 0.999, 0.0), args.repeat),
                "trajectory": best(lambda: simulate_noisy(sched, ang, state.copy()), max(1, args.repeat // 2)),
            }
    finally:
        kernels.fuse_gates, kernels.ar1_filter = original

    cases = ("fuse_gates", "ar1_filter", "trajectory")
    print(f"{'case':<12}" + "".join(f"{b:>12}" for b in rows) + ("     speedup" if len(rows) > 1 else ""))
    for c in cases:
        line = f"{c:<12}" + "".join(f"{rows[b][c] * 1e3:>10.2f}ms" for b in rows)
        if len(rows) > 1:
            line += f"{rows['python'][c] / rows['cython'][c]:>11.1f}x"
        print(line)
    print(f"(N = {args.n}: {len(codes)} gates incl. noise; AR(1) series of {args.steps} steps)")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"n": args.n, "steps": args.steps, "gates": int(len(codes)), "seconds": rows}, fh, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
