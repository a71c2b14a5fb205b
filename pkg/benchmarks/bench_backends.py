#!/usr/bin/env python3
"""Benchmark the compiled reservoir kernel against the Python fallback.

Times a single step-with-measurement and a teacher-forced chain for both
Hilbert-space sizes used by the shipped presets, e.g.::

    python benchmarks/bench_backends.py --steps 500 --repeat 5
"""

import argparse
import time

import numpy as np

from qrchaos import _core
from qrchaos._core import _fallback
from qrchaos.reservoir import amplitude_encode
from qrchaos.tomography import OperatorBasis


def make_case(rng, n, d, steps):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    s_stack = np.stack(
        [amplitude_encode(rng.normal(size=3), d) for _ in range(steps)]
    )
    h0_stack = rng.normal(size=(steps, n, n)) * 5.0
    h0_stack = h0_stack + h0_stack.transpose(0, 2, 1)
    return rho, s_stack, h0_stack, OperatorBasis.build(n).operators


def time_call(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=500,
                        help="chain length per measurement")
    parser.add_argument("--repeat", type=int, default=5,
                        help="repetitions; best time is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = [("python", _fallback)]
    if _core.compiled_backend is not None:
        backends.append(("compiled", _core.compiled_backend))
    else:
        print("compiled backend not built; timing the fallback only")

    rng = np.random.default_rng(args.seed)
    print(f"{'case':<24}" + "".join(f"{name:>14}" for name, _ in backends)
          + f"{'speedup':>10}")
    for n in (8, 16):
        rho, s_stack, h0_stack, ops = make_case(rng, n, 4, args.steps)
        rows = {
            f"step N={n}": lambda b: lambda: b.step_with_measure(
                rho, s_stack[0], h0_stack[0], 1.0, 0.025, ops
            ),
            f"chain x{args.steps} N={n}": lambda b: lambda: b.chain_teacher(
                rho, s_stack, h0_stack, 1.0, 0.025, ops
            ),
        }
        for label, build in rows.items():
            times = [time_call(build(mod), args.repeat) for _, mod in backends]
            line = f"{label:<24}" + "".join(f"{t * 1e3:>12.2f}ms" for t in times)
            if len(times) == 2:
                line += f"{times[0] / times[1]:>9.1f}x"
            print(line)


if __name__ == "__main__":
    main()
