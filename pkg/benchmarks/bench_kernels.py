"""Compare the compiled and pure-Python kernels on the coin game.

    python3 benchmarks/bench_kernels.py --n 400 --repeat 3
"""

import argparse
import time
import warnings

import numpy as np

from pcfpkit import _kernels_py, kernels, solver
from pcfpkit.benchmarks import COIN_PROPERTY, gen_coin
from pcfpkit.frontend import parse_model, parse_property
from pcfpkit.pcfp import IllFormedWarning, build_semantics, mark_goal_states


def coin_model(n):
    p = parse_model(gen_coin(n))
    g = parse_property(COIN_PROPERTY, p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllFormedWarning)
        m = build_semantics(p)
    return mark_goal_states(m, g, p.consts)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400, help="coin game constant N (even)")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--eps", type=float, default=1e-8)
    args = ap.parse_args()

    m = coin_model(args.n)
    csr = solver.to_csr(m)
    goal = np.asarray(m.goal, dtype=bool)
    positive = solver.can_reach(m, goal)
    fixed = (goal | ~positive).astype(np.uint8)
    x0 = np.where(goal, 1.0, 0.0)
    succ = [sorted({t for _, d in acts for _, t in d}) for acts in m.choices]
    rptr, rcols = solver._reverse_csr(succ, m.num_states)
    start = goal.astype(np.uint8)

    backends = {"python": _kernels_py}
    if kernels.compiled_available():
        from pcfpkit import _kernels

        backends["compiled"] = _kernels
    print(f"coin N={args.n}: {m.num_states} states")
    print(f"{'kernel':<20}{'backend':<10}{'time [s]':>12}{'iterations':>12}")
    results = {}
    for name, mod in backends.items():
        t, (it, _) = best_of(lambda: mod.value_iteration(*csr, x0.copy(), fixed, True, args.eps, 10_000_000), args.repeat)
        results.setdefault("value_iteration", {})[name] = t
        print(f"{'value_iteration':<20}{name:<10}{t:>12.4f}{it:>12}")
        t, _ = best_of(lambda: mod.backward_reachable(rptr, rcols, start), args.repeat)
        results.setdefault("backward_reachable", {})[name] = t
        print(f"{'backward_reachable':<20}{name:<10}{t:>12.4f}{'':>12}")
    if "compiled" in backends:
        for k, r in results.items():
            print(f"speed-up {k}: {r['python'] / r['compiled']:.1f}x")


if __name__ == "__main__":
    main()
