"""Pure-Python versions of the compiled kernels (same arithmetic order)."""

from __future__ import annotations

import numpy as np


def value_iteration(state_ptr, choice_ptr, cols, probs, x, fixed, maximize, eps, max_iter):
    n = len(x)
    sp = state_ptr.tolist()
    cp = choice_ptr.tolist()
    cl = cols.tolist()
    pr = probs.tolist()
    fx = fixed.tolist()
    xs = x.tolist()
    it = 0
    delta = 0.0
    while it < max_iter:
        it += 1
        delta = 0.0
        for s in range(n):
            if fx[s] or sp[s] == sp[s + 1]:
                continue
            best = -1.0 if maximize else 2.0
            for a in range(sp[s], sp[s + 1]):
                v = 0.0
                for k in range(cp[a], cp[a + 1]):
                    v += pr[k] * xs[cl[k]]
                if maximize:
                    if v > best:
                        best = v
                elif v < best:
                    best = v
            d = abs(best - xs[s])
            if d > delta:
                delta = d
            xs[s] = best
        if delta < eps:
            break
    x[:] = xs
    return it, delta


def backward_reachable(rev_ptr, rev_cols, start):
    n = len(start)
    seen = np.zeros(n, dtype=np.uint8)
    rp = rev_ptr.tolist()
    rc = rev_cols.tolist()
    stack = [s for s in range(n) if start[s]]
    for s in stack:
        seen[s] = 1
    while stack:
        s = stack.pop()
        for k in range(rp[s], rp[s + 1]):
            t = rc[k]
            if not seen[t]:
                seen[t] = 1
                stack.append(t)
    return seen
