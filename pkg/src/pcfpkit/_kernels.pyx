# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: Gauss-Seidel value iteration and reverse reachability.

Both functions mirror ``_kernels_py`` operation for operation, so the two
backends return bitwise identical results.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def value_iteration(const cnp.int64_t[::1] state_ptr,
                    const cnp.int64_t[::1] choice_ptr,
                    const cnp.int64_t[::1] cols,
                    const double[::1] probs,
                    double[::1] x,
                    const cnp.uint8_t[::1] fixed,
                    bint maximize,
                    double eps,
                    long max_iter):
    """In-place Gauss-Seidel sweeps until the largest change is below ``eps``.

    Returns ``(sweeps, last_delta)``.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t s, a, k
    cdef double best, v, delta, d
    cdef long it = 0
    delta = 0.0
    while it < max_iter:
        it += 1
        delta = 0.0
        for s in range(n):
            if fixed[s] or state_ptr[s] == state_ptr[s + 1]:
                continue
            best = -1.0 if maximize else 2.0
            for a in range(state_ptr[s], state_ptr[s + 1]):
                v = 0.0
                for k in range(choice_ptr[a], choice_ptr[a + 1]):
                    v += probs[k] * x[cols[k]]
                if maximize:
                    if v > best:
                        best = v
                elif v < best:
                    best = v
            d = fabs(best - x[s])
            if d > delta:
                delta = d
            x[s] = best
        if delta < eps:
            break
    return it, delta


def backward_reachable(const cnp.int64_t[::1] rev_ptr,
                       const cnp.int64_t[::1] rev_cols,
                       const cnp.uint8_t[::1] start):
    """Mask of states that reach ``start`` along edges of the forward graph.

    ``rev_ptr``/``rev_cols`` is the CSR form of the reversed graph.
    """
    cdef Py_ssize_t n = start.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] seen_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] seen = seen_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] stack_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] stack = stack_arr
    cdef Py_ssize_t top = 0, s, k, t
    for s in range(n):
        if start[s]:
            seen[s] = 1
            stack[top] = s
            top += 1
    while top > 0:
        top -= 1
        s = stack[top]
        for k in range(rev_ptr[s], rev_ptr[s + 1]):
            t = rev_cols[k]
            if not seen[t]:
                seen[t] = 1
                stack[top] = t
                top += 1
    return seen_arr
