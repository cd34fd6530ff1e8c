"""Reachability analysis on explicit models.

Exact methods work on :class:`fractions.Fraction`; value iteration and the
sparse direct solver use 64-bit floats.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import kernels
from .pcfp import ExplicitModel, Objective

DEFAULT_EPS = 1e-10
ENUMERATION_LIMIT = 1 << 16
EXACT_LIMIT = 2000


class SolverError(Exception):
    pass


class NotAChain(SolverError):
    pass


class TooLargeForEnumeration(SolverError):
    pass


class AbsorbingState(SolverError):
    pass


class IsInitialOrGoal(SolverError):
    pass


class Method(enum.Enum):
    GAUSSIAN_EXACT = "gaussian"
    ELIMINATION_EXACT = "elimination"
    SPARSE_FLOAT = "sparse"
    VALUE_ITERATION = "vi"
    ENUMERATION_EXACT = "enumeration"
    POLICY_ITERATION_EXACT = "policy"


@dataclass(frozen=True)
class ReachResult:
    value: Fraction | float
    method: Method
    scheduler: Mapping[int, str] | None = None
    iterations: int | None = None

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)


class ModelStats(NamedTuple):
    states: int
    transitions: int
    actions: int


def _goal_mask(m: ExplicitModel, goals) -> list:
    if goals is None:
        if m.goal is None:
            raise ValueError("goal mask not set")
        return list(m.goal)
    if isinstance(goals, (set, frozenset)):
        return [i in goals for i in range(m.num_states)]
    return [bool(g) for g in goals]


# ---------------------------------------------------------------------------
# graph precomputations


def _reverse_csr(succ: Sequence[Sequence[int]], n: int) -> tuple[np.ndarray, np.ndarray]:
    counts = np.zeros(n + 1, dtype=np.int64)
    for s, ts in enumerate(succ):
        for t in ts:
            counts[t + 1] += 1
    ptr = np.cumsum(counts)
    cols = np.empty(ptr[-1], dtype=np.int64)
    fill = ptr[:-1].copy()
    for s, ts in enumerate(succ):
        for t in ts:
            cols[fill[t]] = s
            fill[t] += 1
    return ptr, cols


def can_reach(m: ExplicitModel, goal: Sequence[bool]) -> np.ndarray:
    """States with a path (under some choices) to a goal state."""
    n = m.num_states
    succ = [sorted({t for _, dist in m.choices[s] for _, t in dist}) if not goal[s] else [] for s in range(n)]
    ptr, cols = _reverse_csr(succ, n)
    return kernels.backward_reachable(ptr, cols, np.asarray(goal, dtype=np.uint8)).astype(bool)


def positive_under_all(m: ExplicitModel, goal: Sequence[bool]) -> np.ndarray:
    """States from which every scheduler reaches the goal with positive probability."""
    n = m.num_states
    inside = np.array(goal, dtype=bool)
    changed = True
    while changed:
        changed = False
        for s in range(n):
            if inside[s] or not m.choices[s]:
                continue
            if all(any(inside[t] for _, t in dist) for _, dist in m.choices[s]):
                inside[s] = True
                changed = True
    return inside


def almost_sure_max(m: ExplicitModel, goal: Sequence[bool]) -> np.ndarray:
    """States where some scheduler reaches the goal with probability 1."""
    n = m.num_states
    u = np.ones(n, dtype=bool)
    while True:
        r = np.array(goal, dtype=bool)
        changed = True
        while changed:
            changed = False
            for s in range(n):
                if r[s] or not u[s]:
                    continue
                for _, dist in m.choices[s]:
                    if all(u[t] for _, t in dist) and any(r[t] for _, t in dist):
                        r[s] = True
                        changed = True
                        break
        if (r == u).all():
            return u
        u = r


def almost_sure_min(m: ExplicitModel, goal: Sequence[bool]) -> np.ndarray:
    """States where every scheduler reaches the goal with probability 1.

    Complement of the states that can reach, without passing the goal, a
    state whose minimal probability is zero.
    """
    n = m.num_states
    zero = ~positive_under_all(m, goal)
    succ = [sorted({t for _, dist in m.choices[s] for _, t in dist}) if not goal[s] else [] for s in range(n)]
    ptr, cols = _reverse_csr(succ, n)
    escape = kernels.backward_reachable(ptr, cols, zero.astype(np.uint8)).astype(bool)
    return ~escape


# ---------------------------------------------------------------------------
# Markov chains


def _chain_rows(m: ExplicitModel) -> list:
    rows = []
    for s, acts in enumerate(m.choices):
        if len(acts) > 1:
            raise NotAChain(f"state {s} has {len(acts)} actions")
        rows.append(acts[0][1] if acts else ())
    return rows


def _solve_exact(rows: Sequence, goal: Sequence[bool], positive: Sequence[bool], start: int) -> Fraction:
    if goal[start]:
        return Fraction(1)
    if not positive[start]:
        return Fraction(0)
    return _solve_all(rows, goal, positive)[start]


def _solve_all(rows: Sequence, goal: Sequence[bool], positive: Sequence[bool]) -> list:
    """Gaussian elimination on ``x = P x + b`` restricted to ``positive`` non-goals.

    Unknowns are eliminated in index order without pivoting; the matrix is a
    non-singular M-matrix so every pivot is non-zero.
    """
    unknowns = [s for s in range(len(rows)) if positive[s] and not goal[s]]
    eqs: dict = {}
    rhs: dict = {}
    col_rows: dict = {s: set() for s in unknowns}
    for s in unknowns:
        row = {s: Fraction(1)}
        b = Fraction(0)
        for q, t in rows[s]:
            if goal[t]:
                b += q
            elif positive[t]:
                row[t] = row.get(t, Fraction(0)) - q
        row = {k: v for k, v in row.items() if v}
        eqs[s] = row
        rhs[s] = b
        for k in row:
            col_rows[k].add(s)
    order = unknowns
    done: set = set()
    for k in order:
        row_k = eqs[k]
        piv = row_k[k]
        done.add(k)
        for j in sorted(col_rows[k] - done):
            row_j = eqs[j]
            f = row_j.get(k)
            if not f:
                continue
            f = f / piv
            for c, v in row_k.items():
                nv = row_j.get(c, Fraction(0)) - f * v
                if nv:
                    if c not in row_j:
                        col_rows[c].add(j)
                    row_j[c] = nv
                else:
                    row_j.pop(c, None)
            rhs[j] -= f * rhs[k]
    x: dict = {}
    for k in reversed(order):
        row = eqs[k]
        acc = rhs[k]
        for c, v in row.items():
            if c != k:
                acc -= v * x[c]
        x[k] = acc / row[k]
    one, zero = Fraction(1), Fraction(0)
    return [one if goal[s] else x.get(s, zero) for s in range(len(rows))]


def solve_mc_exact(m: ExplicitModel, goals=None, start: int | None = None) -> ReachResult:
    goal = _goal_mask(m, goals)
    rows = _chain_rows(m)
    positive = can_reach(m, goal)
    value = _solve_exact(rows, goal, positive, m.initial if start is None else start)
    return ReachResult(value, Method.GAUSSIAN_EXACT)


def solve_mc_sparse(m: ExplicitModel, goals=None, start: int | None = None) -> ReachResult:
    """Float solve of the reachability system with a sparse direct solver."""
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    goal = _goal_mask(m, goals)
    rows = _chain_rows(m)
    positive = can_reach(m, goal)
    s0 = m.initial if start is None else start
    if goal[s0]:
        return ReachResult(1.0, Method.SPARSE_FLOAT)
    if not positive[s0]:
        return ReachResult(0.0, Method.SPARSE_FLOAT)
    unknowns = [s for s in range(len(rows)) if positive[s] and not goal[s]]
    pos = {s: i for i, s in enumerate(unknowns)}
    r, c, v = [], [], []
    b = np.zeros(len(unknowns))
    for s in unknowns:
        i = pos[s]
        r.append(i)
        c.append(i)
        v.append(1.0)
        for q, t in rows[s]:
            if goal[t]:
                b[i] += float(q)
            elif t in pos:
                r.append(i)
                c.append(pos[t])
                v.append(-float(q))
    a = sp.csc_matrix((v, (r, c)), shape=(len(unknowns), len(unknowns)))
    x = spla.spsolve(a, b)
    return ReachResult(float(np.clip(x[pos[s0]], 0.0, 1.0)), Method.SPARSE_FLOAT)


@dataclass
class Chain:
    """Mutable sparse chain used by state elimination: ``succ[s][t] = prob``."""

    succ: dict
    initial: int
    goals: frozenset

    @staticmethod
    def from_model(m: ExplicitModel, goals=None) -> "Chain":
        goal = _goal_mask(m, goals)
        rows = _chain_rows(m)
        positive = can_reach(m, goal)
        succ: dict = {}
        for s, row in enumerate(rows):
            if not positive[s] and s != m.initial:
                continue
            if goal[s]:
                succ[s] = {}
                continue
            out: dict = {}
            for q, t in row:
                if positive[t]:
                    out[t] = out.get(t, Fraction(0)) + q
            succ[s] = out
        return Chain(succ, m.initial, frozenset(s for s in succ if goal[s]))

    def copy(self) -> "Chain":
        return Chain({s: dict(o) for s, o in self.succ.items()}, self.initial, self.goals)

    def predecessors(self) -> dict:
        pred: dict = {s: set() for s in self.succ}
        for s, out in self.succ.items():
            for t in out:
                pred[t].add(s)
        return pred

    def value(self) -> Fraction:
        """Reach probability once every other non-goal state is eliminated."""
        s = self.initial
        if s in self.goals:
            return Fraction(1)
        out = self.succ.get(s, {})
        loop = out.get(s, Fraction(0))
        if loop == 1:
            return Fraction(0)
        return sum((q for t, q in out.items() if t in self.goals), Fraction(0)) / (1 - loop)


def _eliminate_inplace(ch: Chain, s: int, pred: dict) -> None:
    out = ch.succ[s]
    loop = out.pop(s, Fraction(0))
    if loop == 1:
        raise AbsorbingState(f"state {s} is absorbing")
    pred[s].discard(s)
    scale = 1 / (1 - loop)
    for t in out:
        pred[t].discard(s)
    for r in pred[s]:
        rout = ch.succ[r]
        p_rs = rout.pop(s)
        for t, q in out.items():
            rout[t] = rout.get(t, Fraction(0)) + p_rs * q * scale
            pred[t].add(r)
    del ch.succ[s]
    del pred[s]


def mc_eliminate_state(ch: Chain, s: int) -> Chain:
    """A new chain without ``s``: self-loop rescaled, paths through ``s`` shortcut."""
    if s == ch.initial or s in ch.goals:
        raise IsInitialOrGoal(f"state {s} is initial or goal")
    new = ch.copy()
    _eliminate_inplace(new, s, new.predecessors())
    return new


def solve_mc_by_elimination(m: ExplicitModel, goals=None) -> ReachResult:
    ch = Chain.from_model(m, goals)
    pred = ch.predecessors()
    todo = {s for s in ch.succ if s != ch.initial and s not in ch.goals}

    def cost(s):
        return len(pred[s] - {s}) * len(ch.succ[s].keys() - {s})

    heap = [(cost(s), s) for s in todo]
    heapq.heapify(heap)
    while heap:
        c, s = heapq.heappop(heap)
        if s not in todo:
            continue
        now = cost(s)
        if now != c:
            heapq.heappush(heap, (now, s))
            continue
        todo.discard(s)
        neighbours = (pred[s] | ch.succ[s].keys()) & todo
        _eliminate_inplace(ch, s, pred)
        for t in neighbours:
            heapq.heappush(heap, (cost(t), t))
    return ReachResult(ch.value(), Method.ELIMINATION_EXACT)


# ---------------------------------------------------------------------------
# MDPs


def _zero_and_one(m: ExplicitModel, goal, maximize: bool):
    if maximize:
        positive = can_reach(m, goal)
        one = almost_sure_max(m, goal)
    else:
        positive = positive_under_all(m, goal)
        one = almost_sure_min(m, goal)
    return positive, one


def solve_mdp(
    m: ExplicitModel,
    goals=None,
    objective: Objective = Objective.MAXIMIZE,
    method: Method | str = Method.VALUE_ITERATION,
    eps: float = DEFAULT_EPS,
    max_iter: int = 10_000_000,
    limit: int = ENUMERATION_LIMIT,
) -> ReachResult:
    method = Method(method)
    goal = _goal_mask(m, goals)
    if objective is Objective.FORCED:
        if not m.is_chain():
            raise NotAChain("forced objective on a nondeterministic model")
        objective = Objective.MAXIMIZE
    maximize = objective is Objective.MAXIMIZE
    if method is Method.ENUMERATION_EXACT:
        return _enumerate(m, goal, maximize, limit)
    if method is Method.POLICY_ITERATION_EXACT:
        return _policy_iteration(m, goal, maximize)
    if method is Method.VALUE_ITERATION:
        return _value_iteration(m, goal, maximize, eps, max_iter)
    if m.is_chain():
        if method is Method.GAUSSIAN_EXACT:
            return solve_mc_exact(m, goal)
        if method is Method.ELIMINATION_EXACT:
            return solve_mc_by_elimination(m, goal)
        if method is Method.SPARSE_FLOAT:
            return solve_mc_sparse(m, goal)
    raise SolverError(f"method {method.value} needs a Markov chain")


def _induced_rows(m: ExplicitModel, choice: Mapping[int, int]) -> list:
    return [acts[choice.get(s, 0)][1] if acts else () for s, acts in enumerate(m.choices)]


def _induced_positive(rows, goal) -> list:
    n = len(rows)
    pred: list = [[] for _ in range(n)]
    for s, row in enumerate(rows):
        if goal[s]:
            continue
        for _, t in row:
            pred[t].append(s)
    seen = [bool(g) for g in goal]
    stack = [s for s in range(n) if goal[s]]
    while stack:
        t = stack.pop()
        for s in pred[t]:
            if not seen[s]:
                seen[s] = True
                stack.append(s)
    return seen


def _evaluate_policy(m, goal, choice, start) -> Fraction:
    rows = _induced_rows(m, choice)
    return _solve_exact(rows, goal, _induced_positive(rows, goal), start)


def _enumerate(m: ExplicitModel, goal, maximize: bool, limit: int) -> ReachResult:
    # every state that can reach the goal under some scheduler is free; the
    # rest have value 0 whatever is chosen
    positive = can_reach(m, goal)
    free = [s for s in range(m.num_states) if not goal[s] and positive[s] and len(m.choices[s]) > 1]
    total = math.prod(len(m.choices[s]) for s in free)
    if total > limit:
        raise TooLargeForEnumeration(f"{total} schedulers exceed the limit {limit}")
    best = None
    best_choice: dict = {}
    for combo in itertools.product(*(range(len(m.choices[s])) for s in free)):
        choice = dict(zip(free, combo))
        v = _evaluate_policy(m, goal, choice, m.initial)
        if best is None or (v > best if maximize else v < best):
            best, best_choice = v, choice
    sched = {s: m.choices[s][best_choice.get(s, 0)][0] for s in range(m.num_states) if m.choices[s]}
    return ReachResult(best, Method.ENUMERATION_EXACT, sched)


def _all_values(m, goal, choice) -> list:
    rows = _induced_rows(m, choice)
    return _solve_all(rows, goal, _induced_positive(rows, goal))


def _policy_iteration(m: ExplicitModel, goal, maximize: bool) -> ReachResult:
    """Exact strategy improvement.

    For minimisation the states with minimum 0 are fixed first, which leaves
    a system with a unique fixed point; for maximisation every fixed point
    of a policy's values is above the least one, so a stable policy is optimal.
    """
    positive, _ = _zero_and_one(m, goal, maximize)
    choice = {s: 0 for s in range(m.num_states) if m.choices[s]}
    if not maximize:
        # start from a policy avoiding the goal where possible
        for s in range(m.num_states):
            if not positive[s] and m.choices[s]:
                for a, (_, dist) in enumerate(m.choices[s]):
                    if all(not positive[t] for _, t in dist):
                        choice[s] = a
                        break
    iterations = 0
    while True:
        iterations += 1
        vals = _all_values(m, goal, choice)
        changed = False
        for s in range(m.num_states):
            if goal[s] or len(m.choices[s]) < 2:
                continue
            if not maximize and not positive[s]:
                continue
            cur = vals[s]
            best_a, best_v = choice[s], cur
            for a, (_, dist) in enumerate(m.choices[s]):
                v = sum((q * vals[t] for q, t in dist), Fraction(0))
                if (v > best_v) if maximize else (v < best_v):
                    best_a, best_v = a, v
            if best_a != choice[s]:
                choice[s] = best_a
                changed = True
        if not changed:
            sched = {s: m.choices[s][a][0] for s, a in choice.items()}
            return ReachResult(vals[m.initial], Method.POLICY_ITERATION_EXACT, sched, iterations)


def to_csr(m: ExplicitModel):
    """CSR arrays ``(state_ptr, choice_ptr, cols, probs)`` for the kernels."""
    state_ptr = [0]
    choice_ptr = [0]
    cols: list = []
    probs: list = []
    for acts in m.choices:
        for _, dist in acts:
            for q, t in dist:
                cols.append(t)
                probs.append(float(q))
            choice_ptr.append(len(cols))
        state_ptr.append(len(choice_ptr) - 1)
    return (
        np.asarray(state_ptr, dtype=np.int64),
        np.asarray(choice_ptr, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(probs, dtype=np.float64),
    )


def _value_iteration(m: ExplicitModel, goal, maximize: bool, eps: float, max_iter: int) -> ReachResult:
    positive, one = _zero_and_one(m, goal, maximize)
    x = np.where(one, 1.0, 0.0)
    fixed = (one | ~positive).astype(np.uint8)
    state_ptr, choice_ptr, cols, probs = to_csr(m)
    it, _ = kernels.value_iteration(state_ptr, choice_ptr, cols, probs, x, fixed, maximize, eps, max_iter)
    return ReachResult(float(x[m.initial]), Method.VALUE_ITERATION, iterations=int(it))


def solve(m: ExplicitModel, objective: Objective, goals=None, method: str = "auto", eps: float = DEFAULT_EPS) -> ReachResult:
    """Pick a method: exact for small chains, sparse for large chains, VI for MDPs."""
    if method != "auto":
        return solve_mdp(m, goals, objective, Method(method), eps)
    if m.is_chain():
        goal = _goal_mask(m, goals)
        if m.num_states <= EXACT_LIMIT:
            return solve_mc_exact(m, goal)
        return solve_mc_sparse(m, goal)
    if objective is Objective.FORCED:
        raise NotAChain("forced objective on a nondeterministic model")
    return solve_mdp(m, goals, objective, Method.VALUE_ITERATION, eps)


def solve_exact(m: ExplicitModel, objective: Objective, goals=None) -> ReachResult:
    """Exact rational value: Gaussian elimination for small chains, state
    elimination for large ones (less fill-in), policy iteration for MDPs."""
    goal = _goal_mask(m, goals)
    if m.is_chain():
        if m.num_states <= EXACT_LIMIT:
            return solve_mc_exact(m, goal)
        return solve_mc_by_elimination(m, goal)
    if objective is Objective.FORCED:
        raise NotAChain("forced objective on a nondeterministic model")
    return _policy_iteration(m, goal, objective is Objective.MAXIMIZE)


# ---------------------------------------------------------------------------
# comparison and statistics


def _state_key(m: ExplicitModel, i: int):
    s = m.states[i]
    if s is None:
        return ("",)
    loc, values = s
    nu = dict(m.location_labels.get(loc, ()))
    nu.update(zip(m.variables, values))
    return (m.location_bases.get(loc, loc), tuple(sorted(nu.items())))


def canonical_form(m: ExplicitModel) -> tuple:
    keys = [_state_key(m, i) for i in range(m.num_states)]
    table = {}
    for i, k in enumerate(keys):
        dists = []
        for _, dist in m.choices[i]:
            merged: dict = {}
            for q, t in dist:
                merged[keys[t]] = merged.get(keys[t], Fraction(0)) + q
            dists.append(tuple(sorted(merged.items())))
        table[k] = tuple(sorted(dists))
    return keys[m.initial], tuple(sorted(table.items()))


def canonical_compare(a: ExplicitModel, b: ExplicitModel) -> bool:
    """Equal up to state numbering and action names."""
    return canonical_form(a) == canonical_form(b)


def model_stats(m: ExplicitModel) -> ModelStats:
    transitions = sum(len(dist) for acts in m.choices for _, dist in acts)
    actions = sum(len(acts) for acts in m.choices)
    return ModelStats(m.num_states, transitions, actions)
