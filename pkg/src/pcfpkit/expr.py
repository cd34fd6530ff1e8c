"""Integer expressions, predicates and updates over bounded integer variables.

Everything here is an immutable value. Predicates and expressions are small
trees of frozen dataclasses, so structural equality and hashing come for free.
Booleans are integers with domain ``[0..1]``; a Boolean variable ``f`` used as
a predicate is the comparison ``f = 1``.

The module also holds the finite-domain decision procedures used by the
reduction engine: satisfiability (``check_sat``) and idempotence
(``check_idempotent``). Both enumerate the product domain of the variables that
actually occur, vectorised with numpy. When symbolic constants block
enumeration, ``check_sat`` falls back to a sound but incomplete refutation over
the propositional skeleton with interval reasoning on linear atoms.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Union

import numpy as np

DEFAULT_BUDGET = 1 << 20


class ExprError(Exception):
    pass


class UnboundVariable(ExprError):
    pass


class UnboundConstant(ExprError):
    pass


class DivisionByZero(ExprError, ZeroDivisionError):
    pass


# ---------------------------------------------------------------------------
# Integer expressions


@dataclass(frozen=True, slots=True)
class Lit:
    value: int


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Const:
    name: str


@dataclass(frozen=True, slots=True)
class Neg:
    arg: "IntExpr"


@dataclass(frozen=True, slots=True)
class BinOp:
    """Arithmetic node; ``/`` is integer division rounding toward -inf."""

    op: str
    left: "IntExpr"
    right: "IntExpr"

    def __post_init__(self):
        if self.op not in ("+", "-", "*", "/"):
            raise ValueError(f"unknown arithmetic operator {self.op!r}")
        if self.op == "/" and not isinstance(self.right, (Lit, Const)):
            raise ValueError("divisor must be a literal or a constant")


@dataclass(frozen=True, slots=True)
class Call:
    fn: str
    args: tuple

    def __post_init__(self):
        if self.fn not in ("min", "max") or len(self.args) < 1:
            raise ValueError(f"unsupported call {self.fn}/{len(self.args)}")


@dataclass(frozen=True, slots=True)
class Ite:
    cond: "Pred"
    then: "IntExpr"
    other: "IntExpr"


IntExpr = Union[Lit, Var, Const, Neg, BinOp, Call, Ite]

# ---------------------------------------------------------------------------
# Predicates

CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
_NEGATED = {"=": "!=", "!=": "=", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
_MIRRORED = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


@dataclass(frozen=True, slots=True)
class BoolLit:
    value: bool


@dataclass(frozen=True, slots=True)
class Cmp:
    op: str
    left: IntExpr
    right: IntExpr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True, slots=True)
class Not:
    arg: "Pred"


@dataclass(frozen=True, slots=True)
class And:
    args: tuple


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple


Pred = Union[BoolLit, Cmp, Not, And, Or]

TRUE = BoolLit(True)
FALSE = BoolLit(False)


def lit(value) -> IntExpr:
    return value if not isinstance(value, (int, bool)) else Lit(int(value))


def conj(*args: Pred) -> Pred:
    if not args:
        return TRUE
    return args[0] if len(args) == 1 else And(tuple(args))


def disj(*args: Pred) -> Pred:
    if not args:
        return FALSE
    return args[0] if len(args) == 1 else Or(tuple(args))


def cmp(op: str, left, right) -> Cmp:
    return Cmp(op, lit(left), lit(right))


def is_int_expr(e) -> bool:
    return isinstance(e, (Lit, Var, Const, Neg, BinOp, Call, Ite))


def is_pred(e) -> bool:
    return isinstance(e, (BoolLit, Cmp, Not, And, Or))


# ---------------------------------------------------------------------------
# Updates


@dataclass(frozen=True)
class Update:
    """A sequence of simultaneous assignment blocks; ``Update()`` is nop.

    Each block is a tuple of ``(lhs, rhs)`` pairs sorted by variable name.
    Blocks run left to right (chaining).
    """

    blocks: tuple = ()

    def __post_init__(self):
        canon = []
        for block in self.blocks:
            pairs = tuple(sorted(((str(l), lit(r)) for l, r in dict(block).items())))
            if len(pairs) != len(block):
                raise ValueError("duplicate left-hand side in one update block")
            if pairs:
                canon.append(pairs)
        object.__setattr__(self, "blocks", tuple(canon))

    @classmethod
    def of(cls, assignments: Mapping[str, object] | None = None, **kw) -> "Update":
        merged = dict(assignments or {})
        merged.update(kw)
        return cls((tuple(merged.items()),)) if merged else cls()

    def then(self, other: "Update") -> "Update":
        """Chaining: first ``self``, then ``other``."""
        return Update(self.blocks + other.blocks)

    @property
    def is_single(self) -> bool:
        return len(self.blocks) <= 1

    def assignments(self) -> dict:
        if len(self.blocks) > 1:
            raise ValueError("assignments() needs a single-block update; flatten first")
        return dict(self.blocks[0]) if self.blocks else {}

    def written(self) -> frozenset:
        return frozenset(l for b in self.blocks for l, _ in b)


NOP = Update()


# ---------------------------------------------------------------------------
# Traversal helpers


def variables(e) -> frozenset:
    """Program variables occurring in an expression, predicate or update."""
    out: set = set()
    _collect(e, Var, out)
    return frozenset(out)


def constants(e) -> frozenset:
    out: set = set()
    _collect(e, Const, out)
    return frozenset(out)


def _collect(e, kind, out):
    match e:
        case Var(name) | Const(name):
            if isinstance(e, kind):
                out.add(name)
        case Lit() | BoolLit():
            pass
        case Neg(a) | Not(a):
            _collect(a, kind, out)
        case BinOp(_, a, b) | Cmp(_, a, b):
            _collect(a, kind, out)
            _collect(b, kind, out)
        case Call(_, args) | And(args) | Or(args):
            for a in args:
                _collect(a, kind, out)
        case Ite(c, a, b):
            _collect(c, kind, out)
            _collect(a, kind, out)
            _collect(b, kind, out)
        case Update(blocks):
            for block in blocks:
                for _, rhs in block:
                    _collect(rhs, kind, out)
            if kind is Var:
                out.update(e.written())
        case _:
            raise TypeError(f"not an expression: {e!r}")


def read_variables(u: Update) -> frozenset:
    out: set = set()
    for block in u.blocks:
        for _, rhs in block:
            _collect(rhs, Var, out)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Evaluation


def _floordiv(a: int, b: int) -> int:
    if b == 0:
        raise DivisionByZero("integer division by zero")
    return a // b


def evaluate(e, valuation: Mapping[str, int], consts: Mapping[str, int | None] | None = None):
    """Evaluate an integer expression or a predicate under a valuation."""
    consts = consts or {}

    def ev(e):
        match e:
            case Lit(v):
                return v
            case Var(name):
                try:
                    return valuation[name]
                except KeyError:
                    raise UnboundVariable(name) from None
            case Const(name):
                v = consts.get(name)
                if v is None:
                    raise UnboundConstant(name)
                return v
            case Neg(a):
                return -ev(a)
            case BinOp(op, a, b):
                x, y = ev(a), ev(b)
                if op == "+":
                    return x + y
                if op == "-":
                    return x - y
                if op == "*":
                    return x * y
                return _floordiv(x, y)
            case Call(fn, args):
                vals = [ev(a) for a in args]
                return min(vals) if fn == "min" else max(vals)
            case Ite(c, a, b):
                return ev(a) if ev(c) else ev(b)
            case BoolLit(v):
                return v
            case Cmp(op, a, b):
                x, y = ev(a), ev(b)
                return _CMP_FN[op](x, y)
            case Not(a):
                return not ev(a)
            case And(args):
                return all(ev(a) for a in args)
            case Or(args):
                return any(ev(a) for a in args)
        raise TypeError(f"not an expression: {e!r}")

    return ev(e)


_CMP_FN: dict[str, Callable[[int, int], bool]] = {
    "=": lambda x, y: x == y,
    "!=": lambda x, y: x != y,
    "<": lambda x, y: x < y,
    "<=": lambda x, y: x <= y,
    ">": lambda x, y: x > y,
    ">=": lambda x, y: x >= y,
}


def apply_update(u: Update, valuation: Mapping[str, int], consts=None) -> dict:
    nu = dict(valuation)
    for block in u.blocks:
        new = {lhs: evaluate(rhs, nu, consts) for lhs, rhs in block}
        nu.update(new)
    return nu


# ---------------------------------------------------------------------------
# Substitution and weakest preconditions


def substitute(e, mapping: Mapping[str, object]):
    """Simultaneously replace variables by expressions (or ints).

    On an update, the right-hand sides are rewritten and assignments whose
    left-hand side is in ``mapping`` are dropped. For multi-block updates the
    mapped values are pushed through each block; this needs every assignment
    to a mapped variable to be evaluable from the mapping alone.
    """
    if isinstance(e, Update):
        return _substitute_update(e, mapping)
    repl = {k: lit(v) for k, v in mapping.items()}
    return _subst(e, repl, {}) if repl else e


def bind_constants(e, consts: Mapping[str, int | None]):
    """Replace every instantiated constant by its literal value."""
    bound = {k: Lit(v) for k, v in consts.items() if v is not None}
    if not bound:
        return e
    if isinstance(e, Update):
        return Update(tuple(tuple((l, _subst(r, {}, bound)) for l, r in b) for b in e.blocks))
    return _subst(e, {}, bound)


def _subst(e, vmap, cmap):
    match e:
        case Var(name):
            return vmap.get(name, e)
        case Const(name):
            return cmap.get(name, e)
        case Lit() | BoolLit():
            return e
        case Neg(a):
            return Neg(_subst(a, vmap, cmap))
        case BinOp(op, a, b):
            return BinOp(op, _subst(a, vmap, cmap), _subst(b, vmap, cmap))
        case Call(fn, args):
            return Call(fn, tuple(_subst(a, vmap, cmap) for a in args))
        case Ite(c, a, b):
            return Ite(_subst(c, vmap, cmap), _subst(a, vmap, cmap), _subst(b, vmap, cmap))
        case Cmp(op, a, b):
            return Cmp(op, _subst(a, vmap, cmap), _subst(b, vmap, cmap))
        case Not(a):
            return Not(_subst(a, vmap, cmap))
        case And(args):
            return And(tuple(_subst(a, vmap, cmap) for a in args))
        case Or(args):
            return Or(tuple(_subst(a, vmap, cmap) for a in args))
    raise TypeError(f"not an expression: {e!r}")


def _substitute_update(u: Update, mapping: Mapping[str, object]) -> Update:
    known = {k: v for k, v in mapping.items()}
    blocks = []
    for block in u.blocks:
        repl = {k: lit(v) for k, v in known.items()}
        kept = []
        nxt = dict(known)
        for lhs, rhs in block:
            new_rhs = _subst(rhs, repl, {})
            if lhs in known:
                if variables(new_rhs):
                    raise ValueError(f"assignment to {lhs} does not become constant")
                nxt[lhs] = new_rhs
            else:
                kept.append((lhs, new_rhs))
        known = nxt
        blocks.append(tuple(kept))
    return Update(tuple(blocks))


def wp(u: Update, post: Pred) -> Pred:
    """Weakest precondition by simultaneous substitution, block by block."""
    for block in reversed(u.blocks):
        post = _subst(post, dict(block), {})
    return post


def flatten(u: Update) -> Update:
    """Collapse a chained update into one equivalent simultaneous block."""
    if len(u.blocks) <= 1:
        return simplify_update(u)
    acc: dict = {}
    for block in u.blocks:
        step = {lhs: _subst(rhs, acc, {}) for lhs, rhs in block}
        acc.update(step)
    return simplify_update(Update.of(acc))


def compose(first: Update, second: Update) -> Update:
    """Single-block update equivalent to ``first`` followed by ``second``."""
    return flatten(first.then(second))


def simplify_update(u: Update) -> Update:
    """Simplify right-hand sides and drop identity assignments ``x' = x``."""
    blocks = []
    for block in u.blocks:
        kept = []
        for lhs, rhs in block:
            r = simplify_int(rhs)
            if r != Var(lhs):
                kept.append((lhs, r))
        blocks.append(tuple(kept))
    if len(blocks) > 1:
        # identity dropping is only valid per block, which is what we did
        pass
    return Update(tuple(blocks))


def is_nop(u: Update) -> bool:
    return not simplify_update(u).blocks


# ---------------------------------------------------------------------------
# Simplification


def _sort_key(t) -> tuple:
    if isinstance(t, Var):
        return (0, t.name)
    if isinstance(t, Const):
        return (1, t.name)
    return (2, show(t))


def _linear(e) -> tuple[dict, int]:
    """Linear form ``(terms, constant)``; non-linear subterms become atoms."""
    match e:
        case Lit(v):
            return {}, v
        case Var() | Const():
            return {e: 1}, 0
        case Neg(a):
            t, c = _linear(a)
            return {k: -v for k, v in t.items()}, -c
        case BinOp("+" | "-", a, b):
            ta, ca = _linear(a)
            tb, cb = _linear(b)
            sign = 1 if e.op == "+" else -1
            out = dict(ta)
            for k, v in tb.items():
                out[k] = out.get(k, 0) + sign * v
            return {k: v for k, v in out.items() if v}, ca + sign * cb
        case BinOp("*", a, b):
            ta, ca = _linear(a)
            tb, cb = _linear(b)
            if not ta:
                return {k: ca * v for k, v in tb.items() if ca * v}, ca * cb
            if not tb:
                return {k: cb * v for k, v in ta.items() if cb * v}, ca * cb
            atom = BinOp("*", _rebuild(ta, ca), _rebuild(tb, cb))
            return {atom: 1}, 0
        case BinOp("/", a, b):
            ta, ca = _linear(a)
            sb = simplify_int(b)
            if not ta and isinstance(sb, Lit) and sb.value != 0:
                return {}, ca // sb.value
            if isinstance(sb, Lit) and sb.value == 1:
                return ta, ca
            return {BinOp("/", _rebuild(ta, ca), sb): 1}, 0
        case Call(fn, args):
            sargs = tuple(simplify_int(a) for a in args)
            if all(isinstance(a, Lit) for a in sargs):
                vals = [a.value for a in sargs]
                return {}, (min(vals) if fn == "min" else max(vals))
            uniq = tuple(dict.fromkeys(sargs))
            if len(uniq) == 1:
                return _linear(uniq[0])
            return {Call(fn, uniq): 1}, 0
        case Ite(c, a, b):
            sc = simplify(c)
            if sc == TRUE:
                return _linear(a)
            if sc == FALSE:
                return _linear(b)
            sa, sb = simplify_int(a), simplify_int(b)
            if sa == sb:
                return _linear(sa)
            return {Ite(sc, sa, sb): 1}, 0
    raise TypeError(f"not an integer expression: {e!r}")


def _rebuild(terms: dict, const: int) -> IntExpr:
    expr = None
    for t in sorted(terms, key=_sort_key):
        c = terms[t]
        if c == 0:
            continue
        mag = t if abs(c) == 1 else BinOp("*", Lit(abs(c)), t)
        if expr is None:
            expr = mag if c > 0 else Neg(mag)
        else:
            expr = BinOp("+" if c > 0 else "-", expr, mag)
    if expr is None:
        return Lit(const)
    if const > 0:
        return BinOp("+", expr, Lit(const))
    if const < 0:
        return BinOp("-", expr, Lit(-const))
    return expr


def simplify_int(e: IntExpr) -> IntExpr:
    return _rebuild(*_linear(e))


def _negate(p: Pred) -> Pred:
    match p:
        case BoolLit(v):
            return BoolLit(not v)
        case Not(a):
            return a
        case Cmp(op, a, b):
            return Cmp(_NEGATED[op], a, b)
    return Not(p)


def simplify(p: Pred) -> Pred:
    """Equivalence-preserving cleanup of a predicate.

    Folds constants, removes double negation, pushes negation into
    comparisons, flattens and deduplicates conjunctions/disjunctions and
    detects syntactically complementary operands.
    """
    match p:
        case BoolLit():
            return p
        case Cmp(op, a, b):
            sa, sb = simplify_int(a), simplify_int(b)
            terms, c = _linear(BinOp("-", sa, sb))
            if not terms:
                return BoolLit(_CMP_FN[op](c, 0))
            return Cmp(op, sa, sb)
        case Not(a):
            return _negate(simplify(a))
        case And(args) | Or(args):
            is_and = isinstance(p, And)
            unit, zero = (TRUE, FALSE) if is_and else (FALSE, TRUE)
            flat: list = []
            for a in args:
                s = simplify(a)
                if s == zero:
                    return zero
                if s == unit:
                    continue
                if type(s) is type(p):
                    flat.extend(s.args)
                else:
                    flat.append(s)
            uniq = list(dict.fromkeys(flat))
            seen = set(uniq)
            for a in uniq:
                if _negate(a) in seen:
                    return zero
            if not uniq:
                return unit
            if len(uniq) == 1:
                return uniq[0]
            return And(tuple(uniq)) if is_and else Or(tuple(uniq))
    raise TypeError(f"not a predicate: {p!r}")


# ---------------------------------------------------------------------------
# Pretty printing (PRISM-like infix)

_PREC = {"or": 1, "and": 2, "not": 3, "cmp": 4, "+": 5, "-": 5, "*": 6, "/": 6, "neg": 7}


def show(e, prec: int = 0) -> str:
    """Infix rendering in PRISM-like syntax (Boolean operators ``& | !``)."""
    match e:
        case Lit(v):
            s, p = str(v), (9 if v >= 0 else 7)
        case Var(name) | Const(name):
            s, p = name, 9
        case Neg(a):
            s, p = "-" + show(a, 8), 7
        case BinOp(op, a, b):
            q = _PREC[op]
            s, p = f"{show(a, q)}{op}{show(b, q + 1)}", q
        case Call(fn, args):
            s, p = f"{fn}({', '.join(show(a) for a in args)})", 9
        case Ite(c, a, b):
            s, p = f"{show(c, 1)} ? {show(a, 1)} : {show(b, 1)}", 0
        case BoolLit(v):
            s, p = ("true" if v else "false"), 9
        case Cmp(op, a, b):
            s, p = f"{show(a, 5)}{op}{show(b, 5)}", 4
        case Not(a):
            s, p = "!" + show(a, 4), 3
        case And(args):
            s, p = " & ".join(show(a, 3) for a in args), 2
        case Or(args):
            s, p = " | ".join(show(a, 2) for a in args), 1
        case Update(blocks):
            if not blocks:
                return "nop"
            return " ; ".join(
                " & ".join(f"({l}'={show(r)})" for l, r in b) for b in blocks
            )
        case _:
            raise TypeError(f"not an expression: {e!r}")
    return f"({s})" if p < prec else s


# ---------------------------------------------------------------------------
# Compilation to Python callables over value tuples


def to_python(e, index: Mapping[str, int], consts: Mapping[str, int | None]) -> str:
    """Python source for ``e`` reading variables from a tuple named ``v``."""

    def go(e) -> str:
        match e:
            case Lit(v):
                return repr(v)
            case Var(name):
                if name not in index:
                    raise UnboundVariable(name)
                return f"v[{index[name]}]"
            case Const(name):
                val = consts.get(name)
                if val is None:
                    raise UnboundConstant(name)
                return repr(val)
            case Neg(a):
                return f"(-{go(a)})"
            case BinOp("/", a, b):
                d = evaluate(b, {}, consts)
                if d == 0:
                    raise DivisionByZero("integer division by zero")
                return f"({go(a)} // {d})"
            case BinOp(op, a, b):
                return f"({go(a)} {op} {go(b)})"
            case Call(fn, args):
                return f"{fn}({', '.join(go(a) for a in args)})"
            case Ite(c, a, b):
                return f"({go(a)} if {go(c)} else {go(b)})"
            case BoolLit(v):
                return repr(v)
            case Cmp(op, a, b):
                pyop = "==" if op == "=" else op
                return f"({go(a)} {pyop} {go(b)})"
            case Not(a):
                return f"(not {go(a)})"
            case And(args):
                return "(" + " and ".join(go(a) for a in args) + ")"
            case Or(args):
                return "(" + " or ".join(go(a) for a in args) + ")"
        raise TypeError(f"not an expression: {e!r}")

    return go(e)


_EVAL_GLOBALS = {"__builtins__": {}, "min": min, "max": max}


def compile_pred(p: Pred, index, consts) -> Callable[[tuple], bool]:
    return eval(f"lambda v: {to_python(p, index, consts)}", _EVAL_GLOBALS)


def compile_update(u: Update, order: tuple, consts) -> Callable[[tuple], tuple]:
    """Callable mapping a value tuple (ordered as ``order``) to its image."""
    u = flatten(u)
    index = {n: i for i, n in enumerate(order)}
    asg = u.assignments()
    for lhs in asg:
        if lhs not in index:
            raise UnboundVariable(lhs)
    if not asg:
        return lambda v: v
    parts = [to_python(asg[n], index, consts) if n in asg else f"v[{i}]" for i, n in enumerate(order)]
    src = "lambda v: (" + ", ".join(parts) + ("," if len(parts) == 1 else "") + ")"
    return eval(src, _EVAL_GLOBALS)


# ---------------------------------------------------------------------------
# Vectorised evaluation (numpy) for enumeration


def _np_eval(e, env: Mapping[str, np.ndarray], consts):
    match e:
        case Lit(v):
            return v
        case Var(name):
            return env[name]
        case Const(name):
            v = consts.get(name)
            if v is None:
                raise UnboundConstant(name)
            return v
        case Neg(a):
            return -_np_eval(a, env, consts)
        case BinOp(op, a, b):
            x, y = _np_eval(a, env, consts), _np_eval(b, env, consts)
            if op == "+":
                return x + y
            if op == "-":
                return x - y
            if op == "*":
                return x * y
            if np.any(np.asarray(y) == 0):
                raise DivisionByZero("integer division by zero")
            return np.floor_divide(x, y)
        case Call(fn, args):
            vals = [_np_eval(a, env, consts) for a in args]
            red = np.minimum if fn == "min" else np.maximum
            out = vals[0]
            for v in vals[1:]:
                out = red(out, v)
            return out
        case Ite(c, a, b):
            return np.where(_np_eval(c, env, consts), _np_eval(a, env, consts), _np_eval(b, env, consts))
        case BoolLit(v):
            return v
        case Cmp(op, a, b):
            x, y = _np_eval(a, env, consts), _np_eval(b, env, consts)
            return {
                "=": np.equal, "!=": np.not_equal, "<": np.less,
                "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal,
            }[op](x, y)
        case Not(a):
            return np.logical_not(_np_eval(a, env, consts))
        case And(args):
            out = True
            for a in args:
                out = np.logical_and(out, _np_eval(a, env, consts))
            return out
        case Or(args):
            out = False
            for a in args:
                out = np.logical_or(out, _np_eval(a, env, consts))
            return out
    raise TypeError(f"not an expression: {e!r}")


def _grid_chunks(ranges: list[tuple[int, int]], chunk: int = 1 << 16):
    """Yield column arrays enumerating the product of integer ranges."""
    sizes = [hi - lo + 1 for lo, hi in ranges]
    total = math.prod(sizes)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk), dtype=np.int64)
        cols = np.unravel_index(flat, sizes) if sizes else ()
        yield [c.astype(np.int64) + lo for c, (lo, _) in zip(cols, ranges)], len(flat)


# ---------------------------------------------------------------------------
# Decision procedures


class SatStatus(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SatResult:
    status: SatStatus
    witness: Mapping[str, int] | None = None
    reason: str = ""

    @property
    def satisfiable(self) -> bool:
        return self.status is SatStatus.SAT

    @property
    def unsatisfiable(self) -> bool:
        return self.status is SatStatus.UNSAT

    @property
    def unknown(self) -> bool:
        return self.status is SatStatus.UNKNOWN


UNSAT = SatResult(SatStatus.UNSAT)

DomainMap = Mapping[str, tuple]


def _concrete_bounds(name, dom: DomainMap, consts) -> tuple[int, int] | None:
    if name not in dom:
        raise UnboundVariable(name)
    lo, hi = dom[name]
    try:
        return evaluate(lit(lo), {}, consts), evaluate(lit(hi), {}, consts)
    except UnboundConstant:
        return None


def check_sat(
    phi: Pred,
    dom: DomainMap,
    consts: Mapping[str, int | None] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> SatResult:
    """Is ``phi`` satisfied by some valuation inside ``dom``?

    Only the variables occurring in ``phi`` are enumerated. ``UNKNOWN`` means
    symbolic constants or the budget prevented a decision; callers must read
    it as "possibly satisfiable".
    """
    consts = consts or {}
    p = simplify(bind_constants(phi, consts))
    names = sorted(variables(p))
    if p == FALSE:
        return UNSAT
    bounds = {}
    symbolic = bool(constants(p))
    for n in names:
        b = _concrete_bounds(n, dom, consts)
        if b is None:
            symbolic = True
        else:
            bounds[n] = b
            if b[0] > b[1]:
                return SatResult(SatStatus.UNSAT, reason=f"empty domain for {n}")
    if p == TRUE and not symbolic:
        return SatResult(SatStatus.SAT, {n: bounds[n][0] for n in names})
    if symbolic:
        if refute(p, dom, consts):
            return UNSAT
        return SatResult(SatStatus.UNKNOWN, reason="symbolic constants")
    size = math.prod(hi - lo + 1 for lo, hi in bounds.values())
    if size > budget:
        if refute(p, dom, consts):
            return UNSAT
        return SatResult(SatStatus.UNKNOWN, reason=f"product domain {size} exceeds budget")
    ranges = [bounds[n] for n in names]
    for cols, count in _grid_chunks(ranges):
        env = dict(zip(names, cols))
        hits = np.broadcast_to(np.asarray(_np_eval(p, env, consts), dtype=bool), (count,))
        if hits.any():
            i = int(np.argmax(hits))
            return SatResult(SatStatus.SAT, {n: int(env[n][i]) for n in names})
    return UNSAT


class Idempotence(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


def check_idempotent(
    u: Update,
    dom: DomainMap,
    consts: Mapping[str, int | None] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Idempotence:
    """Does ``u(u(v)) == u(v)`` hold for every valuation over ``dom``?"""
    consts = consts or {}
    flat = flatten(bind_constants(u, consts))
    asg = flat.assignments()
    if not asg:
        return Idempotence.YES
    written = set(asg)
    if all(not (variables(rhs) & written) for rhs in asg.values()):
        return Idempotence.YES
    names = sorted(variables(flat))
    if any(constants(rhs) for rhs in asg.values()):
        return Idempotence.UNKNOWN
    ranges = []
    for n in names:
        b = _concrete_bounds(n, dom, consts)
        if b is None:
            return Idempotence.UNKNOWN
        ranges.append(b)
    if math.prod(hi - lo + 1 for lo, hi in ranges) > budget:
        return Idempotence.UNKNOWN
    for cols, count in _grid_chunks(ranges):
        env = dict(zip(names, cols))
        once = dict(env)
        once.update({l: np.broadcast_to(_np_eval(r, env, consts), (count,)) for l, r in asg.items()})
        twice = dict(once)
        twice.update({l: np.broadcast_to(_np_eval(r, once, consts), (count,)) for l, r in asg.items()})
        for l in asg:
            if np.any(once[l] != twice[l]):
                return Idempotence.NO
    return Idempotence.YES


# ---------------------------------------------------------------------------
# Symbolic refutation: propositional skeleton + per-linear-form intervals


@dataclass(frozen=True)
class _Atom:
    kind: str  # "le": form <= c ; "eq": form == c ; "opaque": uninterpreted
    form: tuple
    c: int = 0


@dataclass
class _Search:
    budget: int
    nodes: int = field(default=0)


def _atomize(p: Pred):
    """Map a simplified predicate to a formula over literal atoms."""
    match p:
        case BoolLit(v):
            return v
        case Not(a):
            return ("not", _atomize(a))
        case And(args):
            return ("and", tuple(_atomize(a) for a in args))
        case Or(args):
            return ("or", tuple(_atomize(a) for a in args))
        case Cmp(op, a, b):
            return _normalize_cmp(op, a, b)
    raise TypeError(p)


def _normalize_cmp(op, a, b):
    terms, k = _linear(BinOp("-", a, b))
    if not terms:
        return _CMP_FN[op](k, 0)
    items = sorted(terms.items(), key=lambda kv: _sort_key(kv[0]))
    # sum + k  op  0
    if op in ("=", "!="):
        lit_ = ("eq", -k)
    elif op == "<":
        lit_ = ("le", -k - 1)
    elif op == "<=":
        lit_ = ("le", -k)
    elif op == ">":
        lit_ = ("nle", -k)
    else:  # >=
        lit_ = ("nle", -k - 1)
    if items[0][1] < 0:
        items = [(t, -c) for t, c in items]
        kind, c = lit_
        if kind == "eq":
            lit_ = ("eq", -c)
        elif kind == "le":  # -s <= c  <=>  s >= -c  <=>  not (s <= -c-1)
            lit_ = ("nle", -c - 1)
        else:  # not(-s <= c)  <=>  s < -c  <=>  s <= -c-1
            lit_ = ("le", -c - 1)
    g = 0
    for _, c in items:
        g = math.gcd(g, abs(c))
    form = tuple((t, c // g) for t, c in items)
    kind, c = lit_
    positive = kind != "nle"
    if kind == "eq":
        if c % g:
            res = False
            return (not res) if op == "!=" else res
        atom = _Atom("eq", form, c // g)
        return atom if op == "=" else ("not", atom)
    atom = _Atom("le", form, math.floor(c / g) if c % g else c // g)
    return atom if positive else ("not", atom)


def _reduce(f, assign: dict):
    if isinstance(f, bool):
        return f
    if isinstance(f, _Atom):
        return assign.get(f, f)
    tag = f[0]
    if tag == "not":
        r = _reduce(f[1], assign)
        return (not r) if isinstance(r, bool) else ("not", r)
    parts = []
    for sub in f[1]:
        r = _reduce(sub, assign)
        if isinstance(r, bool):
            if r == (tag == "or"):
                return r
            continue
        parts.append(r)
    if not parts:
        return tag == "and"
    return (tag, tuple(parts))


def _first_atom(f):
    if isinstance(f, _Atom):
        return f
    if f[0] == "not":
        return _first_atom(f[1])
    for sub in f[1]:
        a = _first_atom(sub)
        if a is not None:
            return a
    return None


def _theory_consistent(assign: dict) -> bool:
    groups: dict = {}
    for atom, val in assign.items():
        g = groups.setdefault(atom.form, [-math.inf, math.inf, None, set()])
        if atom.kind == "le":
            if val:
                g[1] = min(g[1], atom.c)
            else:
                g[0] = max(g[0], atom.c + 1)
        else:
            if val:
                if g[2] is not None and g[2] != atom.c:
                    return False
                g[2] = atom.c
            else:
                g[3].add(atom.c)
    for lo, hi, exact, excluded in groups.values():
        if exact is not None:
            if exact in excluded or not lo <= exact <= hi:
                return False
        elif lo > hi:
            return False
        elif hi - lo < 64 and all(v in excluded for v in range(int(lo), int(hi) + 1)):
            return False
    return True


def _search(f, assign: dict, st: _Search) -> bool | None:
    """True if a theory-consistent propositional model may exist."""
    st.nodes += 1
    if st.nodes > st.budget:
        return None
    r = _reduce(f, assign)
    if r is False:
        return False
    if not _theory_consistent(assign):
        return False
    if r is True:
        return True
    atom = _first_atom(r)
    for val in (True, False):
        assign[atom] = val
        res = _search(r, assign, st)
        del assign[atom]
        if res is None or res:
            return res
    return False


def refute(p: Pred, dom: DomainMap, consts, node_budget: int = 20000) -> bool:
    """Sound (incomplete) proof that ``p`` has no model in ``dom``."""
    p = simplify(bind_constants(p, consts))
    parts = [p]
    for n in sorted(variables(p)):
        if n in dom:
            lo, hi = dom[n]
            parts.append(Cmp("<=", bind_constants(lit(lo), consts), Var(n)))
            parts.append(Cmp("<=", Var(n), bind_constants(lit(hi), consts)))
    f = _atomize(simplify(conj(*parts)))
    if isinstance(f, bool):
        return not f
    return _search(f, {}, _Search(node_budget)) is False


def implies(a: Pred, b: Pred, dom: DomainMap, consts=None, budget: int = DEFAULT_BUDGET) -> bool:
    """Best-effort validity of ``a -> b`` (False when undecided)."""
    return check_sat(conj(a, Not(b)), dom, consts, budget).unsatisfiable


def equivalent_on(a: Pred, b: Pred, names: Iterable[str], dom: DomainMap, consts=None) -> bool:
    """Brute-force truth-table equivalence over ``dom`` (test helper)."""
    consts = consts or {}
    names = sorted(names)
    ranges = [tuple(evaluate(lit(x), {}, consts) for x in dom[n]) for n in names]
    for combo in itertools.product(*(range(lo, hi + 1) for lo, hi in ranges)):
        nu = dict(zip(names, combo))
        if bool(evaluate(a, nu, consts)) != bool(evaluate(b, nu, consts)):
            return False
    return True
