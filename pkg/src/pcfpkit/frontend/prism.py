"""Lexer and recursive-descent parser for a single-module PRISM subset.

Supported: ``dtmc``/``mdp`` header, integer and Boolean constants, one module
with bounded integer and Boolean variables, unlabelled commands, labels, and
reachability properties ``P=? [ F pred ]`` (also ``Pmax``/``Pmin``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .. import expr as E
from ..pcfp import Command, Destination, GoalSpec, Location, Objective, Pcfp, Variable


class ParseError(SyntaxError):
    def __init__(self, msg: str, line: int = 0, col: int = 0, hint: str = ""):
        full = f"{line}:{col}: {msg}" + (f" (hint: {hint})" if hint else "")
        super().__init__(full)
        self.line, self.col, self.hint = line, col, hint


class ModelTypeError(TypeError):
    pass


class MultipleModules(ParseError):
    pass


class DuplicateVariable(ParseError):
    pass


class UnknownVariable(ParseError):
    pass


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<num>\d+\.(?!\.)\d*|\.\d+|\d+)
  | (?P<str>"[^"\n]*")
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>->|\.\.|<=|>=|!=|=>|<=>|[-+*/<>=&|!()\[\]:;,'?{}])
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "dtmc", "mdp", "ctmc", "pta", "probabilistic", "nondeterministic", "stochastic",
    "const", "int", "bool", "double", "module", "endmodule", "end", "init", "true",
    "false", "label", "formula", "rewards", "endrewards", "min", "max", "global",
}


@dataclass(frozen=True)
class Token:
    kind: str  # num, str, id, op, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# Parsed expression with a type tag: "int" or "bool".
@dataclass(frozen=True)
class Typed:
    node: object
    ty: str


class _Parser:
    def __init__(self, text: str, var_kinds: dict | None = None, const_kinds: dict | None = None,
                 labels: dict | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.var_kinds = var_kinds if var_kinds is not None else {}
        self.const_kinds = const_kinds if const_kinds is not None else {}
        self.labels = labels if labels is not None else {}
        self.strict_names = True

    # -- token helpers ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Token | None = None, hint: str = "", cls=ParseError):
        t = tok or self.tok
        return cls(msg, t.line, t.col, hint)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "id")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str, hint: str = "") -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}", hint=hint)
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "id" or t.text in KEYWORDS:
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    # -- expressions -----------------------------------------------------

    def as_int(self, e: Typed, tok: Token | None = None) -> E.IntExpr:
        if e.ty == "int":
            return e.node
        if isinstance(e.node, E.BoolLit):
            return E.Lit(int(e.node.value))
        return E.Ite(e.node, E.Lit(1), E.Lit(0))

    def as_bool(self, e: Typed, tok: Token | None = None) -> E.Pred:
        if e.ty == "bool":
            return e.node
        raise self.error("expected a Boolean expression", tok, cls=ModelTypeError)

    def expression(self) -> Typed:
        start = self.tok
        cond = self.disjunction()
        if self.accept("?"):
            a = self.expression()
            self.expect(":")
            b = self.expression()
            c = self.as_bool(cond, start)
            if a.ty == "bool" and b.ty == "bool":
                return Typed(E.disj(E.conj(c, a.node), E.conj(E.Not(c), b.node)), "bool")
            return Typed(E.Ite(c, self.as_int(a), self.as_int(b)), "int")
        return cond

    def disjunction(self) -> Typed:
        start = self.tok
        parts = [self.conjunction()]
        while self.accept("|"):
            parts.append(self.conjunction())
        if len(parts) == 1:
            return parts[0]
        return Typed(E.Or(tuple(self.as_bool(p, start) for p in parts)), "bool")

    def conjunction(self) -> Typed:
        start = self.tok
        parts = [self.negation()]
        while self.accept("&"):
            parts.append(self.negation())
        if len(parts) == 1:
            return parts[0]
        return Typed(E.And(tuple(self.as_bool(p, start) for p in parts)), "bool")

    def negation(self) -> Typed:
        start = self.tok
        if self.accept("!"):
            return Typed(E.Not(self.as_bool(self.negation(), start)), "bool")
        return self.comparison()

    def comparison(self) -> Typed:
        first = self.additive()
        operands = [first]
        ops = []
        while self.tok.kind == "op" and self.tok.text in E.CMP_OPS:
            ops.append(self.tok.text)
            self.i += 1
            operands.append(self.additive())
        if not ops:
            return first
        ints = [self.as_int(o) for o in operands]
        if len(ops) == 1 and operands[0].ty == "bool" and operands[1].ty == "bool" and ops[0] in ("=", "!="):
            a, b = operands[0].node, operands[1].node
            iff = E.Or((E.And((a, b)), E.And((E.Not(a), E.Not(b)))))
            if isinstance(b, E.BoolLit):
                iff = a if b.value else E.Not(a)
            if ops[0] == "!=":
                iff = E.Not(iff)
            return Typed(iff, "bool")
        cmps = [E.Cmp(op, ints[k], ints[k + 1]) for k, op in enumerate(ops)]
        # chained comparisons such as 0<x<N mean 0<x & x<N
        return Typed(cmps[0] if len(cmps) == 1 else E.And(tuple(cmps)), "bool")

    def additive(self) -> Typed:
        left = self.multiplicative()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            right = self.multiplicative()
            left = Typed(E.BinOp(op, self.as_int(left), self.as_int(right)), "int")
        return left

    def multiplicative(self) -> Typed:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.tok
            self.i += 1
            right = self.unary()
            r = self.as_int(right)
            if op.text == "/" and not isinstance(r, (E.Lit, E.Const)):
                raise self.error("divisor must be a literal or a constant", op)
            left = Typed(E.BinOp(op.text, self.as_int(left), r), "int")
        return left

    def unary(self) -> Typed:
        if self.accept("-"):
            if self.tok.kind == "num" and "." not in self.tok.text:
                lit_tok = self.tok
                self.i += 1
                return Typed(E.Lit(-int(lit_tok.text)), "int")
            return Typed(E.Neg(self.as_int(self.unary())), "int")
        return self.atom()

    def atom(self) -> Typed:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            if "." in t.text:
                raise self.error("non-integer literal in an integer expression", t, cls=ParseError)
            return Typed(E.Lit(int(t.text)), "int")
        if t.kind == "str":
            self.i += 1
            name = t.text[1:-1]
            if name not in self.labels:
                raise self.error(f"unknown label {name!r}", t, cls=UnknownVariable)
            return Typed(self.labels[name], "bool")
        if self.accept("("):
            e = self.expression()
            self.expect(")")
            return e
        if t.kind == "id":
            if t.text in ("true", "false"):
                self.i += 1
                return Typed(E.BoolLit(t.text == "true"), "bool")
            if t.text in ("min", "max"):
                self.i += 1
                self.expect("(")
                args = [self.as_int(self.expression())]
                while self.accept(","):
                    args.append(self.as_int(self.expression()))
                self.expect(")")
                return Typed(E.Call(t.text, tuple(args)), "int")
            name = self.ident().text
            if name in self.var_kinds:
                v = E.Var(name)
                if self.var_kinds[name] == "bool":
                    return Typed(E.Cmp("=", v, E.Lit(1)), "bool")
                return Typed(v, "int")
            if name in self.const_kinds:
                c = E.Const(name)
                if self.const_kinds[name] == "bool":
                    return Typed(E.Cmp("=", c, E.Lit(1)), "bool")
                return Typed(c, "int")
            if self.strict_names:
                raise self.error(f"unknown identifier {name!r}", t, cls=UnknownVariable)
            return Typed(E.Var(name), "int")
        raise self.error(f"unexpected {t.text or 'end of input'!r}")

    def int_expr(self) -> E.IntExpr:
        return self.as_int(self.expression())

    def pred(self) -> E.Pred:
        start = self.tok
        return self.as_bool(self.expression(), start)

    # -- probabilities ---------------------------------------------------

    def probability(self, consts: dict) -> Fraction:
        return self._prob_add(consts)

    def _prob_add(self, consts) -> Fraction:
        # a '+' met while reading a probability is arithmetic: destination
        # separators only follow an update
        v = self._prob_mul(consts)
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            w = self._prob_mul(consts)
            v = v + w if op == "+" else v - w
        return v

    def _prob_mul(self, consts) -> Fraction:
        v = self._prob_atom(consts)
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.tok
            self.i += 1
            w = self._prob_atom(consts)
            if op.text == "/":
                if w == 0:
                    raise self.error("division by zero in probability", op)
                v = v / w
            else:
                v = v * w
        return v

    def _prob_atom(self, consts) -> Fraction:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Fraction(t.text)
        if self.accept("("):
            v = self._prob_add(consts)
            self.expect(")")
            return v
        if self.accept("-"):
            return -self._prob_atom(consts)
        if t.kind == "id" and t.text in self.const_kinds:
            self.i += 1
            val = consts.get(t.text)
            if val is None:
                raise self.error(f"probability uses undefined constant {t.text}", t, cls=ModelTypeError)
            return Fraction(val)
        raise self.error(f"expected a probability, found {t.text or 'end of input'!r}")


def _type_error(p: _Parser, msg: str, tok: Token) -> ModelTypeError:
    return ModelTypeError(f"{tok.line}:{tok.col}: {msg}")


def parse_model(text: str, constants: dict | None = None) -> Pcfp:
    """Parse a single-module program into a one-location PCFP.

    ``constants`` overrides or defines constant values.
    """
    ps = _Parser(text)
    model_type = "dtmc"
    consts: dict = {}
    order: list = []
    while ps.tok.kind == "id" and ps.tok.text in ("dtmc", "mdp", "ctmc", "pta", "probabilistic", "nondeterministic", "stochastic"):
        t = ps.tok
        ps.i += 1
        if t.text in ("ctmc", "pta", "stochastic"):
            raise _type_error(ps, f"model type {t.text} is not supported", t)
        model_type = {"probabilistic": "dtmc", "nondeterministic": "mdp"}.get(t.text, t.text)

    module_seen = False
    variables: list = []
    commands: list = []
    labels: list = []
    module_name = "main"
    while ps.tok.kind != "eof":
        t = ps.tok
        if ps.accept("const"):
            kind = "int"
            if ps.tok.text in ("int", "bool", "double"):
                kind = ps.tok.text
                ps.i += 1
            if kind == "double":
                raise _type_error(ps, "only integer and Boolean constants are supported", t)
            name_tok = ps.ident()
            name = name_tok.text
            if name in consts:
                raise ps.error(f"constant {name} declared twice", name_tok, cls=DuplicateVariable)
            value = None
            if ps.accept("="):
                e = ps.expression()
                node = ps.as_int(e)
                try:
                    value = E.evaluate(node, {}, consts)
                except E.ExprError as exc:
                    raise ps.error(f"cannot evaluate constant {name}: {exc}", name_tok) from None
            ps.const_kinds[name] = kind
            consts[name] = value
            order.append(name)
            ps.expect(";")
            if constants and name in constants:
                consts[name] = int(constants[name])
        elif ps.accept("module"):
            if module_seen:
                raise ps.error("only one module is supported", t, cls=MultipleModules)
            module_seen = True
            module_name = ps.ident().text
            _module_body(ps, variables, commands, consts, module_name)
        elif ps.accept("label"):
            name_tok = ps.tok
            if name_tok.kind != "str":
                raise ps.error("expected a quoted label name")
            ps.i += 1
            ps.expect("=")
            pred = ps.pred()
            ps.expect(";")
            labels.append((name_tok.text[1:-1], pred))
            ps.labels[name_tok.text[1:-1]] = pred
        elif ps.at("formula") or ps.at("rewards") or ps.at("global"):
            raise ps.error(f"{t.text!r} is not supported")
        else:
            raise ps.error(f"unexpected {t.text!r} at top level")
    if not module_seen:
        raise ps.error("no module found")
    if constants:
        for k in constants:
            if k not in consts:
                raise KeyError(f"unknown constant {k}")
    loc = Location(module_name)
    cmds = [Command(f"c{i}", module_name, g, tuple(Destination(pr, u, module_name) for pr, u in ds))
            for i, (g, ds) in enumerate(commands)]
    p = Pcfp((loc,), tuple(variables), tuple(cmds), module_name,
             tuple((k, consts[k]) for k in order), (), tuple(labels), model_type)
    p.validate()
    return p


def _module_body(ps: _Parser, variables: list, commands: list, consts: dict, module_name: str) -> None:
    while True:
        t = ps.tok
        if ps.accept("endmodule"):
            return
        if ps.at("end") and ps.peek().text == "module":
            ps.i += 2
            return
        if t.kind == "eof":
            raise ps.error("missing 'endmodule'")
        if ps.at("["):
            commands.append(_command(ps, consts))
        elif t.kind == "id" and ps.peek().text == ":":
            variables.append(_var_decl(ps, variables, consts))
        else:
            raise ps.error(f"unexpected {t.text!r} in module {module_name}")


def _var_decl(ps: _Parser, variables: list, consts: dict) -> Variable:
    name_tok = ps.ident()
    name = name_tok.text
    if name in ps.var_kinds or name in ps.const_kinds:
        raise ps.error(f"variable {name} declared twice", name_tok, cls=DuplicateVariable)
    ps.expect(":")
    if ps.accept("bool"):
        init: E.IntExpr = E.Lit(0)
        if ps.accept("init"):
            init = ps.as_int(ps.expression())
        ps.expect(";")
        ps.var_kinds[name] = "bool"
        return Variable(name, E.Lit(0), E.Lit(1), init, "bool")
    ps.expect("[")
    lo = ps.int_expr()
    ps.expect("..")
    hi = ps.int_expr()
    ps.expect("]")
    init = lo
    if ps.accept("init"):
        init = ps.int_expr()
    ps.expect(";")
    ps.var_kinds[name] = "int"
    return Variable(name, lo, hi, init, "int")


def _command(ps: _Parser, consts: dict):
    open_tok = ps.expect("[")
    if not ps.at("]"):
        raise ps.error("synchronisation labels are not supported", open_tok)
    ps.expect("]")
    guard = ps.pred()
    ps.expect("->")
    dests = []
    while True:
        start = ps.i
        # a destination is either "prob : update" or a bare update (prob 1)
        prob = Fraction(1)
        if not _starts_update(ps):
            prob = ps.probability(consts)
            ps.expect(":")
        else:
            ps.i = start
        dests.append((prob, _update(ps)))
        if not ps.accept("+"):
            break
    ps.expect(";")
    return guard, dests


def _starts_update(ps: _Parser) -> bool:
    t = ps.tok
    if t.text == "true" and t.kind == "id":
        return True
    if t.text == "(" and ps.peek().kind == "id" and ps.peek(2).text in ("'", "="):
        return True
    return False


def _update(ps: _Parser) -> E.Update:
    if ps.accept("true"):
        return E.NOP
    block: dict = {}
    while True:
        ps.expect("(")
        lhs_tok = ps.ident()
        name = lhs_tok.text
        if name not in ps.var_kinds:
            raise ps.error(f"assignment to unknown variable {name!r}", lhs_tok, cls=UnknownVariable)
        if not ps.accept("'"):
            raise ps.error(f"assignment to {name} must be primed", lhs_tok, hint=f"write ({name}'=...)")
        ps.expect("=")
        rhs = ps.as_int(ps.expression())
        if name in block:
            raise ps.error(f"variable {name} assigned twice in one update", lhs_tok)
        block[name] = rhs
        if ps.at(";"):
            raise ps.error(
                "assignments inside one update are joined with '&'",
                hint="write (x'=x+2) & (f'=false) instead of (x'=x+2; f=false)",
            )
        ps.expect(")")
        if not ps.accept("&"):
            break
    return E.Update.of(block)


def parse_property(text: str, model: Pcfp | None = None) -> GoalSpec:
    """Parse ``P=? [ F pred ]``, ``Pmax=? [ F pred ]`` or ``Pmin=? [ F pred ]``."""
    var_kinds: dict = {}
    const_kinds: dict = {}
    labels: dict = {}
    if model is not None:
        for v in model.variables + model.unfolded:
            var_kinds[v.name] = v.kind
        const_kinds = {k: "int" for k, _ in model.constants}
        labels = dict(model.labels)
    ps = _Parser(text, var_kinds, const_kinds, labels)
    ps.strict_names = model is not None
    head = ps.tok
    if head.kind != "id" or head.text not in ("P", "Pmax", "Pmin"):
        raise ps.error("property must start with P, Pmax or Pmin")
    ps.i += 1
    objective = {"P": Objective.FORCED, "Pmax": Objective.MAXIMIZE, "Pmin": Objective.MINIMIZE}[head.text]
    if head.text == "P" and ps.tok.text in ("max", "min"):
        objective = Objective.MAXIMIZE if ps.tok.text == "max" else Objective.MINIMIZE
        ps.i += 1
    ps.expect("=")
    ps.expect("?")
    ps.expect("[")
    if not (ps.tok.kind == "id" and ps.tok.text == "F"):
        raise ps.error("only eventually-properties 'F pred' are supported")
    ps.i += 1
    pred = ps.pred()
    ps.expect("]")
    if ps.tok.kind != "eof":
        raise ps.error(f"trailing input {ps.tok.text!r}")
    return GoalSpec(objective, pred)


def parse_pred(text: str, model: Pcfp | None = None) -> E.Pred:
    var_kinds = {v.name: v.kind for v in (model.variables + model.unfolded)} if model else {}
    const_kinds = {k: "int" for k, _ in model.constants} if model else {}
    ps = _Parser(text, var_kinds, const_kinds, dict(model.labels) if model else {})
    ps.strict_names = model is not None
    p = ps.pred()
    if ps.tok.kind != "eof":
        raise ps.error(f"trailing input {ps.tok.text!r}")
    return p


# ---------------------------------------------------------------------------
# printing


def _fmt_prob(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_pred(p: E.Pred, bools: set) -> str:
    """PRISM syntax; comparisons of Boolean variables with 1/0 print as ``f``/``!f``."""

    def go(e, prec=0):
        match e:
            case E.Cmp("=", E.Var(n), E.Lit(v)) if n in bools and v in (0, 1):
                return n if v == 1 else f"!{n}"
            case E.Cmp("!=", E.Var(n), E.Lit(v)) if n in bools and v in (0, 1):
                return f"!{n}" if v == 1 else n
            case E.Not(a):
                return "!" + go(a, 3)
            case E.And(args):
                s = " & ".join(go(a, 3) for a in args)
                return f"({s})" if prec > 2 else s
            case E.Or(args):
                s = " | ".join(go(a, 2) for a in args)
                return f"({s})" if prec > 1 else s
        return E.show(e, prec)

    return go(p)


def format_model(p: Pcfp) -> str:
    """Render a single-location PCFP as PRISM text."""
    if len(p.locations) != 1:
        raise ValueError("only single-location programs have a PRISM rendering")
    bools = {v.name for v in p.variables if v.kind == "bool"}
    lines = [p.model_type, ""]
    for name, value in p.constants:
        lines.append(f"const int {name};" if value is None else f"const int {name} = {value};")
    if p.constants:
        lines.append("")
    loc = p.locations[0]
    if loc.label:
        lines.append("// unfolded: " + ", ".join(f"{k}={v}" for k, v in loc.label))
    lines.append(f"module {loc.base}")
    for v in p.variables:
        if v.kind == "bool":
            init = "true" if v.init == E.Lit(1) else "false" if v.init == E.Lit(0) else E.show(v.init)
            lines.append(f"    {v.name} : bool init {init};")
        else:
            lines.append(f"    {v.name} : [{E.show(v.lo)}..{E.show(v.hi)}] init {E.show(v.init)};")
    for c in p.commands:
        parts = []
        for d in c.destinations:
            upd = E.flatten(d.update).assignments()
            if not upd:
                u = "true"
            else:
                u = " & ".join(
                    f"({k}'={('true' if r == E.Lit(1) else 'false') if k in bools and r in (E.Lit(0), E.Lit(1)) else E.show(r)})"
                    for k, r in sorted(upd.items())
                )
            parts.append(f"{_fmt_prob(d.prob)}:{u}")
        lines.append(f"    [] {format_pred(c.guard, bools)} -> {' + '.join(parts)};")
    lines.append("endmodule")
    for name, pred in p.labels:
        lines.append(f'label "{name}" = {format_pred(pred, bools)};')
    return "\n".join(lines) + "\n"
