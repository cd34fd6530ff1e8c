"""PCFP JSON documents with prefix s-expression strings for expressions."""

from __future__ import annotations

import json
import re
from fractions import Fraction

from .. import expr as E
from ..pcfp import Command, Destination, Location, Pcfp, Variable
from .prism import ParseError

FORMAT = "pcfp/1"

_BIN = {"+", "-", "*", "/"}
_CMP = set(E.CMP_OPS)


def to_sexpr(e) -> str:
    match e:
        case E.Lit(v):
            return str(v)
        case E.Var(n) | E.Const(n):
            return n
        case E.Neg(a):
            return f"(neg {to_sexpr(a)})"
        case E.BinOp(op, a, b) | E.Cmp(op, a, b):
            return f"({op} {to_sexpr(a)} {to_sexpr(b)})"
        case E.Call(fn, args):
            return f"({fn} {' '.join(to_sexpr(a) for a in args)})"
        case E.Ite(c, a, b):
            return f"(ite {to_sexpr(c)} {to_sexpr(a)} {to_sexpr(b)})"
        case E.BoolLit(v):
            return "true" if v else "false"
        case E.Not(a):
            return f"(not {to_sexpr(a)})"
        case E.And(args) | E.Or(args):
            head = "and" if isinstance(e, E.And) else "or"
            return "(" + " ".join([head] + [to_sexpr(a) for a in args]) + ")"
    raise TypeError(f"not an expression: {e!r}")


_SX_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def from_sexpr(text: str, constants=frozenset()):
    """Parse an s-expression; bare names in ``constants`` become constants."""
    toks = _SX_TOKEN.findall(text)
    if "".join(toks) != re.sub(r"\s+", "", text):
        raise ParseError(f"bad s-expression {text!r}")
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(toks):
            raise ParseError(f"unexpected end of s-expression {text!r}")
        t = toks[pos]
        pos += 1
        if t == ")":
            raise ParseError(f"unexpected ')' in {text!r}")
        if t != "(":
            if re.fullmatch(r"-?\d+", t):
                return E.Lit(int(t))
            if t in ("true", "false"):
                return E.BoolLit(t == "true")
            if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", t):
                raise ParseError(f"bad atom {t!r}")
            return E.Const(t) if t in constants else E.Var(t)
        if pos >= len(toks):
            raise ParseError(f"unexpected end of s-expression {text!r}")
        head = toks[pos]
        pos += 1
        args = []
        while pos < len(toks) and toks[pos] != ")":
            args.append(parse())
        if pos >= len(toks):
            raise ParseError(f"unbalanced s-expression {text!r}")
        pos += 1
        try:
            if head == "neg" and len(args) == 1:
                return E.Neg(args[0])
            if head in _BIN and len(args) == 2:
                return E.BinOp(head, *args)
            if head in _CMP and len(args) == 2:
                return E.Cmp(head, *args)
            if head in ("min", "max"):
                return E.Call(head, tuple(args))
            if head == "ite" and len(args) == 3:
                return E.Ite(*args)
            if head == "not" and len(args) == 1:
                return E.Not(args[0])
            if head == "and":
                return E.And(tuple(args))
            if head == "or":
                return E.Or(tuple(args))
        except ValueError as exc:
            raise ParseError(str(exc)) from None
        raise ParseError(f"unknown form ({head} ...) with {len(args)} arguments")

    out = parse()
    if pos != len(toks):
        raise ParseError(f"trailing input in s-expression {text!r}")
    return out


def _fmt_prob(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _var_doc(v: Variable) -> dict:
    return {"name": v.name, "lo": to_sexpr(v.lo), "hi": to_sexpr(v.hi), "init": to_sexpr(v.init), "kind": v.kind}


def pcfp_to_dict(p: Pcfp) -> dict:
    return {
        "format": FORMAT,
        "type": p.model_type,
        "constants": [{"name": k, "value": v} for k, v in p.constants],
        "variables": [_var_doc(v) for v in p.variables],
        "unfolded": [_var_doc(v) for v in p.unfolded],
        "locations": [
            {"id": l.name, "base": l.base, "label": {k: v for k, v in l.label}} for l in p.locations
        ],
        "initial": {
            "location": p.initial,
            "valuation": {v.name: to_sexpr(v.init) for v in p.variables},
        },
        "commands": [
            {
                "tag": c.tag,
                "source": c.source,
                "guard": to_sexpr(c.guard),
                "branches": [
                    {
                        "prob": _fmt_prob(d.prob),
                        "update": [[{"lhs": l, "rhs": to_sexpr(r)} for l, r in block] for block in d.update.blocks],
                        "target": d.target,
                    }
                    for d in c.destinations
                ],
            }
            for c in p.commands
        ],
        "labels": [{"name": n, "pred": to_sexpr(pr)} for n, pr in p.labels],
    }


def serialize_pcfp(p: Pcfp) -> str:
    return json.dumps(pcfp_to_dict(p), indent=2) + "\n"


def _prob(text: str) -> Fraction:
    if not re.fullmatch(r"\d+(/\d+)?", text):
        raise ParseError(f"probability must be written num/den, got {text!r}")
    return Fraction(text)


def pcfp_from_dict(doc: dict) -> Pcfp:
    try:
        consts = tuple((c["name"], c.get("value")) for c in doc.get("constants", []))
        names = frozenset(k for k, _ in consts)
        sx = lambda s: from_sexpr(s, names)

        def var(d):
            return Variable(d["name"], sx(d["lo"]), sx(d["hi"]), sx(d["init"]), d.get("kind", "int"))

        variables = tuple(var(d) for d in doc["variables"])
        init_vals = doc.get("initial", {}).get("valuation")
        if init_vals:
            variables = tuple(
                Variable(v.name, v.lo, v.hi, sx(init_vals[v.name]) if v.name in init_vals else v.init, v.kind)
                for v in variables
            )
        unfolded = tuple(var(d) for d in doc.get("unfolded", []))
        locations = tuple(
            Location(l["id"], l.get("base", l["id"]), tuple(sorted(l.get("label", {}).items())))
            for l in doc["locations"]
        )
        commands = []
        for i, c in enumerate(doc["commands"]):
            dests = []
            for b in c["branches"]:
                blocks = tuple(tuple((a["lhs"], sx(a["rhs"])) for a in block) for block in b.get("update", []))
                dests.append(Destination(_prob(b["prob"]), E.Update(blocks), b.get("target")))
            commands.append(Command(c.get("tag", f"c{i}"), c["source"], sx(c["guard"]), tuple(dests)))
        labels = tuple((l["name"], sx(l["pred"])) for l in doc.get("labels", []))
        p = Pcfp(locations, variables, tuple(commands), doc["initial"]["location"], consts, unfolded, labels,
                 doc.get("type", "dtmc"))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed PCFP document: missing or bad field {exc}") from None
    p.validate()
    return p


def parse_pcfp(text: str) -> Pcfp:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return pcfp_from_dict(doc)
