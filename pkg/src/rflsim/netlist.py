"""Line-oriented netlist text <-> CircuitGraph.

::

    # comment
    jj  j0 n1 gnd ic=1 cj=1 [rshunt=10]
    ind l1 n1 n2 l=0.1111
    cap c1 n1 n2 c=2
    res r1 n1 gnd r=3
    ljj s1 gnd n0..n59 ic=1 cj=1 l=0.1111
    probe node n1 [name=p]
    probe branch l1 [quantity=current] [name=i1]

The ``ljj`` macro expands to junctions ``<label>.j<k>`` from each node to
the ground node and inductors ``<label>.l<k>`` between neighbours.
Emission writes primitives only, with ``repr`` floats, so one emit pass is a
normal form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .circuit import (
    GROUND,
    Capacitor,
    CircuitError,
    CircuitGraph,
    Inductor,
    JosephsonJunction,
    Probe,
    Resistor,
)

ELEMENTS = {
    "jj": (JosephsonJunction, ("ic", "cj"), ("rshunt",)),
    "ind": (Inductor, ("l",), ()),
    "cap": (Capacitor, ("c",), ()),
    "res": (Resistor, ("r",), ()),
}
RANGE = re.compile(r"^(.*?)(\d+)\.\.(.*?)(\d+)$")


class NetlistError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        self.line, self.col = line, col
        super().__init__(f"line {line}, col {col}: {msg}")


@dataclass
class _Tok:
    text: str
    col: int


def _tokens(line: str) -> list[_Tok]:
    return [_Tok(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _attrs(toks: list[_Tok], required, optional, lineno: int, stmt_col: int) -> dict:
    out = {}
    for t in toks:
        if "=" not in t.text:
            raise NetlistError(f"expected key=value, got {t.text!r}", lineno, t.col)
        k, v = t.text.split("=", 1)
        if k not in required and k not in optional:
            raise NetlistError(f"unknown attribute {k!r}", lineno, t.col)
        if k in out:
            raise NetlistError(f"repeated attribute {k!r}", lineno, t.col)
        try:
            out[k] = float(v)
        except ValueError:
            raise NetlistError(f"non-numeric value {v!r} for {k}", lineno, t.col + len(k) + 1) from None
    for k in required:
        if k not in out:
            raise NetlistError(f"missing required attribute {k}=", lineno, stmt_col)
    return out


def _expand_range(tok: _Tok, lineno: int) -> list[str]:
    m = RANGE.match(tok.text)
    if not m or m.group(1) != m.group(3):
        raise NetlistError(f"expected node range like n0..n59, got {tok.text!r}", lineno, tok.col)
    lo, hi = int(m.group(2)), int(m.group(4))
    if hi <= lo:
        raise NetlistError("node range must be increasing with at least two nodes", lineno, tok.col)
    return [f"{m.group(1)}{k}" for k in range(lo, hi + 1)]


def parse_netlist(text: str, ground: str = GROUND) -> CircuitGraph:
    branches: list = []
    probes: list[Probe] = []
    where: dict[str, tuple[int, int]] = {}

    def add(b, lineno, col):
        if b.label in where:
            first = where[b.label][0]
            raise NetlistError(f"duplicate label {b.label!r} (first on line {first})", lineno, col)
        where[b.label] = (lineno, col)
        branches.append(b)

    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = _tokens(raw.split("#", 1)[0])
        if not toks:
            continue
        kind = toks[0]
        try:
            if kind.text in ELEMENTS:
                cls, req, opt = ELEMENTS[kind.text]
                if len(toks) < 4:
                    raise NetlistError(f"{kind.text} needs <label> <n+> <n->", lineno, kind.col)
                label, n1, n2 = (t.text for t in toks[1:4])
                kw = _attrs(toks[4:], req, opt, lineno, kind.col)
                add(cls(label, n1, n2, **kw), lineno, toks[1].col)
            elif kind.text == "ljj":
                if len(toks) < 4:
                    raise NetlistError("ljj needs <label> <ground-node> <first>..<last>", lineno, kind.col)
                label, ref = toks[1].text, toks[2].text
                nodes = _expand_range(toks[3], lineno)
                kw = _attrs(toks[4:], ("ic", "cj", "l"), (), lineno, kind.col)
                for k, n in enumerate(nodes):
                    add(JosephsonJunction(f"{label}.j{k}", n, ref, kw["ic"], kw["cj"]), lineno, toks[1].col)
                    if k:
                        add(Inductor(f"{label}.l{k}", nodes[k - 1], n, kw["l"]), lineno, toks[1].col)
            elif kind.text == "probe":
                if len(toks) < 3 or toks[1].text not in ("node", "branch"):
                    raise NetlistError("expected 'probe node <n>' or 'probe branch <label>'", lineno, kind.col)
                extra = {}
                for t in toks[3:]:
                    k, _, v = t.text.partition("=")
                    if k not in ("name", "quantity") or not v:
                        raise NetlistError(f"bad probe option {t.text!r}", lineno, t.col)
                    extra[k] = v
                target = toks[2].text
                probes.append(Probe(extra.get("name", target), toks[1].text, target, extra.get("quantity", "phase")))
            else:
                raise NetlistError(f"unknown element kind {kind.text!r}", lineno, kind.col)
        except CircuitError as e:
            raise NetlistError(str(e), lineno, kind.col) from None
    if not branches:
        raise NetlistError("netlist has no branches", 1, 1)
    return CircuitGraph.from_branches(branches, probes, ground)


def _num(x: float) -> str:
    return repr(float(x))


def emit_netlist(g: CircuitGraph) -> str:
    lines = []
    for b in g.branches:
        head = f"{b.label} {b.n_plus} {b.n_minus}"
        if isinstance(b, JosephsonJunction):
            s = f"jj {head} ic={_num(b.ic)} cj={_num(b.cj)}"
            if b.rshunt is not None:
                s += f" rshunt={_num(b.rshunt)}"
        elif isinstance(b, Inductor):
            s = f"ind {head} l={_num(b.l)}"
        elif isinstance(b, Capacitor):
            s = f"cap {head} c={_num(b.c)}"
        else:
            s = f"res {head} r={_num(b.r)}"
        lines.append(s)
    for p in g.probes:
        s = f"probe {p.kind} {p.target}"
        if p.quantity != "phase":
            s += f" quantity={p.quantity}"
        if p.name != p.target:
            s += f" name={p.name}"
        lines.append(s)
    return "\n".join(lines) + "\n"


def same_circuit(g1: CircuitGraph, g2: CircuitGraph) -> bool:
    """Equal up to branch and probe ordering."""
    key = lambda b: b.label  # noqa: E731
    return (
        sorted(g1.branches, key=key) == sorted(g2.branches, key=key)
        and set(g1.probes) == set(g2.probes)
        and set(g1.nodes) == set(g2.nodes)
        and g1.ground == g2.ground
    )
