"""Gate circuits built from LJJ chains and interface cells.

Every builder returns a :class:`GateCircuit`: the circuit graph plus the
layout of each chain, so that kinks can be placed on inputs and detected on
outputs.  All element values are in the bulk units of the data LJJ
(C_J = I_c = 1, L = (a/lambda_J)^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from .circuit import (
    CircuitError,
    CircuitGraph,
    Inductor,
    JosephsonJunction,
    Probe,
    clamp_inductance,
)
from .ljj import ChainLayout, LJJParams, add_chain, terminal_node
from .units import DEFAULT_UNITS

L_BULK = DEFAULT_UNITS.L
INPUT_CELLS = 40
OUTPUT_CELLS = 80


def _input_ljj(cells: int = INPUT_CELLS) -> LJJParams:
    return LJJParams(cells=cells)


def _output_ljj(cells: int = OUTPUT_CELLS) -> LJJParams:
    return LJJParams(cells=cells)


@dataclass(frozen=True)
class GateCircuit:
    kind: str
    graph: CircuitGraph
    chains: Mapping[str, ChainLayout]
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    #: builder parameters and gate-specific extras (admissible v0 range, ...)
    meta: Mapping[str, object] = field(default_factory=dict)

    def chain(self, name: str) -> ChainLayout:
        return self.chains[name]


def _positive(obj, names):
    for n in names:
        v = getattr(obj, n)
        if v is not None and not v > 0:
            raise CircuitError(f"{type(obj).__name__}.{n} must be > 0, got {v}")


def _bridge_inductance(l: float, label: str) -> float:
    """0 means an ideal short; anything else is held to the inductance floor."""
    if l == 0:
        return 0.0
    if l < 0:
        raise CircuitError(f"{label} must be >= 0")
    return clamp_inductance(l, label)


# --- 1-bit interface -------------------------------------------------------------


@dataclass(frozen=True)
class AlphaPath:
    """Series path alpha - outer rail JJ - alpha parallel to the rail JJ.

    Stands in for a pair of weakly excited spectator LJJs (each with its
    termination JJ reduced to one effective junction alpha) plus the rail JJ
    joining them.
    """

    alpha_cj: float
    alpha_ic: float
    outer_cj: float
    outer_ic: float

    def __post_init__(self):
        _positive(self, ("alpha_cj", "alpha_ic", "outer_cj", "outer_ic"))


@dataclass(frozen=True)
class OneBitInterfaceParams:
    """Two LJJs joined by termination JJs, a rail JJ and a bridge.

    The rail JJ joins the lower (reference) rails, optionally in series with
    ``rail_l`` and optionally paralleled by an :class:`AlphaPath`.  The
    bridge joins the upper rails: an inductor ``bridge_l`` (0 = ideal short),
    optionally in series with a junction ``bridge_jj`` = (cj, ic).  The plain
    gate uses neither option.
    """

    term_cj: float = 5.8
    term_ic: float = 1.5
    rail_cj: float = 15.0
    rail_ic: float = 1.5
    rail_l: float = 0.0
    bridge_l: float = 0.0
    bridge_jj: tuple[float, float] | None = None
    alpha: AlphaPath | None = None
    left: LJJParams = field(default_factory=_input_ljj)
    right: LJJParams = field(default_factory=_output_ljj)

    def __post_init__(self):
        _positive(self, ("term_cj", "term_ic", "rail_cj", "rail_ic"))
        if self.bridge_l < 0 or self.rail_l < 0:
            raise CircuitError("bridge_l and rail_l must be >= 0")
        if self.bridge_jj is not None and min(self.bridge_jj) <= 0:
            raise CircuitError("bridge_jj values must be > 0")

    def with_ratios(self, **ratios: float) -> "OneBitInterfaceParams":
        changes = {}
        for key, val in ratios.items():
            if key not in ONE_BIT_RATIO_FIELDS:
                raise KeyError(f"unknown 1-bit parameter {key!r}")
            f = ONE_BIT_RATIO_FIELDS[key]
            changes[f] = val * L_BULK if f in ("bridge_l", "rail_l") else val
        return replace(self, **changes)


ONE_BIT_RATIO_FIELDS = {
    "CJhat_over_CJ": "term_cj",
    "Ichat_over_Ic": "term_ic",
    "CJB_over_CJ": "rail_cj",
    "IcB_over_Ic": "rail_ic",
    "LB_over_L": "rail_l",
    "Lhat_over_L": "bridge_l",
}

#: the two-fluxon IDSN reduction (rail A as the rail JJ), which undergoes NOT dynamics
NOT_PRESET = OneBitInterfaceParams()


def build_one_bit(p: OneBitInterfaceParams, kind: str = "one_bit") -> GateCircuit:
    branches: list = []
    term = (p.term_ic, p.term_cj, None)
    left = add_chain(branches, "in", p.left, "gnd", "input", termination=term)
    e_left = terminal_node(left)
    bridge_l = _bridge_inductance(p.bridge_l, "bridge_l")
    plain_short = bridge_l == 0 and p.bridge_jj is None
    right = add_chain(
        branches,
        "out",
        p.right,
        "rail",
        "output",
        termination=term,
        terminal=e_left if plain_short else None,
    )
    rail_l = _bridge_inductance(p.rail_l, "rail_l")
    if rail_l > 0:
        branches.append(JosephsonJunction("JB", "rail", "railB", p.rail_ic, p.rail_cj))
        branches.append(Inductor("LB", "railB", "gnd", rail_l))
    else:
        branches.append(JosephsonJunction("JB", "rail", "gnd", p.rail_ic, p.rail_cj))
    probes = [
        Probe("phiB", "branch", "JB"),
        Probe("term.L", "branch", left.jj_labels[-1]),
        Probe("term.R", "branch", right.jj_labels[0]),
    ]
    if not plain_short:
        e_right = terminal_node(right)
        if p.bridge_jj is not None:
            cj, ic = p.bridge_jj
            far = "bridge" if bridge_l > 0 else e_right
            branches.append(JosephsonJunction("JA", e_left, far, ic, cj))
            if bridge_l > 0:
                branches.append(Inductor("Lhat", "bridge", e_right, bridge_l))
            probes.append(Probe("phiA", "branch", "JA"))
        else:
            branches.append(Inductor("Lhat", e_left, e_right, bridge_l))
    if p.alpha is not None:
        a = p.alpha
        branches.append(JosephsonJunction("Jalpha.L", "gnd", "alphaL", a.alpha_ic, a.alpha_cj))
        branches.append(JosephsonJunction("JC", "alphaL", "alphaR", a.outer_ic, a.outer_cj))
        branches.append(JosephsonJunction("Jalpha.R", "rail", "alphaR", a.alpha_ic, a.alpha_cj))
        probes.append(Probe("phiC", "branch", "JC"))
    g = CircuitGraph.from_branches(branches, probes)
    return GateCircuit(kind, g, {"in": left, "out": right}, ("in",), ("out",), {"params": p})


# --- IDSN ---------------------------------------------------------------------------

#: ratio names used by scenario files and sweeps
IDSN_RATIO_FIELDS = {
    "CJA_over_CJ": "ca",
    "IcA_over_Ic": "ia",
    "CJB_over_CJ": "cb",
    "IcB_over_Ic": "ib",
    "LB_over_L": "lb",
    "CJC_over_CJ": "cc",
    "IcC_over_Ic": "icc",
    "CJhat1_over_CJ": "ct1",
    "Ichat1_over_Ic": "it1",
    "CJhat2_over_CJ": "ct2",
    "Ichat2_over_Ic": "it2",
}


@dataclass(frozen=True)
class TwoBitInterfaceParams:
    """Seven-junction interface between inputs S1, S2 and outputs S1', S2'.

    Rails A (top) and C (bottom) are direct rail JJs; rail B (middle) is a
    JJ in series with ``lb``.  ``ct1/it1`` are the upper termination JJs,
    ``ct2/it2`` the lower ones; left and right terminations are equal.
    Inductances are absolute (``lb`` = 0.5 L in the preset).
    """

    ca: float = 15.0
    ia: float = 1.5
    cb: float = 16.7
    ib: float = 6.9
    lb: float = 0.5 * L_BULK
    cc: float = 15.0
    icc: float = 1.5
    ct1: float = 5.8
    it1: float = 1.5
    ct2: float = 5.8
    it2: float = 1.5
    s1: LJJParams = field(default_factory=_input_ljj)
    s2: LJJParams = field(default_factory=_input_ljj)
    s1p: LJJParams = field(default_factory=_output_ljj)
    s2p: LJJParams = field(default_factory=_output_ljj)

    def __post_init__(self):
        _positive(self, ("ca", "ia", "cb", "ib", "cc", "icc", "ct1", "it1", "ct2", "it2"))
        if self.lb < 0:
            raise CircuitError("lb must be >= 0")

    @property
    def vertically_symmetric(self) -> bool:
        return (self.ca, self.ia, self.ct1, self.it1, self.s1, self.s1p) == (
            self.cc,
            self.icc,
            self.ct2,
            self.it2,
            self.s2,
            self.s2p,
        )

    def ratios(self) -> dict[str, float]:
        out = {}
        for key, f in IDSN_RATIO_FIELDS.items():
            v = getattr(self, f)
            out[key] = v / L_BULK if f == "lb" else v
        return out

    def with_ratios(self, **ratios: float) -> "TwoBitInterfaceParams":
        """Override parameters by ratio name; ``CJhat_over_CJ``/``Ichat_over_Ic`` set both sides."""
        changes = {}
        for key, val in ratios.items():
            if key == "CJhat_over_CJ":
                changes.update(ct1=val, ct2=val)
            elif key == "Ichat_over_Ic":
                changes.update(it1=val, it2=val)
            elif key in IDSN_RATIO_FIELDS:
                f = IDSN_RATIO_FIELDS[key]
                changes[f] = val * L_BULK if f == "lb" else val
            else:
                raise KeyError(f"unknown IDSN parameter {key!r}")
        return replace(self, **changes)


IDSN_PRESET = TwoBitInterfaceParams()

#: input symbols (S1, S2) -> output symbols (S1', S2'); '-' is no fluxon
IDSN_TRUTH_TABLE = {
    "--": "--",
    "0-": "0-",
    "1-": "1-",
    "-0": "-0",
    "-1": "-1",
    "00": "11",
    "11": "00",
}

#: velocity range within which the IDSN works as specified
IDSN_ADMISSIBLE_V0 = (0.4, 0.8)


def build_idsn(p: TwoBitInterfaceParams) -> GateCircuit:
    """IDSN circuit; the middle-left rail is ground.

    S1/S1' hang above the middle rail, S2/S2' below it (flipped junction
    orientation, so both rows share the same polarity convention and a
    same-polarity pair drives opposite currents on the middle rail).
    """
    branches: list = []
    s1 = add_chain(branches, "S1", p.s1, "gnd", "input", termination=(p.it1, p.ct1, None))
    s2 = add_chain(branches, "S2", p.s2, "gnd", "input", termination=(p.it2, p.ct2, None), flip=True)
    s1p = add_chain(
        branches, "S1p", p.s1p, "midR", "output", termination=(p.it1, p.ct1, None)
    )
    s2p = add_chain(
        branches, "S2p", p.s2p, "midR", "output", termination=(p.it2, p.ct2, None), flip=True
    )
    branches.append(JosephsonJunction("JA", terminal_node(s1), terminal_node(s1p), p.ia, p.ca))
    branches.append(JosephsonJunction("JC", terminal_node(s2), terminal_node(s2p), p.icc, p.cc))
    lb = _bridge_inductance(p.lb, "lb")
    if lb > 0:
        branches.append(JosephsonJunction("JB", "midR", "railB", p.ib, p.cb))
        branches.append(Inductor("LB", "railB", "gnd", lb))
    else:
        branches.append(JosephsonJunction("JB", "midR", "gnd", p.ib, p.cb))
    probes = [Probe("phiA", "branch", "JA"), Probe("phiB", "branch", "JB"), Probe("phiC", "branch", "JC")]
    g = CircuitGraph.from_branches(branches, probes)
    chains = {"S1": s1, "S2": s2, "S1p": s1p, "S2p": s2p}
    return GateCircuit(
        "idsn", g, chains, ("S1", "S2"), ("S1p", "S2p"), {"params": p, "admissible_v0": IDSN_ADMISSIBLE_V0}
    )


# --- splitter ---------------------------------------------------------------------


def splitter_child(parent: LJJParams, cells: int | None = None) -> LJJParams:
    """Child line of a T-branch: (C_J/2, I_c/2, 2L, a)."""
    return parent.scaled(2.0, cells)


def build_splitter(
    parent: LJJParams = LJJParams(cells=50), child_cells: int = 70
) -> GateCircuit:
    """T-node joining a parent chain to two children with halved junctions and doubled L.

    The T node keeps the parent's junction; it carries half a parent cell and
    two half child cells, which adds up to the parent's (I_c, C_J).  Each
    child's impedance is 2Z, so the pair matches the parent.
    """
    branches: list = []
    par = add_chain(branches, "parent", parent, "gnd", "input")
    t_node = terminal_node(par)
    child = splitter_child(parent, child_cells)
    chains = {"parent": par}
    for name in ("child1", "child2"):
        ch = add_chain(branches, name, child, "gnd", "output", x_offset=1.0)
        branches.append(Inductor(f"L{name}.T", t_node, ch.free[0], child.l))
        chains[name] = ch
    g = CircuitGraph.from_branches(branches)
    return GateCircuit("splitter", g, chains, ("parent",), ("child1", "child2"), {"child": child})
