"""Store-and-launch (SNL) cell: reconstructed circuit and idealized energetics.

Node names of the storage cell: ``a`` (end of input 1), ``d`` (end of input
2), ``b`` (start of output 1), ``c`` (start of output 2).  The top arm a-b
carries L^A, the bottom arm d-c carries L^B; ``mL`` sits between a and d and
``mR`` between b and c, each joined to its corners by two halves of L^y.  The
clock chain ends on ``mL``, its termination junction sitting there; C^y
spans mL-mR.  Every data and clock chain is referenced to ground; the
lower row uses flipped junction orientation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import Capacitor, CircuitGraph, Inductor, Probe, Resistor, min_inductance
from .dynamics import SimState, run
from .gates import L_BULK, GateCircuit, _positive
from .ljj import (
    KinkSpec,
    LJJParams,
    add_chain,
    chain_energy_density,
    fluxon_energy,
    topological_charge,
    velocity_for_energy,
)
from .scenario import initial_state
from .units import DEFAULT_UNITS

Z_BULK = DEFAULT_UNITS.Z

SNL_RATIO_FIELDS = {
    "IcL_over_Ic": "ic_l",
    "CJL_over_CJ": "cj_l",
    "RL_over_Z": "r_l",
    "IcR_over_Ic": "ic_r",
    "CJR_over_CJ": "cj_r",
    "Lcell_over_L": "l_cell",
    "Cx_over_CJ": "cx",
    "Rx_over_Z": "rx",
    "Cy_over_CJ": "cy",
    "s": "s",
    "Icclk_over_Ic": "ic_clk",
    "CJclk_over_CJ": "cj_clk",
}


@dataclass(frozen=True)
class SNLParams:
    """Storage-cell values; resistances and inductances are absolute.

    ``l_cell`` is the common value of L^A = L^B = L^y (the y halves get
    l_cell/2 each, floored).  ``r_l`` shunts J1 and J4.
    """

    ic_l: float = 2.6
    cj_l: float = 2.6
    r_l: float = 10.0 * Z_BULK
    ic_r: float = 2.4
    cj_r: float = 2.4
    l_cell: float = 0.02 * L_BULK
    cx: float = 2.0
    rx: float = Z_BULK / 1.7
    cy: float = 1.0
    s: float = 2.0
    ic_clk: float = 1.0
    cj_clk: float = 1.0
    data_in: LJJParams = field(default_factory=lambda: LJJParams(cells=40))
    data_out: LJJParams = field(default_factory=lambda: LJJParams(cells=80))
    clock_cells: int = 60

    def __post_init__(self):
        _positive(self, ("ic_l", "cj_l", "r_l", "ic_r", "cj_r", "l_cell", "cx", "rx", "cy", "s", "ic_clk", "cj_clk"))

    @property
    def clock(self) -> LJJParams:
        return self.data_in.scaled(self.s, self.clock_cells)

    def with_ratios(self, **ratios: float) -> "SNLParams":
        changes = {}
        for key, val in ratios.items():
            if key not in SNL_RATIO_FIELDS:
                raise KeyError(f"unknown SNL parameter {key!r}")
            f = SNL_RATIO_FIELDS[key]
            if f in ("r_l", "rx"):
                val = val * Z_BULK
            elif f == "l_cell":
                val = val * L_BULK
            changes[f] = val
        return replace(self, **changes)


SNL_PRESET = SNLParams()


def build_snl(p: SNLParams = SNL_PRESET, mirrored_clock: bool = False) -> GateCircuit:
    """Storage cell with two inputs, two outputs and a clock chain.

    ``mirrored_clock`` swaps the clock chain's junction orientation, which
    flips the polarity it couples into the cell (the lower SNL of a CNOT).
    """
    floor = min_inductance()
    lc = max(p.l_cell, floor)
    ly = max(0.5 * p.l_cell, floor)
    br: list = []
    term_l = (p.ic_l, p.cj_l, p.r_l)
    term_r = (p.ic_r, p.cj_r, None)
    in1 = add_chain(br, "in1", p.data_in, "gnd", "input", termination=term_l, terminal="a")
    in2 = add_chain(br, "in2", p.data_in, "gnd", "input", termination=term_l, terminal="d", flip=True)
    out1 = add_chain(br, "out1", p.data_out, "gnd", "output", termination=term_r, terminal="b")
    out2 = add_chain(br, "out2", p.data_out, "gnd", "output", termination=term_r, terminal="c", flip=True)
    clk = add_chain(
        br, "clk", p.clock, "gnd", "input", termination=(p.ic_clk, p.cj_clk, None), terminal="mL", flip=mirrored_clock
    )
    br += [
        Inductor("LA", "a", "b", lc),
        Inductor("LB", "d", "c", lc),
        Inductor("Ly.a", "a", "mL", ly),
        Inductor("Ly.d", "mL", "d", ly),
        Inductor("Ly.b", "b", "mR", ly),
        Inductor("Ly.c", "mR", "c", ly),
        Capacitor("Cy", "mL", "mR", p.cy),
        Capacitor("Cx.u", "a", "b", p.cx),
        Resistor("Rx.u", "a", "b", p.rx),
        Capacitor("Cx.l", "d", "c", p.cx),
        Resistor("Rx.l", "d", "c", p.rx),
    ]
    probes = [
        Probe("IA", "branch", "LA", "current"),
        Probe("ID", "branch", "LB", "current"),
        Probe("IE", "branch", f"Lclk.{p.clock_cells - 1}", "current"),
    ]
    g = CircuitGraph.from_branches(br, probes)
    chains = {"in1": in1, "in2": in2, "out1": out1, "out2": out2, "clk": clk}
    return GateCircuit("snl", g, chains, ("in1", "in2", "clk"), ("out1", "out2"), {"params": p})


# --- scenario helpers ------------------------------------------------------------


@dataclass
class SNLRecord:
    """What happened to one data bit: storage phase, then (optionally) launch."""

    bit: int
    v_in: float
    v_clk: float | None
    t_clk: float | None
    windings_stored: dict
    loop_winding: float
    i_a: float
    i_d: float
    i_e: float
    static: bool
    windings_final: dict
    launched_on: str | None
    u_stored: float
    efficiency: float | None
    energy_drift: float

    @property
    def storage_ok(self) -> bool:
        left_in = max(abs(w) for w in self.windings_stored.values())
        return (
            self.static
            and left_in < 0.05
            and abs(abs(self.loop_winding) - 1.0) <= 0.05
            and abs(self.i_e) < 0.05
        )

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["storage_ok"] = self.storage_ok
        return d


def _windings(gc: GateCircuit, phi: np.ndarray) -> dict:
    return {n: topological_charge(ch.local(gc.graph, phi)) for n, ch in gc.chains.items()}


def run_snl(
    gc: GateCircuit,
    bit: int = 0,
    v_in: float = 0.4,
    v_clk: float | None = 0.6,
    x_in: float = -20.0,
    x_clk: float = -30.0,
    t_store: float = 120.0,
    t_after: float = 150.0,
) -> SNLRecord:
    """Send a data fluxon (bit 0) or antifluxon (bit 1) into input 1, wait, then clock.

    The clock fluxon is released only after ``t_store``, so the stored state
    is sampled right before it (averaged over the last 10 time units).  The
    loop winding is the net flux that left the chains and now sits in the
    cell, in units of 2*pi; storage also needs every chain empty and the
    cell at rest.
    """
    polarity = 1 if bit == 0 else -1
    s0 = initial_state(gc, {"in1": KinkSpec(x_in, v_in, polarity)})
    r1 = run(gc.graph, s0, t_store, snapshot_interval=1.0)
    e0 = r1.energies[0].total
    tail = r1.probes["IA"].t >= t_store - 10.0
    i_a = float(np.mean(r1.probes["IA"].values[tail]))
    i_d = float(np.mean(r1.probes["ID"].values[tail]))
    i_e = float(np.mean(r1.probes["IE"].values[tail]))
    ia_spread = float(np.ptp(r1.probes["IA"].values[tail]))
    w1 = _windings(gc, r1.final.phi)
    loop = polarity - (w1["in1"] + w1["in2"] + w1["out1"] + w1["out2"])
    kin = r1.energies[-1].kinetic
    static = kin < 0.05 and ia_spread < 0.05
    u_stored = r1.energies[-1].total
    launched, eff, t_clk = None, None, None
    final = r1.final
    drift = abs(r1.energies[-1].total + r1.energies[-1].dissipated - e0) / e0
    if v_clk is not None:
        clock = initial_state(gc, {"clk": KinkSpec(x_clk, v_clk, 1)})
        s1 = SimState(final.t, final.phi + clock.phi, final.phi_dot + clock.phi_dot, final.dissipated)
        t_clk = final.t
        r2 = run(gc.graph, s1, t_after, snapshot_interval=1.0)
        final = r2.final
        w2 = _windings(gc, final.phi)
        hits = [n for n in ("out1", "out2") if abs(w2[n] - w1[n]) > 0.5]
        launched = "+".join(hits) or None
        e_in = fluxon_energy(v_in, gc.chains["in1"].params.rest_energy)
        e_clk = fluxon_energy(v_clk, gc.chains["clk"].params.rest_energy)
        eff = _chain_energy(gc, final, ("out1", "out2")) / (e_in + e_clk)
        a, b = r2.energies[0], r2.energies[-1]
        drift = max(drift, abs(b.total + b.dissipated - a.total - a.dissipated) / a.total)
    return SNLRecord(
        bit, v_in, v_clk, t_clk, w1, loop, i_a, i_d, i_e, static,
        _windings(gc, final.phi), launched, u_stored, eff, drift,
    )


def _chain_energy(gc: GateCircuit, s, names) -> float:
    tot = 0.0
    for n in names:
        ch = gc.chains[n]
        psi = ch.local(gc.graph, s.phi)
        psi_dot = ch.local(gc.graph, s.phi_dot)
        tot += float(np.sum(chain_energy_density(ch.params, psi, psi_dot)))
    return tot


# --- ideal energetics ------------------------------------------------------------


@dataclass(frozen=True)
class IdealSNL:
    e_clk: float
    e_out: float
    v_out: float
    efficiency: float


def ideal_snl_efficiency(s: float, v_clk: float, mode: str = "fast", v_in: float | None = None) -> IdealSNL:
    """Best case: the bit waits at rest energy 8 E_0 and takes the clock's whole energy.

    Energies are in units of E_0 of the data line; the clock line has rest
    energy 8/s.  ``mode="slow"`` charges the input at ``v_in``, ``"fast"``
    assumes the input arrived at the output speed.
    """
    if not 0 <= v_clk < 1:
        raise ValueError("v_clk must be in [0, 1)")
    e_clk = fluxon_energy(v_clk, 8.0 / s)
    e_out = 8.0 + e_clk
    v_out = velocity_for_energy(e_out)
    if mode == "fast":
        e_in = e_out
    elif mode == "slow":
        if v_in is None or not 0 <= v_in < 1:
            raise ValueError("slow mode needs 0 <= v_in < 1")
        e_in = fluxon_energy(v_in)
    else:
        raise ValueError(f"mode must be 'slow' or 'fast', got {mode!r}")
    return IdealSNL(e_clk, e_out, v_out, e_out / (e_in + e_clk))
