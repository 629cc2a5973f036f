"""Gate scenarios: launch kinks, integrate, and turn sink-chain observations into a verdict."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .dynamics import RunResult, SimState, run
from .gates import (
    L_BULK,
    GateCircuit,
    NOT_PRESET,
    OneBitInterfaceParams,
    TwoBitInterfaceParams,
    build_idsn,
    build_one_bit,
    build_splitter,
)
from .ljj import (
    ChainLayout,
    FluxonObservation,
    KinkSpec,
    LJJParams,
    chain_energy_density,
    detect_fluxons,
    fluxon_energy_ratio,
    init_kink,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_X0 = -20.0
DEFAULT_CRITERION = 0.6
SNAPSHOT_INTERVAL = 0.5
#: slowest output speed, as a fraction of v0, that the default duration waits for
SLOWEST_OUTPUT = 0.45
#: sink-chain detection keeps this many lambda_J away from both chain ends
EDGE_GUARD = 5.0


class ScenarioError(ValueError):
    pass


# --- input specs ----------------------------------------------------------------


def parse_input(text: str) -> KinkSpec | None:
    """``"fluxon v0=0.6 x0=-20"``, ``"antifluxon v0=0.5"`` or ``"none"``/``"-"``."""
    words = text.split()
    if not words:
        raise ScenarioError("empty input spec")
    kind = words[0].lower()
    if kind in ("none", "null", "-"):
        return None
    if kind not in ("fluxon", "antifluxon"):
        raise ScenarioError(f"input kind must be fluxon, antifluxon or none, got {words[0]!r}")
    opts = {"v0": 0.6, "x0": DEFAULT_X0}
    for w in words[1:]:
        key, sep, val = w.partition("=")
        if not sep or key not in opts:
            raise ScenarioError(f"bad input option {w!r}")
        try:
            opts[key] = float(val)
        except ValueError:
            raise ScenarioError(f"non-numeric value in {w!r}") from None
    return KinkSpec(opts["x0"], opts["v0"], 1 if kind == "fluxon" else -1)


def symbol_kink(sym: str, v0: float, x0: float = DEFAULT_X0) -> KinkSpec | None:
    """Logic symbol '0' (fluxon), '1' (antifluxon) or '-' (nothing) to a kink."""
    if sym == "-":
        return None
    if sym not in "01":
        raise ScenarioError(f"unknown logic symbol {sym!r}")
    return KinkSpec(x0, v0, 1 if sym == "0" else -1)


def delay_to_separation(delay: float, v0: float, c: float) -> float:
    """Separation in cells of two kinks launched ``delay`` apart at speed v0 (units c)."""
    return v0 * c * delay


def paired_inputs(
    names: tuple[str, str], symbols: str, v0: float, dx: float = 0.0, x0: float = DEFAULT_X0
) -> dict[str, KinkSpec | None]:
    """Kinks for a 2-input gate; the first input leads by ``dx`` cells.

    The pair is centred on ``x0``: x0 + dx/2 for the first, x0 - dx/2 for
    the second.  ``dx`` only matters when both inputs carry a kink.
    """
    if len(symbols) != 2:
        raise ScenarioError("need one symbol per input")
    both = "-" not in symbols
    shifts = (dx / 2.0, -dx / 2.0) if both else (0.0, 0.0)
    return {n: symbol_kink(s, v0, x0 + d) for n, s, d in zip(names, symbols, shifts)}


# --- verdict ----------------------------------------------------------------------


@dataclass
class OutputReport:
    name: str
    observation: FluxonObservation
    symbol: str
    vf_over_v0: float | None = None
    efficiency: float | None = None
    efficiency_direct: float | None = None
    timing: float | None = None

    def to_dict(self) -> dict:
        d = {"symbol": self.symbol, **self.observation.to_dict()}
        if self.observation.present:
            d.update(
                vf_over_v0=self.vf_over_v0,
                efficiency=self.efficiency,
                efficiency_direct=self.efficiency_direct,
                timing=self.timing,
            )
        return d


@dataclass
class GateVerdict:
    gate: str
    v0: float | None
    inputs: dict[str, str]
    outputs: dict[str, OutputReport]
    status: str
    criterion: float = DEFAULT_CRITERION
    energy_drift: float = 0.0
    duration: float = 0.0
    result: RunResult | None = field(default=None, repr=False)

    @property
    def symbols(self) -> str:
        return "".join(r.symbol for r in self.outputs.values())

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "gate": self.gate,
            "v0": self.v0,
            "inputs": self.inputs,
            "classification": self.symbols,
            "outputs": {k: r.to_dict() for k, r in self.outputs.items()},
            "status": self.status,
            "criterion": self.criterion,
            "energy_drift": self.energy_drift,
            "duration": self.duration,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_default, **kw)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _symbol(obs: FluxonObservation) -> str:
    return obs.bit


# --- running -----------------------------------------------------------------------


def detection_region(chain: ChainLayout) -> tuple[float, float]:
    """Part of a chain clear of both ends by EDGE_GUARD lambda_J."""
    x = chain.positions
    guard = EDGE_GUARD * chain.params.lambda_j
    lo, hi = x.min() + guard, x.max() - guard
    if hi - lo < 2.0 * chain.params.lambda_j:
        raise ScenarioError(f"chain {chain.name} too short for detection")
    return lo, hi


def initial_state(gc: GateCircuit, kinks: Mapping[str, KinkSpec | None]) -> SimState:
    """Node phases whose chain-junction phases match the requested kinks.

    Every chain junction gets a target (the kink profile, or 0 on empty
    chains) and the node phases are the minimum-norm least-squares solution
    of those constraints.  Chains that share a node, or whose reference rail
    hangs off an interface junction, thus start exactly in the requested
    local state instead of inheriting a neighbour's kink tail.
    """
    g = gc.graph
    idx = g.node_index
    n = len(g.active_nodes)
    rows, target, target_dot = [], [], []
    for name, ch in gc.chains.items():
        k = kinks.get(name)
        if k is None:
            psi = psi_dot = np.zeros(len(ch.free))
        else:
            psi, psi_dot = init_kink(ch.params, k, ch.positions)
        for j, (a, b) in enumerate(zip(ch.plus, ch.minus)):
            row = np.zeros(n)
            if idx[a] >= 0:
                row[idx[a]] += 1.0
            if idx[b] >= 0:
                row[idx[b]] -= 1.0
            rows.append(row)
            target.append(psi[j])
            target_dot.append(psi_dot[j])
    unknown = set(kinks) - set(gc.chains)
    if unknown:
        raise ScenarioError(f"{gc.kind} has no chain(s) {', '.join(sorted(unknown))}")
    a = np.array(rows)
    phi = np.linalg.lstsq(a, np.array(target), rcond=None)[0]
    phi_dot = np.linalg.lstsq(a, np.array(target_dot), rcond=None)[0]
    return SimState(0.0, phi, phi_dot)


def default_duration(gc: GateCircuit, kinks: Mapping[str, KinkSpec | None], sinks) -> float:
    """Time for the slowest plausible output to cross the sink detection region.

    Arrival at the interface plus the crossing, at SLOWEST_OUTPUT of the
    input speed.  Kinks that leave the region earlier are cut off by the
    detector, so reflections from open ends never enter a measurement.
    """
    live = [k for k in kinks.values() if k is not None]
    if not live:
        return 40.0
    c = max(ch.params.c for ch in gc.chains.values())
    v = min(abs(k.v) for k in live)
    dist = max(abs(k.x0) for k in live)
    reach = max(max(abs(a), abs(b)) for a, b in (detection_region(gc.chains[s]) for s in sinks))
    return dist / (v * c) + 10.0 + reach / (SLOWEST_OUTPUT * v * c)


def _input_energy(ch: ChainLayout, k: KinkSpec) -> float:
    psi, psi_dot = init_kink(ch.params, k, ch.positions)
    dens = chain_energy_density(ch.params, psi, psi_dot)
    near = np.abs(ch.positions - k.x0) <= 5.0 * ch.params.lambda_j
    return float(dens[near].sum())


def run_gate(
    gc: GateCircuit,
    kinks: Mapping[str, KinkSpec | None],
    sinks: tuple[str, ...] | None = None,
    duration: float | None = None,
    snapshot_interval: float = SNAPSHOT_INTERVAL,
    criterion: float = DEFAULT_CRITERION,
    keep_result: bool = False,
) -> GateVerdict:
    """Launch ``kinks`` (chain name -> kink or None), run, and observe ``sinks``.

    ``sinks`` defaults to the gate outputs, or to its inputs when the kinks
    sit on the outputs (a backward run).  Every present output gets
    v_f/v_0, the efficiency E_fl(v_f)/E_fl(v_0) from the fluxon energy formula, the directly measured
    windowed-energy ratio, and the scattering time between the input
    reaching x = 0 and the output leaving it.
    """
    launched = {n: k for n, k in kinks.items() if k is not None}
    if sinks is None:
        sinks = gc.inputs if set(launched) & set(gc.outputs) else gc.outputs
    if duration is None:
        duration = default_duration(gc, kinks, sinks)
    s0 = initial_state(gc, kinks)
    res = run(gc.graph, s0, duration, snapshot_interval=snapshot_interval, energy_interval=1.0)

    v0 = float(np.mean([abs(k.v) for k in launched.values()])) if launched else None
    e_in = (
        float(np.mean([_input_energy(gc.chains[n], k) for n, k in launched.items()]))
        if launched
        else None
    )
    t_in = (
        float(np.mean([abs(k.x0) / (abs(k.v) * gc.chains[n].params.c) for n, k in launched.items()]))
        if launched
        else None
    )

    outputs: dict[str, OutputReport] = {}
    ambiguous = False
    for name in sinks:
        ch = gc.chains[name]
        psi = ch.local(gc.graph, res.snapshots)
        psi_dot = ch.local(gc.graph, res.snapshot_rates)
        obs_list = detect_fluxons(
            res.snapshot_t, psi, psi_dot, ch.params, ch.positions, region=detection_region(ch)
        )
        if len(obs_list) > 1:
            ambiguous = True
        obs = obs_list[0]
        ambiguous = ambiguous or obs.ambiguous
        rep = OutputReport(name, obs, _symbol(obs))
        if obs.present and v0:
            vf = abs(obs.velocity)
            rep.vf_over_v0 = vf / v0
            if vf < 1.0:
                rep.efficiency = fluxon_energy_ratio(vf) / fluxon_energy_ratio(v0)
            rep.efficiency_direct = obs.energy * ch.params.E0 / e_in
            if obs.velocity != 0 and len(obs.track_t) >= 2:
                slope, icpt = np.polyfit(obs.track_t, obs.track_x, 1)
                rep.timing = float(-icpt / slope - t_in)
        outputs[name] = rep

    e = res.energy_array()
    tot0 = e[0, 4]
    drift = float(abs(e[-1, 4] + e[-1, 3] - tot0) / tot0) if tot0 > 0 else 0.0

    status = _status(gc, v0, outputs, criterion, ambiguous)
    return GateVerdict(
        gate=gc.kind,
        v0=v0,
        inputs={n: str(k.bit) if k else "-" for n, k in kinks.items()},
        outputs=outputs,
        status=status,
        criterion=criterion,
        energy_drift=drift,
        duration=duration,
        result=res if keep_result else None,
    )


def _status(gc, v0, outputs, criterion, ambiguous) -> str:
    if ambiguous:
        return "fail: ambiguous detection"
    lo_hi = gc.meta.get("admissible_v0")
    if v0 is not None and lo_hi is not None and not (lo_hi[0] <= v0 <= lo_hi[1]):
        return "fail: out of admissible range"
    for r in outputs.values():
        if r.observation.present and not (r.vf_over_v0 is not None and r.vf_over_v0 > criterion):
            return "fail: criterion"
    return "pass"


def reverse_kinks(gc: GateCircuit, verdict: GateVerdict, x0: float = -DEFAULT_X0) -> dict[str, KinkSpec | None]:
    """Fresh kinks on the sink chains carrying the observed outputs backward.

    Each present output is relaunched with its polarity and speed at
    position ``x0`` of its chain, moving toward the interface.
    """
    out: dict[str, KinkSpec | None] = {}
    for name, rep in verdict.outputs.items():
        obs = rep.observation
        if not obs.present:
            out[name] = None
            continue
        side = gc.chains[name].side
        pos = x0 if side == "output" else -x0
        direction = -1.0 if side == "output" else 1.0
        out[name] = KinkSpec(pos, direction * abs(obs.velocity), obs.polarity)
    return out


# --- scenario files -----------------------------------------------------------------


def build_gate(kind: str, params: Mapping[str, float] | None = None) -> GateCircuit:
    """Gate circuit by name with ratio-named parameter overrides.

    ``input_cells``/``output_cells`` set chain lengths where applicable;
    ``a_over_lambdaJ`` changes the discreteness of every chain (cell
    inductance (a/lambda_J)^2, interface inductances scaled along).
    """
    params = dict(params or {})
    cells_in = int(params.pop("input_cells", 0)) or None
    cells_out = int(params.pop("output_cells", 0)) or None
    r = params.pop("a_over_lambdaJ", None)
    kind = kind.lower()
    if r is not None and kind not in ("not", "one_bit", "idsn"):
        raise ScenarioError(f"a_over_lambdaJ is not supported for {kind!r}")
    l_cell = L_BULK if r is None else float(r) ** 2

    def ljj(cells, default):
        return LJJParams(cells=cells or default, l=l_cell)

    if kind in ("not", "one_bit"):
        base = NOT_PRESET if kind == "not" else OneBitInterfaceParams()
        p = base.with_ratios(**params)
        p = replace(
            p,
            left=ljj(cells_in, p.left.cells),
            right=ljj(cells_out, p.right.cells),
            rail_l=p.rail_l / L_BULK * l_cell,
            bridge_l=p.bridge_l / L_BULK * l_cell,
        )
        return build_one_bit(p, kind)
    if kind == "idsn":
        p = TwoBitInterfaceParams().with_ratios(**params)
        p = replace(
            p,
            s1=ljj(cells_in, p.s1.cells),
            s2=ljj(cells_in, p.s2.cells),
            s1p=ljj(cells_out, p.s1p.cells),
            s2p=ljj(cells_out, p.s2p.cells),
            lb=p.lb / L_BULK * l_cell,
        )
        return build_idsn(p)
    if kind == "splitter":
        if params:
            raise ScenarioError(f"splitter takes no parameters, got {sorted(params)}")
        return build_splitter(LJJParams(cells=cells_in or 50), cells_out or 70)
    if kind == "snl":
        from .snl import SNLParams, build_snl

        return build_snl(SNLParams().with_ratios(**params))
    raise ScenarioError(f"unknown gate kind {kind!r}")


@dataclass(frozen=True)
class Scenario:
    gate: str
    params: Mapping[str, float] = field(default_factory=dict)
    inputs: Mapping[str, KinkSpec | None] = field(default_factory=dict)
    duration: float | None = None
    snapshot_interval: float = SNAPSHOT_INTERVAL
    criterion: float = DEFAULT_CRITERION
    dx: float = 0.0

    @classmethod
    def from_mapping(cls, d: Mapping) -> "Scenario":
        d = dict(d)
        try:
            gate = str(d.pop("gate"))
        except KeyError:
            raise ScenarioError("scenario needs a 'gate' key") from None
        params = {k: float(v) for k, v in dict(d.pop("params", {})).items()}
        inputs = {k: parse_input(str(v)) for k, v in dict(d.pop("inputs", {})).items()}
        dx = float(d.pop("dx", 0.0))
        if "delay" in d:
            delay = float(d.pop("delay"))
            v = [k.v for k in inputs.values() if k is not None]
            if v:
                dx = delay_to_separation(delay, v[0], LJJParams().c)
        sc = cls(
            gate=gate,
            params=params,
            inputs=inputs,
            duration=float(d.pop("duration")) if "duration" in d else None,
            snapshot_interval=float(d.pop("snapshot_interval", SNAPSHOT_INTERVAL)),
            criterion=float(d.pop("criterion", DEFAULT_CRITERION)),
            dx=dx,
        )
        d.pop("probes", None)
        if d:
            raise ScenarioError(f"unknown scenario keys: {', '.join(sorted(d))}")
        return sc

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as e:
                raise ScenarioError(f"{path}: {e}") from None
        return cls.from_mapping(data)

    def kinks(self) -> dict[str, KinkSpec | None]:
        """Inputs with the separation dx applied (first named input leads)."""
        live = [n for n, k in self.inputs.items() if k is not None]
        out = dict(self.inputs)
        if len(live) == 2 and self.dx:
            a, b = live
            ka, kb = out[a], out[b]
            out[a] = KinkSpec(ka.x0 + self.dx / 2, ka.v, ka.polarity, ka.background)
            out[b] = KinkSpec(kb.x0 - self.dx / 2, kb.v, kb.polarity, kb.background)
        return out

    def run(self, keep_result: bool = False) -> tuple[GateCircuit, GateVerdict]:
        gc = build_gate(self.gate, self.params)
        v = run_gate(
            gc,
            self.kinks(),
            duration=self.duration,
            snapshot_interval=self.snapshot_interval,
            criterion=self.criterion,
            keep_result=keep_result,
        )
        return gc, v
