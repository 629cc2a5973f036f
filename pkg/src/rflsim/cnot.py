"""Gate-level CNOT built from two SNLs, two IDSNs and three NOT gates.

Bits travel as fluxon polarity (0 = fluxon, 1 = antifluxon).  Each SNL
launches its stored bit into its upper output for 0 and its lower output for
1; upper outputs of both SNLs feed the upper IDSN, lower outputs the lower
IDSN.  Lines are then routed to the CNOT ports:

    upper S1' -NOT-> C1      lower S1' -----> C2
    upper S2' -NOT-> D1      lower S2' -NOT-> D2

Exactly one fluxon reaches {C1, C2} and one reaches {D1, D2}; its polarity
is the output bit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gates import IDSN_TRUTH_TABLE

INPUT_PORTS = {"A": ("A1", "A2"), "B": ("B1", "B2")}

#: IDSN output line -> (CNOT port, passes through a NOT)
ROUTING = {
    ("upper", 0): ("C1", True),
    ("lower", 0): ("C2", False),
    ("upper", 1): ("D1", True),
    ("lower", 1): ("D2", True),
}


class InvalidInput(ValueError):
    pass


@dataclass(frozen=True)
class CNOTResult:
    a: int
    b: int
    paths: dict  # IDSN output lines with the bit they carry
    ports: dict  # port -> bit for the two occupied ports

    @property
    def c(self) -> int:
        return next(v for p, v in self.ports.items() if p.startswith("C"))

    @property
    def d(self) -> int:
        return next(v for p, v in self.ports.items() if p.startswith("D"))

    @property
    def c_port(self) -> str:
        return next(p for p in self.ports if p.startswith("C"))

    @property
    def d_port(self) -> str:
        return next(p for p in self.ports if p.startswith("D"))


def _bit(sym: str) -> int | None:
    return None if sym == "-" else int(sym)


def _port_bit(active: set, name: str) -> int:
    hit = [k for k, p in enumerate(INPUT_PORTS[name]) if p in active]
    if len(hit) != 1:
        raise InvalidInput(f"exactly one of {INPUT_PORTS[name]} must be active")
    return hit[0]


def behavioral_cnot(active_ports) -> CNOTResult:
    """Evaluate the network for the active input ports, e.g. ``{"A1", "B2"}``.

    Port 1 carries bit 0 and port 2 bit 1.
    """
    active = set(active_ports)
    unknown = active - set(INPUT_PORTS["A"] + INPUT_PORTS["B"])
    if unknown:
        raise InvalidInput(f"unknown input port(s): {sorted(unknown)}")
    a, b = _port_bit(active, "A"), _port_bit(active, "B")
    # SNL launch: bit 0 -> upper IDSN, bit 1 -> lower IDSN; A on S1, B on S2
    feeds = {"upper": ["-", "-"], "lower": ["-", "-"]}
    for k, bit in enumerate((a, b)):
        feeds["upper" if bit == 0 else "lower"][k] = str(bit)
    paths, ports = {}, {}
    for row, (s1, s2) in feeds.items():
        out = IDSN_TRUTH_TABLE[s1 + s2]
        for k, sym in enumerate(out):
            bit = _bit(sym)
            if bit is None:
                continue
            paths[f"{row} S{k + 1}'"] = bit
            port, inverted = ROUTING[(row, k)]
            ports[port] = 1 - bit if inverted else bit
    if sorted(p[0] for p in ports) != ["C", "D"]:
        raise AssertionError(f"routing delivered {ports} for A={a}, B={b}")
    return CNOTResult(a, b, paths, ports)


def cnot_table() -> list[CNOTResult]:
    """All four rows, ordered (A, B) = 00, 01, 10, 11."""
    return [behavioral_cnot({INPUT_PORTS["A"][a], INPUT_PORTS["B"][b]}) for a in (0, 1) for b in (0, 1)]


def format_table(rows=None) -> str:
    rows = cnot_table() if rows is None else rows
    lines = ["A B | paths                        | C (port) D (port)"]
    for r in rows:
        p = ", ".join(f"{k}={v}" for k, v in sorted(r.paths.items()))
        lines.append(f"{r.a} {r.b} | {p:<28} | {r.c} ({r.c_port})   {r.d} ({r.d_port})")
    return "\n".join(lines)
