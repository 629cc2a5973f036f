"""Node/branch circuit graphs in dimensionless phase variables.

Each non-ground node carries a phase.  A branch between ``n_plus`` and
``n_minus`` sees the phase difference ``phi[n_plus] - phi[n_minus]`` and
carries a current from ``n_plus`` to ``n_minus``.  Capacitive currents are
collected in the nodal capacitance matrix, everything else goes through
:func:`branch_current`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.linalg

from .units import DEFAULT_UNITS

log = logging.getLogger(__name__)

GROUND = "gnd"

#: minimum inductance, as a fraction of the bulk cell inductance L
INDUCTANCE_FLOOR_FRACTION = 0.02


class CircuitError(ValueError):
    """Raised for structurally invalid circuits."""


class FloatingNodeError(CircuitError):
    """The capacitance matrix is singular; some nodes have no capacitive path."""

    def __init__(self, nodes: Sequence[str]):
        self.nodes = list(nodes)
        super().__init__(f"capacitively floating node(s): {', '.join(self.nodes)}")


@dataclass(frozen=True)
class JosephsonJunction:
    label: str
    n_plus: str
    n_minus: str
    ic: float
    cj: float
    rshunt: float | None = None

    def __post_init__(self):
        _check_endpoints(self)
        if not self.ic > 0:
            raise CircuitError(f"{self.label}: ic must be > 0, got {self.ic}")
        if not self.cj >= 0:
            raise CircuitError(f"{self.label}: cj must be >= 0, got {self.cj}")
        if self.rshunt is not None and not self.rshunt > 0:
            raise CircuitError(f"{self.label}: rshunt must be > 0, got {self.rshunt}")


@dataclass(frozen=True)
class Inductor:
    label: str
    n_plus: str
    n_minus: str
    l: float

    def __post_init__(self):
        _check_endpoints(self)
        if not self.l > 0:
            raise CircuitError(f"{self.label}: l must be > 0, got {self.l}")


@dataclass(frozen=True)
class Capacitor:
    label: str
    n_plus: str
    n_minus: str
    c: float

    def __post_init__(self):
        _check_endpoints(self)
        if not self.c > 0:
            raise CircuitError(f"{self.label}: c must be > 0, got {self.c}")


@dataclass(frozen=True)
class Resistor:
    label: str
    n_plus: str
    n_minus: str
    r: float

    def __post_init__(self):
        _check_endpoints(self)
        if not self.r > 0:
            raise CircuitError(f"{self.label}: r must be > 0, got {self.r}")


Branch = Union[JosephsonJunction, Inductor, Capacitor, Resistor]


def _check_endpoints(b) -> None:
    if b.n_plus == b.n_minus:
        raise CircuitError(f"{b.label}: endpoints must be distinct nodes ({b.n_plus})")


def branch_capacitance(b: Branch) -> float:
    if isinstance(b, JosephsonJunction):
        return b.cj
    if isinstance(b, Capacitor):
        return b.c
    return 0.0


def branch_current(b: Branch, dphi: float, dphi_dot: float) -> float:
    """Non-capacitive current through ``b`` from ``n_plus`` to ``n_minus``."""
    if isinstance(b, JosephsonJunction):
        i = b.ic * math.sin(dphi)
        if b.rshunt is not None:
            i += dphi_dot / b.rshunt
        return i
    if isinstance(b, Inductor):
        return dphi / b.l
    if isinstance(b, Resistor):
        return dphi_dot / b.r
    return 0.0


def min_inductance(L: float = DEFAULT_UNITS.L, fraction: float = INDUCTANCE_FLOOR_FRACTION) -> float:
    return fraction * L


def clamp_inductance(l: float, label: str = "", floor: float | None = None) -> float:
    """Return ``max(l, floor)``, warning when the request is clamped."""
    if floor is None:
        floor = min_inductance()
    if l < floor:
        log.warning("inductance %s=%g below floor %g; clamped", label or "?", l, floor)
        return floor
    return l


@dataclass(frozen=True)
class Probe:
    """A named time-series recorder.

    ``kind`` is ``"node"`` (target is a node id, records its phase) or
    ``"branch"`` (target is a branch label).  Branch probes record the phase
    difference or, with ``quantity="current"``, the full branch current
    including the capacitive part.
    """

    name: str
    kind: str
    target: str
    quantity: str = "phase"

    def __post_init__(self):
        if self.kind not in ("node", "branch"):
            raise CircuitError(f"probe {self.name}: kind must be node or branch")
        if self.quantity not in ("phase", "current"):
            raise CircuitError(f"probe {self.name}: quantity must be phase or current")
        if self.kind == "node" and self.quantity != "phase":
            raise CircuitError(f"probe {self.name}: node probes record phase only")


@dataclass(frozen=True)
class CircuitGraph:
    """Immutable circuit: ordered nodes (ground included), branches, probes.

    Validation at construction: unique labels, known endpoints, connectivity
    from ground and a nonsingular capacitance matrix.
    """

    nodes: tuple[str, ...]
    branches: tuple[Branch, ...]
    probes: tuple[Probe, ...] = ()
    ground: str = GROUND

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "probes", tuple(self.probes))
        self._validate()

    @classmethod
    def from_branches(
        cls, branches: Iterable[Branch], probes: Iterable[Probe] = (), ground: str = GROUND
    ) -> "CircuitGraph":
        """Build a graph whose node order is first appearance in ``branches``."""
        branches = tuple(branches)
        seen = {ground: None}
        for b in branches:
            seen.setdefault(b.n_plus, None)
            seen.setdefault(b.n_minus, None)
        return cls(tuple(seen), branches, tuple(probes), ground)

    def _validate(self) -> None:
        if len(set(self.nodes)) != len(self.nodes):
            raise CircuitError("duplicate node ids")
        if self.ground not in self.nodes:
            raise CircuitError(f"ground node {self.ground!r} missing")
        known = set(self.nodes)
        labels = set()
        for b in self.branches:
            if b.label in labels:
                raise CircuitError(f"duplicate branch label {b.label!r}")
            labels.add(b.label)
            for n in (b.n_plus, b.n_minus):
                if n not in known:
                    raise CircuitError(f"{b.label}: unknown node {n!r}")
        for p in self.probes:
            target_ok = p.target in known if p.kind == "node" else p.target in labels
            if not target_ok:
                raise CircuitError(f"probe {p.name}: unknown {p.kind} {p.target!r}")
        self._check_connected()
        self._check_capacitive()

    def _check_connected(self) -> None:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for b in self.branches:
            adj[b.n_plus].add(b.n_minus)
            adj[b.n_minus].add(b.n_plus)
        reached = {self.ground}
        stack = [self.ground]
        while stack:
            for m in adj[stack.pop()]:
                if m not in reached:
                    reached.add(m)
                    stack.append(m)
        missing = [n for n in self.nodes if n not in reached]
        if missing:
            raise CircuitError(f"nodes unreachable from ground: {', '.join(missing)}")

    def _check_capacitive(self) -> None:
        m = assemble_capacitance_matrix(self)
        if m.shape[0] == 0:
            return
        try:
            scipy.linalg.cholesky(m, lower=True)
        except np.linalg.LinAlgError:
            raise FloatingNodeError(self._floating_nodes(m)) from None

    def _floating_nodes(self, m: np.ndarray) -> list[str]:
        # null-space support of the singular capacitance matrix
        w, v = np.linalg.eigh(m)
        tol = 1e-12 * max(1.0, float(np.abs(w).max()))
        idx = set()
        for k in np.flatnonzero(w <= tol):
            idx.update(np.flatnonzero(np.abs(v[:, k]) > 1e-8).tolist())
        active = self.active_nodes
        return [active[i] for i in sorted(idx)]

    @property
    def active_nodes(self) -> tuple[str, ...]:
        """Non-ground nodes, in matrix order."""
        return tuple(n for n in self.nodes if n != self.ground)

    @cached_property
    def node_index(self) -> dict[str, int]:
        """Index into the state vector; ground maps to -1."""
        idx = {n: i for i, n in enumerate(self.active_nodes)}
        idx[self.ground] = -1
        return idx

    @cached_property
    def branch_by_label(self) -> dict[str, Branch]:
        return {b.label: b for b in self.branches}

    def with_probes(self, probes: Iterable[Probe]) -> "CircuitGraph":
        return CircuitGraph(self.nodes, self.branches, tuple(self.probes) + tuple(probes), self.ground)

    def without_resistors(self) -> "CircuitGraph":
        """Copy with resistors dropped and JJ shunts removed (undamped variant)."""
        out = []
        for b in self.branches:
            if isinstance(b, Resistor):
                continue
            if isinstance(b, JosephsonJunction) and b.rshunt is not None:
                b = JosephsonJunction(b.label, b.n_plus, b.n_minus, b.ic, b.cj)
            out.append(b)
        labels = {b.label for b in out}
        probes = [p for p in self.probes if p.kind == "node" or p.target in labels]
        return CircuitGraph(self.nodes, tuple(out), tuple(probes), self.ground)


def assemble_capacitance_matrix(g: CircuitGraph) -> np.ndarray:
    """Nodal capacitance matrix over the non-ground nodes.

    Diagonal: total capacitance incident on the node.  Off-diagonal:
    minus the capacitance joining the two nodes.  Graphs with a singular
    matrix never get this far: construction raises :class:`FloatingNodeError`.
    """
    idx = g.node_index
    n = len(g.active_nodes)
    m = np.zeros((n, n))
    for b in g.branches:
        c = branch_capacitance(b)
        if c == 0.0:
            continue
        i, j = idx[b.n_plus], idx[b.n_minus]
        if i >= 0:
            m[i, i] += c
        if j >= 0:
            m[j, j] += c
        if i >= 0 and j >= 0:
            m[i, j] -= c
            m[j, i] -= c
    return m


def node_currents(
    g: CircuitGraph, phi: np.ndarray, phi_dot: np.ndarray, phi_ddot: np.ndarray
) -> np.ndarray:
    """Net current leaving every node, ground last, including capacitive parts.

    Evaluates each branch independently (no matrix), so it serves as an
    independent Kirchhoff check of the assembled equations of motion: for a
    trajectory of the dynamics all active entries vanish, and the sum over all
    nodes vanishes identically.
    """
    idx = g.node_index
    full = np.append(np.asarray(phi, float), 0.0)
    full_dot = np.append(np.asarray(phi_dot, float), 0.0)
    full_ddot = np.append(np.asarray(phi_ddot, float), 0.0)
    out = np.zeros(len(full))
    for b in g.branches:
        i, j = idx[b.n_plus], idx[b.n_minus]
        d = full[i] - full[j]
        dd = full_dot[i] - full_dot[j]
        cur = branch_current(b, d, dd) + branch_capacitance(b) * (full_ddot[i] - full_ddot[j])
        out[i] += cur
        out[j] -= cur
    return out
