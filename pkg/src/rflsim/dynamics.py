"""Time integration of M phi'' = -I(phi, phi') with an energy ledger.

The capacitance matrix M is factored once per circuit.  Integration is
classical fixed-step RK4 on the first-order system (phi, phi'), with the
resistive dissipation rate integrated as an extra state component so that
``total + dissipated`` is checked at the integrator's own order.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .circuit import (
    Capacitor,
    CircuitGraph,
    Inductor,
    JosephsonJunction,
    Probe,
    Resistor,
    assemble_capacitance_matrix,
    branch_capacitance,
)

log = logging.getLogger(__name__)

DEFAULT_DT = 0.01
#: halve dt while omega_max * dt exceeds this
STIFFNESS_LIMIT = 0.2


class SimulationDiverged(RuntimeError):
    def __init__(self, message: str, last_state: "SimState"):
        super().__init__(message)
        self.last_state = last_state


@dataclass(frozen=True)
class SimState:
    t: float
    phi: np.ndarray
    phi_dot: np.ndarray
    dissipated: float = 0.0

    def __post_init__(self):
        for name in ("phi", "phi_dot"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, g: CircuitGraph) -> "SimState":
        n = len(g.active_nodes)
        return cls(0.0, np.zeros(n), np.zeros(n))

    def negated(self) -> "SimState":
        return SimState(self.t, -self.phi, -self.phi_dot, self.dissipated)


@dataclass(frozen=True)
class EnergyLedger:
    kinetic: float
    inductive: float
    josephson: float
    dissipated: float = 0.0

    @property
    def total(self) -> float:
        return self.kinetic + self.inductive + self.josephson

    def scaled(self, unit: float) -> "EnergyLedger":
        return EnergyLedger(
            self.kinetic / unit, self.inductive / unit, self.josephson / unit, self.dissipated / unit
        )


@dataclass
class ProbeRecord:
    name: str
    t: np.ndarray
    values: np.ndarray

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.t.tolist(), self.values.tolist()))


def _incidence(g: CircuitGraph, branches) -> sp.csr_matrix:
    """Node-by-branch incidence (+1 at n_plus, -1 at n_minus), ground dropped."""
    idx = g.node_index
    n = len(g.active_nodes)
    rows, cols, vals = [], [], []
    for k, b in enumerate(branches):
        for node, s in ((b.n_plus, 1.0), (b.n_minus, -1.0)):
            i = idx[node]
            if i >= 0:
                rows.append(i)
                cols.append(k)
                vals.append(s)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, len(branches)))


class CompiledCircuit:
    """Array form of a graph for fast right-hand-side evaluation."""

    def __init__(self, g: CircuitGraph):
        self.graph = g
        self.n = len(g.active_nodes)
        jjs = [b for b in g.branches if isinstance(b, JosephsonJunction)]
        inds = [b for b in g.branches if isinstance(b, Inductor)]
        damped = [b for b in g.branches if isinstance(b, Resistor)] + [
            b for b in jjs if b.rshunt is not None
        ]
        self.jj_inc = _incidence(g, jjs)
        self.jj_inc_t = self.jj_inc.T.tocsr()
        self.ic = np.array([b.ic for b in jjs])
        ind_inc = _incidence(g, inds)
        self.ind_inc_t = ind_inc.T.tocsr()
        self.inv_l = np.array([1.0 / b.l for b in inds])
        # inductor Laplacian: sum_k B_k B_k^T / l_k
        self.k_ind = (ind_inc @ sp.diags(self.inv_l) @ ind_inc.T).tocsr()
        res_inc = _incidence(g, damped)
        self.res_inc_t = res_inc.T.tocsr()
        self.conductance = np.array(
            [1.0 / (b.r if isinstance(b, Resistor) else b.rshunt) for b in damped]
        )
        self.g_res = (res_inc @ sp.diags(self.conductance) @ res_inc.T).tocsr()
        self.has_damping = len(damped) > 0
        self.mass = assemble_capacitance_matrix(g)
        self._solve = spla.factorized(sp.csc_matrix(self.mass)) if self.n else None

    def accel(self, phi: np.ndarray, phi_dot: np.ndarray) -> np.ndarray:
        net = self.k_ind @ phi + self.jj_inc @ (self.ic * np.sin(self.jj_inc_t @ phi))
        if self.has_damping:
            net = net + self.g_res @ phi_dot
        return -self._solve(net)

    def dissipation_rate(self, phi_dot: np.ndarray) -> float:
        if not self.has_damping:
            return 0.0
        d = self.res_inc_t @ phi_dot
        return float(np.dot(self.conductance, d * d))

    def energy(self, phi: np.ndarray, phi_dot: np.ndarray, dissipated: float = 0.0) -> EnergyLedger:
        kin = 0.5 * float(phi_dot @ (self.mass @ phi_dot))
        d_ind = self.ind_inc_t @ phi
        d_jj = self.jj_inc_t @ phi
        ind = 0.5 * float(np.dot(self.inv_l, d_ind * d_ind))
        jos = float(np.dot(self.ic, 1.0 - np.cos(d_jj)))
        return EnergyLedger(kin, ind, jos, dissipated)

    @cached_property
    def max_linear_frequency(self) -> float:
        """Largest small-oscillation frequency about phi = 0."""
        if self.n == 0:
            return 0.0
        k_lin = self.k_ind + self.jj_inc @ sp.diags(self.ic) @ self.jj_inc_t
        w2 = scipy.linalg.eigh(
            k_lin.toarray(), self.mass, eigvals_only=True, subset_by_index=[self.n - 1, self.n - 1]
        )
        return math.sqrt(max(float(w2[0]), 0.0))

    def rk4(self, phi, phi_dot, diss, dt):
        a1 = self.accel(phi, phi_dot)
        p2 = phi + 0.5 * dt * phi_dot
        v2 = phi_dot + 0.5 * dt * a1
        a2 = self.accel(p2, v2)
        p3 = phi + 0.5 * dt * v2
        v3 = phi_dot + 0.5 * dt * a2
        a3 = self.accel(p3, v3)
        p4 = phi + dt * v3
        v4 = phi_dot + dt * a3
        a4 = self.accel(p4, v4)
        phi_new = phi + dt / 6.0 * (phi_dot + 2.0 * v2 + 2.0 * v3 + v4)
        v_new = phi_dot + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        if self.has_damping:
            r = self.dissipation_rate
            diss = diss + dt / 6.0 * (r(phi_dot) + 2.0 * r(v2) + 2.0 * r(v3) + r(v4))
        return phi_new, v_new, diss


def compiled(g: CircuitGraph) -> CompiledCircuit:
    cc = g.__dict__.get("_compiled")
    if cc is None:
        cc = CompiledCircuit(g)
        # frozen dataclass: cache outside the dataclass fields
        object.__setattr__(g, "_compiled", cc)
    return cc


def choose_dt(g: CircuitGraph, dt: float = DEFAULT_DT) -> float:
    """Halve ``dt`` until the stiffest linear mode satisfies omega*dt <= 0.2."""
    w = compiled(g).max_linear_frequency
    while w * dt > STIFFNESS_LIMIT:
        dt *= 0.5
    return dt


def energy(g: CircuitGraph, s: SimState) -> EnergyLedger:
    return compiled(g).energy(np.asarray(s.phi), np.asarray(s.phi_dot), s.dissipated)


def step(g: CircuitGraph, s: SimState, dt: float = DEFAULT_DT) -> SimState:
    """Advance one RK4 step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    cc = compiled(g)
    phi, v, diss = cc.rk4(np.asarray(s.phi), np.asarray(s.phi_dot), s.dissipated, dt)
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(v)) and math.isfinite(diss)):
        raise SimulationDiverged(f"non-finite state at t={s.t + dt:.6g}", s)
    return SimState(s.t + dt, phi, v, diss)


@dataclass
class RunResult:
    final: SimState
    dt: float
    energy_t: np.ndarray
    energies: list[EnergyLedger]
    probes: dict[str, ProbeRecord]
    snapshot_t: np.ndarray
    snapshots: np.ndarray = field(repr=False)
    snapshot_rates: np.ndarray = field(repr=False, default=None)

    def energy_array(self) -> np.ndarray:
        """Columns: kinetic, inductive, josephson, dissipated, total."""
        return np.array(
            [[e.kinetic, e.inductive, e.josephson, e.dissipated, e.total] for e in self.energies]
        )


def _probe_reader(g: CircuitGraph, p: Probe):
    idx = g.node_index

    def at(arr, i):
        return arr[i] if i >= 0 else 0.0

    if p.kind == "node":
        i = idx[p.target]
        return lambda phi, v, a: at(phi, i)
    b = g.branch_by_label[p.target]
    i, j = idx[b.n_plus], idx[b.n_minus]

    def diff(arr):
        return at(arr, i) - at(arr, j)

    if p.quantity == "phase":
        return lambda phi, v, a: diff(phi)
    cap = branch_capacitance(b)
    if isinstance(b, JosephsonJunction):
        g_sh = 0.0 if b.rshunt is None else 1.0 / b.rshunt
        return lambda phi, v, a: b.ic * math.sin(diff(phi)) + g_sh * diff(v) + cap * diff(a)
    if isinstance(b, Inductor):
        return lambda phi, v, a: diff(phi) / b.l
    if isinstance(b, Resistor):
        return lambda phi, v, a: diff(v) / b.r
    assert isinstance(b, Capacitor)
    return lambda phi, v, a: cap * diff(a)


def run(
    g: CircuitGraph,
    s0: SimState,
    duration: float,
    probes: Sequence[Probe] | None = None,
    snapshot_interval: float | None = None,
    dt: float = DEFAULT_DT,
    energy_interval: float | None = None,
    auto_dt: bool = True,
) -> RunResult:
    """Integrate for ``duration`` and record probes, energies and snapshots.

    Probes default to the graph's own probe list and are sampled every step.
    Snapshots (full phase vectors) and the energy ledger are sampled at their
    intervals, rounded to whole steps; ``None`` samples only the endpoints.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if auto_dt:
        dt = choose_dt(g, dt)
    cc = compiled(g)
    probes = list(g.probes if probes is None else probes)
    readers = [_probe_reader(g, p) for p in probes]
    need_accel = any(p.quantity == "current" for p in probes)
    nsteps = int(round(duration / dt))
    snap_every = max(1, int(round(snapshot_interval / dt))) if snapshot_interval else nsteps or 1
    en_every = max(1, int(round(energy_interval / dt))) if energy_interval else nsteps or 1

    phi = np.array(s0.phi, dtype=float)
    v = np.array(s0.phi_dot, dtype=float)
    diss = s0.dissipated
    t0 = s0.t
    probe_t = np.empty(nsteps + 1)
    probe_v = np.empty((len(probes), nsteps + 1))
    snap_t, snaps, rates, en_t, ens = [], [], [], [], []

    def record(k, phi, v):
        t = t0 + k * dt
        if readers:
            a = cc.accel(phi, v) if need_accel else None
            probe_t[k] = t
            for r, rd in enumerate(readers):
                probe_v[r, k] = rd(phi, v, a)
        if k % snap_every == 0 or k == nsteps:
            snap_t.append(t)
            snaps.append(phi.copy())
            rates.append(v.copy())
        if k % en_every == 0 or k == nsteps:
            en_t.append(t)
            ens.append(cc.energy(phi, v, diss))

    record(0, phi, v)
    for k in range(1, nsteps + 1):
        phi_n, v_n, diss_n = cc.rk4(phi, v, diss, dt)
        if not (np.isfinite(phi_n).all() and np.isfinite(v_n).all()):
            last = SimState(t0 + (k - 1) * dt, phi, v, diss)
            raise SimulationDiverged(f"non-finite state at step {k} (t={t0 + k * dt:.6g})", last)
        phi, v, diss = phi_n, v_n, diss_n
        record(k, phi, v)

    final = SimState(t0 + nsteps * dt, phi, v, diss) if nsteps else s0
    recs = {p.name: ProbeRecord(p.name, probe_t.copy(), probe_v[r].copy()) for r, p in enumerate(probes)}
    return RunResult(
        final=final,
        dt=dt,
        energy_t=np.array(en_t),
        energies=ens,
        probes=recs,
        snapshot_t=np.array(snap_t),
        snapshots=np.array(snaps),
        snapshot_rates=np.array(rates),
    )


def write_snapshots_csv(path: str | Path, g: CircuitGraph, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *g.active_nodes])
        for t, row in zip(result.snapshot_t, result.snapshots):
            w.writerow([repr(float(t)), *(repr(float(x)) for x in row)])


def write_probe_csv(path: str | Path, rec: ProbeRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for t, x in zip(rec.t, rec.values):
            w.writerow([repr(float(t)), repr(float(x))])


def write_energy_csv(path: str | Path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "kinetic", "inductive", "josephson", "dissipated", "total"])
        for t, e in zip(result.energy_t, result.energies):
            w.writerow([repr(float(t)), e.kinetic, e.inductive, e.josephson, e.dissipated, e.total])
