"""Discrete long Josephson junctions: chains, kink initial data, fluxon detection.

A chain is a row of junctions joined by cell inductors.  Its *local phase*
psi_n is the phase across junction n, oriented so that a fluxon (bit 0) has
psi falling by 2*pi from left to right.  Positions are in cells, velocities
in units of the chain's maximum speed c = omega_J * lambda_J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import CircuitGraph, Inductor, JosephsonJunction
from .units import DEFAULT_UNITS, NU_J

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LJJParams:
    cells: int = 60
    ic: float = 1.0
    cj: float = 1.0
    l: float = DEFAULT_UNITS.L
    a: float = 1.0

    def __post_init__(self):
        if min(self.ic, self.cj, self.l, self.a) <= 0:
            raise ValueError("LJJ parameters must be positive")
        if self.cells < 4 * self.lambda_j / self.a:
            raise ValueError(
                f"chain of {self.cells} cells too short for lambda_J={self.lambda_j:.3g} cells"
            )

    @property
    def lambda_j(self) -> float:
        return self.a / math.sqrt(self.l * self.ic)

    @property
    def omega_j(self) -> float:
        return math.sqrt(self.ic / self.cj)

    @property
    def c(self) -> float:
        return self.omega_j * self.lambda_j

    @property
    def E0(self) -> float:
        return self.ic * self.lambda_j / self.a

    @property
    def rest_energy(self) -> float:
        return 8.0 * self.E0

    @property
    def impedance(self) -> float:
        return math.sqrt(self.l / self.cj)

    def scaled(self, s: float, cells: int | None = None) -> "LJJParams":
        """Clock-type scaling (C_J/s, I_c/s, s*L, a): same lambda_J and c, E0/s."""
        return LJJParams(cells or self.cells, self.ic / s, self.cj / s, self.l * s, self.a)

    def with_cells(self, cells: int) -> "LJJParams":
        return LJJParams(cells, self.ic, self.cj, self.l, self.a)


@dataclass(frozen=True)
class KinkSpec:
    x0: float
    v: float
    polarity: int = 1
    background: float = 0.0

    def __post_init__(self):
        if self.polarity not in (1, -1):
            raise ValueError("polarity must be +1 or -1")
        if not abs(self.v) < 1.0:
            raise ValueError("|v| must be < c")
        k = self.background / TWO_PI
        if abs(k - round(k)) > 1e-9:
            raise ValueError("background must be a multiple of 2*pi")

    @property
    def bit(self) -> int:
        return 0 if self.polarity == 1 else 1


def fluxon_energy_ratio(v: float) -> float:
    """E_fl(v)/E_fl(0) = (1 - v^2)^(-1/2), with v in units of c."""
    if not abs(v) < 1.0:
        raise ValueError("|v| must be < c")
    return 1.0 / math.sqrt(1.0 - v * v)


def fluxon_energy(v: float, rest: float = 8.0) -> float:
    """Fluxon energy in units of E0 of a chain whose rest energy is ``rest``."""
    return rest * fluxon_energy_ratio(v)


def velocity_for_energy(e: float, rest: float = 8.0) -> float:
    """Invert :func:`fluxon_energy`: speed (units c) of a fluxon with energy ``e``."""
    if e < rest:
        raise ValueError("energy below rest energy")
    return math.sqrt(1.0 - (rest / e) ** 2)


def init_kink(p: LJJParams, k: KinkSpec, x: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Travelling sine-Gordon kink sampled at cell positions ``x``.

    Returns local phases and their time derivatives.  ``x`` defaults to the
    cell positions 0 .. N-1.
    """
    if x is None:
        x = np.arange(p.cells, dtype=float) * p.a
    x = np.asarray(x, dtype=float)
    gamma_inv = math.sqrt(1.0 - k.v * k.v)
    width = p.lambda_j * gamma_inv
    lo, hi = x.min(), x.max()
    if min(k.x0 - lo, hi - k.x0) < 4.0 * width:
        raise ValueError(f"kink at x0={k.x0} does not fit between {lo} and {hi}")
    u = k.polarity * (x - k.x0) / width
    psi = k.background + 4.0 * np.arctan(np.exp(-u))
    # d/dx of 4 atan(exp(-u)) is -2 p / (w cosh u); the profile moves as x - v c t
    dpsi_dx = -2.0 * k.polarity / (width * np.cosh(u))
    psi_dot = -k.v * p.c * dpsi_dx
    return psi, psi_dot


def chain_energy_density(p: LJJParams, psi: np.ndarray, psi_dot: np.ndarray) -> np.ndarray:
    """Per-cell energy: capacitive + Josephson + half of each adjacent inductor."""
    e = 0.5 * p.cj * psi_dot**2 + p.ic * (1.0 - np.cos(psi))
    ind = np.diff(psi) ** 2 / (2.0 * p.l)
    e[:-1] += 0.5 * ind
    e[1:] += 0.5 * ind
    return e


def topological_charge(psi: np.ndarray) -> float:
    """Net winding of a chain in units of 2*pi (fluxon = +1)."""
    return float((psi[0] - psi[-1]) / TWO_PI)


@dataclass(frozen=True)
class ChainLayout:
    """Where a chain lives inside a circuit graph.

    ``plus``/``minus`` are the JJ endpoint nodes per cell, ordered by
    position ``x``; the local phase is phi[plus] - phi[minus].  ``free`` is
    the node of each cell that is not the shared reference rail.
    """

    name: str
    params: LJJParams
    x: tuple[float, ...]
    jj_labels: tuple[str, ...]
    plus: tuple[str, ...]
    minus: tuple[str, ...]
    free: tuple[str, ...]
    side: str = "free"

    def __post_init__(self):
        if self.side not in ("input", "output", "free"):
            raise ValueError(f"unknown chain side {self.side!r}")

    @property
    def positions(self) -> np.ndarray:
        return np.asarray(self.x, dtype=float)

    def index_arrays(self, g: CircuitGraph) -> tuple[np.ndarray, np.ndarray]:
        idx = g.node_index
        n = len(g.active_nodes)

        def ix(node):
            i = idx[node]
            return i if i >= 0 else n

        return (np.array([ix(p) for p in self.plus]), np.array([ix(m) for m in self.minus]))

    def local(self, g: CircuitGraph, phi: np.ndarray) -> np.ndarray:
        """Local phases for one state vector or a stack of them (last axis = nodes)."""
        ip, im = self.index_arrays(g)
        phi = np.asarray(phi)
        ext = np.concatenate([phi, np.zeros(phi.shape[:-1] + (1,))], axis=-1)
        return ext[..., ip] - ext[..., im]

    def place(self, g: CircuitGraph, phi: np.ndarray, phi_dot: np.ndarray, psi, psi_dot) -> None:
        """Write local phases into state vectors, assuming the reference rail is at rest at 0."""
        idx = g.node_index
        for k, node in enumerate(self.free):
            i = idx[node]
            sign = 1.0 if self.plus[k] == node else -1.0
            phi[i] += sign * psi[k]
            phi_dot[i] += sign * psi_dot[k]


def add_chain(
    branches: list,
    name: str,
    p: LJJParams,
    ref: str,
    side: str,
    termination: tuple[float, float, float | None] | None = None,
    flip: bool = False,
    node_prefix: str | None = None,
    terminal: str | None = None,
    x_offset: float = 0.0,
) -> ChainLayout:
    """Append the branches of one chain and return its layout.

    The chain's free rail carries the cell inductors; ``ref`` is the other
    rail.  Input chains occupy x = -(N-1)..0 with the termination junction at
    x = 0, output chains x = 0..N-1.  ``termination`` = (ic, cj, rshunt)
    replaces the junction at x = 0.  ``flip`` reverses the junction
    orientation (free node on the minus side), used for chains hanging below
    a shared rail.  ``terminal`` names an existing node to use for the x = 0
    cell instead of a fresh one.
    """
    pre = node_prefix or name
    n = p.cells
    xs = [float(k - (n - 1)) for k in range(n)] if side == "input" else [float(k) for k in range(n)]
    xs = [x + x_offset for x in xs]
    term_k = n - 1 if side == "input" else 0
    labels, plus, minus, free = [], [], [], []
    names = [f"{pre}.{k}" for k in range(n)]
    if terminal is not None:
        names[term_k] = terminal
    for k in range(n):
        node = names[k]
        ic, cj, rsh = (p.ic, p.cj, None)
        if termination is not None and k == term_k and side != "free":
            ic, cj, rsh = termination
        a, b = (ref, node) if flip else (node, ref)
        label = f"J{pre}.{k}"
        branches.append(JosephsonJunction(label, a, b, ic, cj, rsh))
        if k > 0:
            branches.append(Inductor(f"L{pre}.{k}", names[k - 1], node, p.l))
        labels.append(label)
        plus.append(a)
        minus.append(b)
        free.append(node)
    return ChainLayout(name, p, tuple(xs), tuple(labels), tuple(plus), tuple(minus), tuple(free), side)


def build_ljj(p: LJJParams, name: str = "ljj") -> tuple[CircuitGraph, ChainLayout]:
    """A free-standing open-ended chain referenced to ground."""
    branches: list = []
    chain = add_chain(branches, name, p, "gnd", "free")
    return CircuitGraph.from_branches(branches), chain


def terminal_node(chain: ChainLayout) -> str:
    """Node of the cell at x = 0."""
    k = int(np.argmin(np.abs(chain.positions)))
    return chain.free[k]


# --- detection ---------------------------------------------------------------


@dataclass
class FluxonObservation:
    present: bool
    polarity: int | None = None
    center: float | None = None
    velocity: float | None = None
    velocity_err: float | None = None
    energy: float | None = None
    residual: float | None = None
    ambiguous: bool = False
    samples: int = 0
    track_t: np.ndarray | None = field(default=None, repr=False)
    track_x: np.ndarray | None = field(default=None, repr=False)

    @property
    def bit(self) -> str:
        if not self.present:
            return "-"
        return "0" if self.polarity == 1 else "1"

    def to_dict(self) -> dict:
        d = {"present": self.present, "bit": self.bit}
        if self.present:
            d.update(
                polarity=self.polarity,
                center=self.center,
                velocity=self.velocity,
                velocity_err=self.velocity_err,
                energy=self.energy,
                residual=self.residual,
                ambiguous=self.ambiguous,
                samples=self.samples,
            )
        return d


class AmbiguousDetection(ValueError):
    pass


def locate_kinks(psi: np.ndarray, x: np.ndarray, merge: float) -> list[tuple[float, int]]:
    """Kink centres as crossings of odd multiples of pi.

    Crossings closer than ``merge`` are summed into one object, so a plasma
    wiggle around a kink centre does not produce extra kinks.  Returns
    (centre, polarity) pairs sorted by position.
    """
    lo = math.floor((psi.min() - math.pi) / TWO_PI)
    hi = math.ceil((psi.max() - math.pi) / TWO_PI)
    raw = []
    for k in range(lo, hi + 1):
        d = psi - (2 * k + 1) * math.pi
        s = np.where(d >= 0, 1, -1)  # a sample sitting exactly on the level still counts
        for i in np.flatnonzero(s[:-1] != s[1:]):
            frac = d[i] / (d[i] - d[i + 1])
            xc = x[i] + frac * (x[i + 1] - x[i])
            pol = 1 if psi[i + 1] < psi[i] else -1
            raw.append((xc, pol))
    raw.sort()
    out: list[tuple[float, int]] = []
    group: list[tuple[float, int]] = []
    for item in raw:
        if group and item[0] - group[-1][0] > merge:
            out.extend(_collapse(group))
            group = []
        group.append(item)
    if group:
        out.extend(_collapse(group))
    return out


def _collapse(group):
    net = sum(p for _, p in group)
    if net == 0:
        return []
    pol = 1 if net > 0 else -1
    xs = [x for x, p in group if p == pol]
    return [(float(np.mean(xs)), pol)] * abs(net)


def detect_fluxons(
    t: Sequence[float],
    psi: np.ndarray,
    psi_dot: np.ndarray,
    p: LJJParams,
    x: np.ndarray | None = None,
    region: tuple[float, float] | None = None,
    window: float = 5.0,
    strict: bool = False,
    first_pass: bool = True,
) -> list[FluxonObservation]:
    """Track kinks through a series of chain snapshots.

    ``psi``/``psi_dot`` have shape (snapshots, cells).  Only kinks whose
    centre lies inside ``region`` are used.  Velocity is the least-squares
    slope of centre vs time; the error bar is the RMS deviation of the
    snapshot-to-snapshot velocity from that slope.  Energy is summed over
    centre +- ``window`` lambda_J at the last tracked snapshot; the rest of
    the chain's energy is the residual.  Returns one observation per kink
    track, or a single absent observation.

    With ``first_pass`` only the first unbroken run of frames that contain
    kinks is used, so a kink that leaves the region and later comes back
    (say, reflected from an open chain end) is not tracked twice.
    """
    t = np.asarray(t, dtype=float)
    psi = np.atleast_2d(psi)
    psi_dot = np.atleast_2d(psi_dot)
    if x is None:
        x = np.arange(psi.shape[1], dtype=float) * p.a
    x = np.asarray(x, dtype=float)
    if len(t) < 8 or t[-1] - t[0] < 2.0 / NU_J:
        raise ValueError("need >= 8 snapshots spanning >= 2 Josephson periods")
    if region is None:
        region = (x.min(), x.max())
    inside = (x >= region[0]) & (x <= region[1])
    xr = x[inside]
    lam = p.lambda_j
    frames = []
    for k in range(len(t)):
        seg = psi[k, inside]
        kinks = locate_kinks(seg, xr, merge=lam)
        winding = seg[0] - seg[-1]
        if abs(winding) < math.pi:
            kinks = []
        frames.append(kinks)
    if first_pass:
        occupied = [k for k, f in enumerate(frames) if f]
        if occupied:
            k0 = k1 = occupied[0]
            while k1 + 1 < len(frames) and frames[k1 + 1]:
                k1 += 1
            frames = [f if k0 <= k <= k1 else [] for k, f in enumerate(frames)]

    counts = [len(f) for f in frames]
    if max(counts) == 0:
        return [FluxonObservation(present=False)]
    ambiguous = False
    for f in frames:
        for (xa, _), (xb, _) in zip(f, f[1:]):
            if xb - xa < 3.0 * lam:
                ambiguous = True
    if ambiguous and strict:
        raise AmbiguousDetection("two kinks within 3 lambda_J")

    ntracks = max(counts)
    # frames holding the full set of kinks; tracks follow sorted order
    full = [k for k in range(len(t)) if counts[k] == ntracks]
    if any(c not in (0, ntracks) for c in counts):
        ambiguous = ambiguous or ntracks > 1
    obs = []
    for j in range(ntracks):
        tt = t[full]
        xc = np.array([frames[k][j][0] for k in full])
        pol = frames[full[-1]][j][1]
        kl = full[-1]
        if len(tt) >= 2:
            slope, icpt = np.polyfit(tt, xc, 1)
            inst = np.diff(xc) / np.diff(tt)
            err = float(np.sqrt(np.mean((inst - slope) ** 2))) if len(inst) else 0.0
            vel, verr = slope / p.c, err / p.c
        else:
            vel, verr = float("nan"), float("nan")
        dens = chain_energy_density(p, psi[kl], psi_dot[kl])
        near = np.abs(x - xc[-1]) <= window * lam
        e_win = float(dens[near].sum())
        e_rest = float(dens[~near].sum())
        obs.append(
            FluxonObservation(
                present=True,
                polarity=int(pol),
                center=float(xc[-1]),
                velocity=float(vel),
                velocity_err=float(verr),
                energy=e_win / p.E0,
                residual=e_rest / p.E0,
                ambiguous=ambiguous,
                samples=len(tt),
                track_t=tt,
                track_x=xc,
            )
        )
    return obs
