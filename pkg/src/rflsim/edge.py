"""Edge-state reduction of a weakly excited LJJ plus its termination junction.

A spectator chain driven only at its terminated end carries an evanescent
field phi_n = phi_0 exp(-mu a n).  Summing the chain's quadratic energy over
that profile turns the chain and its termination JJ into one effective
junction alpha.  The inverse decay length mu is fixed by requiring that
alpha's plasma frequency equals the frequency at which an evanescent wave of
that mu oscillates in the bulk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .gates import AlphaPath, OneBitInterfaceParams, TwoBitInterfaceParams
from .ljj import LJJParams

#: smallest mu*a probed when bracketing; both frequency curves meet at mu = 0
MU_A_MIN = 1e-6
BRACKET_POINTS = 4000


class EvanescentError(ValueError):
    """The bulk dispersion gives omega^2 <= 0: no oscillating edge state."""


class NoIntersection(ValueError):
    def __init__(self, table: np.ndarray):
        self.table = table
        super().__init__(
            "no intersection of omega_alpha(mu) and omega_bulk(mu); "
            "table columns: lambda*mu, omega_alpha, omega_bulk"
        )


def f_mu(mu: float, a: float = 1.0) -> float:
    """sum_{n>=1} exp(-2 mu a n) = 1/(exp(2 mu a) - 1)."""
    x = mu * a
    if not x > 0:
        raise ValueError("mu*a must be > 0")
    return 1.0 / math.expm1(2.0 * x)


def g_mu(mu: float, a: float = 1.0) -> float:
    """sum_{n>=1} (exp(-mu a (n-1)) - exp(-mu a n))^2 = (exp(mu a) - 1)^2 f."""
    return math.expm1(mu * a) ** 2 * f_mu(mu, a)


@dataclass(frozen=True)
class EffectiveJJ:
    cj_alpha: float
    ic_alpha: float
    mu: float

    @property
    def l_alpha(self) -> float:
        return 1.0 / self.ic_alpha

    @property
    def omega_alpha(self) -> float:
        return math.sqrt(self.ic_alpha / self.cj_alpha)


def effective_jj(
    cj_hat: float, ic_hat: float, mu: float, cj: float = 1.0, ic: float = 1.0, l: float = 1.0 / 9.0, a: float = 1.0
) -> EffectiveJJ:
    """Termination (cj_hat, ic_hat) plus a chain (cj, ic, l, a) in the state exp(-mu a n)."""
    f = f_mu(mu, a)
    return EffectiveJJ(cj_hat + cj * f, ic_hat + ic * f + g_mu(mu, a) / l, mu)


def bulk_dispersion(mu: float, a: float, lambda_j: float, omega_j: float = 1.0, discrete: bool = True) -> float:
    """Frequency of a bulk wave with imaginary wave number mu.

    Discrete chain: omega^2 = omega_J^2 + 2 (c/a)^2 (1 - cosh(a mu)),
    continuum: omega^2 = omega_J^2 (1 - (lambda_J mu)^2).
    """
    c = omega_j * lambda_j
    if discrete:
        w2 = omega_j**2 + 2.0 * (c / a) ** 2 * (1.0 - math.cosh(a * mu))
    else:
        w2 = omega_j**2 * (1.0 - (lambda_j * mu) ** 2)
    if not w2 > 0:
        raise EvanescentError(f"omega^2 = {w2:.6g} <= 0 at mu = {mu:.6g}")
    return math.sqrt(w2)


def mu_max(p: LJJParams, discrete: bool = True) -> float:
    """Upper end of the mu range with a real bulk frequency."""
    if discrete:
        return math.acosh(1.0 + p.a**2 / (2.0 * p.lambda_j**2)) / p.a
    return 1.0 / p.lambda_j


@dataclass(frozen=True)
class MuSolution:
    mu: float
    lambda_j: float
    omega: float
    omega_alpha: float
    omega_bulk: float
    effective: EffectiveJJ
    discrete: bool

    @property
    def lambda_mu(self) -> float:
        return self.mu * self.lambda_j


def _curves(cj_hat, ic_hat, p: LJJParams, discrete: bool):
    def w_alpha(mu):
        return effective_jj(cj_hat, ic_hat, mu, p.cj, p.ic, p.l, p.a).omega_alpha

    def w_bulk(mu):
        return bulk_dispersion(mu, p.a, p.lambda_j, p.omega_j, discrete)

    return w_alpha, w_bulk


def frequency_table(cj_hat: float, ic_hat: float, p: LJJParams, n: int = 200, discrete: bool = True) -> np.ndarray:
    """Rows (lambda*mu, omega_alpha, omega_bulk) on an even grid inside (0, mu_max)."""
    w_alpha, w_bulk = _curves(cj_hat, ic_hat, p, discrete)
    top = mu_max(p, discrete)
    mus = np.linspace(top / n, top * (1.0 - 1e-9), n)
    return np.array([(m * p.lambda_j, w_alpha(m), w_bulk(m)) for m in mus])


def solve_mu(cj_hat: float, ic_hat: float, p: LJJParams = LJJParams(), discrete: bool = True) -> MuSolution:
    """Self-consistent decay length: omega_alpha(mu) = omega_bulk(mu).

    The two curves touch trivially at mu = 0, so the bracket is the first
    sign change of their difference on a fine grid of (0, mu_max); bisection
    then narrows it to 1e-10.
    """
    w_alpha, w_bulk = _curves(cj_hat, ic_hat, p, discrete)

    def h(mu):
        return w_alpha(mu) - w_bulk(mu)

    top = mu_max(p, discrete) * (1.0 - 1e-12)
    lo_mu = MU_A_MIN / p.a
    grid = np.geomspace(lo_mu, top, BRACKET_POINTS)
    vals = np.array([h(m) for m in grid])
    flips = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    if len(flips) == 0:
        raise NoIntersection(frequency_table(cj_hat, ic_hat, p, discrete=discrete))
    i = flips[0]
    mu = bisect(h, grid[i], grid[i + 1], xtol=1e-10 / p.lambda_j, rtol=4 * np.finfo(float).eps, maxiter=500)
    eff = effective_jj(cj_hat, ic_hat, mu, p.cj, p.ic, p.l, p.a)
    wa, wb = w_alpha(mu), w_bulk(mu)
    return MuSolution(mu, p.lambda_j, 0.5 * (wa + wb), wa, wb, eff, discrete)


def discreteness_scan(cj_hat: float, ic_hat: float, ratios, discrete: bool = True) -> list[tuple[float, MuSolution]]:
    """Self-consistent solutions for several a/lambda_J values."""
    out = []
    for r in ratios:
        p = LJJParams(cells=max(60, int(math.ceil(4.0 / r)) + 1), l=r * r)
        out.append((r, solve_mu(cj_hat, ic_hat, p, discrete)))
    return out


# --- equivalent 1-bit circuits -------------------------------------------------


def equivalent_one_bit(p: TwoBitInterfaceParams, case: str, mu_scale: float = 1.0) -> OneBitInterfaceParams:
    """1-bit interface reproducing the IDSN dynamics for one input case.

    ``case="two"`` (two synchronized same-polarity fluxons): the B-rail
    current cancels, so each half is a 1-bit gate whose rail JJ is rail A
    and whose other rails are shorted.  Exact; needs a vertically symmetric
    interface.

    ``case="single"`` (fluxon on S1): rail A joins the upper rails, rail B
    (with its inductor) the lower ones, and the spectator chains S2 and S2'
    with their terminations become junctions alpha, in series with rail C.
    ``mu_scale`` multiplies the self-consistent mu (for sensitivity checks).
    """
    if case == "two":
        if not p.vertically_symmetric:
            raise ValueError("two-fluxon reduction needs a vertically symmetric interface")
        return OneBitInterfaceParams(
            term_cj=p.ct1, term_ic=p.it1, rail_cj=p.ca, rail_ic=p.ia, bridge_l=0.0, left=p.s1, right=p.s1p
        )
    if case == "single":
        sol = solve_mu(p.ct2, p.it2, p.s2)
        eff = effective_jj(p.ct2, p.it2, sol.mu * mu_scale, p.s2.cj, p.s2.ic, p.s2.l, p.s2.a)
        return OneBitInterfaceParams(
            term_cj=p.ct1,
            term_ic=p.it1,
            rail_cj=p.cb,
            rail_ic=p.ib,
            rail_l=p.lb,
            bridge_l=0.0,
            bridge_jj=(p.ca, p.ia),
            alpha=AlphaPath(eff.cj_alpha, eff.ic_alpha, p.cc, p.icc),
            left=p.s1,
            right=p.s1p,
        )
    raise ValueError(f"case must be 'two' or 'single', got {case!r}")


@dataclass
class EquivalenceReport:
    case: str
    polarity_match: bool
    vf_two_bit: float | None
    vf_one_bit: float | None
    dv: float | None
    trace_deviation: dict
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.polarity_match and self.dv is not None and self.dv < self.tolerance

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "passed": self.passed,
            "polarity_match": self.polarity_match,
            "vf_two_bit": self.vf_two_bit,
            "vf_one_bit": self.vf_one_bit,
            "dv": self.dv,
            "trace_deviation": self.trace_deviation,
            "tolerance": self.tolerance,
        }


#: IDSN probe -> (1-bit probe, sign) for each case
TRACE_MAP = {
    "two": {"phiA": ("phiB", 1.0)},
    "single": {"phiA": ("phiA", 1.0), "phiB": ("phiB", 1.0), "phiC": ("phiC", 1.0)},
}


def equivalence_check(two_bit_verdict, one_bit_verdict, case: str, tolerance: float = 0.05) -> EquivalenceReport:
    """Compare an IDSN run with its 1-bit reduction (both run with ``keep_result``).

    The S1' observation is compared with the 1-bit output; rail phase traces
    are compared over the common time span.
    """
    a = two_bit_verdict.outputs["S1p"].observation
    b = one_bit_verdict.outputs["out"].observation
    pol = a.present == b.present and (not a.present or a.polarity == b.polarity)
    dv = abs(a.velocity - b.velocity) if a.present and b.present else None
    dev = {}
    ra, rb = two_bit_verdict.result, one_bit_verdict.result
    if ra is not None and rb is not None:
        for pa, (pb, sign) in TRACE_MAP[case].items():
            if pa in ra.probes and pb in rb.probes:
                ta, va = ra.probes[pa].t, ra.probes[pa].values
                tb, vb = rb.probes[pb].t, rb.probes[pb].values
                n = min(len(ta), len(tb))
                if n and np.allclose(ta[:n], tb[:n]):
                    dev[pa] = float(np.max(np.abs(va[:n] - sign * vb[:n])))
                else:
                    t_end = min(ta[-1], tb[-1])
                    tt = ta[ta <= t_end]
                    dev[pa] = float(np.max(np.abs(np.interp(tt, ta, va) - sign * np.interp(tt, tb, vb))))
    return EquivalenceReport(case, pol, a.velocity, b.velocity, dv, dev, tolerance)


def idsn_mu_report(p: TwoBitInterfaceParams = TwoBitInterfaceParams()) -> dict:
    """Self-consistent solution for the IDSN terminations, discrete and continuum."""
    out = {}
    for discrete in (True, False):
        s = solve_mu(p.ct2, p.it2, p.s2, discrete)
        out["discrete" if discrete else "continuum"] = {
            "lambda_mu": s.lambda_mu,
            "omega": s.omega,
            "cj_alpha": s.effective.cj_alpha,
            "ic_alpha": s.effective.ic_alpha,
        }
    return out
