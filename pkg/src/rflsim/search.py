"""Coarse grid plus local refinement over 1-bit interface parameters.

The score is v_f/v_0 of the output fluxon at a fixed launch speed; a point
is feasible when the output polarity meets the objective (inverted for a
NOT, preserved for an ID gate).  The landscape has resonance-type jumps,
so the search never uses gradients.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace

from .gates import NOT_PRESET, OneBitInterfaceParams, build_one_bit
from .ljj import KinkSpec
from .scenario import DEFAULT_X0, run_gate

log = logging.getLogger(__name__)

SEARCH_FIELDS = ("term_cj", "term_ic", "rail_cj", "rail_ic")


@dataclass
class Evaluation:
    params: dict
    feasible: bool
    score: float | None
    polarity: int | None
    phase: str
    error: str | None = None


@dataclass
class SearchResult:
    objective: str
    ranked: list[Evaluation]
    log: list[Evaluation] = field(default_factory=list)

    @property
    def best(self) -> Evaluation | None:
        return self.ranked[0] if self.ranked else None


def evaluate_one_bit(values: dict, objective: str, v0: float = 0.6, base: OneBitInterfaceParams = NOT_PRESET, phase: str = "") -> Evaluation:
    want = -1 if objective == "invert" else 1
    try:
        gc = build_one_bit(replace(base, **values))
        v = run_gate(gc, {"in": KinkSpec(DEFAULT_X0, v0, 1)})
    except Exception as e:
        return Evaluation(dict(values), False, None, None, phase, f"{type(e).__name__}: {e}")
    obs = v.outputs["out"].observation
    pol = obs.polarity if obs.present else None
    score = v.outputs["out"].vf_over_v0
    return Evaluation(dict(values), pol == want and score is not None, score, pol, phase)


def search_one_bit(
    objective: str,
    bounds: dict[str, tuple[float, float]],
    budget: int = 40,
    seed: dict[str, float] | None = None,
    coarse_points: int = 3,
    v0: float = 0.6,
    base: OneBitInterfaceParams = NOT_PRESET,
    min_step: float = 0.02,
) -> SearchResult:
    """Maximize v_f/v_0 under the polarity objective within ``budget`` runs.

    ``bounds`` maps a subset of (term_cj, term_ic, rail_cj, rail_ic) to
    (lo, hi).  The seed (default: centre of the box) is evaluated first,
    then a ``coarse_points``-per-axis grid, then a compass search around the
    best feasible point with halving steps.
    """
    if objective not in ("invert", "preserve"):
        raise ValueError("objective must be 'invert' or 'preserve'")
    for k, (lo, hi) in bounds.items():
        if k not in SEARCH_FIELDS:
            raise ValueError(f"cannot search over {k!r}")
        if not (lo <= hi) or not all(map(lambda x: abs(x) < float("inf"), (lo, hi))):
            raise ValueError(f"bad bounds for {k}: {(lo, hi)}")
    evals: list[Evaluation] = []
    seen = set()

    def ev(values, phase):
        key = tuple(round(values[k], 9) for k in sorted(values))
        if key in seen or len(evals) >= budget:
            return None
        seen.add(key)
        e = evaluate_one_bit(values, objective, v0, base, phase)
        log.info("search %s %s -> feasible=%s score=%s", phase, values, e.feasible, e.score)
        evals.append(e)
        return e

    names = list(bounds)
    start = dict(seed) if seed else {k: 0.5 * (lo + hi) for k, (lo, hi) in bounds.items()}
    ev(start, "seed")
    axes = [
        [lo + (hi - lo) * i / (coarse_points - 1) for i in range(coarse_points)] if coarse_points > 1 else [0.5 * (lo + hi)]
        for lo, hi in bounds.values()
    ]
    for combo in itertools.product(*axes):
        if len(evals) >= budget:
            break
        ev(dict(zip(names, combo)), "coarse")

    def best_feasible():
        f = [e for e in evals if e.feasible]
        return max(f, key=lambda e: e.score) if f else None

    step = {k: 0.25 * (hi - lo) for k, (lo, hi) in bounds.items()}
    while len(evals) < budget and best_feasible() is not None:
        centre = best_feasible()
        improved = False
        for k in names:
            for sgn in (1, -1):
                lo, hi = bounds[k]
                cand = dict(centre.params)
                cand[k] = min(hi, max(lo, cand[k] + sgn * step[k]))
                e = ev(cand, "refine")
                if e is not None and e.feasible and e.score > centre.score:
                    improved = True
        if not improved:
            step = {k: s / 2 for k, s in step.items()}
            if all(step[k] < min_step * max(abs(bounds[k][1]), 1e-12) for k in names):
                break
    ranked = sorted((e for e in evals if e.feasible), key=lambda e: -e.score)
    if not ranked:
        log.warning("search_one_bit(%s): no feasible point in %d evaluations", objective, len(evals))
    return SearchResult(objective, ranked, evals)
