"""One-axis margin sweeps of the IDSN gate.

Every grid point runs three simulations: a single fluxon on S1, a single
fluxon on S2, and a synchronized same-polarity pair.  A point passes when
the single fluxons come out unchanged on their own row, the pair comes out
inverted on both rows, and every output has v_f/v_0 above the criterion.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .gates import IDSN_PRESET, IDSN_RATIO_FIELDS
from .scenario import DEFAULT_CRITERION, build_gate, paired_inputs, run_gate

log = logging.getLogger(__name__)

AXES_SPECIAL = ("v0", "dx")
DEFAULT_POINTS = 15
DEFAULT_V0_RANGE = (0.3, 0.9)
DEFAULT_DX_RANGE = (-2.0, 2.0)
NOMINAL_V0 = 0.6

#: (case, input symbols, sink) -> the four data series of a margin plot
SERIES = (
    ("single", "0-", "S1p"),
    ("single", "-0", "S2p"),
    ("two", "00", "S1p"),
    ("two", "00", "S2p"),
)
EXPECTED = {"0-": "0-", "-0": "-0", "00": "11"}


def _preset_ratios(params: Mapping[str, float]) -> dict[str, float]:
    ratios = {k: v for k, v in params.items() if k in IDSN_RATIO_FIELDS or k.startswith(("CJhat_", "Ichat_"))}
    return IDSN_PRESET.with_ratios(**ratios).ratios()


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple[float, ...]
    params: Mapping[str, float] = field(default_factory=dict)
    v0: float = NOMINAL_V0
    dx: float = 0.0
    criterion: float = DEFAULT_CRITERION
    jobs: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.axis not in AXES_SPECIAL and self.axis not in IDSN_RATIO_FIELDS:
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        g = tuple(float(x) for x in self.grid)
        if not g or not all(math.isfinite(x) for x in g):
            raise ValueError("grid must be non-empty and finite")
        if list(g) != sorted(g) or len(set(g)) != len(g):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def nominal(self) -> float:
        if self.axis == "v0":
            return self.v0
        if self.axis == "dx":
            return self.dx
        return _preset_ratios(self.params)[self.axis]

    @classmethod
    def default(cls, axis: str, points: int = DEFAULT_POINTS, **kw) -> "SweepSpec":
        """Default grid: [0.3, 0.9] for v0, [-2, 2] cells for dx, +-50% otherwise."""
        if axis == "v0":
            lo, hi = DEFAULT_V0_RANGE
        elif axis == "dx":
            lo, hi = DEFAULT_DX_RANGE
        else:
            nom = _preset_ratios(kw.get("params", {}))[axis]
            lo, hi = 0.5 * nom, 1.5 * nom
        return cls(axis, tuple(np.linspace(lo, hi, points)), **kw)


@dataclass
class PointResult:
    axis_value: float
    vf_over_v0: dict  # series key -> value or None
    errbar: dict  # case -> largest relative velocity error bar
    logic_ok: dict  # case -> bool
    error: str | None = None

    def series_pass(self, key: str, criterion: float) -> bool:
        case = key.split(":")[0]
        v = self.vf_over_v0.get(key)
        return self.error is None and self.logic_ok.get(case, False) and v is not None and v > criterion


def _key(case: str, symbols: str, sink: str) -> str:
    return f"{case}:{symbols}:{sink}"


def _run_point(args) -> PointResult:
    axis, value, params, v0, dx, criterion, cases = args
    params = dict(params)
    if axis == "v0":
        v0 = value
    elif axis == "dx":
        dx = value
    else:
        params[axis] = value
    vf, errs, logic = {}, {}, {}
    try:
        gc = build_gate("idsn", params)
        for syms in dict.fromkeys(s for c, s, _ in SERIES if c in cases):
            case = "two" if "-" not in syms else "single"
            verdict = run_gate(gc, paired_inputs(gc.inputs, syms, v0, dx), criterion=criterion)
            got = verdict.symbols
            logic[case] = logic.get(case, True) and got == EXPECTED[syms]
            for c, s, sink in SERIES:
                if s != syms:
                    continue
                rep = verdict.outputs[sink]
                vf[_key(c, s, sink)] = rep.vf_over_v0
                if rep.observation.present and rep.observation.velocity_err is not None:
                    errs[c] = max(errs.get(c, 0.0), rep.observation.velocity_err / v0)
    except Exception as e:  # recorded as a failed point; the sweep goes on
        log.warning("sweep point %s=%g failed: %s", axis, value, e)
        return PointResult(value, vf, errs, logic, f"{type(e).__name__}: {e}")
    return PointResult(value, vf, errs, logic)


@dataclass
class MarginReport:
    spec: SweepSpec
    points: list[PointResult]

    def passes(self, cases: Sequence[str] = ("single", "two")) -> list[bool]:
        out = []
        for p in self.points:
            keys = [_key(c, s, k) for c, s, k in SERIES if c in cases and _key(c, s, k) in p.vf_over_v0]
            out.append(bool(keys) and all(p.series_pass(k, self.spec.criterion) for k in keys))
        return out

    @property
    def nominal_index(self) -> int:
        return int(np.argmin(np.abs(np.asarray(self.spec.grid) - self.spec.nominal)))

    def window(self, cases: Sequence[str] = ("single", "two")) -> tuple[float, float] | None:
        """Outermost passing grid points of the run of passes holding the nominal."""
        ok = self.passes(cases)
        i = self.nominal_index
        if not ok[i]:
            return None
        lo = hi = i
        while lo > 0 and ok[lo - 1]:
            lo -= 1
        while hi < len(ok) - 1 and ok[hi + 1]:
            hi += 1
        return self.spec.grid[lo], self.spec.grid[hi]

    def rows(self, case: str) -> list[dict]:
        names = [(s, k) for c, s, k in SERIES if c == case]
        ok = self.passes((case,))
        out = []
        for p, flag in zip(self.points, ok):
            row = {"axis_value": p.axis_value}
            for s, k in names:
                row[f"vf_over_v0_{k}"] = p.vf_over_v0.get(_key(case, s, k))
            row["errbar"] = p.errbar.get(case, float("nan") if p.error else 0.0)
            row["pass"] = flag
            out.append(row)
        return out

    def write_csv(self, out_dir: str | Path) -> list[Path]:
        """One CSV per case: axis_value, vf_over_v0_S1p, vf_over_v0_S2p, errbar, pass."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for case in ("single", "two"):
            rows = self.rows(case)
            path = out_dir / f"sweep_{self.spec.axis}_{case}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=["axis_value", "vf_over_v0_S1p", "vf_over_v0_S2p", "errbar", "pass"])
                w.writeheader()
                for r in rows:
                    w.writerow({k: ("" if v is None else v) for k, v in r.items()})
            paths.append(path)
        return paths

    def summary(self) -> dict:
        return {
            "axis": self.spec.axis,
            "nominal": self.spec.nominal,
            "criterion": self.spec.criterion,
            "seed": self.spec.seed,
            "window": self.window(),
            "window_single": self.window(("single",)),
            "window_two": self.window(("two",)),
            "failed_points": [p.axis_value for p in self.points if p.error],
        }


def run_sweep(spec: SweepSpec) -> MarginReport:
    """Evaluate every grid point; results are merged by grid index.

    On the dx axis the single-fluxon runs do not depend on the axis, so they
    are computed once and shared by all points.
    """
    params = dict(spec.params)
    cases = ("two",) if spec.axis == "dx" else ("single", "two")
    jobs = [(spec.axis, x, params, spec.v0, spec.dx, spec.criterion, cases) for x in spec.grid]
    if spec.axis == "dx":
        jobs.append(("dx", spec.dx, params, spec.v0, spec.dx, spec.criterion, ("single",)))
    if spec.jobs == 1:
        results = [_run_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=spec.jobs) as ex:
            results = list(ex.map(_run_point, jobs))
    if spec.axis == "dx":
        shared = results.pop()
        for p in results:
            p.vf_over_v0.update(shared.vf_over_v0)
            p.logic_ok.update(shared.logic_ok)
            p.errbar.update(shared.errbar)
            p.error = p.error or shared.error
    return MarginReport(spec, results)
