"""Command-line front end.

Exit codes: 0 pass, 1 criterion failure, 2 usage or runtime error.  The
default output directory comes from ``RFLSIM_OUTPUT_DIR`` (else ./rflsim-out).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .scenario import (
    DEFAULT_CRITERION,
    Scenario,
    ScenarioError,
    _json_default,
    build_gate,
    paired_inputs,
    reverse_kinks,
    run_gate,
    symbol_kink,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUTPUT_ENV = "RFLSIM_OUTPUT_DIR"
EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _out_dir(arg: str | None) -> Path:
    d = Path(arg or os.environ.get(OUTPUT_ENV) or "rflsim-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default)


def _params(items) -> dict[str, float]:
    out = {}
    for it in items or ():
        k, sep, v = it.partition("=")
        if not sep:
            raise UsageError(f"parameter override must be NAME=VALUE, got {it!r}")
        try:
            out[k] = float(v)
        except ValueError:
            raise UsageError(f"non-numeric value in {it!r}") from None
    return out


# --- subcommands --------------------------------------------------------------------


def cmd_simulate(a) -> int:
    from .dynamics import write_energy_csv, write_probe_csv, write_snapshots_csv

    path = Path(a.scenario)
    if not path.is_file():
        raise UsageError(f"scenario file not found: {path}")
    sc = Scenario.load(path)
    gc, verdict = sc.run(keep_result=True)
    out = _out_dir(a.out)
    res = verdict.result
    write_snapshots_csv(out / "snapshots.csv", gc.graph, res)
    write_energy_csv(out / "energy.csv", res)
    for name, rec in res.probes.items():
        write_probe_csv(out / f"probe_{name}.csv", rec)
    summary = verdict.to_dict() | {"scenario": str(path), "seed": a.seed}
    (out / "verdict.json").write_text(_dump(summary))
    print(_dump(summary))
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def _sweep_spec(path: Path, jobs: int, seed):
    from .sweep import SweepSpec

    with open(path, "rb") as fh:
        d = tomllib.load(fh)
    axis = d.pop("axis", None)
    if axis is None:
        raise UsageError("sweep spec needs an 'axis'")
    kw = dict(
        params={k: float(v) for k, v in d.pop("params", {}).items()},
        v0=float(d.pop("v0", 0.6)),
        dx=float(d.pop("dx", 0.0)),
        criterion=float(d.pop("criterion", DEFAULT_CRITERION)),
        jobs=jobs,
        seed=seed,
    )
    if "grid" in d:
        g = d.pop("grid")
        if isinstance(g, dict):
            grid = tuple(np.linspace(float(g["min"]), float(g["max"]), int(g["count"])))
        else:
            grid = tuple(float(x) for x in g)
        spec = SweepSpec(axis, grid, **kw)
    else:
        spec = SweepSpec.default(axis, int(d.pop("points", 15)), **kw)
    if d:
        raise UsageError(f"unknown sweep keys: {', '.join(sorted(d))}")
    return spec


def cmd_sweep(a) -> int:
    from .sweep import run_sweep

    path = Path(a.spec)
    if not path.is_file():
        raise UsageError(f"sweep spec not found: {path}")
    spec = _sweep_spec(path, a.jobs, a.seed)
    rep = run_sweep(spec)
    out = _out_dir(a.out)
    rep.write_csv(out)
    summary = rep.summary()
    (out / f"sweep_{spec.axis}_summary.json").write_text(_dump(summary))
    print(_dump(summary))
    return EXIT_PASS if summary["window"] is not None else EXIT_FAIL


def cmd_gate(a) -> int:
    if a.name == "snl":
        raise UsageError("use 'snl-run' for the store-and-launch cell")
    gc = build_gate(a.name, _params(a.param))
    syms = a.inputs
    if len(syms) != len(gc.inputs):
        raise UsageError(f"{a.name} takes {len(gc.inputs)} input symbol(s), got {syms!r}")
    if len(syms) == 2:
        kinks = paired_inputs(gc.inputs, syms, a.v0, a.dx)
    else:
        kinks = {gc.inputs[0]: symbol_kink(syms, a.v0)}
    verdict = run_gate(gc, kinks, criterion=a.criterion)
    out = {"forward": verdict.to_dict(), "seed": a.seed}
    ok = verdict.passed
    if a.reverse:
        back = run_gate(gc, reverse_kinks(gc, verdict), criterion=a.criterion)
        restored = "".join(back.outputs[n].symbol for n in gc.inputs) == syms
        out["backward"] = back.to_dict() | {"restores_inputs": restored}
        ok = ok and restored
    print(_dump(out))
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_edge_model(a) -> int:
    from .edge import NoIntersection, discreteness_scan, frequency_table, idsn_mu_report
    from .gates import IDSN_PRESET
    from .ljj import LJJParams

    p = IDSN_PRESET
    cj, ic = (p.ct2, p.it2) if a.idsn_preset else (a.cj_hat, a.ic_hat)
    if cj is None or ic is None:
        raise UsageError("give --idsn-preset or both --cj-hat and --ic-hat")
    report: dict = {"cj_hat": cj, "ic_hat": ic}
    try:
        if a.idsn_preset:
            report.update(idsn_mu_report(p))
        if a.discreteness:
            report["scan"] = {
                f"{r:.4g}": {
                    "lambda_mu": s.lambda_mu,
                    "omega": s.omega,
                    "cj_alpha": s.effective.cj_alpha,
                    "ic_alpha": s.effective.ic_alpha,
                }
                for r, s in discreteness_scan(cj, ic, a.discreteness)
            }
        status = EXIT_PASS
    except NoIntersection as e:
        report["error"] = str(e)
        status = EXIT_FAIL
    table = frequency_table(cj, ic, LJJParams(), n=a.points)
    out = _out_dir(a.out)
    csv_path = out / "edge_model_mu_grid.csv"
    np.savetxt(csv_path, table, delimiter=",", header="lambda_mu,omega_alpha,omega_bulk", comments="")
    report["csv"] = str(csv_path)
    print(_dump(report))
    return status


def cmd_snl_ideal(a) -> int:
    from .snl import ideal_snl_efficiency

    r = ideal_snl_efficiency(a.s, a.vclk, a.mode, a.vin)
    print(f"E_clk = {r.e_clk:.3f} E0  E_out = {r.e_out:.3f} E0  v_out = {r.v_out:.3f} c  efficiency = {100 * r.efficiency:.0f}%")
    return EXIT_PASS


def cmd_snl_run(a) -> int:
    from .snl import SNLParams, build_snl, run_snl

    gc = build_snl(SNLParams().with_ratios(**_params(a.param)), mirrored_clock=a.mirrored)
    rec = run_snl(gc, a.bit, a.vin, None if a.no_clock else a.vclk, t_store=a.t_store)
    d = rec.to_dict() | {"seed": a.seed}
    print(_dump(d))
    want = "out1" if a.bit == 0 else "out2"
    ok = rec.storage_ok and (a.no_clock or rec.launched_on == want)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_cnot_table(a) -> int:
    from .cnot import format_table

    print(format_table())
    return EXIT_PASS


def cmd_search(a) -> int:
    from .search import search_one_bit

    bounds = {}
    for it in a.bound:
        k, sep, rng = it.partition("=")
        lo, sep2, hi = rng.partition(":")
        if not (sep and sep2):
            raise UsageError(f"bound must be NAME=LO:HI, got {it!r}")
        bounds[k] = (float(lo), float(hi))
    if not bounds:
        raise UsageError("give at least one --bound")
    res = search_one_bit(a.objective, bounds, budget=a.budget, v0=a.v0)
    out = {
        "objective": a.objective,
        "seed": a.seed,
        "ranked": [e.__dict__ for e in res.ranked[: a.top]],
        "evaluations": [e.__dict__ for e in res.log],
    }
    print(_dump(out))
    return EXIT_PASS if res.ranked else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rflsim", description="Fluxon gate circuit simulator")
    ap.add_argument("--seed", type=int, default=None, help="recorded in outputs; dynamics are deterministic")
    ap.add_argument("-v", "--verbose", action="store_true")
    # the global options are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run a TOML scenario")
    s.add_argument("scenario")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("sweep", parents=[common], help="one-axis IDSN margin sweep from a TOML spec")
    s.add_argument("spec")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_sweep)

    s = sub.add_parser("gate", parents=[common], help="run one gate with symbolic inputs, e.g. --inputs 0-")
    s.add_argument("name", choices=["not", "one_bit", "idsn", "splitter", "snl"])
    s.add_argument("--inputs", required=True)
    s.add_argument("--v0", type=float, default=0.6)
    s.add_argument("--dx", type=float, default=0.0)
    s.add_argument("--criterion", type=float, default=DEFAULT_CRITERION)
    s.add_argument("--param", action="append", metavar="NAME=VALUE")
    s.add_argument("--reverse", action="store_true", help="also relaunch the outputs backward")
    s.set_defaults(fn=cmd_gate)

    s = sub.add_parser("edge-model", parents=[common], help="self-consistent edge-state solution and mu-grid CSV")
    s.add_argument("--idsn-preset", action="store_true")
    s.add_argument("--cj-hat", type=float)
    s.add_argument("--ic-hat", type=float)
    s.add_argument("--discreteness", type=float, nargs="*", metavar="A_OVER_LAMBDA")
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_edge_model)

    s = sub.add_parser("snl-ideal", parents=[common], help="ideal store-and-launch energetics")
    s.add_argument("--s", type=float, default=2.0)
    s.add_argument("--vclk", type=float, default=0.6)
    s.add_argument("--mode", choices=["slow", "fast"], default="fast")
    s.add_argument("--vin", type=float, default=0.4)
    s.set_defaults(fn=cmd_snl_ideal)

    s = sub.add_parser("snl-run", parents=[common], help="simulate storage and launch in the SNL circuit")
    s.add_argument("--bit", type=int, choices=[0, 1], default=0)
    s.add_argument("--vin", type=float, default=0.4)
    s.add_argument("--vclk", type=float, default=0.6)
    s.add_argument("--no-clock", action="store_true")
    s.add_argument("--mirrored", action="store_true")
    s.add_argument("--t-store", type=float, default=120.0)
    s.add_argument("--param", action="append", metavar="NAME=VALUE")
    s.set_defaults(fn=cmd_snl_run)

    s = sub.add_parser("cnot-table", parents=[common], help="behavioral CNOT truth table")
    s.set_defaults(fn=cmd_cnot_table)

    s = sub.add_parser("search", parents=[common], help="grid+refine search for 1-bit interface presets")
    s.add_argument("--objective", choices=["invert", "preserve"], required=True)
    s.add_argument("--bound", action="append", default=[], metavar="NAME=LO:HI")
    s.add_argument("--budget", type=int, default=40)
    s.add_argument("--v0", type=float, default=0.6)
    s.add_argument("--top", type=int, default=5)
    s.set_defaults(fn=cmd_search)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_PASS
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return a.fn(a)
    except (UsageError, ScenarioError, KeyError, ValueError, OSError, tomllib.TOMLDecodeError) as e:
        print(f"rflsim: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
