import math

import numpy as np
import pytest

from rflsim.circuit import CircuitGraph, Inductor, JosephsonJunction
from rflsim.dynamics import (
    SimState,
    SimulationDiverged,
    choose_dt,
    energy,
    run,
    step,
    write_energy_csv,
    write_probe_csv,
    write_snapshots_csv,
)
from rflsim.gates import IDSN_PRESET, NOT_PRESET, build_idsn, build_one_bit, build_splitter
from rflsim.ljj import KinkSpec, LJJParams
from rflsim.scenario import initial_state
from rflsim.snl import build_snl
from rflsim.units import JOSEPHSON_PERIOD

from conftest import kink_state


def _single_jj(rshunt=None):
    return CircuitGraph.from_branches([JosephsonJunction("j", "n", "gnd", 1.0, 1.0, rshunt)])


def test_zero_state_has_zero_energy():
    g = build_one_bit(NOT_PRESET).graph
    e = energy(g, SimState.zeros(g))
    assert (e.kinetic, e.inductive, e.josephson, e.dissipated) == (0.0, 0.0, 0.0, 0.0)


def test_small_oscillation_period():
    g = _single_jj()
    r = run(g, SimState(0.0, [0.01], [0.0]), JOSEPHSON_PERIOD, dt=0.001, auto_dt=False)
    assert r.final.phi[0] == pytest.approx(0.01, rel=1e-4)


def test_damped_junction_ledger():
    g = _single_jj(rshunt=5.0)
    r = run(g, SimState(0.0, [0.1], [0.0]), 5 * JOSEPHSON_PERIOD, energy_interval=JOSEPHSON_PERIOD)
    e = r.energy_array()
    assert e[-1, 4] < 0.6 * e[0, 4]
    budget = np.abs(e[:, 4] + e[:, 3] - e[0, 4]) / e[0, 4]
    assert budget.max() < 1e-8 * len(e)


def test_static_kink_drift(free_chain):
    g, _, s0 = kink_state(LJJParams(cells=60), KinkSpec(30.0, 0.0))
    r = run(g, s0, 50 * JOSEPHSON_PERIOD, energy_interval=JOSEPHSON_PERIOD)
    e = r.energy_array()[:, 4]
    assert np.abs(e - e[0]).max() / e[0] < 1e-6


def _gate_states():
    idsn = build_idsn(IDSN_PRESET)
    not_ = build_one_bit(NOT_PRESET)
    split = build_splitter()
    snl = build_snl()
    return {
        "idsn": (idsn, {"S1": KinkSpec(-20, 0.6, 1), "S2": KinkSpec(-20, 0.6, 1)}),
        "not": (not_, {"in": KinkSpec(-20, 0.6, 1)}),
        "splitter": (split, {"parent": KinkSpec(-25, 0.6, 1)}),
        "snl": (snl, {"in1": KinkSpec(-20, 0.4, 1)}),
    }


@pytest.mark.parametrize("name", ["idsn", "not", "splitter", "snl"])
def test_undamped_drift_per_period(name):
    gc, kinks = _gate_states()[name]
    g = gc.graph.without_resistors()
    s0 = initial_state(gc, kinks)
    duration = 40.0
    r = run(g, s0, duration, energy_interval=1.0)
    e = r.energy_array()[:, 4]
    assert r.dt <= 0.01
    drift_per_period = np.abs(e - e[0]).max() / e[0] / (duration / JOSEPHSON_PERIOD)
    assert drift_per_period < 1e-6


def test_damped_gate_conservation():
    gc, kinks = _gate_states()["snl"]
    r = run(gc.graph, initial_state(gc, kinks), 60.0, energy_interval=1.0)
    e = r.energy_array()
    assert e[-1, 3] > 0.01
    assert np.abs(e[:, 4] + e[:, 3] - e[0, 4]).max() / e[0, 4] < 1e-5


@pytest.mark.parametrize("name", ["idsn", "not", "splitter"])
def test_negation_antisymmetry(name):
    gc, kinks = _gate_states()[name]
    s0 = initial_state(gc, kinks)
    a = run(gc.graph, s0, 30.0, snapshot_interval=1.0)
    b = run(gc.graph, s0.negated(), 30.0, snapshot_interval=1.0)
    assert np.abs(a.snapshots + b.snapshots).max() < 1e-8


def test_choose_dt_halves_for_stiff_circuit():
    stiff = CircuitGraph.from_branches(
        [JosephsonJunction("j", "n", "gnd", 1.0, 1.0), Inductor("l", "n", "gnd", 1e-4)]
    )
    dt = choose_dt(stiff)
    assert dt < 0.01 and dt * 100 <= 0.2 and 2 * dt * 100 > 0.2
    assert choose_dt(_single_jj()) == 0.01


def test_step_matches_run():
    g = _single_jj()
    s = SimState(0.0, [0.5], [0.0])
    r = run(g, s, 0.05, dt=0.01, auto_dt=False)
    for _ in range(5):
        s = step(g, s, 0.01)
    np.testing.assert_allclose(s.phi, r.final.phi, atol=1e-15)
    with pytest.raises(ValueError):
        step(g, s, 0.0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    # RK4 far outside its stability region grows without bound
    g = CircuitGraph.from_branches([JosephsonJunction("j", "n", "gnd", 1.0, 1.0), Inductor("l", "n", "gnd", 1e-4)])
    with pytest.raises(SimulationDiverged) as e:
        run(g, SimState(0.0, [0.1], [0.0]), 1e4, dt=1.0, auto_dt=False)
    assert e.value.last_state is not None


def test_probes_and_csv(tmp_path):
    gc = build_one_bit(NOT_PRESET)
    r = run(gc.graph, initial_state(gc, {"in": KinkSpec(-20, 0.6)}), 2.0, snapshot_interval=1.0)
    assert set(r.probes) == {"phiB", "term.L", "term.R"}
    assert len(r.snapshot_t) == 3
    write_snapshots_csv(tmp_path / "s.csv", gc.graph, r)
    write_energy_csv(tmp_path / "e.csv", r)
    write_probe_csv(tmp_path / "p.csv", r.probes["phiB"])
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert len(rows) == 4 and rows[0].startswith("t,")
    assert (tmp_path / "e.csv").read_text().startswith("t,kinetic")
    assert math.isfinite(float((tmp_path / "p.csv").read_text().splitlines()[1].split(",")[1]))
