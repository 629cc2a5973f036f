import math

import numpy as np
import pytest

from rflsim.circuit import CircuitError, JosephsonJunction
from rflsim.gates import (
    IDSN_PRESET,
    IDSN_TRUTH_TABLE,
    NOT_PRESET,
    OneBitInterfaceParams,
    TwoBitInterfaceParams,
    build_one_bit,
    build_splitter,
    splitter_child,
)
from rflsim.ljj import KinkSpec, LJJParams, fluxon_energy_ratio, topological_charge
from rflsim.scenario import (
    DEFAULT_X0,
    Scenario,
    ScenarioError,
    build_gate,
    delay_to_separation,
    paired_inputs,
    parse_input,
    reverse_kinks,
    run_gate,
)


@pytest.fixture(scope="module")
def idsn():
    return build_gate("idsn")


@pytest.fixture(scope="module")
def not_gate():
    return build_gate("not")


@pytest.fixture(scope="module")
def not_run(not_gate):
    return run_gate(not_gate, {"in": KinkSpec(DEFAULT_X0, 0.6, 1)}, keep_result=True)


def _run_idsn(gc, symbols, v0=0.6, dx=0.0, **kw):
    return run_gate(gc, paired_inputs(gc.inputs, symbols, v0, dx), **kw)


def test_one_bit_structure():
    gc = build_one_bit(NOT_PRESET)
    n = NOT_PRESET.left.cells + NOT_PRESET.right.cells
    jj = [b for b in gc.graph.branches if isinstance(b, JosephsonJunction)]
    assert len(jj) == n + 1  # two terminations sit on chain cells, plus the rail JJ
    interface = [b.label for b in jj if not b.label.startswith(("Jin.", "Jout."))]
    assert interface == ["JB"]
    assert {p.name for p in gc.graph.probes} >= {"phiB", "term.L", "term.R"}


def test_one_bit_validation():
    with pytest.raises(CircuitError):
        OneBitInterfaceParams(term_cj=0.0)
    with pytest.raises(CircuitError):
        OneBitInterfaceParams(bridge_l=-1.0)
    with pytest.raises(KeyError):
        NOT_PRESET.with_ratios(nope=1.0)


def test_idsn_preset_values_and_symmetry():
    r = IDSN_PRESET.ratios()
    assert r["CJA_over_CJ"] == 15.0 and r["IcA_over_Ic"] == 1.5
    assert r["CJB_over_CJ"] == 16.7 and r["IcB_over_Ic"] == 6.9
    assert r["LB_over_L"] == pytest.approx(0.5)
    assert r["CJhat1_over_CJ"] == r["CJhat2_over_CJ"] == 5.8
    assert IDSN_PRESET.vertically_symmetric
    assert not IDSN_PRESET.with_ratios(CJA_over_CJ=14.0).vertically_symmetric


def test_idsn_probes(idsn):
    assert {p.name for p in idsn.graph.probes} == {"phiA", "phiB", "phiC"}
    assert idsn.inputs == ("S1", "S2") and idsn.outputs == ("S1p", "S2p")


def test_not_preset_inverts(not_run):
    out = not_run.outputs["out"]
    assert out.symbol == "1"
    assert out.vf_over_v0 == pytest.approx(0.884, abs=0.01)
    assert not_run.passed


def test_not_rail_phase_ends_at_4pi(not_run):
    rec = not_run.result.probes["phiB"]
    t, phi_b = rec.t, rec.values
    late = (t >= 30) & (t <= 110)
    assert abs(abs(np.mean(phi_b[late])) - 4 * math.pi) < 0.2


@pytest.mark.parametrize("symbols", ["--", "0-", "1-", "-0", "-1", "00", "11"])
def test_idsn_truth_table(idsn, symbols):
    v = _run_idsn(idsn, symbols)
    assert v.symbols == IDSN_TRUTH_TABLE[symbols]
    assert v.status == "pass"


def test_two_fluxon_rail_b_stays_near_zero(idsn):
    v = _run_idsn(idsn, "00", keep_result=True)
    phi_b = v.result.probes["phiB"].values
    assert np.abs(phi_b).max() < 0.1
    assert all(r.vf_over_v0 > 0.6 for r in v.outputs.values())


def test_vertical_symmetry(idsn):
    a = _run_idsn(idsn, "0-").outputs["S1p"]
    b = _run_idsn(idsn, "-0").outputs["S2p"]
    assert a.symbol == b.symbol
    assert a.vf_over_v0 == pytest.approx(b.vf_over_v0, abs=1e-6)


def test_below_admissible_range(idsn):
    v = _run_idsn(idsn, "0-", v0=0.3)
    assert v.status == "fail: out of admissible range"


def test_fluxon_number_conserved(idsn):
    v = _run_idsn(idsn, "00", keep_result=True)
    res = v.result
    q = {}
    for k in (0, -1):
        q[k] = sum(
            abs(topological_charge(idsn.chains[n].local(idsn.graph, res.snapshots[k])))
            for n in idsn.chains
        )
    assert round(q[0]) == round(q[-1]) == 2


def _reversed(gc, fwd):
    back = run_gate(gc, reverse_kinks(gc, fwd))
    return "".join(back.outputs[n].symbol for n in gc.inputs)


def test_not_reversible(not_gate, not_run):
    assert _reversed(not_gate, not_run) == "0"


def test_idsn_two_fluxon_reversible(idsn):
    assert _reversed(idsn, _run_idsn(idsn, "00")) == "00"


def test_idsn_single_fluxon_reversible(idsn):
    # the forward output leaves at about 0.47 c, so the backward run drives
    # the gate below its single-fluxon window and the fluxon comes back inverted
    assert _reversed(idsn, _run_idsn(idsn, "0-")) == "0-"


def test_splitter_child_params():
    p = LJJParams(cells=50)
    c = splitter_child(p)
    assert (c.cj, c.ic, c.l, c.a) == pytest.approx((p.cj / 2, p.ic / 2, 2 * p.l, p.a))
    assert c.lambda_j == pytest.approx(p.lambda_j) and c.c == pytest.approx(p.c)


def test_splitter_halves_energy():
    gc = build_splitter()
    v = run_gate(gc, {"parent": KinkSpec(DEFAULT_X0, 0.6, 1)})
    e_parent = 8.0 * fluxon_energy_ratio(0.6)
    for name in ("child1", "child2"):
        out = v.outputs[name]
        assert out.symbol == "0"
        assert out.vf_over_v0 == pytest.approx(1.0, abs=0.02)
        # child energies are in units of the child's E0 = E0 / 2
        assert out.observation.energy / 2 == pytest.approx(e_parent / 2, rel=0.03)


def test_polarity_inverted_verdict(not_gate):
    v = run_gate(not_gate, {"in": KinkSpec(DEFAULT_X0, 0.6, -1)})
    assert v.outputs["out"].symbol == "0"


def test_paired_inputs_and_delay():
    k = paired_inputs(("S1", "S2"), "01", 0.6, dx=1.0)
    assert k["S1"].x0 - k["S2"].x0 == pytest.approx(1.0)
    assert k["S2"].polarity == -1
    single = paired_inputs(("S1", "S2"), "0-", 0.6, dx=1.0)
    assert single["S1"].x0 == DEFAULT_X0 and single["S2"] is None
    assert delay_to_separation(0.5, 0.6, 3.0) == pytest.approx(0.9)
    with pytest.raises(ScenarioError):
        paired_inputs(("S1", "S2"), "0", 0.6)


def test_parse_input():
    k = parse_input("antifluxon v0=0.5 x0=-25")
    assert (k.x0, k.v, k.polarity) == (-25.0, 0.5, -1)
    assert parse_input("none") is None
    for bad in ("", "kink", "fluxon v0=fast", "fluxon speed=1"):
        with pytest.raises(ScenarioError):
            parse_input(bad)


def test_scenario_file(tmp_path):
    f = tmp_path / "s.toml"
    f.write_text(
        'gate = "idsn"\n'
        "delay = 0.5\n"
        "[params]\nCJA_over_CJ = 15.0\n"
        '[inputs]\nS1 = "fluxon v0=0.6"\nS2 = "fluxon v0=0.6"\n'
    )
    sc = Scenario.load(f)
    assert sc.dx == pytest.approx(0.9)
    k = sc.kinks()
    assert k["S1"].x0 - k["S2"].x0 == pytest.approx(0.9)
    with pytest.raises(ScenarioError, match="unknown scenario keys"):
        Scenario.from_mapping({"gate": "not", "colour": "red"})
    with pytest.raises(ScenarioError):
        Scenario.from_mapping({})
    bad = tmp_path / "bad.toml"
    bad.write_text("gate = \n")
    with pytest.raises(ScenarioError):
        Scenario.load(bad)


def test_build_gate_options():
    gc = build_gate("idsn", {"input_cells": 50, "a_over_lambdaJ": 0.375})
    assert gc.chains["S1"].params.cells == 50
    assert gc.chains["S1"].params.a / gc.chains["S1"].params.lambda_j == pytest.approx(0.375)
    assert gc.meta["params"].lb == pytest.approx(0.5 * 0.375**2)
    with pytest.raises(ScenarioError):
        build_gate("splitter", {"a_over_lambdaJ": 0.3})
    with pytest.raises(ScenarioError):
        build_gate("nand")
    with pytest.raises(KeyError):
        build_gate("idsn", {"CJQ_over_CJ": 1.0})


def test_two_bit_validation():
    with pytest.raises(CircuitError):
        TwoBitInterfaceParams(ib=-1.0)
