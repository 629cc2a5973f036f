import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from rflsim.circuit import CircuitGraph, Inductor, JosephsonJunction
from rflsim.dynamics import compiled
from rflsim.edge import (
    EvanescentError,
    NoIntersection,
    bulk_dispersion,
    discreteness_scan,
    effective_jj,
    equivalence_check,
    equivalent_one_bit,
    f_mu,
    frequency_table,
    g_mu,
    idsn_mu_report,
    mu_max,
    solve_mu,
)
from rflsim.gates import IDSN_PRESET, build_one_bit
from rflsim.ljj import LJJParams
from rflsim.scenario import build_gate, paired_inputs, run_gate

P = LJJParams()


def test_f_series_oracle():
    x = 0.2267
    n = np.arange(1, 2000)
    assert f_mu(x) == pytest.approx(np.sum(np.exp(-2 * x * n)), rel=1e-12)
    assert f_mu(x) == pytest.approx(1.744, abs=1e-3)
    assert f_mu(10.0) < 1e-8


@given(st.floats(0.01, 3.0))
def test_g_identity_and_series(x):
    n = np.arange(1, 4000)
    series = np.sum((np.exp(-x * (n - 1)) - np.exp(-x * n)) ** 2)
    assert g_mu(x) == pytest.approx(series, rel=1e-9)
    assert g_mu(x) == pytest.approx(math.expm1(x) ** 2 * f_mu(x), rel=1e-12)


def test_f_rejects_nonpositive():
    with pytest.raises(ValueError):
        f_mu(0.0)


def _chain_with_termination(cj_hat, ic_hat, n=200):
    br = [JosephsonJunction("J0", "n0", "gnd", ic_hat, cj_hat)]
    for k in range(1, n):
        br.append(JosephsonJunction(f"J{k}", f"n{k}", "gnd", P.ic, P.cj))
        br.append(Inductor(f"L{k}", f"n{k - 1}", f"n{k}", P.l))
    return CircuitGraph.from_branches(br)


@pytest.mark.parametrize("mu", [0.1, 0.2267, 0.5, 1.0])
def test_effective_jj_matches_quadratic_form(mu):
    g = _chain_with_termination(5.8, 1.5)
    cc = compiled(g)
    order = [cc.graph.node_index[f"n{k}"] for k in range(200)]
    u = np.zeros(cc.n)
    u[order] = np.exp(-mu * np.arange(200))
    stiff = cc.k_ind + cc.jj_inc @ sp.diags(cc.ic) @ cc.jj_inc.T
    c_proj = u @ (cc.mass @ u)
    k_proj = u @ (stiff @ u)
    eff = effective_jj(5.8, 1.5, mu)
    assert eff.cj_alpha == pytest.approx(c_proj, rel=1e-6)
    assert 1.0 / eff.l_alpha == pytest.approx(k_proj, rel=1e-6)


def test_effective_jj_limits():
    # a fully decayed chain pins the neighbour node, so the cell inductor
    # stays attached: g -> 1 and I_alpha -> I_hat + 1/L
    big = effective_jj(5.8, 1.5, 40.0)
    assert (big.cj_alpha, big.ic_alpha) == pytest.approx((5.8, 1.5 + 1 / P.l))
    assert g_mu(40.0) == pytest.approx(1.0)
    loose = effective_jj(5.8, 1.5, 0.5, l=1e12)
    assert loose.ic_alpha == pytest.approx(1.5 + f_mu(0.5))
    e = effective_jj(5.8, 1.5, 0.3)
    assert e.ic_alpha > 1.5 and e.cj_alpha > 5.8
    assert e.omega_alpha == pytest.approx(math.sqrt(e.ic_alpha / e.cj_alpha))


def test_bulk_dispersion():
    assert bulk_dispersion(0.0, 1.0, 3.0) == 1.0
    # continuum limit
    lam = 3.0
    w = bulk_dispersion(0.5 / lam, lam / 1000, lam)
    assert w**2 == pytest.approx(0.75, abs=1e-4)
    assert bulk_dispersion(0.5 / lam, 1.0, lam, discrete=False) ** 2 == pytest.approx(0.75)
    mus = np.linspace(0, 0.99 * mu_max(P), 50)
    ws = [bulk_dispersion(m, 1.0, 3.0) for m in mus]
    assert np.all(np.diff(ws) < 0)
    with pytest.raises(EvanescentError):
        bulk_dispersion(1.01 * mu_max(P), 1.0, 3.0)


def test_bulk_dispersion_quoted_point():
    w = bulk_dispersion(0.68 / 3.0, 1.0, 3.0)
    assert w == pytest.approx(0.73, rel=0.05)


def test_solve_mu_idsn_quoted_values():
    s = solve_mu(5.8, 1.5, P)
    assert s.lambda_mu == pytest.approx(0.68, rel=0.10)
    assert s.omega == pytest.approx(0.73, rel=0.10)
    assert s.effective.cj_alpha == pytest.approx(7.3, rel=0.10)


def test_solve_mu_idsn_quoted_ic_alpha():
    s = solve_mu(5.8, 1.5, P)
    assert s.effective.ic_alpha == pytest.approx(3.9, rel=0.10)


def test_solve_mu_idsn_frozen():
    s = solve_mu(5.8, 1.5, P)
    # frozen values at a/lambda_J = 1/3
    assert s.lambda_mu == pytest.approx(0.65861, abs=1e-5)
    assert s.effective.cj_alpha == pytest.approx(7.6140, abs=1e-4)
    assert s.effective.ic_alpha == pytest.approx(4.2980, abs=1e-4)


def test_solve_mu_back_substitution():
    s = solve_mu(5.8, 1.5, P)
    wa = effective_jj(5.8, 1.5, s.mu, P.cj, P.ic, P.l, P.a).omega_alpha
    wb = bulk_dispersion(s.mu, P.a, P.lambda_j)
    assert abs(wa - wb) < 1e-9


def test_identical_interface_has_no_root():
    with pytest.raises(NoIntersection) as exc:
        solve_mu(1.0, 1.0, P)
    table = exc.value.table
    assert table.shape[1] == 3
    # omega_alpha stays above the bulk curve everywhere
    assert np.all(table[:, 1] > table[:, 2])


def test_frequency_table_columns():
    t = frequency_table(5.8, 1.5, P, n=50)
    assert t.shape == (50, 3)
    assert np.all(np.diff(t[:, 0]) > 0)


def test_discreteness_scan_frozen():
    got = {round(r, 4): s for r, s in discreteness_scan(5.8, 1.5, [1 / 3, 0.375, 0.5])}
    assert got[0.3333].lambda_mu == pytest.approx(0.6586, abs=1e-4)
    s = got[0.375]
    assert (s.lambda_mu, s.omega, s.effective.cj_alpha, s.effective.ic_alpha) == pytest.approx(
        (0.6803, 0.7312, 7.302, 3.904), abs=1e-3
    )
    assert got[0.5].lambda_mu == pytest.approx(0.7252, abs=1e-4)


def test_mu_report_has_both_dispersions():
    r = idsn_mu_report()
    assert set(r) == {"discrete", "continuum"}
    assert r["continuum"]["lambda_mu"] == pytest.approx(0.6599, abs=1e-4)


def test_equivalent_two_fluxon():
    p = equivalent_one_bit(IDSN_PRESET, "two")
    assert (p.rail_cj, p.rail_ic, p.term_cj, p.term_ic) == (15.0, 1.5, 5.8, 1.5)
    with pytest.raises(ValueError):
        equivalent_one_bit(IDSN_PRESET.with_ratios(CJA_over_CJ=14.0), "two")
    with pytest.raises(ValueError):
        equivalent_one_bit(IDSN_PRESET, "three")


def test_equivalent_single_fluxon():
    p = equivalent_one_bit(IDSN_PRESET, "single")
    eff = solve_mu(5.8, 1.5, P).effective
    assert (p.alpha.alpha_cj, p.alpha.alpha_ic) == pytest.approx((eff.cj_alpha, eff.ic_alpha))
    assert (p.alpha.outer_cj, p.alpha.outer_ic) == (15.0, 1.5)
    assert (p.rail_cj, p.rail_ic) == (16.7, 6.9)
    assert p.bridge_jj == (15.0, 1.5)
    # swapping rows of a symmetric interface gives the same circuit
    swapped = IDSN_PRESET.with_ratios(CJhat1_over_CJ=5.8, CJhat2_over_CJ=5.8)
    assert equivalent_one_bit(swapped, "single") == p


@pytest.fixture(scope="module")
def idsn_runs():
    gc = build_gate("idsn")
    return {
        sy: run_gate(gc, paired_inputs(gc.inputs, sy, 0.6), keep_result=True) for sy in ("00", "0-")
    }


def _one_bit_run(case, scale=1.0):
    gc = build_one_bit(equivalent_one_bit(IDSN_PRESET, case, scale))
    k = paired_inputs(("S1", "S2"), "0-", 0.6)["S1"]
    return run_gate(gc, {"in": k}, keep_result=True)


def test_two_fluxon_equivalence_is_exact(idsn_runs):
    r = equivalence_check(idsn_runs["00"], _one_bit_run("two"), "two")
    assert r.passed and r.dv < 1e-10
    assert r.trace_deviation["phiA"] < 1e-10


def test_single_fluxon_equivalence(idsn_runs):
    r = equivalence_check(idsn_runs["0-"], _one_bit_run("single"), "single")
    assert r.passed
    assert r.dv == pytest.approx(7.1e-4, abs=2e-4)


def test_mismatched_mu_still_within_threshold(idsn_runs):
    # doubling mu moves v_f by about 0.007 c, well inside the 0.05 c
    # threshold; the rail traces show the mismatch instead
    good = equivalence_check(idsn_runs["0-"], _one_bit_run("single"), "single")
    bad = equivalence_check(idsn_runs["0-"], _one_bit_run("single", 2.0), "single")
    assert bad.dv == pytest.approx(0.0068, abs=5e-4)
    assert bad.dv > 5 * good.dv
    assert max(bad.trace_deviation.values()) > 2 * max(good.trace_deviation.values())
