import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rflsim.circuit import (
    Capacitor,
    CircuitError,
    CircuitGraph,
    FloatingNodeError,
    Inductor,
    JosephsonJunction,
    Resistor,
    assemble_capacitance_matrix,
    branch_current,
    clamp_inductance,
    min_inductance,
    node_currents,
)
from rflsim.dynamics import compiled
from rflsim.gates import NOT_PRESET, build_idsn, build_one_bit, build_splitter, IDSN_PRESET
from rflsim.ljj import LJJParams, build_ljj
from rflsim.snl import build_snl
from rflsim.units import DEFAULT_UNITS, UnitSystem


def test_default_units():
    u = DEFAULT_UNITS
    assert u.L == pytest.approx(1 / 9)
    assert u.lambda_j == pytest.approx(3.0)
    assert u.c == pytest.approx(3.0)
    assert u.E0 == pytest.approx(3.0)
    assert u.rest_energy == pytest.approx(24.0)
    assert u.Z == pytest.approx(1 / 3)


def test_unit_system_rejects_bad_discreteness():
    with pytest.raises(ValueError):
        UnitSystem(0.0)


def test_single_jj_matrix():
    g = CircuitGraph.from_branches([JosephsonJunction("j", "n1", "gnd", 1.0, 1.0)])
    np.testing.assert_array_equal(assemble_capacitance_matrix(g), [[1.0]])


def test_two_node_matrix():
    g = CircuitGraph.from_branches(
        [
            JosephsonJunction("j1", "n1", "gnd", 1.0, 1.0),
            JosephsonJunction("j2", "n2", "gnd", 1.0, 1.0),
            Capacitor("c", "n1", "n2", 2.0),
        ]
    )
    np.testing.assert_array_equal(assemble_capacitance_matrix(g), [[3, -2], [-2, 3]])


def test_chain_matrix_is_diagonal():
    g, _ = build_ljj(LJJParams(cells=12))
    m = assemble_capacitance_matrix(g)
    np.testing.assert_array_equal(m, np.diag(np.diag(m)))


def test_branch_currents():
    assert branch_current(JosephsonJunction("j", "a", "b", 1.0, 1.0), math.pi / 2, 0.0) == pytest.approx(1.0)
    assert branch_current(Inductor("l", "a", "b", 1 / 9), 2 * math.pi, 0.0) == pytest.approx(18 * math.pi)
    assert branch_current(Resistor("r", "a", "b", 10.0), 0.0, 1.0) == pytest.approx(0.1)
    assert branch_current(Capacitor("c", "a", "b", 1.0), 1.0, 1.0) == 0.0
    shunted = JosephsonJunction("j", "a", "b", 1.0, 1.0, rshunt=2.0)
    assert branch_current(shunted, 0.0, 1.0) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "make",
    [
        lambda: JosephsonJunction("j", "a", "a", 1.0, 1.0),
        lambda: JosephsonJunction("j", "a", "b", 0.0, 1.0),
        lambda: JosephsonJunction("j", "a", "b", 1.0, -1.0),
        lambda: Inductor("l", "a", "b", 0.0),
        lambda: Capacitor("c", "a", "b", -1.0),
        lambda: Resistor("r", "a", "b", 0.0),
    ],
)
def test_branch_validation(make):
    with pytest.raises(CircuitError):
        make()


def test_floating_node_is_named():
    with pytest.raises(FloatingNodeError) as e:
        CircuitGraph.from_branches(
            [JosephsonJunction("j", "n1", "gnd", 1.0, 1.0), Inductor("l", "n1", "n2", 1.0)]
        )
    assert e.value.nodes == ["n2"]


def test_unreachable_and_duplicate():
    with pytest.raises(CircuitError, match="unreachable"):
        CircuitGraph.from_branches(
            [JosephsonJunction("j", "n1", "gnd", 1.0, 1.0), JosephsonJunction("k", "x", "y", 1.0, 1.0)]
        )
    with pytest.raises(CircuitError, match="duplicate"):
        CircuitGraph.from_branches(
            [JosephsonJunction("j", "n1", "gnd", 1.0, 1.0), JosephsonJunction("j", "n2", "gnd", 1.0, 1.0)]
        )


def test_inductance_floor(caplog):
    floor = min_inductance()
    assert floor == pytest.approx(0.02 / 9)
    assert clamp_inductance(1.0) == 1.0
    assert clamp_inductance(1e-6, "Lx") == floor
    assert "Lx" in caplog.text


SHIPPED = {
    "not": lambda: build_one_bit(NOT_PRESET).graph,
    "idsn": lambda: build_idsn(IDSN_PRESET).graph,
    "splitter": lambda: build_splitter().graph,
    "snl": lambda: build_snl().graph,
}


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_matrices_factor(name):
    m = assemble_capacitance_matrix(SHIPPED[name]())
    np.testing.assert_array_equal(m, m.T)
    np.linalg.cholesky(m)


@pytest.mark.parametrize("name", sorted(SHIPPED))
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_kirchhoff_residual(name, seed):
    g = SHIPPED[name]()
    rng = np.random.default_rng(seed)
    n = len(g.active_nodes)
    phi = rng.uniform(-7, 7, n)
    v = rng.normal(0, 1, n)
    acc = compiled(g).accel(phi, v)
    res = node_currents(g, phi, v, acc)
    scale = 1.0 + np.abs(phi).max() / min_inductance()
    assert abs(res.sum()) < 1e-9 * scale
    assert np.abs(res[:-1]).max() < 1e-9 * scale
