import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rflsim.circuit import JosephsonJunction
from rflsim.gates import IDSN_PRESET, NOT_PRESET, build_idsn, build_one_bit, build_splitter
from rflsim.netlist import NetlistError, emit_netlist, parse_netlist, same_circuit
from rflsim.snl import build_snl


def test_single_statement():
    g = parse_netlist("jj j0 n1 gnd ic=1 cj=1")
    (b,) = g.branches
    assert isinstance(b, JosephsonJunction) and (b.ic, b.cj, b.rshunt) == (1.0, 1.0, None)


def test_ljj_macro_counts():
    g = parse_netlist("ljj s1 gnd n0..n59 ic=1 cj=1 l=0.1111\n")
    kinds = [type(b).__name__ for b in g.branches]
    assert kinds.count("JosephsonJunction") == 60
    assert kinds.count("Inductor") == 59


def test_comments_probes_and_shunt():
    text = """
    # two junctions coupled by an inductor
    jj j1 a gnd ic=1 cj=1 rshunt=3.3   # damped
    jj j2 b gnd ic=2 cj=2
    ind l1 a b l=0.5
    cap c1 a b c=0.25
    res r1 b gnd r=7
    probe node a
    probe branch l1 quantity=current name=i_l
    """
    g = parse_netlist(text)
    assert len(g.branches) == 5
    assert g.branch_by_label["j1"].rshunt == 3.3
    assert [(p.name, p.kind, p.quantity) for p in g.probes] == [("a", "node", "phase"), ("i_l", "branch", "current")]


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("ind x n1", 1, "needs"),
        ("ind x n1 n2", 1, "missing required attribute l="),
        ("jj a n1 gnd ic=1\n", 1, "cj="),
        ("jj j n1 gnd ic=1 cj=1\nfoo x y z", 2, "unknown element kind"),
        ("jj j n1 gnd ic=abc cj=1", 1, "non-numeric"),
        ("jj j n1 gnd ic=1 cj=1\n\njj j n2 gnd ic=1 cj=1", 3, "duplicate label"),
        ("jj j n1 gnd ic=1 cj=1 q=3", 1, "unknown attribute"),
        ("ljj s gnd n5..n2 ic=1 cj=1 l=1", 1, "range"),
        ("jj j n1 gnd ic=1 cj=1\nprobe wire j", 2, "probe"),
        ("jj j n1 n1 ic=1 cj=1", 1, "distinct"),
    ],
)
def test_errors_carry_location(text, line, fragment):
    with pytest.raises(NetlistError) as e:
        parse_netlist(text)
    assert e.value.line == line
    assert fragment in str(e.value)


def test_error_column_points_at_value():
    with pytest.raises(NetlistError) as e:
        parse_netlist("jj j n1 gnd ic=1 cj=oops")
    assert e.value.col == len("jj j n1 gnd ic=1 cj=") + 1


@pytest.mark.parametrize(
    "build",
    [
        lambda: build_one_bit(NOT_PRESET).graph,
        lambda: build_idsn(IDSN_PRESET).graph,
        lambda: build_splitter().graph,
        lambda: build_snl().graph,
    ],
)
def test_round_trip_shipped(build):
    g = build()
    text = emit_netlist(g)
    g2 = parse_netlist(text)
    assert same_circuit(g, g2)
    assert emit_netlist(g2) == text


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 8),
    vals=st.lists(st.floats(1e-3, 1e3, allow_nan=False), min_size=3, max_size=3),
    shunt=st.booleans(),
)
def test_emit_parse_emit_fixed_point(n, vals, shunt):
    ic, cj, l = vals
    text = f"ljj s gnd n0..n{n - 1} ic={ic!r} cj={cj!r} l={l!r}\n"
    if shunt:
        text += f"res r n0 gnd r={ic!r}\n"
    once = emit_netlist(parse_netlist(text))
    assert emit_netlist(parse_netlist(once)) == once
