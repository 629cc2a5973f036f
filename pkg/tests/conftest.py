import numpy as np
import pytest

from rflsim.dynamics import SimState
from rflsim.ljj import KinkSpec, LJJParams, build_ljj, init_kink


def kink_state(p: LJJParams, k: KinkSpec):
    g, ch = build_ljj(p)
    psi, psi_dot = init_kink(p, k, ch.positions)
    phi = np.zeros(len(g.active_nodes))
    v = np.zeros_like(phi)
    ch.place(g, phi, v, psi, psi_dot)
    return g, ch, SimState(0.0, phi, v)


@pytest.fixture
def free_chain():
    return kink_state


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record one summary line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines[n] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
