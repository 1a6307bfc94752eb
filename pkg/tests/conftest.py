import numpy as np
import pytest

from finitebath.bath import ArrowheadHamiltonian
from finitebath.eigensolver import jacobi_eigh, solve_arrowhead

ORACLE_SEEDS = range(100)

# (criterion, passed, detail) rows filled in by test_acceptance
ACCEPTANCE = []


def random_arrowhead(seed: int, n_max: int = 300) -> ArrowheadHamiltonian:
    """Random arrowhead instance with N in [2, n_max]; seed 0 is the largest."""
    rng = np.random.default_rng(seed)
    N = n_max if seed == 0 else int(rng.integers(2, n_max + 1))
    d = rng.uniform(0.2, 2.0, N - 1)
    g = rng.normal(0.0, 0.5, N - 1) / np.sqrt(N - 1)
    return ArrowheadHamiltonian(float(rng.uniform(0.5, 1.5)), d, g)


@pytest.fixture(scope="session")
def oracle_cases():
    """100 random instances solved by both routes (the Jacobi oracle is slow)."""
    cases = []
    for s in ORACLE_SEEDS:
        h = random_arrowhead(s)
        w, v = jacobi_eigh(h.matrix())
        cases.append((h, solve_arrowhead(h), w, v[0] ** 2))
    return cases


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
