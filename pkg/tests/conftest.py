"""Shared fixtures and instance generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from hprlp import LpProblem, SparseMatrix

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_lp(
    rng: np.random.Generator,
    n: int,
    m: int,
    style: str = "two_sided",
    scale: float = 1.0,
    density: float = 1.0,
) -> LpProblem:
    """Build a random feasible, bounded LP with box variables.

    A feasible point ``x0`` is sampled inside the box first and the row
    bounds are placed around ``A @ x0``, so the instance is feasible by
    construction.  All bounds are finite, which keeps the instances inside
    what the enumeration oracle can certify.
    """
    A = rng.standard_normal((m, n))
    if density < 1.0:
        mask = rng.uniform(size=(m, n)) < density
        A = np.where(mask, A, 0.0)
        # repair empty rows/columns so the operator has no trivial nullspace
        for i in range(m):
            if not A[i].any():
                A[i, rng.integers(n)] = rng.standard_normal()
        for j in range(n):
            if not A[:, j].any():
                A[rng.integers(m), j] = rng.standard_normal()

    l_var = np.zeros(n)
    u_var = np.full(n, scale)
    x0 = rng.uniform(0.0, 1.0, n) * scale
    b = A @ x0

    if style == "two_sided":
        l_con = b - 0.4 * scale
        u_con = b + 0.6 * scale
    elif style == "upper":
        l_con = np.full(m, -np.inf)
        u_con = b + 0.5 * scale
    elif style == "equality":
        l_con = b.copy()
        u_con = b.copy()
    else:
        raise ValueError(f"unknown style {style!r}")

    return LpProblem(
        c=scale * rng.standard_normal(n),
        A=SparseMatrix.from_dense(A),
        l_con=l_con,
        u_con=u_con,
        l_var=l_var,
        u_var=u_var,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def fixtures_dir():
    from pathlib import Path

    return Path(__file__).parent / "fixtures"
