import numpy as np
import pytest

from scatternet.core import TransferMatrix

_ACCEPTANCE_LINES = []


def random_unimodular(rng):
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return TransferMatrix(m / np.sqrt(np.linalg.det(m)))


def random_lossless(rng):
    """Time-reversal symmetric, flux-conserving unimodular matrix [[al, be], [be*, al*]]."""
    be = complex(rng.normal(), rng.normal())
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    al = np.sqrt(1 + abs(be) ** 2) * phase
    return TransferMatrix([[al, be], [np.conj(be), np.conj(al)]])


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label, ok, detail=""):
        line = f"{label}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
