import numpy as np
import pytest

from zsnft.reference import save_spectrum, self_converged
from zsnft.signals import SignalSpec

XI_WINDOW = np.linspace(-20.0, 20.0, 1024)
M_REF = 1 << 16

# (criterion, verdict line) collected by the acceptance suite
ACCEPTANCE_LINES = []


def report(number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def expm_taylor(A, terms=30):
    """Dense matrix exponential by scaling and squaring of a Taylor series.

    Independent of the Pauli-basis formulas; used as an oracle only.
    """
    A = np.asarray(A, dtype=complex)
    nrm = np.abs(A).sum(axis=-1).max()
    s = max(0, int(np.ceil(np.log2(max(nrm, 1e-300)))) + 1)
    B = A / 2.0**s
    out = np.eye(A.shape[-1], dtype=complex)
    term = np.eye(A.shape[-1], dtype=complex)
    for k in range(1, terms):
        term = term @ B / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def smooth_potential(t, coeffs):
    """Gaussian-windowed chirped pulse with random shape parameters."""
    a, b, c, d = coeffs
    return (a + 1j * b) * np.exp(-((t - c) ** 2) / 2) * np.exp(1j * d * t)


@pytest.fixture(scope="session")
def chirped_reference():
    """ES6 self-reference of the default chirped sech at M = 2**16 on 1024 points."""
    return self_converged(SignalSpec(), XI_WINDOW, M_REF)


@pytest.fixture(scope="session")
def chirped_reference_file(chirped_reference, tmp_path_factory):
    path = tmp_path_factory.mktemp("ref") / "reference.csv"
    save_spectrum(chirped_reference, path)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
