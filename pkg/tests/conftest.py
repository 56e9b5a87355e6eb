import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def loop_partial_trace_b(rho, dim_a, dim_b):
    out = np.zeros((dim_a, dim_a), dtype=complex)
    for i in range(dim_a):
        for j in range(dim_a):
            for m in range(dim_b):
                out[i, j] += rho[i * dim_b + m, j * dim_b + m]
    return out


def loop_cross_covariance(x_path, y_path, weights=None):
    n, da = x_path.shape
    db = y_path.shape[1]
    w = np.full(n, 1.0 / n) if weights is None else weights
    out = np.zeros(da * db, dtype=complex)
    for a in range(da):
        for b in range(db):
            for i in range(n):
                out[a * db + b] += w[i] * x_path[i, a] * y_path[i, b]
    return out


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(label: str, passed: bool, detail: str = "") -> None:
    """Print and remember one PASS/FAIL line for the acceptance summary."""
    line = f"{'PASS' if passed else 'FAIL'} {label}" + (f" ({detail})" if detail else "")
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
