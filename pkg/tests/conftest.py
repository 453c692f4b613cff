import numpy as np
import pytest

from antipassive.lti import StateSpaceSystem

# filled by test_acceptance, printed once at the end of the session
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[key])


def lag2_scalar() -> StateSpaceSystem:
    """Companion realization of ``2 / (3 (s + 1)^2)``."""
    return StateSpaceSystem([[0.0, 1.0], [-1.0, -2.0]], [[0.0], [1.0]], [[2.0 / 3.0, 0.0]], [[0.0]])


def lag2_diag() -> StateSpaceSystem:
    """``2 / (3 (s + 1)^2) I_2``, each channel realized independently of the package."""
    A1 = np.array([[0.0, 1.0], [-1.0, -2.0]])
    A = np.zeros((4, 4))
    A[:2, :2] = A1
    A[2:, 2:] = A1
    B = np.zeros((4, 2))
    B[1, 0] = B[3, 1] = 1.0
    C = np.zeros((2, 4))
    C[0, 0] = C[1, 2] = 2.0 / 3.0
    return StateSpaceSystem(A, B, C, np.zeros((2, 2)))


def lag2_tf(w):
    return 2.0 / (3.0 * (1.0 + 1j * np.asarray(w)) ** 2)


def lag2_cayley_tf(w):
    g = lag2_tf(w)
    return (g - 1.0) / (g + 1.0)


def resolvent_response(sys: StateSpaceSystem, w: float) -> np.ndarray:
    """Oracle ``C (jwI - A)^{-1} B + D`` by a direct dense solve."""
    if sys.n == 0:
        return sys.D.astype(complex)
    return sys.C @ np.linalg.solve(1j * w * np.eye(sys.n) - sys.A, sys.B) + sys.D


def lag1() -> StateSpaceSystem:
    return StateSpaceSystem([[-1.0]], [[1.0]], [[1.0]], [[0.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
