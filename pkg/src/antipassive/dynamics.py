"""Replicator and logit dynamics, their storage function, linearizations and reductions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DimensionError, ModeUnavailable, NonInteriorState
from .lti import StateSpaceSystem
from .population import build_tangent_basis

KINDS = ("replicator1", "replicator2", "logit1", "logit2")
SECOND_ORDER = ("replicator2", "logit2")
PAPER = "paper"
ANALYTIC = "analytic"
MODES = (PAPER, ANALYTIC)
INTERIOR_FLOOR = 1e-300
SNAP_ULPS = 64  # integer snapping window for reduced blocks, in units of eps
REPLICATOR_PHAT_STAR = 1.0


@dataclass(frozen=True)
class DynamicState:
    """Strategy shares ``x`` plus the auxiliary payoff state ``phat`` (``None`` for first order)."""

    x: np.ndarray
    phat: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if self.phat is not None:
            phat = np.asarray(self.phat, dtype=float)
            if phat.shape != x.shape:
                raise DimensionError("phat and x must have the same length")
            if not np.all(np.isfinite(phat)):
                raise ValueError("phat must be finite")
            object.__setattr__(self, "phat", phat)


def softmax(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    e = np.exp(v - v.max())
    return e / e.sum()


def replicator_field(x, p) -> np.ndarray:
    """``x_i (p_i - x'p)``."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return x * (p - x @ p)


def logit1_field(x, p) -> np.ndarray:
    return softmax(p) - np.asarray(x, dtype=float)


def replicator2_field(state: DynamicState, p):
    """Replicator driven by the integrated payoff ``phat``; ``dphat/dt = p``."""
    return replicator_field(state.x, state.phat), np.array(p, dtype=float)


def logit2_field(state: DynamicState, p):
    """Logit response to the filtered payoff; ``dphat/dt = p - phat``."""
    return logit1_field(state.x, state.phat), np.asarray(p, dtype=float) - state.phat


def replicator_storage(x, xstar) -> float:
    """Relative-entropy storage ``V = -sum x*_i ln(x_i / x*_i)``."""
    x = np.asarray(x, dtype=float)
    xstar = np.asarray(xstar, dtype=float)
    if np.any(~(x >= INTERIOR_FLOOR)):
        raise NonInteriorState(f"storage needs an interior state, got {x}")
    return float(-(xstar * np.log(x / xstar)).sum())


def lossless_residual(traj, xstar) -> float:
    """Worst gap between the storage change and the supplied work ``int (x - x*)'p``.

    Uses the integrator's own accumulators (``work = int x'p`` and
    ``payoff_integral = int p``) when the trajectory carries them, otherwise a
    trapezoid rule on the recorded samples.
    """
    xstar = np.asarray(xstar, dtype=float)
    x = np.asarray(traj.x)
    V = np.array([replicator_storage(xi, xstar) for xi in x])
    work = getattr(traj, "work", None)
    pint = getattr(traj, "payoff_integral", None)
    if work is not None and pint is not None:
        supplied = np.asarray(work) - np.asarray(pint) @ xstar
    else:
        rate = np.einsum("ij,ij->i", x - xstar, np.asarray(traj.payoffs))
        supplied = cumulative_trapezoid(rate, np.asarray(traj.times), initial=0.0)
    return float(np.abs(V - V[0] - supplied).max())


# ----------------------------------------------------------- linearization --


@dataclass(frozen=True)
class LinearizedDynamics:
    """Blocks of ``dx' = A_x dx + beta dphat``, ``dphat' = A_p dphat + B_p dp``."""

    kind: str
    mode: str
    xstar: np.ndarray
    phat_star: np.ndarray
    A_x: np.ndarray
    beta: np.ndarray
    A_p: np.ndarray
    B_p: np.ndarray

    @property
    def m(self) -> int:
        return self.xstar.size


def equilibrium(kind: str, xstar) -> DynamicState:
    """Rest point of a second-order dynamic with shares ``xstar`` and constant payoff."""
    xstar = np.asarray(xstar, dtype=float)
    if kind == "logit2":
        phat = np.log(xstar)
        return DynamicState(xstar, phat - phat.mean())
    if kind == "replicator2":
        return DynamicState(xstar, np.full(xstar.size, REPLICATOR_PHAT_STAR))
    if kind in KINDS:
        return DynamicState(xstar)
    raise ValueError(f"unknown dynamics {kind!r}")


def linearize(kind: str, xstar, mode: str = PAPER) -> LinearizedDynamics:
    """Linearize a second-order dynamic about its rest point at ``xstar``.

    ``mode="paper"`` returns the published matrices (uniform ``xstar`` only);
    ``mode="analytic"`` returns the true Jacobian of the vector field.
    """
    if kind not in SECOND_ORDER:
        raise ValueError(f"linearization is defined for {SECOND_ORDER}, not {kind!r}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    xstar = np.asarray(xstar, dtype=float)
    m = xstar.size
    if m < 2 or np.any(xstar <= 0) or abs(xstar.sum() - 1) > 1e-12:
        raise ValueError("xstar must be an interior simplex point")
    if mode == PAPER and np.abs(xstar - 1.0 / m).max() > 1e-12:
        raise ModeUnavailable("the published matrices are stated at the uniform point only")
    I = np.eye(m)
    eq = equilibrium(kind, xstar)
    if kind == "logit2":
        if mode == PAPER:
            beta = (2 * I - np.ones((m, m))) / m
        else:
            beta = np.diag(xstar) - np.outer(xstar, xstar)
        return LinearizedDynamics(kind, mode, xstar, eq.phat, -I, beta, -I, I.copy())
    c = REPLICATOR_PHAT_STAR
    A_x = -c * np.outer(xstar, np.ones(m))
    if mode == PAPER:
        beta = I - np.outer(xstar, xstar)
    else:
        beta = np.diag(xstar) - np.outer(xstar, xstar)
    return LinearizedDynamics(kind, mode, xstar, eq.phat, A_x, beta, np.zeros((m, m)), I.copy())


def _snap(M: np.ndarray) -> np.ndarray:
    """Round entries that are integers up to basis rounding error."""
    r = np.round(M)
    close = np.abs(M - r) <= SNAP_ULPS * np.finfo(float).eps * np.maximum(1.0, np.abs(M))
    return np.where(close, r, M) + 0.0


def reduce_dynamics(lin: LinearizedDynamics, N=None) -> StateSpaceSystem:
    """Tangent-space reduction with state ``(dw, xi)``, input ``dq`` and output ``dw``.

    ``dx = N dw``, ``dphat = N xi`` and ``dp = N dq``; the ones-direction of
    ``dphat`` is dropped because both dynamics are blind to uniform payoff shifts.
    """
    N = build_tangent_basis(lin.m) if N is None else np.asarray(N, dtype=float)
    if N.shape != (lin.m, lin.m - 1):
        raise DimensionError(f"N must be {lin.m}x{lin.m - 1}")
    k = lin.m - 1
    Z = np.zeros((k, k))
    A = np.block([[N.T @ lin.A_x @ N, N.T @ lin.beta @ N], [Z, N.T @ lin.A_p @ N]])
    B = np.vstack([Z, N.T @ lin.B_p @ N])
    C = np.hstack([np.eye(k), Z])
    return StateSpaceSystem(_snap(A), _snap(B), C, Z.copy())
