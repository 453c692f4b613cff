"""Simplex geometry, static stable-game checks and higher-order games.

Sign convention used throughout: a game ``X -> P`` is delta-anti-passive when
``X -> -P`` is delta-passive, and the game/dynamic loop is a *positive*
feedback interconnection (payoffs ``P`` drive the dynamic, strategies ``X``
drive the game). Negative feedback with a passive game is the same loop as
positive feedback with the negated, anti-passive game.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import lti
from .lti import StateSpaceSystem

SIMPLEX_TOL = 1e-12


def as_simplex_point(x, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate a population state: entries sum to one and are (numerically) nonnegative."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("a simplex point is a nonempty 1-D vector")
    if abs(x.sum() - 1.0) > tol or np.any(x < -tol):
        raise ValueError(f"{x} is not on the simplex")
    return x


def uniform(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def build_tangent_basis(m: int) -> np.ndarray:
    """Helmert basis ``N`` (m x (m-1)) of the tangent space ``{z : sum(z) = 0}``.

    Column ``k`` is ``(1, ..., 1, -k, 0, ..., 0) / sqrt(k (k + 1))`` with ``k``
    leading ones, so ``N'N = I`` and ``1'N = 0``.
    """
    if m < 2:
        raise ValueError("need at least two strategies")
    N = np.zeros((m, m - 1))
    for k in range(1, m):
        c = 1.0 / math.sqrt(k * (k + 1))
        N[:k, k - 1] = c
        N[k, k - 1] = -k * c
    return N


# ------------------------------------------------------------- static games --


@dataclass(frozen=True)
class StaticGame:
    """Payoff map ``F`` on the simplex together with its Jacobian ``DF``."""

    payoff: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    m: int

    def jacobian_error(self, x, h: float = 1e-6) -> float:
        """Relative difference between ``DF(x)`` and central differences of ``F``."""
        x = np.asarray(x, dtype=float)
        fd = np.empty((self.m, self.m))
        for k in range(self.m):
            e = np.zeros(self.m)
            e[k] = h
            fd[:, k] = (self.payoff(x + e) - self.payoff(x - e)) / (2 * h)
        J = self.jacobian(x)
        return float(np.abs(fd - J).max() / max(1.0, np.abs(J).max()))


def matrix_game(A) -> StaticGame:
    """Linear game ``F(x) = A x``."""
    A = np.array(A, dtype=float)
    A.setflags(write=False)
    return StaticGame(lambda x: A @ x, lambda x: A, A.shape[0])


def rock_paper_scissors() -> np.ndarray:
    """Standard zero-sum RPS payoff matrix (win +1, loss -1)."""
    return np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])


@dataclass(frozen=True)
class StableGameReport:
    stable: bool
    worst_eig: float  # max over samples of lambda_max(sym(N' DF N))
    worst_x: np.ndarray
    worst_z: np.ndarray  # maximizing tangent direction, unit norm

    @property
    def verdict(self) -> str:
        return "Stable" if self.stable else "NotStable"


def check_stable_game(game: StaticGame, samples, tol: float = lti.EPS_PR) -> StableGameReport:
    """Check ``z' DF(x) z <= 0`` for all tangent ``z`` at each sample point."""
    samples = [np.asarray(x, dtype=float) for x in samples]
    if not samples:
        raise ValueError("need at least one sample")
    N = build_tangent_basis(game.m)
    worst = (-math.inf, None, None)
    for x in samples:
        J = N.T @ game.jacobian(x) @ N
        vals, vecs = np.linalg.eigh(0.5 * (J + J.T))
        if vals[-1] > worst[0]:
            worst = (float(vals[-1]), x, N @ vecs[:, -1])
    return StableGameReport(worst[0] <= tol, *worst)


def simplex_samples(m: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` interior points drawn from the flat Dirichlet distribution."""
    return np.random.default_rng(seed).dirichlet(np.ones(m), size=count)


# ------------------------------------------------------- higher-order games --


@dataclass(frozen=True, eq=False)
class HigherOrderGame:
    """Game with internal LTI dynamics acting in tangent coordinates.

    ``dw = N'(X - X*)``, ``z' = A z + B dw``, ``P = P* + N (C z + D dw)``.
    """

    xstar: np.ndarray
    pstar: np.ndarray
    internal: StateSpaceSystem
    N: np.ndarray = field(default=None)

    def __post_init__(self):
        xstar = as_simplex_point(self.xstar)
        m = xstar.size
        N = build_tangent_basis(m) if self.N is None else np.asarray(self.N, dtype=float)
        pstar = np.asarray(self.pstar, dtype=float)
        if pstar.shape != (m,) or N.shape != (m, m - 1):
            raise lti.DimensionError("X*, P* and N sizes disagree")
        if not isinstance(self.internal, StateSpaceSystem):
            raise TypeError("internal game dynamics must be a StateSpaceSystem")
        if self.internal.inputs != m - 1 or self.internal.outputs != m - 1:
            raise lti.DimensionError(f"internal system must be {m - 1}x{m - 1}")
        for name, v in (("xstar", xstar), ("pstar", pstar), ("N", N)):
            v = np.array(v)
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def m(self) -> int:
        return self.xstar.size

    def evaluate(self, z, X):
        return eval_higher_order_game(self, z, X)


def eval_higher_order_game(game: HigherOrderGame, z, X):
    """Internal state derivative and payoff vector at strategies ``X``."""
    sys = game.internal
    dw = game.N.T @ (np.asarray(X, dtype=float) - game.xstar)
    z = np.asarray(z, dtype=float).reshape(sys.n)
    zdot = sys.A @ z + sys.B @ dw
    P = game.pstar + game.N @ (sys.C @ z + sys.D @ dw)
    return zdot, P


def zero_game(m: int) -> HigherOrderGame:
    """Constant payoffs ``P = 0`` at the uniform point."""
    return HigherOrderGame(uniform(m), np.zeros(m), StateSpaceSystem.static(np.zeros((m - 1, m - 1))))


def linear_game(A, xstar=None) -> HigherOrderGame:
    """Static game ``F(x) = A x`` in higher-order form.

    Only the tangent component of the payoff is kept (``D = N'AN``); both
    replicator and logit dynamics ignore payoff shifts along the ones vector.
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    xstar = uniform(m) if xstar is None else np.asarray(xstar, dtype=float)
    N = build_tangent_basis(m)
    return HigherOrderGame(xstar, A @ xstar, StateSpaceSystem.static(N.T @ A @ N), N)


PAPER_LOGIT_AG = np.array([
    [0.0, -0.8608, 0.0, 0.0],
    [1.0, -1.0791, 0.0, 0.0],
    [0.0, 0.0, 0.0, -0.8608],
    [0.0, 0.0, 1.0, -1.0791],
])
PAPER_LOGIT_BG = np.array([[0.0, 0.0], [10.0, 10.0], [0.0, 0.0], [10.0, 10.0]])
PAPER_LOGIT_CG = np.array([[0.0, 16.0, 0.0, 0.0], [0.0, 0.0, 0.0, 16.0]])
PAPER_LOGIT_DG = np.array([[5.2020, -4.7980], [-4.7980, 5.2020]])


def paper_logit_game() -> HigherOrderGame:
    """The constructed game for second-order logit dynamics (m = 3).

    Its internal system is passive from ``dw`` to ``dq``; under the repo's sign
    convention the anti-passive orientation is :func:`negated`.
    """
    internal = StateSpaceSystem(PAPER_LOGIT_AG, PAPER_LOGIT_BG, PAPER_LOGIT_CG, PAPER_LOGIT_DG)
    return HigherOrderGame(uniform(3), np.zeros(3), internal)


def paper_replicator_game() -> HigherOrderGame:
    """Hand-built game for second-order replicator dynamics: internal ``-1/(s+1) I``."""
    I = np.eye(2)
    return HigherOrderGame(uniform(3), np.zeros(3), StateSpaceSystem(-I, I, -I, np.zeros((2, 2))))


def negated(game: HigherOrderGame) -> HigherOrderGame:
    """Same game with the payoff deviation sign flipped (``P = P* - N(...)``)."""
    return HigherOrderGame(game.xstar, game.pstar, -game.internal, game.N)


@dataclass(frozen=True)
class GameCertificate:
    """Passivity certificates of both orientations of a game's internal map."""

    antipassive: lti.PassivityCertificate  # certificate of X -> -P
    passive: lti.PassivityCertificate  # certificate of X -> P

    @property
    def is_antipassive(self) -> bool:
        return self.antipassive.passive

    @property
    def is_passive(self) -> bool:
        return self.passive.passive

    @property
    def verdict(self) -> str:
        if self.is_antipassive and self.is_passive:
            return "AntiPassive+Passive"
        if self.is_antipassive:
            return "AntiPassive"
        if self.is_passive:
            return "Passive"
        if lti.NOT_APPLICABLE in (self.antipassive.verdict, self.passive.verdict):
            return lti.NOT_APPLICABLE
        return "Neither"


def check_game_antipassive(game: HigherOrderGame, grid=None) -> GameCertificate:
    """Certify delta-anti-passivity of ``X -> P`` through the internal tangent system.

    With ``X = X* + N dw`` and ``P = P* + N dq``, ``X'^T P' = dw'^T N'N dq' =
    dw'^T dq'``, so the supply rate is the same in tangent coordinates and the
    LTI internal system can be certified directly.
    """
    if not isinstance(game.internal, StateSpaceSystem):
        raise lti.NotStable("only LTI internal game dynamics can be certified")
    return GameCertificate(
        antipassive=lti.is_delta_passive(-game.internal, grid),
        passive=lti.is_delta_passive(game.internal, grid),
    )
