"""Continuous-time LTI systems in state-space form.

Frequency response, Hurwitz tests, the H-infinity norm (Hamiltonian bisection),
the Cayley maps between the positive-real cone and the unit H-infinity ball,
and passivity certificates built on those maps.

Passivity is certified in the frequency domain. The KYP/positive-real LMI

    [[A'P + PA, PB - C'], [B'P - C, -(D + D')]] <= 0,  P > 0

is the ground truth, but no SDP solver is used: for a Hurwitz square system
the LMI is feasible iff G(jw) + G(jw)^* >= 0 for all w, iff the Cayley image
(G - I)(G + I)^-1 is stable with H-infinity norm at most one. Both routes are
computed and compared.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DimensionError, IllPosed, NotStable, SingularResolvent

EPS_STAB = 1e-9  # relative to the spectral radius of A
EPS_PR = 1e-7  # absolute, on lambda_min(G + G^*) and on ||S|| - 1
HAMILTONIAN_IMAG_TOL = 1e-8
RESOLVENT_TOL = 1e-10
ILL_POSED_COND = 1e12
CROSSING_RTOL = 1e-6
POLISH_GAIN = 1e-12  # a polished extremum must beat the grid value by this (relative)

GRID_RANGE = (1e-3, 1e3)
DEFAULT_GRID_POINTS = 400
GRID_ENV = "ANTIPASSIVE_GRID_POINTS"
REFINE_FACTOR = 10

PASSIVE = "Passive"
NOT_PASSIVE = "NotPassive"
NOT_APPLICABLE = "NotApplicable"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateSpaceSystem:
    """Real state-space realization ``x' = Ax + Bu, y = Cx + Du``.

    ``n = 0`` is allowed (a static gain ``D``). Arrays are copied and made
    read-only, so instances can be shared freely.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        if D.ndim == 0:
            D = D.reshape(1, 1)
        if D.ndim != 2:
            raise DimensionError(f"D must be 2-D, got shape {D.shape}")
        p, m = D.shape
        A = np.asarray(self.A, dtype=float)
        n = 0 if A.size == 0 else (A.shape[0] if A.ndim == 2 else -1)
        if n < 0 or (n > 0 and A.shape != (n, n)):
            raise DimensionError(f"A must be square, got shape {A.shape}")
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if n == 0:
            if B.size or C.size:
                raise DimensionError("static system must have empty B and C")
            A, B, C = np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0))
        if B.shape != (n, m):
            raise DimensionError(f"B has shape {B.shape}, expected {(n, m)}")
        if C.shape != (p, n):
            raise DimensionError(f"C has shape {C.shape}, expected {(p, n)}")
        for name, M in zip("ABCD", (A, B, C, D)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, _frozen(M))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def inputs(self) -> int:
        return self.D.shape[1]

    @property
    def outputs(self) -> int:
        return self.D.shape[0]

    @property
    def is_square(self) -> bool:
        return self.inputs == self.outputs

    @classmethod
    def static(cls, D) -> "StateSpaceSystem":
        D = np.atleast_2d(np.asarray(D, dtype=float))
        return cls(np.zeros((0, 0)), np.zeros((0, D.shape[1])), np.zeros((D.shape[0], 0)), D)

    def __neg__(self) -> "StateSpaceSystem":
        return StateSpaceSystem(self.A, self.B, -self.C, -self.D)

    def __repr__(self):
        return f"StateSpaceSystem(n={self.n}, inputs={self.inputs}, outputs={self.outputs})"

    def __call__(self, s: complex) -> np.ndarray:
        return evaluate(self, s)


def _bd(blocks) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r, c = r + b.shape[0], c + b.shape[1]
    return out


def block_diag(*systems: StateSpaceSystem) -> StateSpaceSystem:
    """Parallel, non-interacting stack of systems (inputs and outputs concatenated)."""
    return StateSpaceSystem(*(_bd([getattr(s, k) for s in systems]) for k in "ABCD"))


def series(first: StateSpaceSystem, second: StateSpaceSystem) -> StateSpaceSystem:
    """``second(first(u))``; states of ``first`` come first."""
    if first.outputs != second.inputs:
        raise DimensionError("series: output/input dimensions differ")
    n1, n2 = first.n, second.n
    A = np.block([[first.A, np.zeros((n1, n2))], [second.B @ first.C, second.A]])
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpaceSystem(A, B, C, D)


# ---------------------------------------------------------------- frequency --


def frequency_grid(points: int | None = None) -> np.ndarray:
    """Log-spaced grid over ``GRID_RANGE``; size from ``ANTIPASSIVE_GRID_POINTS`` if set."""
    if points is None:
        points = int(os.environ.get(GRID_ENV, DEFAULT_GRID_POINTS))
    if points < 2:
        raise ValueError("grid needs at least two points")
    return np.logspace(math.log10(GRID_RANGE[0]), math.log10(GRID_RANGE[1]), points)


def _spectrum(sys: StateSpaceSystem) -> np.ndarray:
    return np.linalg.eigvals(sys.A) if sys.n else np.zeros(0, dtype=complex)


def _resolvent_clear(eigs: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Mask of points ``s`` that are not (numerically) eigenvalues."""
    if eigs.size == 0:
        return np.ones(s.shape, dtype=bool)
    scale = max(1.0, float(np.abs(eigs).max()))
    dist = np.abs(s[:, None] - eigs[None, :]).min(axis=1)
    return dist > RESOLVENT_TOL * scale


def freqresp(sys: StateSpaceSystem, omegas) -> np.ndarray:
    """Frequency response at each ``w`` in ``omegas``; shape ``(K, p, m)``."""
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    return evaluate_many(sys, 1j * w)


def evaluate_many(sys: StateSpaceSystem, points) -> np.ndarray:
    s = np.atleast_1d(np.asarray(points, dtype=complex))
    D = np.broadcast_to(sys.D.astype(complex), (s.size,) + sys.D.shape)
    if sys.n == 0:
        return D.copy()
    bad = ~_resolvent_clear(_spectrum(sys), s)
    if bad.any():
        raise SingularResolvent(f"s = {s[bad][0]} is an eigenvalue of A")
    M = s[:, None, None] * np.eye(sys.n) - sys.A
    X = np.linalg.solve(M, np.broadcast_to(sys.B, (s.size,) + sys.B.shape))
    return sys.C @ X + D


def evaluate(sys: StateSpaceSystem, s: complex) -> np.ndarray:
    """Transfer matrix ``C (sI - A)^-1 B + D`` at one complex point."""
    return evaluate_many(sys, [s])[0]


def eval_frequency(sys: StateSpaceSystem, omega: float) -> np.ndarray:
    """``G(jw)``. Raises :class:`SingularResolvent` on imaginary-axis poles."""
    return freqresp(sys, [omega])[0]


def _sigma_max(G: np.ndarray) -> np.ndarray:
    return np.linalg.svd(G, compute_uv=False)[..., 0]


# ---------------------------------------------------------------- stability --


def spectral_abscissa(sys: StateSpaceSystem) -> float:
    e = _spectrum(sys)
    return float(e.real.max()) if e.size else -math.inf


def _stab_threshold(eigs: np.ndarray) -> float:
    return EPS_STAB * float(np.abs(eigs).max()) if eigs.size else 0.0


def is_hurwitz(sys: StateSpaceSystem) -> bool:
    """All eigenvalues of A have real part below ``-EPS_STAB * rho(A)``."""
    e = _spectrum(sys)
    if e.size == 0:
        return True
    return bool(np.all(e.real < -_stab_threshold(e)))


def _is_unstable(sys: StateSpaceSystem) -> bool:
    """Strictly unstable: some eigenvalue clearly in the open right half-plane."""
    e = _spectrum(sys)
    if e.size == 0:
        return False
    return bool(e.real.max() > max(_stab_threshold(e), EPS_STAB))


# ---------------------------------------------------------------- H-infinity --


@dataclass(frozen=True)
class HinfResult:
    norm: float
    peak_freq: float  # 0 for a flat/static response, inf if approached as w -> inf
    tolerance: float  # achieved relative bracket width
    grid_norm: float  # dense-grid cross-check (a lower bound)


def _hamiltonian(sys: StateSpaceSystem, gamma: float) -> np.ndarray:
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    R = gamma**2 * np.eye(sys.inputs) - D.T @ D
    Ri = np.linalg.inv(R)
    Ah = A + B @ Ri @ D.T @ C
    return np.block(
        [
            [Ah, B @ Ri @ B.T],
            [-C.T @ (np.eye(sys.outputs) + D @ Ri @ D.T) @ C, -Ah.T],
        ]
    )


def _imaginary_axis_freqs(sys: StateSpaceSystem, gamma: float) -> np.ndarray:
    """Frequencies where some singular value of G(jw) equals ``gamma``.

    Candidates are Hamiltonian eigenvalues within the real-part tolerance of the
    axis; each is confirmed against the singular values of G(jw), which rejects
    tiny real eigenvalues coming from slow poles of G.
    """
    ev = np.linalg.eigvals(_hamiltonian(sys, gamma))
    tol = HAMILTONIAN_IMAG_TOL * max(1.0, float(np.abs(ev).max()))
    cand = np.unique(np.abs(ev[np.abs(ev.real) <= tol].imag))
    if cand.size == 0:
        return cand
    cand = cand[_resolvent_clear(_spectrum(sys), 1j * cand)]
    sv = np.linalg.svd(freqresp(sys, cand), compute_uv=False)
    hit = np.abs(sv - gamma).min(axis=1) <= CROSSING_RTOL * gamma
    return cand[hit]


def _polish_peak(f, w0: float, lo: float, hi: float) -> tuple[float, float]:
    """Maximise ``f`` on ``[lo, hi]`` starting from the grid value at ``w0``."""
    best_w, best = w0, f(w0)
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda w: -f(w), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12 * max(1.0, hi)},
        )
        if -res.fun > best + POLISH_GAIN * (1.0 + abs(best)):
            best_w, best = float(res.x), float(-res.fun)
    return best_w, best


def _linf_norm(sys: StateSpaceSystem, tol: float = 1e-9, grid=None) -> HinfResult:
    """L-infinity norm on the imaginary axis (no stability requirement)."""
    d = float(_sigma_max(sys.D)) if sys.D.size else 0.0
    if sys.n == 0:
        return HinfResult(d, 0.0, 0.0, d)
    eigs = _spectrum(sys)
    ws = np.asarray(frequency_grid() if grid is None else grid, dtype=float)
    extra = np.abs(eigs.imag)
    ws = np.unique(np.concatenate([[0.0], ws, extra[extra > 0]]))
    ws = ws[_resolvent_clear(eigs, 1j * ws)]
    sv = _sigma_max(freqresp(sys, ws))
    k = int(np.argmax(sv))
    grid_max = float(sv[k])

    lo = max(d, grid_max)
    if lo == 0.0:
        return HinfResult(0.0, 0.0, 0.0, 0.0)
    hi = d + 2.0 * grid_max
    if hi <= lo:
        hi = 2.0 * lo
    for _ in range(200):
        if _imaginary_axis_freqs(sys, hi).size == 0:
            break
        lo, hi = hi, 2.0 * hi
    while hi - lo > 0.5 * tol * lo:
        mid = 0.5 * (lo + hi)
        if _imaginary_axis_freqs(sys, mid).size:
            lo = mid
        else:
            hi = mid

    # the peak sits between consecutive crossing frequencies of the lower level
    sig = lambda w: float(_sigma_max(eval_frequency(sys, w)))
    crossings = _imaginary_axis_freqs(sys, lo) if lo > d else np.zeros(0)
    cand = np.concatenate([[0.0, ws[k]], crossings, 0.5 * (crossings[1:] + crossings[:-1])])
    cand = cand[_resolvent_clear(eigs, 1j * cand)]
    vals = _sigma_max(freqresp(sys, cand))
    j = int(np.argmax(vals))
    w_best = float(cand[j])
    pos = np.searchsorted(ws, w_best)
    a = ws[max(pos - 1, 0)]
    b = ws[min(pos + 1, ws.size - 1)]
    try:
        w_best, val = _polish_peak(sig, w_best, min(a, w_best), max(b, w_best))
    except SingularResolvent:
        val = float(vals[j])

    norm = max(val, lo)
    peak = w_best
    if val < norm * (1.0 - tol) and d >= norm * (1.0 - tol):
        peak = math.inf
    return HinfResult(norm, peak, (hi - lo) / lo, grid_max)


def hinf_norm(sys: StateSpaceSystem, tol: float = 1e-9, grid=None) -> HinfResult:
    """H-infinity norm of a Hurwitz system by Hamiltonian bisection.

    ``gamma > sigma_max(D)`` is an upper bound on the norm iff the associated
    Hamiltonian matrix has no imaginary-axis eigenvalues. The bracket starts at
    ``[max(sigma_max(D), grid max), sigma_max(D) + 2 * grid max]`` and is widened
    if needed; the dense-grid maximum is returned alongside as a cross-check.
    """
    if not is_hurwitz(sys):
        raise NotStable("hinf_norm requires a Hurwitz system")
    return _linf_norm(sys, tol, grid)


# ---------------------------------------------------------------- Cayley maps --


def _checked_inverse(M: np.ndarray, what: str) -> np.ndarray:
    if M.size and np.linalg.cond(M) > ILL_POSED_COND:
        raise IllPosed(f"{what} is singular")
    return np.linalg.inv(M)


def cayley_G_to_S(sys: StateSpaceSystem) -> StateSpaceSystem:
    """Realization of ``S = (G - I)(G + I)^-1 = I - 2 (G + I)^-1``."""
    if not sys.is_square:
        raise DimensionError("Cayley transform needs a square system")
    I = np.eye(sys.inputs)
    M = _checked_inverse(sys.D + I, "D + I")
    return StateSpaceSystem(sys.A - sys.B @ M @ sys.C, sys.B @ M, 2.0 * M @ sys.C, I - 2.0 * M)


def cayley_S_to_R(sys: StateSpaceSystem) -> StateSpaceSystem:
    """Realization of ``R = (I + S)(I - S)^-1 = 2 (I - S)^-1 - I``."""
    if not sys.is_square:
        raise DimensionError("Cayley transform needs a square system")
    I = np.eye(sys.inputs)
    K = _checked_inverse(I - sys.D, "I - D")
    return StateSpaceSystem(sys.A + sys.B @ K @ sys.C, sys.B @ K, 2.0 * K @ sys.C, 2.0 * K - I)


# ---------------------------------------------------------------- feedback --


def feedback_interconnect(sys1: StateSpaceSystem, sys2: StateSpaceSystem, sign: int = -1) -> StateSpaceSystem:
    """Closed loop from ``r`` to ``y1`` with ``u1 = r + sign * y2``, ``u2 = y1``.

    ``sign=-1`` is the usual negative feedback loop. States are ordered
    ``(x1, x2)``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p1, m1 = sys1.outputs, sys1.inputs
    if sys2.inputs != p1 or sys2.outputs != m1:
        raise DimensionError("feedback: incompatible dimensions")
    E = _checked_inverse(np.eye(p1) - sign * sys1.D @ sys2.D, "I - sign*D1*D2")
    n1, n2 = sys1.n, sys2.n
    Cy = E @ np.hstack([sys1.C, sign * sys1.D @ sys2.C])
    Dy = E @ sys1.D
    Cu = np.hstack([np.zeros((m1, n1)), sign * sys2.C]) + sign * sys2.D @ Cy
    Du = np.eye(m1) + sign * sys2.D @ Dy
    A = np.block([[sys1.A, np.zeros((n1, n2))], [np.zeros((n2, n1)), sys2.A]])
    A = A + np.vstack([sys1.B @ Cu, sys2.B @ Cy])
    B = np.vstack([sys1.B @ Du, sys2.B @ Dy])
    return StateSpaceSystem(A, B, Cy, Dy)


# ---------------------------------------------------------------- passivity --


@dataclass(frozen=True)
class PassivityCertificate:
    verdict: str
    witness_freq: float  # where lambda_min(G + G^*) is smallest on the grid
    min_real_eig: float
    cayley_norm: float  # nan when not computed, inf when the Cayley image is unstable/ill posed
    hurwitz: bool
    conflict: bool = False
    note: str = ""

    @property
    def passive(self) -> bool:
        return self.verdict == PASSIVE


def _min_pr_eig(sys: StateSpaceSystem, ws: np.ndarray) -> np.ndarray:
    G = freqresp(sys, ws)
    H = G + np.conj(np.swapaxes(G, -1, -2))
    return np.linalg.eigvalsh(H)[:, 0]


def _refined_minimum(sys, ws, vals) -> tuple[float, float]:
    k = int(np.argmin(vals))
    a, b = ws[max(k - 1, 0)], ws[min(k + 1, ws.size - 1)]
    fine = np.linspace(a, b, 2 * REFINE_FACTOR + 1)
    fv = _min_pr_eig(sys, fine)
    j = int(np.argmin(fv))
    w, v = float(fine[j]), float(fv[j])
    lo, hi = fine[max(j - 1, 0)], fine[min(j + 1, fine.size - 1)]
    if hi > lo:
        f = lambda x: float(_min_pr_eig(sys, [x])[0])
        res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12 * max(1.0, hi)})
        if res.fun < v - POLISH_GAIN * (1.0 + abs(v)):
            w, v = float(res.x), float(res.fun)
    if vals[k] < v:
        w, v = float(ws[k]), float(vals[k])
    return w, v


def is_passive(sys: StateSpaceSystem, grid=None) -> PassivityCertificate:
    """Certify passivity (positive realness) of a square system.

    Two routes: the minimum eigenvalue of ``G(jw) + G(jw)^*`` over a refined
    frequency grid, and the H-infinity norm of the Cayley image. Systems with
    imaginary-axis poles get ``NotApplicable`` (the grid test is still
    reported at the non-pole frequencies).
    """
    if not sys.is_square:
        raise DimensionError("passivity is defined for square systems")
    eigs = _spectrum(sys)
    hurwitz = is_hurwitz(sys)
    ws = np.asarray(frequency_grid() if grid is None else grid, dtype=float)
    extra = np.abs(eigs.imag)
    ws = np.unique(np.concatenate([[0.0], ws, extra[extra > 0]]))

    cayley_norm, cayley_peak, note = math.nan, None, ""
    if hurwitz:
        try:
            S = cayley_G_to_S(sys)
        except IllPosed:
            cayley_norm, note = math.inf, "G + I singular at infinity"
        else:
            if is_hurwitz(S):
                h = hinf_norm(S)
                cayley_norm, cayley_peak = h.norm, h.peak_freq
            else:
                cayley_norm, note = math.inf, "(G + I)^-1 unstable"
    if cayley_peak is not None and math.isfinite(cayley_peak):
        ws = np.unique(np.append(ws, cayley_peak))

    ws = ws[_resolvent_clear(eigs, 1j * ws)]
    vals = _min_pr_eig(sys, ws)
    witness, min_eig = _refined_minimum(sys, ws, vals)

    if not hurwitz:
        verdict = NOT_PASSIVE if _is_unstable(sys) else NOT_APPLICABLE
        note = "unstable" if verdict == NOT_PASSIVE else "imaginary-axis poles"
        return PassivityCertificate(verdict, witness, min_eig, cayley_norm, False, False, note)

    pr_ok = min_eig >= -EPS_PR
    sg_ok = cayley_norm <= 1.0 + EPS_PR
    conflict = pr_ok != sg_ok
    if conflict:
        note = (note + "; " if note else "") + "grid and Cayley routes disagree"
    verdict = PASSIVE if (pr_ok and sg_ok) else NOT_PASSIVE
    return PassivityCertificate(verdict, witness, min_eig, cayley_norm, True, conflict, note)


def is_delta_passive(sys: StateSpaceSystem, grid=None) -> PassivityCertificate:
    """delta-passivity (passivity of the map u' -> y').

    Differentiating the state equations gives a realization with the same
    (A, B, C, D), so for LTI systems this coincides with :func:`is_passive`.
    """
    return is_passive(sys, grid)
