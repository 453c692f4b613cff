"""Passive destabilizers for stable non-passive plants.

Pipeline for a Hurwitz, square, non-passive ``G``:

1. ``S = (G - I)(G + I)^-1`` has ``||S||_inf > 1``.
2. At a frequency ``w0`` with ``sigma_1 = sigma_max(S(jw0)) > 1`` build a stable
   rank-one ``Delta`` from first-order all-pass factors so that
   ``||Delta||_inf = 1/sigma_1`` and ``Delta(jw0) = -(1/sigma_1) v1 u1^*``, which
   makes ``I + S(jw0) Delta(jw0)`` singular.
3. ``R = (I + Delta)(I - Delta)^-1`` is passive, and ``det(I + S Delta) = 0``
   at ``jw0`` forces ``det(I + R G) = 0`` there, so the negative feedback
   loop of ``G`` and ``R`` has poles at ``+-jw0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import lti
from .errors import AlreadyPassive, IllPosed, NearPiPhase, NotStable, PhaseOutOfRange
from .lti import StateSpaceSystem

DEGENERACY_RTOL = 1e-8
NEAR_PI = 1e-6
PHASE_SEARCH_POINTS = 720
PHASE_SNAP = 1e-12  # phases this close to 0 or pi are rounding noise on a real entry


class PeakSVD(NamedTuple):
    sigma1: float
    u1: np.ndarray
    v1: np.ndarray
    degenerate: bool


@dataclass(frozen=True)
class AllPassFactor:
    """``magnitude * (pole - s)/(pole + s)``; ``pole=None`` means the constant ``magnitude``.

    ``magnitude`` is signed: a negative magnitude absorbs a phase shift of pi.
    """

    magnitude: float
    pole: float | None = None

    @property
    def is_constant(self) -> bool:
        return self.pole is None

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        if self.pole is None:
            return self.magnitude * np.ones_like(s)
        return self.magnitude * (self.pole - s) / (self.pole + s)

    def system(self) -> StateSpaceSystem:
        """Scalar realization ``x' = -p x + u``, ``y = m (2p x - u)``."""
        if self.pole is None:
            return StateSpaceSystem.static([[self.magnitude]])
        p, m = self.pole, self.magnitude
        return StateSpaceSystem([[-p]], [[1.0]], [[2.0 * p * m]], [[-m]])


@dataclass(frozen=True, eq=False)
class RankOneDelta:
    sigma1: float
    omega0: float
    col_factors: tuple[AllPassFactor, ...]  # realize v1
    row_factors: tuple[AllPassFactor, ...]  # realize -u1^*
    realization: StateSpaceSystem

    def __call__(self, s) -> np.ndarray:
        col = np.array([f(s) for f in self.col_factors])
        row = np.array([f(s) for f in self.row_factors])
        return np.outer(col, row) / self.sigma1


def svd_at_peak(S: StateSpaceSystem, omega0: float) -> PeakSVD:
    """Leading singular triple of ``S(jw0)``: ``S(jw0) v1 = sigma1 u1``.

    ``degenerate`` flags a repeated leading singular value; the first triple
    returned by the SVD is used regardless.
    """
    if not math.isfinite(omega0):
        raise ValueError("omega0 must be finite")
    M = lti.eval_frequency(S, omega0)
    U, s, Vh = np.linalg.svd(M)
    degenerate = s.size > 1 and s[1] >= s[0] * (1.0 - DEGENERACY_RTOL)
    return PeakSVD(float(s[0]), U[:, 0].copy(), Vh[0].conj().copy(), bool(degenerate))


def phase_to_allpass(theta: float, omega0: float) -> float | None:
    """Pole ``b`` with ``angle((b - jw0)/(b + jw0)) = theta``; ``None`` for ``theta = 0``.

    ``angle = -2 atan(w0/b)``, so ``b = w0 / tan(-theta/2)``.
    """
    if not (-math.pi < theta <= 0.0):
        raise PhaseOutOfRange(f"phase {theta} outside (-pi, 0]")
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    if theta == 0.0:
        return None
    if theta < -math.pi + NEAR_PI:
        warnings.warn(f"phase {theta} is within {NEAR_PI} of -pi; pole near 0", NearPiPhase, stacklevel=2)
    return omega0 / math.tan(-theta / 2.0)


def _fold(z: complex) -> tuple[float, float]:
    """Signed magnitude and phase in (-pi, 0] with ``mag * exp(j phase) = z``."""
    r, phi = abs(z), float(np.angle(z))
    if abs(phi) <= PHASE_SNAP:
        return r, 0.0
    if abs(phi) >= math.pi - PHASE_SNAP:  # negative real
        return -r, 0.0
    if phi > 0.0:
        return -r, phi - math.pi
    return r, phi


def _factor(z: complex, omega0: float, tiny: float) -> AllPassFactor:
    if abs(z) <= tiny:
        return AllPassFactor(0.0)
    mag, phase = _fold(z)
    return AllPassFactor(mag, phase_to_allpass(phase, omega0))


def _phase_score(angles: np.ndarray) -> np.ndarray:
    """How comfortably each entry angle is realized; larger is better.

    An entry with folded phase ``theta`` in (-pi, 0) gets the pole
    ``w0 / tan(-theta/2)``, which degenerates at both ends of the interval, so
    the score is the distance of ``theta + pi`` from {0, pi}. Real entries need
    no pole and score the maximum ``pi/2``.
    """
    ang = np.mod(angles, math.pi)
    real = (ang <= PHASE_SNAP) | (ang >= math.pi - PHASE_SNAP)
    return np.where(real, 0.5 * math.pi, np.minimum(ang, math.pi - ang))


def _common_phase(col: np.ndarray, row: np.ndarray, tiny: float) -> float:
    """Rotation ``psi`` (col by ``e^{j psi}``, row by ``e^{-j psi}``) with the best worst-case score.

    The product ``col row`` does not change, so this only affects how the
    entries are realized: it keeps all-pass poles away from 0 and infinity.
    """
    ac = np.angle(col[np.abs(col) > tiny])
    ar = np.angle(row[np.abs(row) > tiny])
    if ac.size + ar.size == 0:
        return 0.0
    psis = np.unique(np.concatenate([
        np.linspace(-math.pi, math.pi, PHASE_SEARCH_POINTS, endpoint=False), -ac, ar,
    ]))
    angles = np.hstack([ac[None, :] + psis[:, None], ar[None, :] - psis[:, None]])
    worst = _phase_score(angles).min(axis=1)
    return float(psis[int(np.argmax(worst))])


def build_delta(sigma1: float, omega0: float, u1, v1) -> RankOneDelta:
    """Stable rank-one ``Delta`` with ``Delta(jw0) = -(1/sigma1) v1 u1^*``.

    Each entry of ``v1`` and of ``-u1^*`` becomes a signed magnitude times a
    first-order all-pass factor matching its phase at ``w0``; the realization
    is the row bank, then the scale ``1/sigma1``, then the column bank, with
    column-bank states listed first.
    """
    if not sigma1 > 1.0:
        raise ValueError("sigma1 must exceed 1 for a destabilizing Delta")
    u1 = np.asarray(u1, dtype=complex).ravel()
    v1 = np.asarray(v1, dtype=complex).ravel()
    tiny = 1e-14 * max(np.abs(u1).max(), np.abs(v1).max())
    row = -np.conj(u1)
    psi = _common_phase(v1, row, tiny)
    rot = np.exp(1j * psi)
    cols = tuple(_factor(z, omega0, tiny) for z in v1 * rot)
    # v1 picks up e^{j psi}; the row picks up e^{-j psi} so the product is unchanged
    rows = tuple(_factor(z, omega0, tiny) for z in row * np.conj(rot))

    row_bank = lti.series(
        lti.block_diag(*[f.system() for f in rows]),
        StateSpaceSystem.static(np.ones((1, len(rows)))),
    )
    col_bank = lti.series(
        StateSpaceSystem.static(np.ones((len(cols), 1))),
        lti.block_diag(*[f.system() for f in cols]),
    )
    scaled = lti.series(row_bank, StateSpaceSystem.static([[1.0 / sigma1]]))
    realization = _reorder_first(lti.series(scaled, col_bank), col_bank.n)
    return RankOneDelta(float(sigma1), float(omega0), cols, rows, realization)


def _reorder_first(sys: StateSpaceSystem, k: int) -> StateSpaceSystem:
    """Move the last ``k`` states to the front."""
    n = sys.n
    perm = np.r_[np.arange(n - k, n), np.arange(0, n - k)].astype(int)
    return StateSpaceSystem(sys.A[np.ix_(perm, perm)], sys.B[perm], sys.C[:, perm], sys.D)


# ------------------------------------------------------------------ pipeline --


@dataclass(frozen=True)
class InstabilityCheck:
    eigenvalues: np.ndarray
    max_real: float
    distance_to_jw0: float
    unstable: bool


def verify_instability(closed: StateSpaceSystem, omega0: float) -> InstabilityCheck:
    """Spectrum summary of a closed loop; ``unstable`` iff the loop is not Hurwitz."""
    eigs = np.linalg.eigvals(closed.A) if closed.n else np.zeros(0, dtype=complex)
    max_real = float(eigs.real.max()) if eigs.size else -math.inf
    if eigs.size and math.isfinite(omega0):
        targets = np.array([1j * omega0, -1j * omega0])
        dist = float(np.abs(eigs[:, None] - targets[None, :]).min())
    else:
        dist = math.inf
    return InstabilityCheck(eigs, max_real, dist, not lti.is_hurwitz(closed))


@dataclass(frozen=True, eq=False)
class DestabilizerReport:
    method: str  # "rank_one" or "static_gain"
    sigma1: float
    omega0: float
    degenerate_peak: bool
    margin: float  # 1 - ||Delta||_inf
    det_I_plus_S_delta: complex
    det_RG_plus_I: complex
    r_certificate: lti.PassivityCertificate
    closed_loop: InstabilityCheck | None
    closed_loop_ill_posed: bool
    delta: RankOneDelta | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)


def _worst_phase_score(S: StateSpaceSystem, w: float) -> float:
    peak = svd_at_peak(S, w)
    tiny = 1e-14
    row = -np.conj(peak.u1)
    psi = _common_phase(peak.v1, row, tiny)
    ang = np.concatenate([np.angle(peak.v1[np.abs(peak.v1) > tiny]) + psi,
                          np.angle(row[np.abs(row) > tiny]) - psi])
    return float(_phase_score(ang).min())


def _choose_omega0(G: StateSpaceSystem, S: StateSpaceSystem, rule: str) -> float:
    """Interior frequency with ``sigma_max(S(jw)) > 1``.

    When the rule lands on 0 or infinity, fall back to the grid: keep the points
    within half of the best excess gain and take the one whose singular vectors
    give the best-conditioned all-pass poles.
    """
    if rule == "witness":
        w = lti.is_passive(G).witness_freq
    elif rule == "peak":
        w = lti.hinf_norm(S).peak_freq
    else:
        raise ValueError(f"unknown omega0 rule {rule!r}")
    if 0.0 < w < math.inf and lti._sigma_max(lti.eval_frequency(S, w)) > 1.0:
        return float(w)
    ws = lti.frequency_grid()
    sv = lti._sigma_max(lti.freqresp(S, ws))
    if not np.any(sv > 1.0):
        raise IllPosed("no interior frequency with sigma_max(S) > 1")
    keep = np.flatnonzero(sv >= 1.0 + 0.5 * (sv.max() - 1.0))
    scores = [_worst_phase_score(S, ws[i]) for i in keep]
    return float(ws[keep[int(np.argmax(scores))]])


def _static_gain_destabilizer(G: StateSpaceSystem):
    """``R = k I`` on the boundary of stability when ``(I + G)^-1`` is unstable.

    The negative feedback loop with ``k I`` is stable for small ``k`` (G is
    Hurwitz) and unstable at ``k = 1``; bisection finds the crossing. Returns
    ``(k, through_infinity)``.
    """
    I = np.eye(G.inputs)

    def abscissa(k):
        try:
            return lti.spectral_abscissa(lti.feedback_interconnect(G, StateSpaceSystem.static(k * I), -1))
        except IllPosed:
            return math.inf

    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if abscissa(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    # stability may instead be lost through the algebraic loop (poles escaping via infinity)
    for bump in (0.0, 1e-12, 1e-9, 1e-6):
        k = hi + bump * (1.0 - hi)
        try:
            lti.feedback_interconnect(G, StateSpaceSystem.static(k * np.eye(G.inputs)), -1)
        except IllPosed:
            continue
        return k, bump > 0.0
    raise IllPosed("no well-posed critical static gain")


def construct_passive_destabilizer(G: StateSpaceSystem, omega0_rule: str = "witness"):
    """Build a passive ``R`` whose negative feedback loop with ``G`` is not asymptotically stable.

    Returns ``(R, omega0, report)``. ``omega0_rule`` picks the design frequency:
    ``"witness"`` (most negative ``lambda_min(G + G^*)``) or ``"peak"`` (the
    H-infinity peak of the Cayley image). Any frequency with
    ``sigma_max(S(jw)) > 1`` works; the choice only moves the placed pole.
    """
    if not G.is_square:
        raise lti.DimensionError("destabilizer needs a square plant")
    if not lti.is_hurwitz(G):
        raise NotStable("G must be Hurwitz")
    S = lti.cayley_G_to_S(G)
    notes: list[str] = []

    if not lti.is_hurwitz(S):
        k, through_infinity = _static_gain_destabilizer(G)
        R = StateSpaceSystem.static(k * np.eye(G.inputs))
        closed = lti.feedback_interconnect(G, R, -1)
        notes.append("(G + I)^-1 unstable; using the critical static gain")
        I = np.eye(G.inputs)
        d = (k - 1.0) / (k + 1.0)
        if through_infinity:
            notes.append("stability is lost through the algebraic loop")
            omega0, det_sd, det_rg = math.inf, complex("nan"), complex("nan")
        else:
            eigs = np.linalg.eigvals(closed.A)
            omega0 = abs(float(eigs[int(np.argmax(eigs.real))].imag))
            det_rg = complex(np.linalg.det(k * lti.eval_frequency(G, omega0) + I))
            try:
                det_sd = complex(np.linalg.det(I + d * lti.eval_frequency(S, omega0)))
            except lti.SingularResolvent:
                det_sd = complex("nan")
        report = DestabilizerReport(
            "static_gain", math.nan, omega0, False, 1.0 - abs(d), det_sd, det_rg,
            lti.is_passive(R), verify_instability(closed, omega0), False, None, tuple(notes),
        )
        return R, omega0, report

    h = lti.hinf_norm(S)
    if h.norm <= 1.0 + lti.EPS_PR:
        raise AlreadyPassive(f"||(G-I)(G+I)^-1||_inf = {h.norm:.6g} <= 1")
    omega0 = _choose_omega0(G, S, omega0_rule)
    peak = svd_at_peak(S, omega0)
    if peak.degenerate:
        notes.append("leading singular value of S(jw0) is repeated")
    delta = build_delta(peak.sigma1, omega0, peak.u1, peak.v1)
    R = lti.cayley_S_to_R(delta.realization)

    I = np.eye(G.inputs)
    Sj = lti.eval_frequency(S, omega0)
    det_sd = complex(np.linalg.det(I + Sj @ lti.eval_frequency(delta.realization, omega0)))
    det_rg = complex(np.linalg.det(lti.eval_frequency(R, omega0) @ lti.eval_frequency(G, omega0) + I))
    try:
        closed = lti.feedback_interconnect(G, R, -1)
    except IllPosed:
        check, ill = None, True
        notes.append("closed loop has a singular algebraic loop")
    else:
        check, ill = verify_instability(closed, omega0), False
    report = DestabilizerReport(
        "rank_one", peak.sigma1, omega0, peak.degenerate, 1.0 - 1.0 / peak.sigma1,
        det_sd, det_rg, lti.is_passive(R), check, ill, delta, tuple(notes),
    )
    return R, omega0, report
