"""Closed-loop simulation of a population dynamic in feedback with a higher-order game."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eig

from . import dynamics as dyn
from . import io
from . import lti
from .errors import UnknownScenario
from .population import (
    HigherOrderGame,
    build_tangent_basis,
    linear_game,
    negated,
    paper_logit_game,
    paper_replicator_game,
    rock_paper_scissors,
)

BLOWUP = 1e12
RK4 = "rk4"
RK45 = "rk45"


@dataclass(frozen=True)
class IntegratorConfig:
    """``rk4`` steps with ``dt``; ``rk45`` is adaptive and records every ``dt``."""

    method: str = RK4
    dt: float = 0.005
    T: float = 100.0
    rtol: float = 1e-9
    atol: float = 1e-12
    record_stride: int = 1

    def __post_init__(self):
        if self.method not in (RK4, RK45):
            raise ValueError(f"method must be {RK4!r} or {RK45!r}")
        if not (self.dt > 0 and self.T > 0):
            raise ValueError("dt and T must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def tolerance(self) -> float:
        """Nominal accuracy floor used by the instability verdict."""
        return self.dt**4 if self.method == RK4 else self.atol + self.rtol


@dataclass
class Trajectory:
    """Recorded closed-loop run; ``phat`` is ``None`` for first-order dynamics.

    ``work`` and ``payoff_integral`` are integrated alongside the state:
    ``work = int x'p dt`` and ``payoff_integral = int p dt``.
    """

    times: np.ndarray
    x: np.ndarray
    phat: np.ndarray | None
    z: np.ndarray
    payoffs: np.ndarray
    work: np.ndarray
    payoff_integral: np.ndarray
    blowup: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def simplex_drift(self) -> float:
        return float(np.abs(self.x.sum(axis=1) - 1.0).max())

    def columns(self):
        m = self.x.shape[1]
        names = ["t"] + [f"x_{i + 1}" for i in range(m)]
        blocks = [self.times[:, None], self.x]
        if self.phat is not None:
            names += [f"phat_{i + 1}" for i in range(m)]
            blocks.append(self.phat)
        names += [f"z_{i + 1}" for i in range(self.z.shape[1])]
        names += [f"p_{i + 1}" for i in range(m)]
        blocks += [self.z, self.payoffs]
        return names, np.hstack(blocks)

    def to_csv(self, path) -> None:
        names, data = self.columns()
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(names), comments="")

    def simplex_projection(self) -> np.ndarray:
        """Barycentric to planar coordinates ``(u, v)`` for three strategies."""
        if self.x.shape[1] != 3:
            raise ValueError("simplex projection needs m = 3")
        u = self.x[:, 1] + 0.5 * self.x[:, 2]
        v = math.sqrt(3.0) / 2.0 * self.x[:, 2]
        return np.column_stack([self.times, u, v])

    def simplex_csv(self, path) -> None:
        np.savetxt(path, self.simplex_projection(), fmt="%.17g", delimiter=",", header="t,u,v", comments="")


def _closed_loop_rhs(kind: str, game: HigherOrderGame):
    """Right-hand side on ``y = (x, phat, z, work, payoff_integral)``."""
    if kind not in dyn.KINDS:
        raise ValueError(f"unknown dynamics {kind!r}")
    m, sys = game.m, game.internal
    n, second = sys.n, kind in dyn.SECOND_ORDER
    N = game.N
    Ag, BgNt = sys.A, sys.B @ N.T
    NCg, NDgNt = N @ sys.C, N @ sys.D @ N.T
    xstar, pstar = game.xstar, game.pstar
    ix, ip = slice(0, m), slice(m, 2 * m if second else m)
    iz = slice(ip.stop, ip.stop + n)
    iw, iP = iz.stop, slice(iz.stop + 1, iz.stop + 1 + m)

    def payoff(x, z):
        return pstar + NCg @ z + NDgNt @ (x - xstar)

    def rhs(t, y):
        x, z = y[ix], y[iz]
        p = payoff(x, z)
        out = np.empty_like(y)
        if kind == "replicator1":
            out[ix] = x * (p - x @ p)
        elif kind == "logit1":
            out[ix] = dyn.softmax(p) - x
        elif kind == "replicator2":
            ph = y[ip]
            out[ix] = x * (ph - x @ ph)
            out[ip] = p
        else:
            ph = y[ip]
            out[ix] = dyn.softmax(ph) - x
            out[ip] = p - ph
        out[iz] = Ag @ z + BgNt @ (x - xstar)
        out[iw] = x @ p
        out[iP] = p
        return out

    return rhs, payoff, (ix, ip, iz, iw, iP), second


def integrate(kind: str, game: HigherOrderGame, init: dyn.DynamicState, z0=None, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the positive-feedback loop: ``P`` drives the dynamic, ``X`` drives the game.

    A state entry above ``1e12`` (or a non-finite value) stops the run; the
    trajectory up to that point is returned with ``blowup=True``.
    """
    cfg = cfg or IntegratorConfig()
    rhs, payoff, (ix, ip, iz, iw, iP), second = _closed_loop_rhs(kind, game)
    m, n = game.m, game.internal.n
    x0 = np.asarray(init.x, dtype=float)
    if x0.shape != (m,):
        raise lti.DimensionError(f"x0 must have length {m}")
    if second and init.phat is None:
        raise ValueError(f"{kind} needs an initial phat")
    z0 = np.zeros(n) if z0 is None else np.asarray(z0, dtype=float).reshape(n)
    parts = [x0, init.phat if second else np.empty(0), z0, np.zeros(1 + m)]
    y0 = np.concatenate(parts)

    if cfg.method == RK4:
        Y, t, blowup = _rk4(rhs, y0, cfg)
    else:
        Y, t, blowup = _rk45(rhs, y0, cfg)

    X, Z = Y[:, ix], Y[:, iz]
    P = np.array([payoff(x, z) for x, z in zip(X, Z)])
    meta = {"dynamics": kind, "integrator": asdict(cfg)}
    return Trajectory(
        times=t,
        x=X,
        phat=Y[:, ip] if second else None,
        z=Z,
        payoffs=P,
        work=Y[:, iw],
        payoff_integral=Y[:, iP],
        blowup=blowup,
        metadata=meta,
    )


def _escaped(y) -> bool:
    return not np.all(np.abs(y) < BLOWUP)


def _rk4(rhs, y0, cfg: IntegratorConfig):
    h, stride, steps = cfg.dt, cfg.record_stride, cfg.steps
    rows, times = [y0.copy()], [0.0]
    y, blowup = y0.copy(), False
    for k in range(1, steps + 1):
        t = (k - 1) * h
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + (h / 2) * k1)
        k3 = rhs(t + h / 2, y + (h / 2) * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if _escaped(y):
            blowup = True
            break
        if k % stride == 0 or k == steps:
            rows.append(y)
            times.append(k * h)
    return np.array(rows), np.array(times), blowup


def _rk45(rhs, y0, cfg: IntegratorConfig):
    def escape(t, y):
        return BLOWUP - np.abs(y).max()

    escape.terminal = True
    t_eval = np.arange(0, cfg.steps + 1, cfg.record_stride) * cfg.dt
    t_eval = np.append(t_eval[t_eval < cfg.T], cfg.T)
    sol = solve_ivp(rhs, (0.0, cfg.T), y0, method="RK45", t_eval=t_eval, rtol=cfg.rtol, atol=cfg.atol, events=escape)
    return sol.y.T, sol.t, sol.status == 1


# ----------------------------------------------------------------- metrics --


@dataclass(frozen=True)
class InstabilityReport:
    window_rms: np.ndarray
    tolerance: float
    non_convergent: bool

    @property
    def verdict(self) -> str:
        return "NonConvergent" if self.non_convergent else "Convergent"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "window_rms": self.window_rms, "tolerance": self.tolerance}


def _deviation(traj: Trajectory, equilibrium: dyn.DynamicState) -> np.ndarray:
    dev = [traj.x - equilibrium.x]
    if traj.phat is not None and equilibrium.phat is not None:
        dev.append(traj.phat - equilibrium.phat)
    return np.hstack(dev)


def instability_metric(traj: Trajectory, equilibrium: dyn.DynamicState, windows: int = 10, tolerance: float | None = None) -> InstabilityReport:
    """Split the run into ``windows`` equal chunks and compare their RMS deviations.

    Non-convergent when the last chunk keeps at least half of the largest
    chunk's RMS and sits at least ten times above the integrator tolerance.
    """
    if tolerance is None:
        cfg = traj.metadata.get("integrator")
        tolerance = IntegratorConfig(**cfg).tolerance if cfg else 0.0
    dev = _deviation(traj, equilibrium)
    if windows < 3 or len(dev) < windows:
        raise ValueError("need at least three windows with one sample each")
    chunks = np.array_split(np.einsum("ij,ij->i", dev, dev), windows)
    rms = np.sqrt([c.mean() for c in chunks])
    final = rms[-1]
    bad = bool(traj.blowup or (final >= 0.5 * rms.max() and final >= 10 * tolerance))
    return InstabilityReport(rms, float(tolerance), bad)


@dataclass(frozen=True)
class CrosscheckReport:
    eigenvalues: np.ndarray  # sorted by decreasing real part
    max_real: float

    @property
    def dominant(self) -> complex:
        return complex(self.eigenvalues[0])

    @property
    def unstable(self) -> bool:
        return self.max_real >= -1e-6

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[e.real, e.imag] for e in self.eigenvalues],
            "max_real": self.max_real,
            "has_eigenvalue_re_ge_-1e-6": self.unstable,
        }


def linear_crosscheck(reduced: lti.StateSpaceSystem, internal: lti.StateSpaceSystem, sign: int = +1) -> CrosscheckReport:
    """Spectrum of the reduced dynamic in feedback with the game's internal system."""
    closed = lti.feedback_interconnect(reduced, internal, sign=sign)
    eigs = np.linalg.eigvals(closed.A) if closed.n else np.zeros(0, complex)
    eigs = eigs[np.lexsort((-eigs.imag, -eigs.real))]
    return CrosscheckReport(eigs, float(eigs.real.max()) if eigs.size else -math.inf)


def reduced_coordinates(game: HigherOrderGame, state: dyn.DynamicState, equilibrium: dyn.DynamicState, z) -> np.ndarray:
    """Map a nonlinear loop state to the reduced linear-loop state ``(dw, xi, z)``."""
    N = game.N
    parts = [N.T @ (state.x - equilibrium.x)]
    if state.phat is not None:
        parts.append(N.T @ (state.phat - equilibrium.phat))
    return np.concatenate(parts + [np.asarray(z, dtype=float)])


def modal_growth_rate(kind: str, game: HigherOrderGame, amplitude: float = 1e-4, horizon: float = 5.0, dt: float = 0.005):
    """Compare the nonlinear growth of the dominant mode with its linear rate.

    The loop starts at ``amplitude`` along the real part of the dominant
    right eigenvector of the exact (analytic) linearization; the growth of the
    projection onto the matching left eigenvector is measured over ``horizon``.

    Returns ``(nonlinear_rate, linear_rate)``.
    """
    eq = dyn.equilibrium(kind, game.xstar)
    reduced = dyn.reduce_dynamics(dyn.linearize(kind, game.xstar, dyn.ANALYTIC), game.N)
    closed = lti.feedback_interconnect(reduced, game.internal, sign=+1)
    vals, left, right = eig(closed.A, left=True, right=True)
    k = int(np.argmax(vals.real))
    v = right[:, k].real
    v = amplitude * v / np.linalg.norm(v)
    k1 = game.m - 1
    N = game.N
    x0 = eq.x + N @ v[:k1]
    phat0 = eq.phat + N @ v[k1 : 2 * k1]
    z0 = v[2 * k1 :]
    cfg = IntegratorConfig(dt=dt, T=horizon)
    traj = integrate(kind, game, dyn.DynamicState(x0, phat0), z0, cfg)
    w = left[:, k]
    c = []
    for i in (0, -1):
        s = dyn.DynamicState(traj.x[i], traj.phat[i])
        c.append(abs(np.conj(w) @ reduced_coordinates(game, s, eq, traj.z[i])))
    return math.log(c[1] / c[0]) / traj.times[-1], float(vals[k].real)


# --------------------------------------------------------------- scenarios --


@dataclass(frozen=True)
class ScenarioConfig:
    """Settings shared by the canned scenarios.

    ``logit_orientation`` picks the sign of the constructed logit game in the
    positive-feedback loop: ``"antipassive"`` negates its internal system,
    ``"literal"`` uses the published matrices as they are.
    """

    integrator: IntegratorConfig = IntegratorConfig()
    offset: float = 0.01
    logit_orientation: str = "antipassive"


def _counterexample_x0(m: int, offset: float) -> np.ndarray:
    N = build_tangent_basis(m)
    e = np.zeros(m - 1)
    e[0] = 1.0
    return np.full(m, 1.0 / m) + offset * (N @ e)


def _scenario_setup(name: str, cfg: ScenarioConfig):
    if name == "logit_counterexample":
        game = paper_logit_game()
        if cfg.logit_orientation == "antipassive":
            game = negated(game)
        elif cfg.logit_orientation != "literal":
            raise ValueError("logit_orientation must be 'antipassive' or 'literal'")
        kind = "logit2"
    elif name == "replicator_counterexample":
        game, kind = paper_replicator_game(), "replicator2"
    elif name == "rps_lossless":
        return "replicator1", linear_game(rock_paper_scissors()), dyn.DynamicState(np.array([0.5, 0.25, 0.25]))
    else:
        raise UnknownScenario(name)
    eq = dyn.equilibrium(kind, game.xstar)
    return kind, game, dyn.DynamicState(_counterexample_x0(game.m, cfg.offset), eq.phat)


SCENARIOS = ("logit_counterexample", "replicator_counterexample", "rps_lossless")


@dataclass
class ScenarioResult:
    trajectory: Trajectory
    report: dict
    files: dict = field(default_factory=dict)


def run_scenario(name: str, cfg: ScenarioConfig | None = None, outdir=None) -> ScenarioResult:
    """Run a canned scenario; with ``outdir`` also write its CSV and JSON bundle."""
    if name not in SCENARIOS:
        raise UnknownScenario(name)
    cfg = cfg or ScenarioConfig()
    kind, game, init = _scenario_setup(name, cfg)
    traj = integrate(kind, game, init, None, cfg.integrator)
    traj.metadata["scenario"] = name
    eq = dyn.equilibrium(kind, game.xstar)
    inst = instability_metric(traj, eq)
    report = {
        "scenario": name,
        "dynamics": kind,
        "integrator": asdict(cfg.integrator),
        "initial_x": init.x,
        "samples": len(traj.times),
        "final_time": float(traj.times[-1]),
        "blowup": traj.blowup,
        "simplex_drift": traj.simplex_drift,
        "instability": inst.to_dict(),
    }
    if kind in dyn.SECOND_ORDER:
        report["logit_orientation"] = cfg.logit_orientation if kind == "logit2" else None
        report["linear_crosscheck"] = {}
        for mode in dyn.MODES:
            reduced = dyn.reduce_dynamics(dyn.linearize(kind, game.xstar, mode), game.N)
            report["linear_crosscheck"][mode] = linear_crosscheck(reduced, game.internal, +1).to_dict()
        report["verdict"] = inst.verdict
    else:
        residual = dyn.lossless_residual(traj, game.xstar)
        V = np.array([dyn.replicator_storage(x, game.xstar) for x in traj.x])
        report["lossless_residual"] = residual
        report["storage_range"] = [float(V.min()), float(V.max())]
        report["verdict"] = "Bounded" if not traj.blowup and np.all(np.isfinite(V)) else "Unbounded"
    result = ScenarioResult(traj, report)
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "trajectory": out / f"{name}_trajectory.csv",
            "simplex": out / f"{name}_simplex.csv",
            "report": out / f"{name}_report.json",
        }
        traj.to_csv(files["trajectory"])
        traj.simplex_csv(files["simplex"])
        io.write_json(files["report"], report)
        result.files = {k: str(v) for k, v in files.items()}
    return result


def with_integrator(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    """Copy of ``cfg`` with integrator fields replaced."""
    return replace(cfg, integrator=replace(cfg.integrator, **changes))
