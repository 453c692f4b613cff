"""Command-line entry point.

Exit codes: 0 success, 1 negative verdict, 2 usage or I/O error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, dynamics, io, lti, population, sim
from .destabilizer import construct_passive_destabilizer
from .errors import (
    AlreadyPassive,
    DimensionError,
    IllPosed,
    ModeUnavailable,
    NonInteriorState,
    NotStable,
    SingularResolvent,
    UnknownScenario,
)

OK, NEGATIVE, USAGE, NUMERIC = 0, 1, 2, 3
LOSSLESS_THRESHOLD = 1e-6


class UsageError(Exception):
    pass


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        sys.stdout.write(io.dumps(payload))
    else:
        print("\n".join(lines))


def _certificate_dict(c: lti.PassivityCertificate) -> dict:
    return {
        "verdict": c.verdict,
        "witness_freq": c.witness_freq,
        "min_real_eig": c.min_real_eig,
        "cayley_norm": c.cayley_norm,
        "hurwitz": c.hurwitz,
        "conflict": c.conflict,
        "note": c.note,
    }


# ---------------------------------------------------------------- commands --


def cmd_analyze(args) -> int:
    G = io.load_system(args.system)
    grid = lti.frequency_grid(args.grid_points) if args.grid_points else None
    cert = lti.is_passive(G, grid)
    out = {"n": G.n, "inputs": G.inputs, "outputs": G.outputs, "hurwitz": lti.is_hurwitz(G)}
    out["spectral_abscissa"] = lti.spectral_abscissa(G) if G.n else None
    if out["hurwitz"]:
        h = lti.hinf_norm(G)
        out["hinf_norm"], out["hinf_peak_freq"] = h.norm, h.peak_freq
    out["passivity"] = _certificate_dict(cert)
    lines = [f"verdict: {cert.verdict}", f"hurwitz: {out['hurwitz']}"]
    if "hinf_norm" in out:
        lines.append(f"hinf norm: {out['hinf_norm']:.12g} at w = {out['hinf_peak_freq']:.12g}")
    lines.append(f"min eig(G + G*): {cert.min_real_eig:.6g} at w = {cert.witness_freq:.6g}")
    _emit(args, out, lines)
    return OK if cert.passive else NEGATIVE


def cmd_destabilize(args) -> int:
    G = io.load_system(args.system)
    try:
        R, omega0, rep = construct_passive_destabilizer(G, omega0_rule=args.omega0_rule)
    except AlreadyPassive as exc:
        _emit(args, {"verdict": "AlreadyPassive", "detail": str(exc)}, [f"AlreadyPassive: {exc}"])
        return NEGATIVE
    except NotStable as exc:
        _emit(args, {"verdict": "NotStable", "detail": str(exc)}, [f"NotStable: {exc}"])
        return NEGATIVE
    report = {
        "verdict": "Destabilized",
        "method": rep.method,
        "omega0": omega0,
        "sigma1": rep.sigma1,
        "degenerate_peak": rep.degenerate_peak,
        "margin": rep.margin,
        "det_I_plus_S_delta": rep.det_I_plus_S_delta,
        "det_RG_plus_I": rep.det_RG_plus_I,
        "R_certificate": _certificate_dict(rep.r_certificate),
        "closed_loop_ill_posed": rep.closed_loop_ill_posed,
        "notes": list(rep.notes),
    }
    if rep.closed_loop is not None:
        cl = rep.closed_loop
        report["closed_loop"] = {
            "eigenvalues": [[e.real, e.imag] for e in cl.eigenvalues],
            "max_real": cl.max_real,
            "distance_to_jw0": cl.distance_to_jw0,
            "unstable": cl.unstable,
        }
    if args.out:
        io.save_system(args.out, R)
    if args.report:
        io.write_json(args.report, report)
    lines = [f"method: {rep.method}", f"omega0: {omega0:.12g}", f"R: {rep.r_certificate.verdict}"]
    if rep.closed_loop is not None:
        near = rep.closed_loop.eigenvalues[np.argsort(np.abs(np.abs(rep.closed_loop.eigenvalues.imag) - omega0))[:2]]
        lines.append("closed-loop poles near jw0: " + ", ".join(f"{e:.9g}" for e in near))
    _emit(args, report, lines)
    return OK


def cmd_check_game(args) -> int:
    game = io.load_game(args.game)
    cert = population.check_game_antipassive(game)
    N = game.N
    D = N @ game.internal.D @ N.T
    static = population.StaticGame(lambda x: game.pstar + D @ (x - game.xstar), lambda x: D, game.m)
    stable = population.check_stable_game(static, population.simplex_samples(game.m, args.samples, args.seed))
    out = {
        "verdict": cert.verdict,
        "antipassive": _certificate_dict(cert.antipassive),
        "passive": _certificate_dict(cert.passive),
        "feedthrough_stable_game": {"verdict": stable.verdict, "worst_eig": stable.worst_eig, "worst_x": stable.worst_x, "worst_z": stable.worst_z},
    }
    lines = [
        f"verdict: {cert.verdict}",
        f"X -> -P: {cert.antipassive.verdict}",
        f"X -> P: {cert.passive.verdict}",
        f"static part: {stable.verdict} (worst eig {stable.worst_eig:.6g})",
    ]
    _emit(args, out, lines)
    return OK if cert.is_antipassive else NEGATIVE


def cmd_linearize(args) -> int:
    xstar = population.uniform(args.m) if args.xstar is None else args.xstar
    if args.xstar is not None and xstar.size != args.m:
        raise UsageError("--xstar length must equal --m")
    lin = dynamics.linearize(args.dynamics, xstar, args.mode)
    if args.out:
        io.save_lin(args.out, lin)
    _emit(args, io.lin_to_dict(lin), [f"linearized {lin.kind} ({lin.mode}) at m = {lin.m}"])
    return OK


def cmd_reduce(args) -> int:
    red = dynamics.reduce_dynamics(io.load_lin(args.lin))
    if args.out:
        io.save_system(args.out, red)
    _emit(args, io.system_to_dict(red), [f"reduced system: {red.n} states, {red.inputs} inputs"])
    return OK


def _scenario_cfg(args) -> sim.ScenarioConfig:
    integ = sim.IntegratorConfig(method=args.method, dt=args.dt, T=args.T, record_stride=args.stride)
    return sim.ScenarioConfig(integrator=integ, logit_orientation=args.logit_orientation)


def cmd_simulate(args) -> int:
    if args.scenario:
        res = sim.run_scenario(args.scenario, _scenario_cfg(args), args.out)
        _emit(args, res.report, [f"{args.scenario}: {res.report['verdict']}"] + [f"wrote {p}" for p in res.files.values()])
        return OK
    if not (args.dynamics and args.game and args.x0 is not None):
        raise UsageError("give --scenario, or all of --dynamics, --game and --x0")
    game = io.load_game(args.game)
    eq = dynamics.equilibrium(args.dynamics, game.xstar)
    phat0 = args.phat0 if args.phat0 is not None else eq.phat
    cfg = sim.IntegratorConfig(method=args.method, dt=args.dt, T=args.T, record_stride=args.stride)
    traj = sim.integrate(args.dynamics, game, dynamics.DynamicState(args.x0, phat0), None, cfg)
    inst = sim.instability_metric(traj, eq)
    report = {"dynamics": args.dynamics, "blowup": traj.blowup, "simplex_drift": traj.simplex_drift, "instability": inst.to_dict()}
    lines = [f"verdict: {inst.verdict}"]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        traj.to_csv(out / "trajectory.csv")
        if game.m == 3:
            traj.simplex_csv(out / "simplex.csv")
        io.write_json(out / "report.json", report)
        lines.append(f"wrote {out}")
    _emit(args, report, lines)
    return OK


def cmd_reproduce(args) -> int:
    names = sim.SCENARIOS if args.all else args.scenario
    if not names:
        raise UsageError("give --all or at least one --scenario")
    cfg = _scenario_cfg(args)
    summary = {}
    for name in names:
        res = sim.run_scenario(name, cfg, args.out)
        summary[name] = {"verdict": res.report["verdict"], "files": res.files}
    _emit(args, summary, [f"{k}: {v['verdict']}" for k, v in summary.items()])
    return OK


def cmd_lossless_check(args) -> int:
    game = io.load_game(args.game) if args.game else population.linear_game(population.rock_paper_scissors())
    x0 = args.x0 if args.x0 is not None else np.array([0.5, 0.25, 0.25])
    cfg = sim.IntegratorConfig(dt=args.dt, T=args.T)
    traj = sim.integrate("replicator1", game, dynamics.DynamicState(x0), None, cfg)
    residual = dynamics.lossless_residual(traj, game.xstar)
    ok = residual <= args.threshold and not traj.blowup
    _emit(args, {"lossless_residual": residual, "threshold": args.threshold, "lossless": ok}, [f"residual: {residual:.3e} ({'ok' if ok else 'exceeds threshold'})"])
    return OK if ok else NEGATIVE


def cmd_version(args) -> int:
    _emit(args, {"version": __version__}, [__version__])
    return OK


# ------------------------------------------------------------------ parser --


def _add_integrator(p: argparse.ArgumentParser, T: float = 100.0) -> None:
    p.add_argument("--method", choices=(sim.RK4, sim.RK45), default=sim.RK4)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--T", type=float, default=T)
    p.add_argument("--stride", type=int, default=1, help="record every k-th step")
    p.add_argument("--logit-orientation", choices=("antipassive", "literal"), default="antipassive")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    parser = argparse.ArgumentParser(prog="antipassive", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="stability, H-infinity norm and passivity of a system")
    p.add_argument("--system", required=True)
    p.add_argument("--grid-points", type=int, help=f"frequency grid size (default from ${lti.GRID_ENV} or {lti.DEFAULT_GRID_POINTS})")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("destabilize", parents=[common], help="build a passive destabilizing feedback")
    p.add_argument("--system", required=True)
    p.add_argument("--out", help="where to write R as system JSON")
    p.add_argument("--report", help="where to write the report JSON")
    p.add_argument("--omega0-rule", choices=("witness", "peak"), default="witness")
    p.set_defaults(func=cmd_destabilize)

    p = sub.add_parser("check-game", parents=[common], help="anti-passivity certificate of a higher-order game")
    p.add_argument("--game", required=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_game)

    p = sub.add_parser("linearize", parents=[common], help="linearize a second-order dynamic")
    p.add_argument("--dynamics", choices=dynamics.SECOND_ORDER, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--mode", choices=dynamics.MODES, default=dynamics.PAPER)
    p.add_argument("--xstar", type=_vector)
    p.add_argument("--out")
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("reduce", parents=[common], help="tangent-space reduction of a linearization")
    p.add_argument("--lin", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("simulate", parents=[common], help="simulate a scenario or a custom loop")
    p.add_argument("--scenario", choices=sim.SCENARIOS)
    p.add_argument("--dynamics", choices=dynamics.KINDS)
    p.add_argument("--game")
    p.add_argument("--x0", type=_vector)
    p.add_argument("--phat0", type=_vector)
    p.add_argument("--out", help="output directory")
    _add_integrator(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", parents=[common], help="regenerate scenario bundles")
    p.add_argument("--all", action="store_true")
    p.add_argument("--scenario", action="append", choices=sim.SCENARIOS)
    p.add_argument("--out", default="results")
    _add_integrator(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("lossless-check", parents=[common], help="storage balance of first-order replicator")
    p.add_argument("--game", help="game JSON (default: rock-paper-scissors)")
    p.add_argument("--x0", type=_vector)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--T", type=float, default=50.0)
    p.add_argument("--threshold", type=float, default=LOSSLESS_THRESHOLD)
    p.set_defaults(func=cmd_lossless_check)

    p = sub.add_parser("version", parents=[common], help="print the package version")
    p.set_defaults(func=cmd_version)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (OSError, json.JSONDecodeError, KeyError, DimensionError, ModeUnavailable, UnknownScenario, NonInteriorState, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (IllPosed, SingularResolvent, NotStable, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC


if __name__ == "__main__":
    sys.exit(main())
