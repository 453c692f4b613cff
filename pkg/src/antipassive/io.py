"""JSON formats for systems, games and linearizations.

Floats are written with 17 significant digits so every artifact re-loads to
the same doubles and re-serializes byte-identically.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .dynamics import LinearizedDynamics
from .errors import DimensionError
from .lti import StateSpaceSystem
from .population import HigherOrderGame


def _float(v: float) -> str:
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    if v == 0.0:
        return "0"  # drop the sign of -0.0, which would not survive a reload
    return format(v, ".17g")


def _emit(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, complex):
        return _emit([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows stay on one line to keep matrices readable
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_emit(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _emit(obj, indent, 0) + "\n"


def loads(text: str):
    return json.loads(text)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    return loads(Path(path).read_text())


# ----------------------------------------------------------------- systems --


def system_to_dict(sys: StateSpaceSystem) -> dict:
    return {"A": sys.A, "B": sys.B, "C": sys.C, "D": sys.D}


def _matrix(data, rows: int, cols: int, name: str) -> np.ndarray:
    M = np.array(data, dtype=float)
    if M.size == 0:
        return np.zeros((rows, cols))
    if M.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D array")
    return M


def system_from_dict(d: dict) -> StateSpaceSystem:
    try:
        D = np.atleast_2d(np.array(d["D"], dtype=float))
        A_raw = d["A"]
        B_raw, C_raw = d["B"], d["C"]
    except KeyError as exc:
        raise DimensionError(f"system JSON is missing {exc}") from exc
    p, m = D.shape
    A = np.array(A_raw, dtype=float)
    n = A.shape[0] if A.size else 0
    return StateSpaceSystem(
        _matrix(A_raw, n, n, "A"), _matrix(B_raw, n, m, "B"), _matrix(C_raw, p, n, "C"), D
    )


def load_system(path) -> StateSpaceSystem:
    return system_from_dict(read_json(path))


def save_system(path, sys: StateSpaceSystem) -> None:
    write_json(path, system_to_dict(sys))


# ------------------------------------------------------------------- games --


def game_to_dict(game: HigherOrderGame) -> dict:
    return {
        "Xstar": game.xstar,
        "Pstar": game.pstar,
        "internal": system_to_dict(game.internal),
        "m": game.m,
    }


def game_from_dict(d: dict) -> HigherOrderGame:
    game = HigherOrderGame(d["Xstar"], d["Pstar"], system_from_dict(d["internal"]))
    if "m" in d and int(d["m"]) != game.m:
        raise DimensionError("m disagrees with the length of Xstar")
    return game


def load_game(path) -> HigherOrderGame:
    return game_from_dict(read_json(path))


def save_game(path, game: HigherOrderGame) -> None:
    write_json(path, game_to_dict(game))


# --------------------------------------------------------- linearizations --


_LIN_FIELDS = ("xstar", "phat_star", "A_x", "beta", "A_p", "B_p")


def lin_to_dict(lin: LinearizedDynamics) -> dict:
    out = {"kind": lin.kind, "mode": lin.mode, "m": lin.m}
    out.update({k: getattr(lin, k) for k in _LIN_FIELDS})
    return out


def lin_from_dict(d: dict) -> LinearizedDynamics:
    arrays = {k: np.array(d[k], dtype=float) for k in _LIN_FIELDS}
    return LinearizedDynamics(kind=d["kind"], mode=d["mode"], **arrays)


def load_lin(path) -> LinearizedDynamics:
    return lin_from_dict(read_json(path))


def save_lin(path, lin: LinearizedDynamics) -> None:
    write_json(path, lin_to_dict(lin))
