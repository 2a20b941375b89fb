"""JSON instance and result files, plus instance generators.

Instance files look like::

    {"n": 2, "Q": [[-2, 0], [0, 2]], "c": [0, 0], "A": [[0, -1]], "b": [0]}

An optional ``"offset"`` adds a constant to the objective; the QPS generator
needs it.  Floats are written with Python's shortest round-trip repr, so
parse -> serialize is bit-exact.
"""
from __future__ import annotations

import json
import re
from typing import Any, Dict, Optional

import numpy as np

from etrs.errors import BadOption, ETRSError, ParseError
from etrs.model import ProblemInstance, SolutionReport, validate_instance

__all__ = [
    "parse_instance", "load_instance", "instance_to_dict", "dumps",
    "result_to_dict", "random_instance", "qps_instance", "parse_matrix",
]


def _locate(text: str, key: str):
    """Line/column of the first occurrence of ``"key"`` in text, for diagnostics."""
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if m is None:
        return 1, 1
    line = text.count("\n", 0, m.start()) + 1
    col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
    return line, col


def _loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None


def _numeric(text, key, value, shape_desc):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        line, col = _locate(text, key)
        raise ParseError(f'"{key}" must be {shape_desc} of numbers', line, col) from None
    return arr


def parse_instance(text: str) -> ProblemInstance:
    data = _loads(text)
    if not isinstance(data, dict):
        raise ParseError("top-level value must be an object", 1, 1)
    for key in ("n", "Q", "c"):
        if key not in data:
            raise ParseError(f'missing key "{key}"', 1, 1)
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        line, col = _locate(text, "n")
        raise ParseError('"n" must be a positive integer', line, col)
    Q = _numeric(text, "Q", data["Q"], "an n x n array")
    c = _numeric(text, "c", data["c"], "an array")
    A_raw = data.get("A", [])
    b_raw = data.get("b", [])
    A = _numeric(text, "A", A_raw, "an m x n array") if A_raw else np.zeros((0, n))
    b = _numeric(text, "b", b_raw, "an array") if b_raw else np.zeros(0)
    checks = [
        ("Q", Q.shape == (n, n), "n x n"),
        ("c", c.shape == (n,), "length n"),
        ("A", A.ndim == 2 and A.shape[1] == n, "m x n"),
        ("b", b.shape == (A.shape[0],), "length m"),
    ]
    for key, ok, want in checks:
        if not ok:
            line, col = _locate(text, key)
            raise ParseError(f'"{key}" must be {want}', line, col)
    offset = data.get("offset", 0.0)
    if not isinstance(offset, (int, float)) or isinstance(offset, bool):
        line, col = _locate(text, "offset")
        raise ParseError('"offset" must be a number', line, col)
    try:
        inst = ProblemInstance(Q, c, A, b, offset=float(offset))
        # checked only: the file's data is returned untouched so it round-trips
        validate_instance(inst)
    except ETRSError as exc:
        raise ParseError(str(exc), 1, 1) from None
    return inst


def load_instance(path) -> ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def parse_matrix(text: str) -> np.ndarray:
    """A bare square matrix, either as a JSON array or as an object with key "Q"."""
    data = _loads(text)
    if isinstance(data, dict):
        if "Q" not in data:
            raise ParseError('missing key "Q"', 1, 1)
        data = data["Q"]
    M = _numeric(text, "Q", data, "a square array")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParseError("matrix must be square", 1, 1)
    return M


def _floats(arr) -> list:
    return np.asarray(arr, dtype=float).tolist()


def instance_to_dict(inst: ProblemInstance) -> Dict[str, Any]:
    out = {
        "n": inst.n,
        "Q": _floats(inst.Q),
        "c": _floats(inst.c),
        "A": _floats(inst.A),
        "b": _floats(inst.b),
    }
    if inst.offset != 0.0:
        out["offset"] = float(inst.offset)
    return out


def dumps(obj: Dict[str, Any]) -> str:
    """Deterministic JSON: fixed key order as given, shortest round-trip floats."""
    return json.dumps(obj, allow_nan=False)


def result_to_dict(report: SolutionReport, dc: Optional[bool] = None,
                   newdc: Optional[bool] = None,
                   surrogate_value: Optional[float] = None) -> Dict[str, Any]:
    opt = report.optimal
    return {
        "status": report.status,
        "value": float(report.value) if opt else None,
        "x": _floats(report.x) if opt else [],
        "multiplier": None if report.multiplier is None else float(report.multiplier),
        "active_set": [int(i) for i in report.active_set],
        "trs0_solves": int(report.trs0_solves),
        "dc": dc,
        "newdc": report.newdc_holds if newdc is None else newdc,
        "surrogate_value": None if surrogate_value is None else float(surrogate_value),
    }


# -- generators -----------------------------------------------------------

def random_instance(n: int, m: int, seed: int) -> ProblemInstance:
    """Gaussian data around a random strictly interior point, so Slater holds."""
    if n < 1 or m < 0:
        raise BadOption("need n >= 1 and m >= 0")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    Q = 0.5 * (G + G.T)
    c = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    direction = rng.standard_normal(n)
    x0 = direction / np.linalg.norm(direction) * 0.5 * rng.uniform()
    b = A @ x0 + np.abs(rng.standard_normal(m))
    return ProblemInstance(Q, c, A, b)


def qps_instance(Q) -> ProblemInstance:
    """Standard quadratic program over the simplex, rewritten on the unit ball.

    min x'Qx over {x >= 0, e'x = 1} becomes, with x_n = 1 - e'y, a problem
    in y of dimension n-1 with constraints e'y <= 1 and -y <= 0 plus the
    (redundant) ball y'y <= 1.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise BadOption("QPS matrix must be square")
    n = Q.shape[0]
    if n < 2:
        raise BadOption("QPS reformulation needs n >= 2")
    Q = 0.5 * (Q + Q.T)
    p = n - 1
    # x = E y + e_n
    E = np.vstack([np.eye(p), -np.ones((1, p))])
    Qy = 2.0 * E.T @ Q @ E
    cy = 2.0 * E.T @ Q[:, -1]
    A = np.vstack([np.ones((1, p)), -np.eye(p)])
    b = np.concatenate([[1.0], np.zeros(p)])
    return ProblemInstance(Qy, cy, A, b, offset=float(Q[-1, -1]))
