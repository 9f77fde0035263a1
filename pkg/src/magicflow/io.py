"""State files, report files and trace files.

A state file is JSON::

    {"format_version": 1, "d": 7, "n": 2, "repr": "dense" | "char",
     "data": [[re, im], ...], "meta": {...}}

``data`` lists the d^n x d^n matrix (or char table, indexed [P, Q]) in
row-major order.  ``meta`` is optional build metadata such as the builder and seed.
Both representations are accepted by every reader.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DimensionMismatch, InvalidState
from .operators import CharFunction, DensityOperator, char_function, inverse_char

STATE_FORMAT_VERSION = 1
REPRS = ("dense", "char")


def _pairs(a: np.ndarray) -> list[list[float]]:
    flat = np.asarray(a, dtype=complex).reshape(-1)
    # +0.0 folds negative zeros so equal states serialize identically
    return [[float(z.real) + 0.0, float(z.imag) + 0.0] for z in flat]


def state_to_dict(obj: DensityOperator | CharFunction, repr: str = "dense",
                  meta: dict[str, Any] | None = None) -> dict[str, Any]:
    if repr not in REPRS:
        raise ValueError(f"repr must be one of {REPRS}, got {repr!r}")
    if isinstance(obj, CharFunction):
        table = obj.values if repr == "char" else inverse_char(obj).matrix
    else:
        table = obj.matrix if repr == "dense" else char_function(obj).values
    out = {"format_version": STATE_FORMAT_VERSION, "d": obj.d, "n": obj.n,
           "repr": repr, "data": _pairs(table)}
    if meta:
        out["meta"] = meta
    return out


def dumps_state(obj, repr: str = "dense", meta: dict[str, Any] | None = None) -> str:
    return json.dumps(state_to_dict(obj, repr, meta), sort_keys=True) + "\n"


def write_state(path, obj, repr: str = "dense", meta: dict[str, Any] | None = None) -> None:
    Path(path).write_text(dumps_state(obj, repr, meta))


def _table(data: dict[str, Any]) -> tuple[np.ndarray, int, int, str]:
    try:
        d, n, rep, raw = int(data["d"]), int(data["n"]), data["repr"], data["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidState(f"malformed state file: {exc}") from None
    version = data.get("format_version", STATE_FORMAT_VERSION)
    if version != STATE_FORMAT_VERSION:
        raise InvalidState(f"unsupported state format_version {version}")
    if rep not in REPRS:
        raise InvalidState(f"unknown repr {rep!r}")
    arr = np.asarray(raw, dtype=float)
    D = d**n
    if arr.shape != (D * D, 2):
        raise DimensionMismatch(f"expected {D * D} complex pairs for d={d}, n={n}, got shape {arr.shape}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(D, D), n, d, rep


def state_from_dict(data: dict[str, Any]) -> DensityOperator:
    """Validated density operator from either representation."""
    table, n, d, rep = _table(data)
    if rep == "char":
        table = inverse_char(CharFunction(table, n, d)).matrix
    return DensityOperator(table, n, d)


def char_from_dict(data: dict[str, Any]) -> CharFunction:
    table, n, d, rep = _table(data)
    if rep == "char":
        return CharFunction(table, n, d)
    return char_function(DensityOperator(table, n, d))


def read_state(path) -> DensityOperator:
    return state_from_dict(_load(path))


def read_char(path) -> CharFunction:
    return char_from_dict(_load(path))


def read_meta(path) -> dict[str, Any]:
    return _load(path).get("meta", {})


def _load(path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidState(f"{path}: not valid JSON ({exc})") from None


def write_text(path, text: str) -> None:
    Path(path).write_text(text)
