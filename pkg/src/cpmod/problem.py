"""Problem and element files (JSON, format tag ``cpmod/1``).

A problem file::

    {
      "format": "cpmod/1",
      "algebra": {"m": 2},
      "module": {"k": 2},
      "H_dim": 2,
      "K_dim": 4,
      "maps": {"Phi": {"E_11": [[[re, im], ...], ...], "E_12": ..., ...}}
    }

Each map lists all ``k*m`` images ``Phi(E^{(rs)})`` under 1-based row-major
keys ``E_rs`` (``E_r_s`` when an index exceeds 9), each a ``K_dim x H_dim``
row-major matrix of ``[re, im]`` pairs. An element file holds a commutant
element ``T (+) S``::

    {"format": "cpmod/1", "T": <matrix>, "S": <matrix>}

Unknown fields are rejected. Floats are written with ``repr`` precision, so
loading a dumped file reproduces every matrix bit for bit.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from cpmod.cpmaps import ModuleCPMap
from cpmod.errors import ProblemFileError

FORMAT_TAG = "cpmod/1"

_PROBLEM_KEYS = {"format", "algebra", "module", "H_dim", "K_dim", "maps"}
_ELEMENT_KEYS = {"format", "T", "S"}
_KEY_RE = re.compile(r"^E_(?:(\d)(\d)|(\d+)_(\d+))$")


@dataclass
class Problem:
    m: int
    k: int
    p: int
    q: int
    maps: dict[str, ModuleCPMap] = field(default_factory=dict)

    def get(self, name: str) -> ModuleCPMap:
        try:
            return self.maps[name]
        except KeyError:
            raise ProblemFileError(f"no map named {name!r}; available: {sorted(self.maps)}") from None


def basis_key(r: int, s: int) -> str:
    return f"E_{r}{s}" if r < 10 and s < 10 else f"E_{r}_{s}"


def _parse_key(key: str) -> tuple[int, int]:
    match = _KEY_RE.match(key)
    if not match:
        raise ProblemFileError(f"bad basis key {key!r}; expected E_rs")
    groups = [g for g in match.groups() if g is not None]
    return int(groups[0]), int(groups[1])


def encode_matrix(M: np.ndarray) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def decode_matrix(data: Any, shape: tuple[int, int], where: str) -> np.ndarray:
    rows, cols = shape
    if not isinstance(data, list) or len(data) != rows:
        raise ProblemFileError(f"{where}: expected {rows} rows")
    out = np.zeros(shape, dtype=complex)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != cols:
            raise ProblemFileError(f"{where}: row {i + 1} must have {cols} entries")
        for j, z in enumerate(row):
            if (
                not isinstance(z, list)
                or len(z) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in z)
            ):
                raise ProblemFileError(f"{where}: entry ({i + 1}, {j + 1}) must be a [re, im] pair")
            out[i, j] = complex(z[0], z[1])
    return out


def _positive_int(value: Any, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ProblemFileError(f"{where} must be a positive integer")
    return value


def _check_keys(obj: Any, allowed: set, where: str):
    if not isinstance(obj, dict):
        raise ProblemFileError(f"{where} must be an object")
    unknown = set(obj) - allowed
    missing = allowed - set(obj)
    if unknown:
        raise ProblemFileError(f"{where}: unknown fields {sorted(unknown)}")
    if missing:
        raise ProblemFileError(f"{where}: missing fields {sorted(missing)}")


def problem_from_dict(data: Any) -> Problem:
    _check_keys(data, _PROBLEM_KEYS, "problem")
    if data["format"] != FORMAT_TAG:
        raise ProblemFileError(f"unsupported format {data['format']!r}; expected {FORMAT_TAG!r}")
    _check_keys(data["algebra"], {"m"}, "algebra")
    _check_keys(data["module"], {"k"}, "module")
    m = _positive_int(data["algebra"]["m"], "algebra.m")
    k = _positive_int(data["module"]["k"], "module.k")
    p = _positive_int(data["H_dim"], "H_dim")
    q = _positive_int(data["K_dim"], "K_dim")
    if not isinstance(data["maps"], dict):
        raise ProblemFileError("maps must be an object")

    expected = {basis_key(r, s) for r in range(1, k + 1) for s in range(1, m + 1)}
    maps = {}
    for name, payload in data["maps"].items():
        if not isinstance(payload, dict):
            raise ProblemFileError(f"map {name!r} must be an object")
        images = np.zeros((k, m, q, p), dtype=complex)
        seen = set()
        for key, matrix in payload.items():
            r, s = _parse_key(key)
            if not (1 <= r <= k and 1 <= s <= m):
                raise ProblemFileError(f"map {name!r}: basis key {key!r} out of range for k={k}, m={m}")
            images[r - 1, s - 1] = decode_matrix(matrix, (q, p), f"map {name!r}, {key}")
            seen.add(basis_key(r, s))
        if seen != expected:
            raise ProblemFileError(f"map {name!r}: missing images {sorted(expected - seen)}")
        maps[name] = ModuleCPMap(images)
    return Problem(m, k, p, q, maps)


def problem_to_dict(problem: Problem) -> dict:
    return {
        "format": FORMAT_TAG,
        "algebra": {"m": problem.m},
        "module": {"k": problem.k},
        "H_dim": problem.p,
        "K_dim": problem.q,
        "maps": {name: map_payload(Phi) for name, Phi in problem.maps.items()},
    }


def map_payload(Phi: ModuleCPMap) -> dict:
    return {
        basis_key(r + 1, s + 1): encode_matrix(Phi.images[r, s])
        for r in range(Phi.k)
        for s in range(Phi.m)
    }


def _read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ProblemFileError(f"{path}: {exc.strerror or exc}") from exc


def load_problem(path: str | Path) -> Problem:
    return problem_from_dict(_read_json(path))


def _depth(obj: Any) -> int:
    if isinstance(obj, list):
        return 1 + max((_depth(v) for v in obj), default=0)
    if isinstance(obj, dict):
        return 99
    return 0


def _pretty(obj: Any, level: int) -> str:
    pad = "  " * (level + 1)
    end = "  " * level
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(key)}: {_pretty(value, level + 1)}" for key, value in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list) and _depth(obj) > 2 and obj:
        return "[\n" + ",\n".join(pad + _pretty(v, level + 1) for v in obj) + "\n" + end + "]"
    return json.dumps(obj, allow_nan=False)


def dumps(obj: Any) -> str:
    """Deterministic JSON with one matrix row per line."""
    return _pretty(obj, 0) + "\n"


def save_problem(problem: Problem, path: str | Path):
    Path(path).write_text(dumps(problem_to_dict(problem)), encoding="utf-8")


def element_from_dict(data: Any, dH: int, dK: int) -> tuple[np.ndarray, np.ndarray]:
    _check_keys(data, _ELEMENT_KEYS, "element")
    if data["format"] != FORMAT_TAG:
        raise ProblemFileError(f"unsupported format {data['format']!r}; expected {FORMAT_TAG!r}")
    T = decode_matrix(data["T"], (dH, dH), "element T")
    S = decode_matrix(data["S"], (dK, dK), "element S")
    return T, S


def element_to_dict(T: np.ndarray, S: np.ndarray) -> dict:
    return {"format": FORMAT_TAG, "T": encode_matrix(T), "S": encode_matrix(S)}


def load_element(path: str | Path, dH: int, dK: int) -> tuple[np.ndarray, np.ndarray]:
    return element_from_dict(_read_json(path), dH, dK)


def fixture_path(name: str) -> Path:
    """Path of a bundled fixture such as ``"ex26.json"``."""
    return Path(str(resources.files("cpmod") / "data" / name))
