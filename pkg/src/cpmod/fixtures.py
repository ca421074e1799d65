"""Bundled reference maps.

``ex26`` and ``ex27`` are pairs of equivalent maps ``M_2 -> L(C^2, C^4)`` and
``M_2 -> L(C^2, C^5)`` together with the partial isometries linking them;
the JSON files under ``data/`` are generated from these builders.
"""

from __future__ import annotations

import numpy as np

from cpmod.cpmaps import ModuleCPMap
from cpmod.problem import Problem


def ex26_maps() -> tuple[ModuleCPMap, ModuleCPMap]:
    c = np.sqrt(3) / 2

    def phi(a):
        return np.array([
            [c * a[0, 0], c * a[0, 1]],
            [c * a[1, 0], c * a[1, 1]],
            [0.5 * a[0, 0], -0.5 * a[0, 1]],
            [0.5 * a[1, 0], -0.5 * a[1, 1]],
        ])

    def psi(a):
        return np.array([
            [c * a[0, 0], c * a[0, 1]],
            [c * a[1, 0], c * a[1, 1]],
            [-0.5 * a[0, 0], 0.5 * a[0, 1]],
            [0.5 * a[1, 0], -0.5 * a[1, 1]],
        ])

    return ModuleCPMap.from_function(2, 2, 2, 4, phi), ModuleCPMap.from_function(2, 2, 2, 4, psi)


def ex26_partial_isometry() -> np.ndarray:
    return np.diag([1.0, 1.0, -1.0, 1.0]).astype(complex)


def ex27_maps() -> tuple[ModuleCPMap, ModuleCPMap]:
    r2, r3 = np.sqrt(2), np.sqrt(3)

    def phi(a):
        return np.array([
            [r2 * a[0, 0], 0],
            [0, r3 * a[1, 1]],
            [0, 0],
            [r2 * a[1, 0], 0],
            [0, r3 * a[0, 1]],
        ])

    def psi(a):
        return np.array([
            [a[0, 0], -a[1, 1]],
            [a[0, 0], a[1, 1]],
            [0, r3 * a[0, 1]],
            [r2 * a[1, 0], 0],
            [0, a[1, 1]],
        ])

    return ModuleCPMap.from_function(2, 2, 2, 5, phi), ModuleCPMap.from_function(2, 2, 2, 5, psi)


def ex27_partial_isometry() -> np.ndarray:
    h, t = np.sqrt(2) / 2, np.sqrt(3) / 3
    return np.array([
        [h, h, 0, 0, 0],
        [-t, t, 0, 0, t],
        [0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0],
        [0, 0, 1, 0, 0],
    ], dtype=complex)


def identity_map(n: int = 2) -> ModuleCPMap:
    """``x -> x`` on ``X = M_n`` with ``H = K = C^n``."""
    return ModuleCPMap.from_function(n, n, n, n, lambda x: x)


def block_doubled_map() -> ModuleCPMap:
    """``x -> diag(x, x)`` on ``X = M_2`` with ``H = K = C^4``."""
    return ModuleCPMap.from_function(2, 2, 4, 4, lambda x: np.kron(np.eye(2), x))


def ex26_problem() -> Problem:
    Phi, Psi = ex26_maps()
    return Problem(m=2, k=2, p=2, q=4, maps={"Phi": Phi, "Psi": Psi})


def ex27_problem() -> Problem:
    Phi, Psi = ex27_maps()
    return Problem(m=2, k=2, p=2, q=5, maps={"Phi": Phi, "Psi": Psi})
