"""The canonical finite-dimensional Hilbert C*-module.

``A = M_m(C)`` acts on the right of ``X = M_{k x m}(C)``, and the
``A``-valued inner product is ``<x, y> = x^* y``. Matrix units are indexed
from 1 in row-major order, here and in every file format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cpmod.errors import ModuleMismatch
from cpmod.numerics import DEFAULT_TOL, Tolerance, adjoint, numerical_rank


@dataclass(frozen=True)
class MatrixAlgebra:
    m: int

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError(f"algebra size must be >= 1, got {self.m}")

    @property
    def unit(self) -> np.ndarray:
        return np.eye(self.m, dtype=complex)

    def matrix_unit(self, s: int, t: int) -> np.ndarray:
        """``E_st`` with 1-based indices."""
        E = np.zeros((self.m, self.m), dtype=complex)
        E[s - 1, t - 1] = 1.0
        return E


@dataclass(frozen=True)
class HilbertModule:
    """``X = M_{k x m}(C)`` as a right Hilbert module over ``M_m(C)``."""

    k: int
    m: int

    def __post_init__(self):
        if int(self.k) < 1 or int(self.m) < 1:
            raise ValueError(f"module shape must be positive, got ({self.k}, {self.m})")

    @property
    def algebra(self) -> MatrixAlgebra:
        return MatrixAlgebra(self.m)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.k, self.m)

    @property
    def size(self) -> int:
        return self.k * self.m

    def element(self, value) -> "ModuleElement":
        return ModuleElement(self, value)

    def matrix_unit(self, r: int, s: int) -> np.ndarray:
        """``E^{(rs)}`` with 1-based indices."""
        E = np.zeros(self.shape, dtype=complex)
        E[r - 1, s - 1] = 1.0
        return E

    def basis_indices(self) -> list[tuple[int, int]]:
        return [(r, s) for r in range(1, self.k + 1) for s in range(1, self.m + 1)]


@dataclass(frozen=True)
class ModuleElement:
    module: HilbertModule
    value: np.ndarray = field(repr=False)

    def __post_init__(self):
        value = np.array(self.value, dtype=complex)
        if value.shape != self.module.shape:
            raise ModuleMismatch(f"element of shape {value.shape} does not belong to {self.module}")
        value.setflags(write=False)
        object.__setattr__(self, "value", value)


@dataclass(frozen=True)
class AlgebraElement:
    algebra: MatrixAlgebra
    value: np.ndarray = field(repr=False)

    def __post_init__(self):
        value = np.array(self.value, dtype=complex)
        if value.shape != (self.algebra.m, self.algebra.m):
            raise ModuleMismatch(f"element of shape {value.shape} does not belong to {self.algebra}")
        value.setflags(write=False)
        object.__setattr__(self, "value", value)


def module_inner(x: ModuleElement, y: ModuleElement) -> AlgebraElement:
    """``<x, y> = x^* y``; conjugate-linear in ``x``, linear in ``y``."""
    if x.module != y.module:
        raise ModuleMismatch(f"{x.module} vs {y.module}")
    return AlgebraElement(x.module.algebra, adjoint(x.value) @ y.value)


def right_action(x: ModuleElement, a: AlgebraElement) -> ModuleElement:
    if x.module.algebra != a.algebra:
        raise ModuleMismatch(f"{x.module} cannot be acted on by {a.algebra}")
    return ModuleElement(x.module, x.value @ a.value)


def module_norm(x: ModuleElement) -> float:
    """``||x|| = ||<x, x>||^{1/2}``."""
    return float(np.sqrt(np.linalg.norm(module_inner(x, x).value, 2)))


def matrix_unit_basis(X: HilbertModule) -> list[ModuleElement]:
    """Matrix units ``E^{(11)}, E^{(12)}, ...`` in row-major order."""
    return [ModuleElement(X, X.matrix_unit(r, s)) for r, s in X.basis_indices()]


def fullness_check(X: HilbertModule, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff the inner products of basis pairs span all of ``M_m``."""
    basis = matrix_unit_basis(X)
    products = [module_inner(x, y).value.reshape(-1) for x in basis for y in basis]
    return numerical_rank(products, tol, dim=X.m * X.m) == X.m * X.m
