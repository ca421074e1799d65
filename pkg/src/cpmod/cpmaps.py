"""Completely positive maps on ``M_m`` and on the module ``M_{k x m}``.

Maps are stored by their values on matrix units:

* :class:`CPMap` keeps ``images[s, t] = phi(E_st)`` with shape ``(m, m, p, p)``.
* :class:`ModuleCPMap` keeps ``images[r, s] = Phi(E^{(rs)})`` with shape
  ``(k, m, q, p)``.

Array indices are 0-based; user-facing labels (``E_12`` and friends) are
1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cpmod.errors import NotAModuleCPMap, NotCP, NotInCommutant, NotPSD, ShapeMismatch
from cpmod.modspace import HilbertModule, ModuleElement
from cpmod.numerics import (
    DEFAULT_TOL,
    Tolerance,
    adjoint,
    gram_factor,
    is_psd,
    max_abs,
    numerical_rank,
)


def _frozen(arr, ndim: int) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    if out.ndim != ndim:
        raise ShapeMismatch(f"expected a {ndim}-d array, got shape {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CPMap:
    """A linear map ``phi: M_m -> L(C^p)`` given on matrix units."""

    images: np.ndarray = field(repr=False)

    def __post_init__(self):
        images = _frozen(self.images, 4)
        m, m2, p, p2 = images.shape
        if m != m2 or p != p2:
            raise ShapeMismatch(f"CPMap images need shape (m, m, p, p), got {images.shape}")
        object.__setattr__(self, "images", images)

    @property
    def m(self) -> int:
        return self.images.shape[0]

    @property
    def p(self) -> int:
        return self.images.shape[2]

    def __call__(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        return np.einsum("st,stuv->uv", a, self.images)

    def __repr__(self):
        return f"CPMap(m={self.m}, p={self.p})"

    @classmethod
    def from_function(cls, m: int, p: int, f) -> "CPMap":
        images = np.zeros((m, m, p, p), dtype=complex)
        for s in range(m):
            for t in range(m):
                E = np.zeros((m, m), dtype=complex)
                E[s, t] = 1.0
                images[s, t] = f(E)
        return cls(images)


@dataclass(frozen=True)
class ModuleCPMap:
    """A linear map ``Phi: M_{k x m} -> L(C^p, C^q)`` given on matrix units.

    Whether it is completely positive in the module sense is decided by
    :func:`validate_module_cp`; construction only checks shapes.
    """

    images: np.ndarray = field(repr=False)

    def __post_init__(self):
        images = _frozen(self.images, 4)
        object.__setattr__(self, "images", images)

    @property
    def module(self) -> HilbertModule:
        return HilbertModule(self.images.shape[0], self.images.shape[1])

    @property
    def k(self) -> int:
        return self.images.shape[0]

    @property
    def m(self) -> int:
        return self.images.shape[1]

    @property
    def q(self) -> int:
        return self.images.shape[2]

    @property
    def p(self) -> int:
        return self.images.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        """``(k, m, p, q)``."""
        return (self.k, self.m, self.p, self.q)

    def __call__(self, x) -> np.ndarray:
        if isinstance(x, ModuleElement):
            x = x.value
        x = np.asarray(x, dtype=complex)
        return np.einsum("rs,rsij->ij", x, self.images)

    def __repr__(self):
        return f"ModuleCPMap(k={self.k}, m={self.m}, p={self.p}, q={self.q})"

    def __mul__(self, c) -> "ModuleCPMap":
        return ModuleCPMap(c * self.images)

    __rmul__ = __mul__

    def compose_left(self, U: np.ndarray) -> "ModuleCPMap":
        """``x -> U Phi(x)``."""
        return ModuleCPMap(np.einsum("ab,rsbj->rsaj", U, self.images))

    def image_vectors(self) -> np.ndarray:
        """Columns ``Phi(E^{(rs)}) e_u`` ordered by ``(r, s, u)``; shape ``(q, k*m*p)``."""
        return self.images.transpose(2, 0, 1, 3).reshape(self.q, -1)

    @classmethod
    def from_function(cls, k: int, m: int, p: int, q: int, f) -> "ModuleCPMap":
        images = np.zeros((k, m, q, p), dtype=complex)
        for r in range(k):
            for s in range(m):
                E = np.zeros((k, m), dtype=complex)
                E[r, s] = 1.0
                images[r, s] = f(E)
        return cls(images)


@dataclass(frozen=True)
class PhiStinespring:
    """Minimal Stinespring dilation ``phi(a) = V^* pi(a) V``."""

    pi_images: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "pi_images", _frozen(self.pi_images, 4))
        object.__setattr__(self, "V", _frozen(self.V, 2))

    @property
    def d(self) -> int:
        return self.V.shape[0]

    @property
    def m(self) -> int:
        return self.pi_images.shape[0]

    @property
    def p(self) -> int:
        return self.V.shape[1]

    def pi(self, a) -> np.ndarray:
        return np.einsum("st,stij->ij", np.asarray(a, dtype=complex), self.pi_images)

    def __repr__(self):
        return f"PhiStinespring(m={self.m}, p={self.p}, d={self.d})"


@dataclass(frozen=True)
class ValidationReport:
    is_valid: bool
    phi: CPMap
    residual: float
    choi_min_eigenvalue: float


def choi(phi: CPMap) -> np.ndarray:
    """Block matrix whose ``(s, t)`` block is ``phi(E_st)``."""
    m, p = phi.m, phi.p
    return phi.images.transpose(0, 2, 1, 3).reshape(m * p, m * p)


def is_completely_positive(phi: CPMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    C = choi(phi)
    if max_abs(C - adjoint(C)) > tol.eq_abs_tol:
        return False
    return is_psd(C, tol)


def _underlying_candidate(Phi: ModuleCPMap) -> tuple[CPMap, float]:
    # phi(E_st) := Phi(E^{(1s)})^* Phi(E^{(1t)}); every other basis pair is a
    # consistency check, and all of them at once is ``M^*M = I_k (x) Choi``.
    k, m, p = Phi.k, Phi.m, Phi.p
    first_row = Phi.images[0]
    images = np.einsum("sji,tjk->stik", first_row.conj(), first_row)
    phi = CPMap(images)
    M = Phi.image_vectors()
    expected = np.kron(np.eye(k), choi(phi))
    residual = max_abs(adjoint(M) @ M - expected) if M.size else 0.0
    return phi, residual


def derive_underlying(Phi: ModuleCPMap, tol: Tolerance = DEFAULT_TOL) -> tuple[CPMap, float]:
    """Recover the CP map ``phi`` with ``Phi(x)^* Phi(y) = phi(<x, y>)``.

    Returns:
        ``(phi, residual)``, the residual being the largest entrywise
        deviation of ``Phi(x)^* Phi(y) - phi(<x, y>)`` over basis pairs.

    Raises:
        NotAModuleCPMap: if the residual exceeds ``eq_abs_tol``.
    """
    phi, residual = _underlying_candidate(Phi)
    if residual > tol.eq_abs_tol:
        raise NotAModuleCPMap(f"no underlying map: consistency residual {residual:.3e}")
    return phi, residual


def validate_module_cp(Phi: ModuleCPMap, tol: Tolerance = DEFAULT_TOL) -> ValidationReport:
    phi, residual = _underlying_candidate(Phi)
    C = choi(phi)
    lam = float(np.linalg.eigvalsh((C + adjoint(C)) / 2)[0]) if C.size else 0.0
    ok = residual <= tol.eq_abs_tol and is_completely_positive(phi, tol)
    return ValidationReport(ok, phi, residual, lam)


def is_nondegenerate_map(Phi: ModuleCPMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff the vectors ``Phi(E_i) e_j`` span ``C^q``.

    Only the output-side condition is imposed; there is no separate
    requirement on ``H``.
    """
    return numerical_rank(Phi.image_vectors(), tol) == Phi.q


def _gns(phi: CPMap, tol: Tolerance) -> tuple[PhiStinespring, np.ndarray]:
    """GNS dilation of ``phi`` plus the map from ``H_phi`` back to ``A (x) H``."""
    m, p = phi.m, phi.p
    # Gram on A (x) H, basis E_st (x) e_u indexed (s, t, u):
    # <E_st e_u, E_s't' e_v> = delta_ss' phi(E_tt')_uv
    G = np.kron(np.eye(m), choi(phi))
    Q, Q_plus = gram_factor(G, tol)
    d = Q.shape[0]
    pi_images = np.zeros((m, m, d, d), dtype=complex)
    for a in range(m):
        for b in range(m):
            E = np.zeros((m, m))
            E[a, b] = 1.0
            pi_images[a, b] = Q @ np.kron(E, np.eye(m * p)) @ Q_plus
    unit = np.kron(np.eye(m).reshape(m * m, 1), np.eye(p))
    return PhiStinespring(pi_images, Q @ unit), Q_plus


def gns_stinespring(phi: CPMap, tol: Tolerance = DEFAULT_TOL) -> PhiStinespring:
    """Minimal Stinespring dilation of ``phi`` by the GNS quotient of ``A (x) H``.

    ``H_phi`` is the range of the Gram matrix, ``pi`` is induced by left
    multiplication on the algebra factor and ``V h`` is the class of
    ``1 (x) h``.

    Raises:
        NotCP: if ``phi`` is not completely positive.
    """
    if not is_completely_positive(phi, tol):
        raise NotCP("Choi matrix is not positive semidefinite")
    return _gns(phi, tol)[0]


def commutator_residual(D: PhiStinespring, T: np.ndarray) -> float:
    T = np.asarray(T, dtype=complex)
    if D.d == 0:
        return 0.0
    return max(max_abs(T @ P - P @ T) for P in D.pi_images.reshape(D.m * D.m, D.d, D.d))


def arveson_compress(D: PhiStinespring, T: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> CPMap:
    """``phi_T(a) = V^* T pi(a) V`` for ``T`` positive in the commutant of ``pi(A)``.

    Raises:
        NotInCommutant: if ``T`` fails to commute with some ``pi(E_st)``.
        NotPSD: if ``T`` is not positive.
    """
    T = np.asarray(T, dtype=complex)
    if T.shape != (D.d, D.d):
        raise ShapeMismatch(f"T has shape {T.shape}, dilation space has dimension {D.d}")
    if commutator_residual(D, T) > tol.eq_abs_tol:
        raise NotInCommutant(f"commutator residual {commutator_residual(D, T):.3e}")
    if not is_psd(T, tol):
        raise NotPSD("T is not positive semidefinite")
    images = np.einsum("ia,ij,stjk,kb->stab", D.V.conj(), T, D.pi_images, D.V)
    return CPMap(images)
