"""Stinespring construction for module CP maps.

For a module CP map ``Phi: X -> L(H, K)`` with underlying ``phi`` the
construction returns a quintuple ``(pi_Phi, H_Phi, K_Phi, V_Phi, W_Phi)``:

* ``H_Phi`` and ``pi_phi`` come from the GNS dilation of ``phi``;
* ``K_Phi`` is the GNS quotient of ``X (x) H`` under
  ``<x (x) h, y (x) h'> = <h, phi(<x, y>) h'>``;
* ``pi_Phi(x)[a (x) h] = [x a (x) h]``, ``V_Phi h = [1 (x) h]``;
* ``W_Phi^*`` is the isometry ``[x (x) h] -> Phi(x) h`` from ``K_Phi`` into
  ``K``, so ``W_Phi`` is a coisometry and ``Phi(x) = W^* pi_Phi(x) V``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cpmod.cpmaps import (
    ModuleCPMap,
    PhiStinespring,
    _gns,
    _underlying_candidate,
    choi,
    validate_module_cp,
)
from cpmod.errors import NotAModuleCPMap, NotMinimal
from cpmod.numerics import (
    DEFAULT_TOL,
    Tolerance,
    adjoint,
    gram_factor,
    least_squares_intertwiner,
    max_abs,
    numerical_rank,
)


@dataclass(frozen=True)
class ModuleStinespring:
    """A Stinespring quintuple together with the underlying ``pi_phi``.

    Attributes:
        pi_phi: dilation of the underlying map on ``H_Phi``.
        piX_images: ``pi_Phi(E^{(rs)})`` stacked as ``(k, m, dK, dH)``.
        V: ``V_Phi`` of shape ``(dH, p)``.
        W: ``W_Phi`` of shape ``(dK, q)``.
    """

    pi_phi: PhiStinespring
    piX_images: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("piX_images", "V", "W"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dH(self) -> int:
        return self.V.shape[0]

    @property
    def dK(self) -> int:
        return self.W.shape[0]

    @property
    def k(self) -> int:
        return self.piX_images.shape[0]

    @property
    def m(self) -> int:
        return self.piX_images.shape[1]

    @property
    def p(self) -> int:
        return self.V.shape[1]

    @property
    def q(self) -> int:
        return self.W.shape[1]

    def piX(self, x) -> np.ndarray:
        return np.einsum("rs,rsij->ij", np.asarray(x, dtype=complex), self.piX_images)

    def piX_list(self) -> np.ndarray:
        return self.piX_images.reshape(self.k * self.m, self.dK, self.dH)

    def pi_phi_list(self) -> np.ndarray:
        return self.pi_phi.pi_images.reshape(self.m * self.m, self.dH, self.dH)

    def evaluate(self) -> ModuleCPMap:
        """The map ``x -> W^* pi_Phi(x) V`` on matrix units."""
        images = np.einsum("ia,rsij,jb->rsab", self.W.conj(), self.piX_images, self.V)
        return ModuleCPMap(images)

    def h_spanning_vectors(self) -> np.ndarray:
        """Columns ``pi_phi(E_st) V e_u``, ordered by ``(s, t, u)``."""
        return np.concatenate(list(self.pi_phi_list() @ self.V), axis=1)

    def k_spanning_vectors(self) -> np.ndarray:
        """Columns ``pi_Phi(E^{(rs)}) V e_u``, ordered by ``(r, s, u)``."""
        return np.concatenate(list(self.piX_list() @ self.V), axis=1)

    def __repr__(self):
        return f"ModuleStinespring(k={self.k}, m={self.m}, p={self.p}, q={self.q}, dH={self.dH}, dK={self.dK})"


@dataclass(frozen=True)
class UnitaryEquivalenceWitness:
    U1: np.ndarray = field(repr=False)
    U2: np.ndarray = field(repr=False)
    max_residual: float
    coisometry_residual: float = np.inf


@dataclass(frozen=True)
class QuintupleReport:
    """Residuals of every defining property of a constructed quintuple."""

    representation: float
    factorization: float
    coisometry: float
    phi_factorization: float
    homomorphism: float
    dH: int
    dK: int
    h_span_rank: int
    k_span_rank: int
    nondegenerate: bool

    def ok(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return (
            max(self.representation, self.factorization, self.coisometry,
                self.phi_factorization, self.homomorphism) <= tol.eq_abs_tol
            and self.h_span_rank == self.dH
            and self.k_span_rank == self.dK
            and self.nondegenerate
        )


def construct(Phi: ModuleCPMap, tol: Tolerance = DEFAULT_TOL) -> ModuleStinespring:
    """Stinespring quintuple of a module CP map.

    Raises:
        NotAModuleCPMap: if ``Phi`` fails :func:`validate_module_cp`.
    """
    report = validate_module_cp(Phi, tol)
    if not report.is_valid:
        raise NotAModuleCPMap(
            f"map is not module-CP (residual {report.residual:.3e}, "
            f"Choi min eigenvalue {report.choi_min_eigenvalue:.3e})"
        )
    k, m, p = Phi.k, Phi.m, Phi.p
    pi_phi, QH_plus = _gns(report.phi, tol)

    # Gram on X (x) H, basis E^{(rs)} (x) e_u indexed (r, s, u).
    QK, QK_plus = gram_factor(np.kron(np.eye(k), choi(report.phi)), tol)
    dK, dH = QK.shape[0], pi_phi.d

    piX = np.zeros((k, m, dK, dH), dtype=complex)
    for a in range(k):
        for b in range(m):
            E = np.zeros((k, m))
            E[a, b] = 1.0
            # E^{(ab)} E_st = delta_bs E^{(at)}
            piX[a, b] = QK @ np.kron(E, np.eye(m * p)) @ QH_plus
    W_adj = Phi.image_vectors() @ QK_plus
    return ModuleStinespring(pi_phi, piX, pi_phi.V, adjoint(W_adj))


def representation_residual(piX_images: np.ndarray, pi_phi_images: np.ndarray) -> float:
    """Largest entrywise deviation of ``pi(x)^* pi(y) - pi_phi(<x, y>)`` over basis pairs."""
    k, m = piX_images.shape[:2]
    worst = 0.0
    for r in range(k):
        for s in range(m):
            for r2 in range(k):
                for t in range(m):
                    lhs = adjoint(piX_images[r, s]) @ piX_images[r2, t]
                    rhs = pi_phi_images[s, t] if r == r2 else np.zeros_like(lhs)
                    worst = max(worst, max_abs(lhs - rhs))
    return worst


def check_representation(piX_images, pi_phi, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff ``pi_X(x)^* pi_X(y) = pi_A(<x, y>)`` on all basis pairs.

    ``pi_phi`` may be a :class:`PhiStinespring` or a raw ``(m, m, d, d)``
    array of images of the algebra's matrix units.
    """
    piX_images = np.asarray(piX_images, dtype=complex)
    images = pi_phi.pi_images if isinstance(pi_phi, PhiStinespring) else np.asarray(pi_phi, dtype=complex)
    k, m, dK, dH = piX_images.shape
    if images.shape != (m, m, dH, dH):
        return False
    return representation_residual(piX_images, images) <= tol.eq_abs_tol


def is_nondegenerate_representation(piX_images, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff ``[pi(X) H] = K`` and ``[pi(X)^* K] = H``."""
    piX_images = np.asarray(piX_images, dtype=complex)
    k, m, dK, dH = piX_images.shape
    ops = piX_images.reshape(k * m, dK, dH)
    forward = np.concatenate(list(ops), axis=1)
    backward = np.concatenate([adjoint(P) for P in ops], axis=1)
    return numerical_rank(forward, tol, dim=dK) == dK and numerical_rank(backward, tol, dim=dH) == dH


def homomorphism_residual(pi_phi: PhiStinespring) -> float:
    """Deviation of ``pi`` from a unital *-homomorphism on matrix units."""
    P = pi_phi.pi_images
    m, d = pi_phi.m, pi_phi.d
    worst = max_abs(sum(P[s, s] for s in range(m)) - np.eye(d)) if d else 0.0
    for s in range(m):
        for t in range(m):
            worst = max(worst, max_abs(adjoint(P[s, t]) - P[t, s]))
            for u in range(m):
                for v in range(m):
                    expected = P[s, v] if t == u else np.zeros((d, d))
                    worst = max(worst, max_abs(P[s, t] @ P[u, v] - expected))
    return worst


def check_quintuple(Q: ModuleStinespring, Phi: ModuleCPMap, tol: Tolerance = DEFAULT_TOL) -> QuintupleReport:
    """Evaluate every quintuple invariant against the map it should dilate."""
    phi_images = np.einsum("ia,stij,jb->stab", Q.V.conj(), Q.pi_phi.pi_images, Q.V)
    phi, _ = _underlying_candidate(Phi)
    return QuintupleReport(
        representation=representation_residual(Q.piX_images, Q.pi_phi.pi_images),
        factorization=max_abs(Q.evaluate().images - Phi.images),
        coisometry=max_abs(Q.W @ adjoint(Q.W) - np.eye(Q.dK)) if Q.dK else 0.0,
        phi_factorization=max_abs(phi_images - phi.images),
        homomorphism=homomorphism_residual(Q.pi_phi),
        dH=Q.dH,
        dK=Q.dK,
        h_span_rank=numerical_rank(Q.h_spanning_vectors(), tol, dim=Q.dH),
        k_span_rank=numerical_rank(Q.k_spanning_vectors(), tol, dim=Q.dK),
        nondegenerate=is_nondegenerate_representation(Q.piX_images, tol),
    )


def _require_minimal(Q: ModuleStinespring, tol: Tolerance, label: str):
    if numerical_rank(Q.h_spanning_vectors(), tol, dim=Q.dH) != Q.dH:
        raise NotMinimal(f"{label}: [pi_phi(A) V H] is a proper subspace of H_Phi")
    if numerical_rank(Q.k_spanning_vectors(), tol, dim=Q.dK) != Q.dK:
        raise NotMinimal(f"{label}: [pi_Phi(X) V H] is a proper subspace of K_Phi")


def _unitarity_defect(U: np.ndarray) -> float:
    if U.shape[0] != U.shape[1]:
        return np.inf
    if U.size == 0:
        return 0.0
    eye = np.eye(U.shape[0])
    return max(max_abs(U @ adjoint(U) - eye), max_abs(adjoint(U) @ U - eye))


def quintuples_unitarily_equivalent(
    Q1: ModuleStinespring, Q2: ModuleStinespring, tol: Tolerance = DEFAULT_TOL, strict_w: bool = False
) -> tuple[bool, UnitaryEquivalenceWitness]:
    """Decide unitary equivalence of two minimal quintuples.

    ``U1`` is fitted on ``pi_phi1(E_st) V1 e_u -> pi_phi2(E_st) V2 e_u`` and
    ``U2`` on ``pi_Phi1(E^{(rs)}) V1 e_u -> pi_Phi2(E^{(rs)}) V2 e_u``. The
    verdict requires both to be unitary with ``U1 V1 = V2`` and
    ``U2 pi1(x) = pi2(x) U1`` within ``eq_abs_tol``.

    ``|U2 W1 - W2|`` is reported as ``coisometry_residual``. Together with
    the two factorizations it forces ``Phi1 = Phi2`` exactly, so it only
    enters the verdict when ``strict_w`` is set; equivalent maps that
    differ by a partial isometry on ``K`` fail it.

    Raises:
        NotMinimal: if either quintuple fails a minimality span.
    """
    _require_minimal(Q1, tol, "first quintuple")
    _require_minimal(Q2, tol, "second quintuple")
    if (Q1.k, Q1.m, Q1.p, Q1.q) != (Q2.k, Q2.m, Q2.p, Q2.q):
        empty = np.zeros((0, 0), dtype=complex)
        return False, UnitaryEquivalenceWitness(empty, empty, np.inf)

    U1, _ = least_squares_intertwiner(Q1.h_spanning_vectors(), Q2.h_spanning_vectors(), tol, dims=(Q2.dH, Q1.dH))
    U2, _ = least_squares_intertwiner(Q1.k_spanning_vectors(), Q2.k_spanning_vectors(), tol, dims=(Q2.dK, Q1.dK))

    if Q1.dH != Q2.dH or Q1.dK != Q2.dK:
        return False, UnitaryEquivalenceWitness(U1, U2, np.inf)

    residuals = [
        _unitarity_defect(U1),
        _unitarity_defect(U2),
        max_abs(U1 @ Q1.V - Q2.V),
        max((max_abs(U2 @ A - B @ U1) for A, B in zip(Q1.piX_list(), Q2.piX_list())), default=0.0),
    ]
    w_residual = float(max_abs(U2 @ Q1.W - Q2.W))
    if strict_w:
        residuals.append(w_residual)
    worst = float(max(residuals))
    return worst <= tol.eq_abs_tol, UnitaryEquivalenceWitness(U1, U2, worst, w_residual)
