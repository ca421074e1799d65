"""Comparison of module CP maps.

Equivalence ``Phi ~ Psi`` means ``Phi(x)^* Phi(x) = Psi(x)^* Psi(x)`` for all
``x``; domination ``Psi <= Phi`` is decided in the complete (Choi) order of
the underlying maps. Below ``Phi`` in that order every map is, up to
equivalence, a compression ``Phi_{sqrt T}`` by a unique commutant element
``0 <= T (+) S <= I``, recovered here by :func:`rn_derivative`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from cpmod.cpmaps import ModuleCPMap, PhiStinespring, choi, derive_underlying
from cpmod.dilation import ModuleStinespring, construct
from cpmod.errors import (
    BorderlineRankWarning,
    InvalidDerivative,
    NoCompatibleS,
    NotDominated,
    NotEquivalent,
    NotInCommutant,
    NotPSD,
    ShapeMismatch,
    ZeroMap,
)
from cpmod.numerics import (
    DEFAULT_TOL,
    Tolerance,
    adjoint,
    close,
    eigh_desc,
    hermitian_function,
    is_psd,
    kernel_projector,
    least_squares_intertwiner,
    max_abs,
    min_eigenvalue,
    null_space,
    opnorm,
    orthonormal_span,
    psd_order_leq,
)
from cpmod.oracle import SampleConfig, sample_module_elements

# Intertwiner residuals are accepted up to this multiple of eq_abs_tol,
# relative to the size of the spanning set.
RN_RESIDUAL_FACTOR = 100.0


@dataclass(frozen=True)
class CommutantElement:
    """A pair ``T (+) S`` acting on ``H_Phi (+) K_Phi``."""

    T: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("T", "S"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __add__(self, other: "CommutantElement") -> "CommutantElement":
        return CommutantElement(self.T + other.T, self.S + other.S)

    def __sub__(self, other: "CommutantElement") -> "CommutantElement":
        return CommutantElement(self.T - other.T, self.S - other.S)

    def __mul__(self, c) -> "CommutantElement":
        return CommutantElement(c * self.T, c * self.S)

    __rmul__ = __mul__

    def __matmul__(self, other: "CommutantElement") -> "CommutantElement":
        return CommutantElement(self.T @ other.T, self.S @ other.S)

    def adjoint(self) -> "CommutantElement":
        return CommutantElement(adjoint(self.T), adjoint(self.S))

    def norm(self) -> float:
        return max(opnorm(self.T), opnorm(self.S))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.T.reshape(-1), self.S.reshape(-1)])

    def sqrt(self, tol: Tolerance = DEFAULT_TOL) -> "CommutantElement":
        """Positive square root, taken jointly on ``T`` and ``S``.

        Eigenvalues at or below ``rank_rel_tol * ||T (+) S||`` count as zero;
        otherwise roundoff in the kernel is amplified to ``sqrt(eps)`` and the
        root drifts out of the commutant.
        """
        if not self.is_positive(tol):
            raise NotPSD("commutant element is not positive")
        cutoff = tol.rank_rel_tol * self.norm()

        def root(w):
            return np.where(w > cutoff, np.sqrt(np.clip(w, 0.0, None)), 0.0)

        return CommutantElement(hermitian_function(self.T, root, tol), hermitian_function(self.S, root, tol))

    def is_positive(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return is_psd(self.T, tol) and is_psd(self.S, tol)

    def is_contraction_interval(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        """``0 <= T (+) S <= I``."""
        if not self.is_positive(tol):
            return False
        return psd_order_leq(self.T, np.eye(self.T.shape[0]), tol) and psd_order_leq(
            self.S, np.eye(self.S.shape[0]), tol
        )

    def intertwining_residual(self, Q: ModuleStinespring) -> float:
        """Largest deviation of ``pi(x) T = S pi(x)`` and ``pi(x)^* S = T pi(x)^*``."""
        worst = 0.0
        for P in Q.piX_list():
            worst = max(worst, max_abs(P @ self.T - self.S @ P), max_abs(adjoint(P) @ self.S - self.T @ adjoint(P)))
        return worst

    @classmethod
    def identity(cls, Q: ModuleStinespring) -> "CommutantElement":
        return cls(np.eye(Q.dH), np.eye(Q.dK))


@dataclass(frozen=True)
class CommutantBasis:
    """Basis of ``pi_Phi(X)'``, orthonormal for the trace inner product on the direct sum."""

    elements: tuple[CommutantElement, ...]
    dH: int
    dK: int

    @property
    def dim(self) -> int:
        return len(self.elements)

    def matrix(self) -> np.ndarray:
        """Basis vectors as columns of a ``(dH^2 + dK^2, dim)`` matrix."""
        n = self.dH**2 + self.dK**2
        if not self.elements:
            return np.zeros((n, 0), dtype=complex)
        return np.stack([E.vector() for E in self.elements], axis=1)

    def combination(self, coefficients) -> CommutantElement:
        vec = self.matrix() @ np.asarray(coefficients, dtype=complex)
        return self._unvec(vec)

    def projection_residual(self, E: CommutantElement) -> float:
        """Entrywise distance from ``E`` to the span of the basis."""
        B = self.matrix()
        v = E.vector()
        return max_abs(v - B @ (adjoint(B) @ v))

    def contains(self, E: CommutantElement, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.projection_residual(E) <= tol.eq_abs_tol

    def _unvec(self, vec: np.ndarray) -> CommutantElement:
        n = self.dH**2
        return CommutantElement(vec[:n].reshape(self.dH, self.dH), vec[n:].reshape(self.dK, self.dK))


@dataclass(frozen=True)
class DominationVerdict:
    dominated: bool
    mode: str
    margin: float
    seed: int | None = None
    samples: int | None = None

    def __bool__(self):
        return self.dominated


@dataclass(frozen=True)
class RNDerivative:
    """Radon-Nikodym derivative ``Delta1 (+) Delta2`` of ``Psi`` with respect to ``Phi``.

    ``J`` maps ``H_Phi -> H_Psi`` and ``Imap`` maps ``K_Phi -> K_Psi``;
    ``Delta1 = J^* J`` and ``Delta2 = Imap^* Imap``.
    """

    J: np.ndarray = field(repr=False)
    Imap: np.ndarray = field(repr=False)
    Delta1: np.ndarray = field(repr=False)
    Delta2: np.ndarray = field(repr=False)
    residual_J: float = 0.0
    residual_I: float = 0.0

    @property
    def element(self) -> CommutantElement:
        return CommutantElement(self.Delta1, self.Delta2)


@dataclass(frozen=True)
class PurityReport:
    pure: bool
    commutant_dim: int


def _check_shapes(Phi: ModuleCPMap, Psi: ModuleCPMap):
    if Phi.shape != Psi.shape:
        raise ShapeMismatch(f"maps have shapes (k, m, p, q) = {Phi.shape} and {Psi.shape}")


def equivalent(Phi: ModuleCPMap, Psi: ModuleCPMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    """``Phi ~ Psi``, decided by equality of the underlying maps on matrix units."""
    _check_shapes(Phi, Psi)
    phi, _ = derive_underlying(Phi, tol)
    psi, _ = derive_underlying(Psi, tol)
    return close(phi.images, psi.images, tol)


def connecting_partial_isometry(Phi: ModuleCPMap, Psi: ModuleCPMap, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """The unique partial isometry ``V`` on ``K`` with ``V Psi(x) = Phi(x)``.

    ``V`` sends ``Psi(x) h`` to ``Phi(x) h`` and vanishes on the orthogonal
    complement of ``[Psi(X) H]``, so ``V V^*`` and ``V^* V`` are the
    projectors onto ``[Phi(X) H]`` and ``[Psi(X) H]``.

    Raises:
        NotEquivalent: if the maps are not equivalent.
    """
    if not equivalent(Phi, Psi, tol):
        raise NotEquivalent("maps have different underlying CP maps")
    V, _ = least_squares_intertwiner(Psi.image_vectors(), Phi.image_vectors(), tol, dims=(Phi.q, Psi.q))
    return V


def dominates(
    Psi: ModuleCPMap,
    Phi: ModuleCPMap,
    mode: Literal["complete", "pointwise_sampled", "pointwise"] = "complete",
    tol: Tolerance = DEFAULT_TOL,
    seed: int = 0,
    samples: int = 64,
) -> DominationVerdict:
    """Decide ``Psi <= Phi``.

    ``complete`` compares the Choi matrices of the underlying maps, which is
    what the Radon-Nikodym construction needs. ``pointwise_sampled`` only
    checks ``Psi(x)^* Psi(x) <= Phi(x)^* Phi(x)`` on ``samples``
    pseudo-random ``x`` drawn from ``seed``: a necessary condition.
    """
    _check_shapes(Phi, Psi)
    phi, _ = derive_underlying(Phi, tol)
    psi, _ = derive_underlying(Psi, tol)
    if mode == "complete":
        Cphi, Cpsi = choi(phi), choi(psi)
        return DominationVerdict(psd_order_leq(Cpsi, Cphi, tol), "complete", min_eigenvalue(Cphi - Cpsi, tol))
    if mode in ("pointwise_sampled", "pointwise"):
        ok = True
        margin = np.inf
        for x in sample_module_elements(Phi.module, SampleConfig(seed=seed, samples=samples)):
            a = adjoint(x.value) @ x.value
            lo, hi = psi(a), phi(a)
            lo, hi = (lo + adjoint(lo)) / 2, (hi + adjoint(hi)) / 2
            margin = min(margin, min_eigenvalue(hi - lo, tol))
            ok = ok and psd_order_leq(lo, hi, tol)
        return DominationVerdict(ok, "pointwise_sampled", float(margin), seed, samples)
    raise ValueError(f"unknown domination mode {mode!r}")


def _intertwining_system(Q: ModuleStinespring) -> np.ndarray:
    # Unknowns: row-major vec(T) then vec(S). For A X B, vec = kron(A, B^T) vec(X).
    dH, dK = Q.dH, Q.dK
    IH, IK = np.eye(dH), np.eye(dK)
    blocks = []
    for P in Q.piX_list():
        Pa = adjoint(P)
        blocks.append(np.hstack([np.kron(P, IH), -np.kron(IK, P.T)]))
        blocks.append(np.hstack([-np.kron(IH, P.conj()), np.kron(Pa, IK)]))
    if not blocks:
        return np.zeros((0, dH * dH + dK * dK), dtype=complex)
    return np.vstack(blocks)


def commutant(Q: ModuleStinespring, tol: Tolerance = DEFAULT_TOL) -> CommutantBasis:
    """Basis of ``{T (+) S : pi(x) T = S pi(x), pi(x)^* S = T pi(x)^*}``."""
    N = null_space(_intertwining_system(Q), tol)
    dH = Q.dH
    elements = tuple(
        CommutantElement(N[: dH * dH, j].reshape(dH, dH), N[dH * dH:, j].reshape(Q.dK, Q.dK))
        for j in range(N.shape[1])
    )
    return CommutantBasis(elements, Q.dH, Q.dK)


def complete_commutant_element(Q: ModuleStinespring, T: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """The unique ``S`` with ``T (+) S`` in the commutant.

    ``S`` is fixed on the spanning set ``pi_Phi(x) e_j`` of ``K_Phi`` by
    ``S pi_Phi(x) e_j = pi_Phi(x) T e_j``.

    Raises:
        NoCompatibleS: if no such ``S`` exists within tolerance.
    """
    T = np.asarray(T, dtype=complex)
    if T.shape != (Q.dH, Q.dH):
        raise ShapeMismatch(f"T has shape {T.shape}, expected ({Q.dH}, {Q.dH})")
    ops = Q.piX_list()
    source = np.concatenate(list(ops), axis=1)
    target = np.concatenate([P @ T for P in ops], axis=1)
    S, _ = least_squares_intertwiner(source, target, tol, dims=(Q.dK, Q.dK))
    residual = CommutantElement(T, S).intertwining_residual(Q)
    if residual > tol.eq_abs_tol * max(1.0, opnorm(T)):
        raise NoCompatibleS(f"no compatible S: intertwining residual {residual:.3e}")
    return S


def compress(Q: ModuleStinespring, E: CommutantElement, tol: Tolerance = DEFAULT_TOL) -> ModuleCPMap:
    """``Phi_{T (+) S}(x) = W^* sqrt(S) pi_Phi(x) sqrt(T) V`` for positive ``E = T (+) S``.

    Raises:
        NotPSD: if ``E`` is not positive.
        NotInCommutant: if ``E`` does not intertwine ``pi_Phi``.
    """
    if E.T.shape != (Q.dH, Q.dH) or E.S.shape != (Q.dK, Q.dK):
        raise ShapeMismatch(f"element shapes {E.T.shape}, {E.S.shape} do not match dilation ({Q.dH}, {Q.dK})")
    if not E.is_positive(tol):
        raise NotPSD("commutant element is not positive")
    residual = E.intertwining_residual(Q)
    if residual > tol.eq_abs_tol * max(1.0, E.norm()):
        raise NotInCommutant(f"intertwining residual {residual:.3e}")
    root = E.sqrt(tol)
    images = np.einsum("ia,ij,rsjk,kl,lb->rsab", Q.W.conj(), root.S, Q.piX_images, root.T, Q.V)
    return ModuleCPMap(images)


def rn_derivative(
    Psi: ModuleCPMap,
    Phi: ModuleCPMap,
    tol: Tolerance = DEFAULT_TOL,
    Q_phi: ModuleStinespring | None = None,
    Q_psi: ModuleStinespring | None = None,
) -> RNDerivative:
    """Radon-Nikodym derivative of ``Psi`` with respect to ``Phi``.

    ``J`` is the linear extension of ``pi_phi(a) V_Phi h -> pi_psi(a) V_Psi h``
    and ``Imap`` that of ``pi_Phi(x) V_Phi h -> pi_Psi(x) V_Psi h``.
    Precomputed quintuples may be passed to avoid rebuilding them.

    Raises:
        NotDominated: if ``Psi`` is not below ``Phi`` in the complete order, or
            if either intertwiner fails to be consistent.
    """
    verdict = dominates(Psi, Phi, "complete", tol)
    if not verdict.dominated:
        raise NotDominated(f"Choi(phi - psi) has eigenvalue {verdict.margin:.3e}")
    Q_phi = construct(Phi, tol) if Q_phi is None else Q_phi
    Q_psi = construct(Psi, tol) if Q_psi is None else Q_psi

    fits = []
    for source, target, dims in (
        (Q_phi.h_spanning_vectors(), Q_psi.h_spanning_vectors(), (Q_psi.dH, Q_phi.dH)),
        (Q_phi.k_spanning_vectors(), Q_psi.k_spanning_vectors(), (Q_psi.dK, Q_phi.dK)),
    ):
        L, residual = least_squares_intertwiner(source, target, tol, dims=dims)
        scale = max(1.0, float(np.linalg.norm(source)), float(np.linalg.norm(target)))
        if residual > RN_RESIDUAL_FACTOR * tol.eq_abs_tol * scale:
            raise NotDominated(f"intertwiner is inconsistent: residual {residual:.3e}")
        fits.append((L, residual))
    (J, res_J), (Imap, res_I) = fits
    D1 = adjoint(J) @ J
    D2 = adjoint(Imap) @ Imap
    return RNDerivative(J, Imap, (D1 + adjoint(D1)) / 2, (D2 + adjoint(D2)) / 2, res_J, res_I)


def _range_basis(M: np.ndarray, tol: Tolerance, label: str) -> np.ndarray:
    w, _ = eigh_desc(M)
    if w.size:
        threshold = tol.rank_rel_tol * float(np.max(np.abs(w)))
        borderline = [lam for lam in w if threshold / 10 < abs(lam) <= threshold * 10]
        if borderline:
            warnings.warn(
                f"{label} has eigenvalues {borderline} within a factor 10 of the kernel threshold {threshold:.3e}",
                BorderlineRankWarning,
                stacklevel=3,
            )
    complement = np.eye(M.shape[0]) - kernel_projector(M, tol)
    return orthonormal_span(complement, tol, dim=M.shape[0])


def reconstruct_stinespring(Q: ModuleStinespring, D: RNDerivative, tol: Tolerance = DEFAULT_TOL) -> ModuleStinespring:
    """Stinespring quintuple of ``Psi`` rebuilt from that of ``Phi`` and ``Delta_Phi(Psi)``.

    With ``p1``, ``p2`` the projectors off ``ker Delta1``, ``ker Delta2`` the
    result is ``(p2 pi_Phi p1, p1 sqrt(Delta1) V_Phi, p2 W_Phi)`` written in
    orthonormal coordinates of the two ranges.

    Raises:
        InvalidDerivative: if ``D`` is not a commutant element of ``Q`` in ``[0, I]``.
    """
    E = D.element
    if E.T.shape != (Q.dH, Q.dH) or E.S.shape != (Q.dK, Q.dK):
        raise InvalidDerivative("derivative shapes do not match the dilation")
    if E.intertwining_residual(Q) > RN_RESIDUAL_FACTOR * tol.eq_abs_tol or not E.is_contraction_interval(tol):
        raise InvalidDerivative("derivative is not a commutant element between 0 and I")
    B1 = _range_basis(D.Delta1, tol, "Delta1")
    B2 = _range_basis(D.Delta2, tol, "Delta2")
    pi_phi_images = np.einsum("ia,stij,jb->stab", B1.conj(), Q.pi_phi.pi_images, B1)
    piX = np.einsum("ia,rsij,jb->rsab", B2.conj(), Q.piX_images, B1)
    V = adjoint(B1) @ E.sqrt(tol).T @ Q.V
    W = adjoint(B2) @ Q.W
    return ModuleStinespring(PhiStinespring(pi_phi_images, V), piX, V, W)


def is_pure(Phi: ModuleCPMap, tol: Tolerance = DEFAULT_TOL) -> PurityReport:
    """Purity test: a nonzero map is pure iff its dilation has trivial commutant.

    Raises:
        ZeroMap: for the zero map, where purity is undefined.
    """
    if max_abs(Phi.images) <= tol.eq_abs_tol:
        raise ZeroMap("purity is undefined for the zero map")
    basis = commutant(construct(Phi, tol), tol)
    return PurityReport(basis.dim == 1, basis.dim)


def pure_scalar(Psi: ModuleCPMap, Phi: ModuleCPMap, tol: Tolerance = DEFAULT_TOL) -> float:
    """For ``Psi`` dominated by a pure ``Phi``, the ``lambda >= 0`` with ``Psi ~ lambda Phi``.

    ``lambda^2`` is the single eigenvalue of ``Delta1``.

    Raises:
        NotEquivalent: if ``Delta1`` is not a multiple of the identity.
    """
    D = rn_derivative(Psi, Phi, tol)
    n = D.Delta1.shape[0]
    c = float(np.real(np.trace(D.Delta1))) / n if n else 0.0
    if max_abs(D.Delta1 - c * np.eye(n)) > tol.eq_abs_tol:
        raise NotEquivalent("Delta1 is not scalar; Psi is not a multiple of Phi up to equivalence")
    return float(np.sqrt(max(c, 0.0)))
