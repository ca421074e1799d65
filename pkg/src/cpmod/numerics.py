"""Dense complex linear algebra kernel with a single tolerance policy.

Every rank, span, square-root and least-squares decision made elsewhere in
the package goes through this module, so that verdicts are reproducible.

Conventions:

* Operator equalities are entrywise comparisons within ``eq_abs_tol``.
* Subspaces are found by rank-revealing SVD / eigendecomposition with a
  threshold relative to the largest singular value (or eigenvalue).
* Orthonormal bases are ordered by descending singular value and each
  column's first nonzero component is made real positive.
* Zero-dimensional matrices are legal everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from cpmod.errors import DimensionMismatch, NotHermitian, NotPSD

ArrayLike = Union[np.ndarray, Sequence[np.ndarray]]

# A component counts as "nonzero" for the phase convention when it exceeds
# this fraction of the column's largest entry.
_PHASE_CUTOFF = 1e-8


@dataclass(frozen=True)
class Tolerance:
    """Numerical tolerance policy.

    Attributes:
        rank_rel_tol: singular values (or Gram eigenvalues) at or below this
            fraction of the largest one are treated as zero.
        psd_tol: eigenvalues down to ``-psd_tol * norm`` still count as
            non-negative.
        eq_abs_tol: absolute entrywise bound used for operator equality.
    """

    rank_rel_tol: float = 1e-9
    psd_tol: float = 1e-9
    eq_abs_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rel_tol", "psd_tol", "eq_abs_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")

    def with_eq_tol(self, eq_abs_tol: float) -> "Tolerance":
        """Return a policy with ``eq_abs_tol`` set and the others scaled alike."""
        factor = eq_abs_tol / self.eq_abs_tol
        return replace(
            self,
            rank_rel_tol=self.rank_rel_tol * factor,
            psd_tol=self.psd_tol * factor,
            eq_abs_tol=eq_abs_tol,
        )

    def as_dict(self) -> dict:
        return {
            "rank_rel_tol": self.rank_rel_tol,
            "psd_tol": self.psd_tol,
            "eq_abs_tol": self.eq_abs_tol,
        }


DEFAULT_TOL = Tolerance()


def cmatrix(data, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Coerce ``data`` into a 2-D complex128 array."""
    arr = np.array(data, dtype=complex)
    if shape is not None:
        arr = arr.reshape(shape)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got array with shape {arr.shape}")
    return arr


def adjoint(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def opnorm(M: np.ndarray) -> float:
    """Spectral norm; 0 for empty matrices."""
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def max_abs(M: np.ndarray) -> float:
    if np.size(M) == 0:
        return 0.0
    return float(np.max(np.abs(M)))


def close(A: np.ndarray, B: np.ndarray, tol: Tolerance = DEFAULT_TOL, atol: float | None = None) -> bool:
    """Entrywise equality within ``eq_abs_tol`` (or an explicit ``atol``)."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        return False
    bound = tol.eq_abs_tol if atol is None else atol
    return max_abs(A - B) <= bound


def is_hermitian(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
    M = np.asarray(M)
    return M.ndim == 2 and M.shape[0] == M.shape[1] and max_abs(M - adjoint(M)) <= tol.eq_abs_tol


def _hermitian_part(M: np.ndarray, tol: Tolerance) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if max_abs(M - adjoint(M)) > tol.eq_abs_tol:
        raise NotHermitian(f"matrix deviates from its adjoint by {max_abs(M - adjoint(M)):.3e}")
    return (M + adjoint(M)) / 2


def fix_phase(U: np.ndarray) -> np.ndarray:
    """Rotate each column so its first nonzero component is real positive."""
    U = np.array(U, dtype=complex)
    for j in range(U.shape[1]):
        col = U[:, j]
        mags = np.abs(col)
        peak = mags.max() if mags.size else 0.0
        if peak == 0.0:
            continue
        i = int(np.argmax(mags > _PHASE_CUTOFF * peak))
        U[:, j] = col * (np.conj(col[i]) / mags[i])
    return U


def eigh_desc(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Eigenvectors follow the package phase convention.
    """
    n = M.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    w, U = np.linalg.eigh(M)
    order = np.argsort(-w, kind="stable")
    return w[order], fix_phase(U[:, order])


def hermitian_sqrt(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Positive square root of a Hermitian PSD matrix.

    Eigenvalues in ``[-psd_tol * ||M||, 0)`` are clamped to zero.

    Raises:
        NotHermitian: if ``M`` is not Hermitian within ``eq_abs_tol``.
        NotPSD: if an eigenvalue is below ``-psd_tol * ||M||``.
    """
    H = _hermitian_part(M, tol)
    w, U = eigh_desc(H)
    if w.size == 0:
        return H.copy()
    scale = float(np.max(np.abs(w)))
    if w[-1] < -tol.psd_tol * scale:
        raise NotPSD(f"smallest eigenvalue {w[-1]:.3e} below -psd_tol*||M||")
    root = (U * np.sqrt(np.clip(w, 0.0, None))) @ adjoint(U)
    return (root + adjoint(root)) / 2


def hermitian_function(M: np.ndarray, f, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Apply a real function to the spectrum of a Hermitian matrix."""
    H = _hermitian_part(M, tol)
    w, U = eigh_desc(H)
    out = (U * np.asarray(f(w), dtype=float)) @ adjoint(U)
    return (out + adjoint(out)) / 2


def as_columns(vectors: ArrayLike, dim: int | None = None) -> np.ndarray:
    """Stack ``vectors`` as the columns of a complex matrix.

    A 2-D array is taken to already hold the vectors as columns. An empty
    sequence needs ``dim`` to know the ambient dimension.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        cols = vectors.astype(complex, copy=False)
    else:
        vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
        if not vecs:
            if dim is None:
                raise DimensionMismatch("empty vector list needs an explicit dimension")
            return np.zeros((dim, 0), dtype=complex)
        lengths = {v.shape[0] for v in vecs}
        if len(lengths) != 1:
            raise DimensionMismatch(f"vectors of different lengths: {sorted(lengths)}")
        cols = np.stack(vecs, axis=1)
    if dim is not None and cols.shape[0] != dim:
        raise DimensionMismatch(f"vectors have length {cols.shape[0]}, expected {dim}")
    return cols


def _svd_range(A: np.ndarray, tol: Tolerance) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Truncated SVD ``A ~ U diag(s) Vh`` keeping the numerically nonzero part."""
    n, N = A.shape
    if n == 0 or N == 0:
        return np.zeros((n, 0), dtype=complex), np.zeros(0), np.zeros((0, N), dtype=complex)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(s > tol.rank_rel_tol * s[0]))
    return U[:, :r], s[:r], Vh[:r]


def numerical_rank(vectors: ArrayLike, tol: Tolerance = DEFAULT_TOL, dim: int | None = None) -> int:
    return _svd_range(as_columns(vectors, dim), tol)[1].size


def orthonormal_span(vectors: ArrayLike, tol: Tolerance = DEFAULT_TOL, dim: int | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the span of ``vectors``.

    Columns are ordered by descending singular value with the package phase
    convention applied, so repeated calls give identical output.
    """
    U, _, _ = _svd_range(as_columns(vectors, dim), tol)
    return fix_phase(U)


def projector_onto_span(vectors: ArrayLike, tol: Tolerance = DEFAULT_TOL, dim: int | None = None) -> np.ndarray:
    B = orthonormal_span(vectors, tol, dim)
    P = B @ adjoint(B)
    return (P + adjoint(P)) / 2


def least_squares_intertwiner(
    from_vectors: ArrayLike,
    to_vectors: ArrayLike,
    tol: Tolerance = DEFAULT_TOL,
    dims: tuple[int, int] | None = None,
) -> tuple[np.ndarray, float]:
    """Minimal-norm ``L`` minimizing ``sum_i ||L from_i - to_i||^2``.

    When the correspondence ``from_i -> to_i`` is consistent, ``L`` is its
    exact linear extension; in every case ``L`` vanishes on the orthogonal
    complement of ``span(from_vectors)``.

    Args:
        from_vectors, to_vectors: equally many vectors, as lists or as
            matrices whose columns are the vectors.
        dims: ``(dim_to, dim_from)``; only needed for empty inputs.

    Returns:
        ``(L, residual)`` where ``residual`` is the Frobenius norm of
        ``L F - T`` with ``F``, ``T`` the stacked vectors.
    """
    dim_to, dim_from = dims if dims is not None else (None, None)
    F = as_columns(from_vectors, dim_from)
    T = as_columns(to_vectors, dim_to)
    if F.shape[1] != T.shape[1]:
        raise DimensionMismatch(f"{F.shape[1]} source vectors but {T.shape[1]} targets")
    U, s, Vh = _svd_range(F, tol)
    L = ((T @ adjoint(Vh)) / s) @ adjoint(U) if s.size else np.zeros((T.shape[0], F.shape[0]), dtype=complex)
    residual = float(np.linalg.norm(L @ F - T)) if T.size else 0.0
    return L, residual


def min_eigenvalue(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> float:
    H = _hermitian_part(M, tol)
    if H.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(H)[0])


def psd_order_leq(A: np.ndarray, B: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Decide ``A <= B`` in the operator order.

    True iff the least eigenvalue of ``B - A`` is at least
    ``-psd_tol * max(||A||, ||B||, 1)``.
    """
    A = _hermitian_part(A, tol)
    B = _hermitian_part(B, tol)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    if A.shape[0] == 0:
        return True
    scale = max(opnorm(A), opnorm(B), 1.0)
    return min_eigenvalue(B - A, tol) >= -tol.psd_tol * scale


def is_psd(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
    M = np.asarray(M, dtype=complex)
    return psd_order_leq(np.zeros_like(M), M, tol)


def kernel_projector(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Projector onto eigenvectors of ``M`` with eigenvalue <= ``rank_rel_tol * ||M||``."""
    H = _hermitian_part(M, tol)
    w, U = eigh_desc(H)
    if w.size == 0:
        return H.copy()
    scale = float(np.max(np.abs(w)))
    K = U[:, w <= tol.rank_rel_tol * scale]
    P = K @ adjoint(K)
    return (P + adjoint(P)) / 2


def null_space(A: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``A``."""
    A = np.asarray(A, dtype=complex)
    n_cols = A.shape[1]
    if A.shape[0] == 0 or n_cols == 0:
        return np.eye(n_cols, dtype=complex)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    r = 0 if s[0] == 0.0 else int(np.count_nonzero(s > tol.rank_rel_tol * s[0]))
    return fix_phase(adjoint(Vh[r:]))


def gram_factor(G: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Factor a PSD Gram matrix through its range.

    Returns ``(Q, Q_plus)`` with ``Q^* Q = G`` up to the discarded spectrum,
    ``Q`` of full row rank ``d`` and ``Q Q_plus = I_d``. ``Q`` maps formal
    combinations to coordinates in the quotient by the null space of ``G``.
    """
    H = _hermitian_part(G, tol)
    w, U = eigh_desc(H)
    n = H.shape[0]
    if w.size == 0 or w[0] <= 0.0:
        return np.zeros((0, n), dtype=complex), np.zeros((n, 0), dtype=complex)
    if w[-1] < -tol.psd_tol * w[0]:
        raise NotPSD(f"Gram matrix has eigenvalue {w[-1]:.3e}")
    keep = w > tol.rank_rel_tol * w[0]
    root = np.sqrt(w[keep])
    Ur = U[:, keep]
    return adjoint(Ur) * root[:, None], Ur / root[None, :]
