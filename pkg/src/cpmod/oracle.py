"""Brute-force sampled verifiers and random instance generators.

The verifiers evaluate defining identities on random module elements and do
not call the constructions they check. They back the test suite and the
``--verify`` flag of the command line tool.

Sampling contract: a :class:`SampleConfig` with ``seed`` drives numpy's
counter-based ``Philox`` bit generator keyed by ``seed``. For a module
``M_{k x m}`` the generator draws one ``(samples, k, m)`` block of standard
normals for the real parts, then a second one for the imaginary parts, and
multiplies by ``scale``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cpmod.cpmaps import ModuleCPMap
from cpmod.errors import ShapeMismatch
from cpmod.modspace import HilbertModule, ModuleElement
from cpmod.numerics import adjoint, max_abs


@dataclass(frozen=True)
class SampleConfig:
    seed: int = 0
    samples: int = 64
    scale: float = 1.0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


def sample_module_elements(X: HilbertModule, cfg: SampleConfig = SampleConfig()) -> list[ModuleElement]:
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    shape = (cfg.samples, X.k, X.m)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    values = cfg.scale * (re + 1j * im)
    return [ModuleElement(X, v) for v in values]


def verify_equivalence_pointwise(Phi: ModuleCPMap, Psi: ModuleCPMap, cfg: SampleConfig = SampleConfig()) -> float:
    """Largest entrywise ``|Phi(x)^* Phi(x) - Psi(x)^* Psi(x)|`` over samples."""
    if Phi.shape != Psi.shape:
        raise ShapeMismatch(f"{Phi.shape} vs {Psi.shape}")
    worst = 0.0
    for x in sample_module_elements(Phi.module, cfg):
        a, b = Phi(x), Psi(x)
        worst = max(worst, max_abs(adjoint(a) @ a - adjoint(b) @ b))
    return worst


def verify_factorization(Q, Phi: ModuleCPMap, cfg: SampleConfig = SampleConfig()) -> float:
    """Largest entrywise ``|Phi(x) - W^* pi_Phi(x) V|`` over samples."""
    worst = 0.0
    for x in sample_module_elements(Phi.module, cfg):
        worst = max(worst, max_abs(Phi(x) - adjoint(Q.W) @ Q.piX(x.value) @ Q.V))
    return worst


def verify_representation(Q, cfg: SampleConfig = SampleConfig()) -> float:
    """Largest ``|pi(x)^* pi(y) - pi_phi(x^* y)|`` over consecutive sample pairs."""
    X = HilbertModule(Q.k, Q.m)
    xs = sample_module_elements(X, cfg)
    worst = 0.0
    for x, y in zip(xs, xs[1:] + xs[:1]):
        lhs = adjoint(Q.piX(x.value)) @ Q.piX(y.value)
        worst = max(worst, max_abs(lhs - Q.pi_phi.pi(adjoint(x.value) @ y.value)))
    return worst


def verify_partial_isometry(V: np.ndarray, Phi: ModuleCPMap, Psi: ModuleCPMap, cfg: SampleConfig = SampleConfig()) -> float:
    """Largest ``|V Psi(x) - Phi(x)|`` over samples."""
    worst = 0.0
    for x in sample_module_elements(Phi.module, cfg):
        worst = max(worst, max_abs(V @ Psi(x) - Phi(x)))
    return worst


def verify_domination_pointwise(Psi: ModuleCPMap, Phi: ModuleCPMap, cfg: SampleConfig = SampleConfig()) -> float:
    """Least eigenvalue of ``Phi(x)^* Phi(x) - Psi(x)^* Psi(x)`` over samples (negative means violated)."""
    worst = np.inf
    for x in sample_module_elements(Phi.module, cfg):
        a, b = Phi(x), Psi(x)
        gap = adjoint(a) @ a - adjoint(b) @ b
        worst = min(worst, float(np.linalg.eigvalsh((gap + adjoint(gap)) / 2)[0]))
    return worst


# -- random instances ---------------------------------------------------------


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Qm, R = np.linalg.qr(Z)
    return Qm * (np.diag(R) / np.abs(np.diag(R)))


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return random_unitary(rows, rng)[:, :cols]


def random_module_cp_map(
    k: int, m: int, p: int, q: int, rng: np.random.Generator, rank: int | None = None
) -> ModuleCPMap:
    """Random module CP map ``x -> U (x (x) I_r) B``.

    ``B: C^p -> C^m (x) C^r`` is Gaussian and ``U: C^k (x) C^r -> C^q`` an
    isometry, so ``Phi(x)^* Phi(y) = B^* (x^* y (x) I_r) B``. The Kraus rank
    ``r`` defaults to the largest value with ``k r <= q``.
    """
    max_rank = q // k
    if max_rank < 1:
        raise ValueError(f"need q >= k for a nonzero map, got k={k}, q={q}")
    r = max_rank if rank is None else rank
    if not 1 <= r <= max_rank:
        raise ValueError(f"rank must lie in [1, {max_rank}]")
    B = (rng.standard_normal((m * r, p)) + 1j * rng.standard_normal((m * r, p))) / np.sqrt(2)
    U = random_isometry(q, k * r, rng)
    images = np.zeros((k, m, q, p), dtype=complex)
    for a in range(k):
        for b in range(m):
            E = np.zeros((k, m))
            E[a, b] = 1.0
            images[a, b] = U @ np.kron(E, np.eye(r)) @ B
    return ModuleCPMap(images)


def random_shape(rng: np.random.Generator, max_dim: int = 4) -> tuple[int, int, int, int]:
    """Random ``(k, m, p, q)`` with all entries in ``[1, max_dim]`` and ``k <= q``."""
    k, m, p = (int(v) for v in rng.integers(1, max_dim + 1, size=3))
    q = int(rng.integers(k, max_dim + 1))
    return k, m, p, q
