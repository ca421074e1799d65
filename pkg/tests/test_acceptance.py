"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` to get one PASS/FAIL line per
criterion in the terminal summary.
"""

import json
import time

import numpy as np
import pytest

from cpmod import cli
from cpmod.compare import (
    CommutantElement,
    compress,
    dominates,
    equivalent,
    is_pure,
    pure_scalar,
    reconstruct_stinespring,
    rn_derivative,
)
from cpmod.cpmaps import arveson_compress, choi, derive_underlying
from cpmod.dilation import check_quintuple, construct, quintuples_unitarily_equivalent
from cpmod.fixtures import block_doubled_map, identity_map
from cpmod.numerics import adjoint, eigh_desc, max_abs
from cpmod.oracle import random_module_cp_map, random_shape, random_unitary
from cpmod.problem import fixture_path

from conftest import random_interval_element, random_rank_deficient_element

SEED = 1729

# Shapes (k, m, p, q) with Kraus rank q // k >= 2, so dilations have a non-trivial commutant.
RICH_SHAPES = [(1, 2, 2, 4), (1, 2, 3, 2), (2, 2, 2, 4), (1, 3, 2, 3), (1, 1, 3, 4), (2, 1, 3, 4)]
# Shapes where q // k >= m p, so a random map has a full-rank Choi matrix.
FULL_CHOI_SHAPES = [(1, 2, 2, 4), (1, 1, 3, 3), (1, 2, 1, 2), (2, 2, 1, 4), (1, 3, 1, 3), (2, 1, 2, 4)]


def decode(data):
    return np.array([[complex(re, im) for re, im in row] for row in data])


def cli_report(*argv):
    status, text = cli.run(list(argv))
    return status, json.loads(text)


def rich_map(rng):
    k, m, p, q = RICH_SHAPES[rng.integers(len(RICH_SHAPES))]
    return random_module_cp_map(k, m, p, q, rng)


def dominated_pair(rng, i):
    """A pair ``Psi <= Phi``: alternately a rotated compression and an independent rescaled map."""
    if i % 2 == 0:
        Phi = rich_map(rng)
        Q = construct(Phi)
        E = random_interval_element(Q, rng)
        return compress(Q, E.sqrt()).compose_left(random_unitary(Phi.q, rng)), Phi
    k, m, p, q = FULL_CHOI_SHAPES[rng.integers(len(FULL_CHOI_SHAPES))]
    Phi = random_module_cp_map(k, m, p, q, rng)
    Psi0 = random_module_cp_map(k, m, p, q, rng)
    Cphi = choi(derive_underlying(Phi)[0])
    Cpsi = choi(derive_underlying(Psi0)[0])
    w, U = eigh_desc(Cphi)
    inv_root = (U / np.sqrt(w)) @ adjoint(U)
    lam = np.linalg.eigvalsh(inv_root @ Cpsi @ inv_root)[-1]
    t = np.sqrt(rng.uniform(0.2, 0.95) / lam)
    return t * Psi0, Phi


@pytest.mark.criterion(1, "ex26 fixture: validate, underlying map, V = diag(1,1,-1,1), non-degenerate, < 1 s")
def test_criterion_01_example_26():
    start = time.perf_counter()
    path = str(fixture_path("ex26.json"))
    expected_phi = {"E_11": [[1, 0], [0, 0]], "E_12": [[0, 0.5], [0, 0]],
                    "E_21": [[0, 0], [0.5, 0]], "E_22": [[0, 0], [0, 1]]}
    for name in ("Phi", "Psi"):
        status, report = cli_report("validate", path, name)
        assert status == 0 and report["verdicts"]["valid"]
        assert report["verdicts"]["nondegenerate"]
        for key, value in expected_phi.items():
            assert max_abs(decode(report["certificates"]["underlying"][key]) - np.array(value)) <= 1e-10
    status, report = cli_report("compare", path, "Phi", "Psi")
    assert status == 0 and report["verdicts"]["equivalent"]
    assert max_abs(decode(report["certificates"]["V"]) - np.diag([1, 1, -1, 1])) <= 1e-8
    assert time.perf_counter() - start < 1.0


@pytest.mark.criterion(2, "ex27 fixture: validate, underlying map, degenerate Phi, 5x5 V and its projectors, < 1 s")
def test_criterion_02_example_27():
    start = time.perf_counter()
    path = str(fixture_path("ex27.json"))
    expected_phi = {"E_11": [[2, 0], [0, 0]], "E_12": [[0, 0], [0, 0]],
                    "E_21": [[0, 0], [0, 0]], "E_22": [[0, 0], [0, 3]]}
    for name in ("Phi", "Psi"):
        status, report = cli_report("validate", path, name)
        assert status == 0 and report["verdicts"]["valid"]
        for key, value in expected_phi.items():
            assert max_abs(decode(report["certificates"]["underlying"][key]) - np.array(value)) <= 1e-10
        if name == "Phi":
            assert report["verdicts"]["nondegenerate"] is False
    status, report = cli_report("compare", path, "Phi", "Psi")
    assert status == 0 and report["verdicts"]["equivalent"]
    V = decode(report["certificates"]["V"])
    h, t = np.sqrt(2) / 2, np.sqrt(3) / 3
    expected_V = np.array([[h, h, 0, 0, 0], [-t, t, 0, 0, t], [0] * 5, [0, 0, 0, 1, 0], [0, 0, 1, 0, 0]])
    assert max_abs(V - expected_V) <= 1e-8
    assert max_abs(V @ adjoint(V) - np.diag([1, 1, 0, 1, 1])) <= 1e-8
    v = np.array([1, -1, 0, 0, 2]) / np.sqrt(6)
    assert max_abs(adjoint(V) @ V - (np.eye(5) - np.outer(v, v))) <= 1e-8
    assert time.perf_counter() - start < 1.0


@pytest.mark.criterion(3, "Dilation suite: 50 random maps with k,m,p,q <= 4 satisfy every quintuple invariant within 1e-8, < 30 s")
def test_criterion_03_dilation_suite():
    rng = np.random.default_rng(SEED + 3)
    start = time.perf_counter()
    for _ in range(50):
        k, m, p, q = random_shape(rng, 4)
        Phi = random_module_cp_map(k, m, p, q, rng, rank=int(rng.integers(1, q // k + 1)))
        Q = construct(Phi)
        report = check_quintuple(Q, Phi)
        assert max(report.representation, report.coisometry, report.factorization) <= 1e-8, report
        assert report.h_span_rank == Q.dH and report.k_span_rank == Q.dK, report
        assert report.nondegenerate, report
    assert time.perf_counter() - start < 30.0


@pytest.mark.criterion(4, "Equivalent partners have unitarily equivalent quintuples (residual <= 1e-8); non-equivalent pairs do not")
def test_criterion_04_quintuple_equivalence():
    rng = np.random.default_rng(SEED + 4)
    for _ in range(20):
        k, m, p, q = random_shape(rng, 4)
        Phi = random_module_cp_map(k, m, p, q, rng)
        Psi = Phi.compose_left(random_unitary(q, rng))
        assert equivalent(Phi, Psi)
        ok, w = quintuples_unitarily_equivalent(construct(Phi), construct(Psi))
        assert ok and w.max_residual <= 1e-8
        for U in (w.U1, w.U2):
            assert max_abs(U @ adjoint(U) - np.eye(U.shape[0])) <= 1e-8
        scaled = (2.0 * Phi).compose_left(random_unitary(q, rng))
        assert not quintuples_unitarily_equivalent(construct(Phi), construct(scaled))[0]
        other = random_module_cp_map(k, m, p, q, rng)
        assert not quintuples_unitarily_equivalent(construct(Phi), construct(other))[0]


@pytest.mark.criterion(5, "Injective leg: rn_derivative(compress(Q, sqrt(E)), Phi) recovers E for 50 elements within 1e-7")
def test_criterion_05_rn_roundtrip():
    rng = np.random.default_rng(SEED + 5)
    for _ in range(50):
        Phi = rich_map(rng)
        Q = construct(Phi)
        E = random_interval_element(Q, rng)
        D = rn_derivative(compress(Q, E.sqrt()), Phi, Q_phi=Q)
        assert max_abs(D.Delta1 - E.T) <= 1e-7
        assert max_abs(D.Delta2 - E.S) <= 1e-7


@pytest.mark.criterion(6, "Surjective leg: Psi ~ Phi_{sqrt(Delta1)} and psi = phi_{Delta1} within 1e-8 for 50 dominated pairs")
def test_criterion_06_rn_surjective():
    rng = np.random.default_rng(SEED + 6)
    for i in range(50):
        Psi, Phi = dominated_pair(rng, i)
        assert dominates(Psi, Phi)
        Q = construct(Phi)
        D = rn_derivative(Psi, Phi, Q_phi=Q)
        assert equivalent(Psi, compress(Q, D.element.sqrt()))
        psi, _ = derive_underlying(Psi)
        assert max_abs(psi.images - arveson_compress(Q.pi_phi, D.Delta1).images) <= 1e-8


@pytest.mark.criterion(7, "Reconstruction from (Q_Phi, Delta) is unitarily equivalent to construct(Psi), residual <= 1e-7")
def test_criterion_07_reconstruction():
    rng = np.random.default_rng(SEED + 7)
    cases = []
    while len(cases) < 20:
        Phi = rich_map(rng)
        Q = construct(Phi)
        E = random_interval_element(Q, rng, low=0.1)
        cases.append((Q, E))
    deficient = 0
    while deficient < 10:
        Q = construct(rich_map(rng))
        E = random_rank_deficient_element(Q, rng)
        if E is None or np.linalg.matrix_rank(E.T, tol=1e-9) == Q.dH:
            continue
        cases.append((Q, E))
        deficient += 1
    for Q, E in cases:
        Psi = compress(Q, E.sqrt()).compose_left(random_unitary(Q.q, rng))
        D = rn_derivative(Psi, Q.evaluate(), Q_phi=Q)
        R = reconstruct_stinespring(Q, D)
        ok, w = quintuples_unitarily_equivalent(R, construct(Psi))
        assert ok and w.max_residual <= 1e-7


@pytest.mark.criterion(8, "Compression laws: Phi_I = Phi, Phi_{lambda T} = lambda Phi_T (1e-10), monotonicity on 20 pairs")
def test_criterion_08_compression_laws():
    rng = np.random.default_rng(SEED + 8)
    for _ in range(20):
        Phi = rich_map(rng)
        Q = construct(Phi)
        assert max_abs(compress(Q, CommutantElement.identity(Q)).images - Phi.images) <= 1e-10
        E = random_interval_element(Q, rng)
        for lam in (0.5, 2.0):
            assert max_abs(compress(Q, lam * E).images - lam * compress(Q, E).images) <= 1e-10
        # T1 <= T2 with both in [0, I]: T2 = (T1 + B) / 2 for T1 <= B.
        T1 = random_interval_element(Q, rng, high=0.5)
        B = random_interval_element(Q, rng, low=0.5)
        T2 = (T1 + B) * 0.5
        assert dominates(compress(Q, T1.sqrt()), compress(Q, T2.sqrt()))


@pytest.mark.criterion(9, "Purity: identity pure (dim 1), block-doubled not pure (dim 4), dominated Psi ~ lambda Phi with lambda^2 = Delta1")
def test_criterion_09_purity():
    rng = np.random.default_rng(SEED + 9)
    report = is_pure(identity_map())
    assert report.pure and report.commutant_dim == 1
    report = is_pure(block_doubled_map())
    assert not report.pure and report.commutant_dim == 4

    pure_maps = [identity_map(), identity_map(3)]
    while len(pure_maps) < 6:
        k, m, p, q = random_shape(rng, 4)
        candidate = random_module_cp_map(k, m, p, q, rng, rank=1)
        if is_pure(candidate).pure:
            pure_maps.append(candidate)
    for Phi in pure_maps:
        Q = construct(Phi)
        for _ in range(3):
            c = rng.uniform(0.0, 1.0)
            Psi = compress(Q, CommutantElement.identity(Q) * np.sqrt(c)).compose_left(random_unitary(Phi.q, rng))
            lam = pure_scalar(Psi, Phi)
            D = rn_derivative(Psi, Phi, Q_phi=Q)
            eig = np.linalg.eigvalsh(D.Delta1)
            assert max_abs(eig - eig.mean()) <= 1e-8
            assert abs(lam**2 - eig.mean()) <= 1e-8
            assert equivalent(Psi, lam * Phi)


@pytest.mark.criterion(10, "Relation laws for equivalence and domination on 100 randomized triples, zero violations")
def test_criterion_10_relation_laws():
    rng = np.random.default_rng(SEED + 10)
    violations = []
    for i in range(100):
        Phi = rich_map(rng)
        Q = construct(Phi)
        q = Phi.q
        # Triple for equivalence: rotated copies, with a random outsider mixed in every third round.
        A = Phi
        B = Phi.compose_left(random_unitary(q, rng))
        C = Phi.compose_left(random_unitary(q, rng)) if i % 3 else random_module_cp_map(Phi.k, Phi.m, Phi.p, q, rng)
        triple = (A, B, C)
        eq = {(x, y): equivalent(triple[x], triple[y]) for x in range(3) for y in range(3)}
        for x in range(3):
            if not eq[x, x]:
                violations.append((i, "equivalence reflexive"))
            for y in range(3):
                if eq[x, y] != eq[y, x]:
                    violations.append((i, "equivalence symmetric"))
                for z in range(3):
                    if eq[x, y] and eq[y, z] and not eq[x, z]:
                        violations.append((i, "equivalence transitive"))

        # Triple for domination: a chain of compressions plus a rotated copy of the top.
        E = random_interval_element(Q, rng)
        F = E @ E  # F <= E since 0 <= E <= I and they commute
        maps = (Phi.compose_left(random_unitary(q, rng)), compress(Q, E.sqrt()), compress(Q, F.sqrt()), Phi)
        dom = {(x, y): dominates(maps[x], maps[y]).dominated for x in range(4) for y in range(4)}
        for x in range(4):
            if not dom[x, x]:
                violations.append((i, "domination reflexive"))
            for y in range(4):
                if dom[x, y] and dom[y, x] and not equivalent(maps[x], maps[y]):
                    violations.append((i, "mutual domination implies equivalence"))
                for z in range(4):
                    if dom[x, y] and dom[y, z] and not dom[x, z]:
                        violations.append((i, "domination transitive"))
        if not (dom[2, 1] and dom[1, 3] and dom[0, 3] and dom[3, 0]):
            violations.append((i, "constructed chain not recognised"))
    assert violations == []


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
