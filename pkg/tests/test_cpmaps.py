import numpy as np
import pytest

from cpmod.cpmaps import (
    CPMap,
    ModuleCPMap,
    arveson_compress,
    choi,
    commutator_residual,
    derive_underlying,
    gns_stinespring,
    is_completely_positive,
    is_nondegenerate_map,
    validate_module_cp,
)
from cpmod.errors import NotAModuleCPMap, NotCP, NotInCommutant, NotPSD, ShapeMismatch
from cpmod.fixtures import ex26_maps, ex27_maps, identity_map
from cpmod.numerics import adjoint, max_abs, null_space, numerical_rank, projector_onto_span
from cpmod.oracle import random_module_cp_map

from conftest import random_map


def ex26_phi(a):
    return np.array([[a[0, 0], a[0, 1] / 2], [a[1, 0] / 2, a[1, 1]]])


def ex27_phi(a):
    return np.array([[2 * a[0, 0], 0], [0, 3 * a[1, 1]]])


def test_choi_examples():
    ident = CPMap.from_function(2, 2, lambda a: a)
    expected = np.zeros((4, 4))
    expected[np.ix_([0, 3], [0, 3])] = 1
    assert np.array_equal(choi(ident), expected)

    C = choi(CPMap.from_function(2, 2, ex26_phi))
    expected = np.array([[1, 0, 0, 0.5], [0, 0, 0, 0], [0, 0, 0, 0], [0.5, 0, 0, 1]])
    assert np.allclose(C, expected, atol=0)

    C = choi(CPMap.from_function(2, 2, ex27_phi))
    assert np.allclose(C[:2, :2], np.diag([2, 0]))
    assert np.allclose(C[2:, 2:], np.diag([0, 3]))
    assert np.allclose(C[:2, 2:], 0) and np.allclose(C[2:, :2], 0)


def test_complete_positivity():
    assert is_completely_positive(CPMap(np.zeros((2, 2, 3, 3))))
    transpose = CPMap.from_function(2, 2, lambda a: a.T)
    assert not is_completely_positive(transpose)
    # Choi of the transpose map is the swap operator, with eigenvalue -1.
    assert np.linalg.eigvalsh(choi(transpose))[0] == pytest.approx(-1.0)
    assert is_completely_positive(CPMap.from_function(2, 2, ex26_phi))


def test_cpmap_is_linear(rng):
    phi = CPMap.from_function(3, 2, lambda a: np.kron(a, np.eye(2))[:2, :2])
    a, b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    assert np.allclose(phi(a + 2 * b), phi(a) + 2 * phi(b))


@pytest.mark.parametrize("builder,phi_fn", [(ex26_maps, ex26_phi), (ex27_maps, ex27_phi)])
def test_underlying_map_of_examples(builder, phi_fn):
    for Phi in builder():
        report = validate_module_cp(Phi)
        assert report.is_valid
        expected = CPMap.from_function(2, 2, phi_fn)
        assert max_abs(report.phi.images - expected.images) <= 1e-10
        phi, residual = derive_underlying(Phi)
        assert residual <= 1e-10
        assert max_abs(phi.images - expected.images) <= 1e-10


def test_identity_underlying():
    phi, _ = derive_underlying(identity_map())
    assert np.allclose(phi.images, CPMap.from_function(2, 2, lambda a: a).images)


def test_inconsistent_map_is_invalid():
    images = np.zeros((2, 2, 2, 2), dtype=complex)
    images[0, 0] = np.eye(2)
    Phi = ModuleCPMap(images)
    report = validate_module_cp(Phi)
    assert not report.is_valid
    assert report.residual > 0.5
    with pytest.raises(NotAModuleCPMap):
        derive_underlying(Phi)


def test_underlying_is_row_independent(rng):
    for _ in range(10):
        Phi = random_module_cp_map(2, 3, 2, 4, rng)
        phi, _ = derive_underlying(Phi)
        second = np.einsum("sji,tjk->stik", Phi.images[1].conj(), Phi.images[1])
        assert max_abs(second - phi.images) <= 1e-10


def test_underlying_choi_is_psd_for_random_maps(rng):
    for _ in range(20):
        report = validate_module_cp(random_map(rng))
        assert report.is_valid
        assert report.choi_min_eigenvalue > -1e-12


def test_nondegeneracy_of_examples():
    Phi, Psi = ex26_maps()
    assert is_nondegenerate_map(Phi) and is_nondegenerate_map(Psi)
    Phi, Psi = ex27_maps()
    assert not is_nondegenerate_map(Phi)
    assert not is_nondegenerate_map(Psi)
    assert numerical_rank(Psi.image_vectors()) == 4


def test_ex27_spans():
    Phi, Psi = ex27_maps()
    P = projector_onto_span(Phi.image_vectors())
    assert np.allclose(P, np.diag([1, 1, 0, 1, 1]), atol=1e-12)
    # Psi(X)H is cut out by the single linear constraint orthogonal to these columns.
    cols = Psi.image_vectors()
    kernel = np.linalg.svd(cols.T)[2][-1].conj()
    v = np.array([1, -1, 0, 0, 2]) / np.sqrt(6)
    assert abs(abs(np.vdot(kernel, v)) - 1) < 1e-12
    Pv = projector_onto_span(cols)
    assert np.allclose(Pv, np.eye(5) - np.outer(v, v), atol=1e-12)


def test_module_map_evaluation(rng):
    Phi = random_map(rng)
    x = rng.standard_normal((Phi.k, Phi.m)) + 1j * rng.standard_normal((Phi.k, Phi.m))
    expected = sum(x[r, s] * Phi.images[r, s] for r in range(Phi.k) for s in range(Phi.m))
    assert np.allclose(Phi(x), expected)
    assert Phi.shape == (Phi.k, Phi.m, Phi.p, Phi.q)
    assert np.allclose((2 * Phi).images, 2 * Phi.images)


def test_module_map_images_are_readonly(rng):
    Phi = random_map(rng)
    with pytest.raises(ValueError):
        Phi.images[0, 0, 0, 0] = 1


def test_gns_examples():
    D = gns_stinespring(CPMap.from_function(2, 2, lambda a: a))
    assert D.d == 2
    assert np.allclose(adjoint(D.V) @ D.V, np.eye(2))
    assert np.allclose(D.V @ adjoint(D.V), np.eye(2))
    assert gns_stinespring(CPMap.from_function(2, 2, ex26_phi)).d == 4
    zero = gns_stinespring(CPMap(np.zeros((2, 2, 2, 2))))
    assert zero.d == 0 and zero.V.shape == (0, 2)
    with pytest.raises(NotCP):
        gns_stinespring(CPMap.from_function(2, 2, lambda a: a.T))


def test_gns_dilation_properties(rng):
    for _ in range(15):
        phi, _ = derive_underlying(random_map(rng))
        D = gns_stinespring(phi)
        m = phi.m
        for s in range(m):
            for t in range(m):
                assert max_abs(phi.images[s, t] - adjoint(D.V) @ D.pi_images[s, t] @ D.V) <= 1e-9
                assert max_abs(adjoint(D.pi_images[s, t]) - D.pi_images[t, s]) <= 1e-9
                for u in range(m):
                    for v in range(m):
                        expected = D.pi_images[s, v] if t == u else 0
                        assert max_abs(D.pi_images[s, t] @ D.pi_images[u, v] - expected) <= 1e-9
        assert max_abs(sum(D.pi_images[s, s] for s in range(m)) - np.eye(D.d)) <= 1e-9
        span = [D.pi_images[s, t] @ D.V[:, u] for s in range(m) for t in range(m) for u in range(phi.p)]
        assert numerical_rank(span, dim=D.d) == D.d


def test_arveson_compression(rng):
    phi, _ = derive_underlying(random_map(rng))
    D = gns_stinespring(phi)
    assert max_abs(arveson_compress(D, np.eye(D.d)).images - phi.images) <= 1e-8
    assert max_abs(arveson_compress(D, 0.5 * np.eye(D.d)).images - 0.5 * phi.images) <= 1e-8


def test_arveson_compression_by_commutant_element(rng):
    # For phi(a) = B^* (a (x) I_r) B the commutant of pi(A) is I_m (x) M_r on the
    # Kraus space; a positive element of it pulled into H_phi compresses to a CP map.
    Phi = random_module_cp_map(1, 2, 3, 2, rng, rank=2)
    phi, _ = derive_underlying(Phi)
    D = gns_stinespring(phi)
    d = D.d
    rows = [np.kron(P, np.eye(d)) - np.kron(np.eye(d), P.T) for P in D.pi_images.reshape(-1, d, d)]
    basis = null_space(np.concatenate(rows))
    assert basis.shape[1] == 4
    X = (basis @ (rng.standard_normal(4) + 1j * rng.standard_normal(4))).reshape(d, d)
    T = X @ adjoint(X)
    assert commutator_residual(D, T) < 1e-10
    compressed = arveson_compress(D, T)
    assert is_completely_positive(compressed)


def test_arveson_errors(rng):
    phi, _ = derive_underlying(random_module_cp_map(1, 2, 2, 2, rng, rank=2))
    D = gns_stinespring(phi)
    with pytest.raises(NotPSD):
        arveson_compress(D, -np.eye(D.d))
    # A projector onto a single vector of H_phi cannot commute with pi(A) when m > 1.
    v = D.V[:, :1] / np.linalg.norm(D.V[:, 0])
    with pytest.raises(NotInCommutant):
        arveson_compress(D, v @ adjoint(v))
    with pytest.raises(ShapeMismatch):
        arveson_compress(D, np.eye(D.d + 1))
