import numpy as np
import pytest

from cpmod.compare import CommutantElement, commutant
from cpmod.numerics import eigh_desc
from cpmod.oracle import random_module_cp_map, random_shape


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_map(rng, max_dim=4, rank=None):
    k, m, p, q = random_shape(rng, max_dim)
    return random_module_cp_map(k, m, p, q, rng, rank=rank)


def apply_function(E: CommutantElement, f) -> CommutantElement:
    # f(T (+) S) = f(T) (+) f(S); the commutant is closed under functional calculus.
    def fn(M):
        w, U = eigh_desc((M + M.conj().T) / 2)
        return (U * f(w)) @ U.conj().T

    return CommutantElement(fn(E.T), fn(E.S))


def joint_spectrum(E: CommutantElement) -> np.ndarray:
    return np.concatenate([np.linalg.eigvalsh((E.T + E.T.conj().T) / 2), np.linalg.eigvalsh((E.S + E.S.conj().T) / 2)])


def random_hermitian_element(Q, rng) -> CommutantElement:
    basis = commutant(Q)
    coeffs = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    E = basis.combination(coeffs)
    return (E + E.adjoint()) * 0.5


def random_interval_element(Q, rng, low=0.0, high=1.0) -> CommutantElement:
    """Random commutant element with joint spectrum rescaled onto ``[low, high]``."""
    H = random_hermitian_element(Q, rng)
    eigs = joint_spectrum(H)
    lo, hi = eigs.min(), eigs.max()
    if hi - lo < 1e-12:
        return apply_function(H, lambda w: np.full_like(w, high))
    return apply_function(H, lambda w: low + (high - low) * (w - lo) / (hi - lo))


def random_rank_deficient_element(Q, rng) -> CommutantElement | None:
    """``max(x - c, 0)`` of a random element, normalized into ``[0, I]``; None if the commutant is trivial."""
    H = random_hermitian_element(Q, rng)
    eigs = joint_spectrum(H)
    lo, hi = eigs.min(), eigs.max()
    if hi - lo < 1e-6:
        return None
    c = (lo + hi) / 2
    return apply_function(H, lambda w: np.maximum(w - c, 0.0) / (hi - c))



# -- acceptance summary -------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {verdict}: {title}")
