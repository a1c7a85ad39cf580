import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm, sqrtm

from ncspecflow import matfun
from ncspecflow.errors import NotHermitian, SamplingTooCoarse, SingularSample
from ncspecflow.fixtures import random_hermitian, random_unitary

TOL = 1e-10


def test_check_hermitian_rejects_skew():
    with pytest.raises(NotHermitian):
        matfun.check_hermitian(np.array([[0, 1], [-1, 0]], dtype=complex))


def test_eig_reconstructs(rng):
    H = random_hermitian(rng, 6)
    e = matfun.eig_hermitian(H)
    assert_allclose(e.reconstruct(), H, atol=TOL)
    assert np.all(np.diff(e.values) >= 0)


def test_gauge_is_deterministic(rng):
    H = random_hermitian(rng, 5)
    e1 = matfun.eig_hermitian(H)
    # same matrix, eigenvectors returned in the same gauge every call
    e2 = matfun.eig_hermitian(H.copy())
    assert_allclose(e1.vectors, e2.vectors, atol=TOL)
    big = np.argmax(np.abs(e1.vectors), axis=0)
    assert_allclose(np.imag(e1.vectors[big, np.arange(5)]), 0, atol=TOL)
    assert np.all(np.real(e1.vectors[big, np.arange(5)]) > 0)


def test_degenerate_cluster_gets_orthonormal_basis():
    H = np.diag([1.0, 1.0, 2.0]).astype(complex)
    e = matfun.eig_hermitian(H)
    assert_allclose(e.vectors.conj().T @ e.vectors, np.eye(3), atol=TOL)
    assert_allclose(e.reconstruct(), H, atol=TOL)


def test_functional_calculus_matches_expm(rng):
    # [DERIVED] scipy's Pade expm and sqrtm as independent oracles
    H = random_hermitian(rng, 4)
    assert_allclose(matfun.functional_calculus(H, lambda w: np.exp(1j * w)), expm(1j * H), atol=1e-9)
    A = H @ H + np.eye(4)
    assert_allclose(matfun.functional_calculus(A, np.sqrt), sqrtm(A), atol=1e-9)


def test_spectral_projection():
    H = np.diag([-2.0, -0.5, 0.5, 3.0]).astype(complex)
    P = matfun.spectral_projection(H, -1.0, 1.0)
    assert_allclose(P, np.diag([0, 1, 1, 0]), atol=TOL)


def test_signature_counts():
    assert matfun.signature(np.diag([1.0, -2.0, 0.0, 3.0])) == (2, 1, 1)


@pytest.mark.parametrize("k", [-3, -1, 0, 1, 2, 5])
def test_det_winding_of_scalar_loops(k):
    th = 2 * np.pi * np.arange(64) / 64
    assert matfun.det_phase_winding(np.exp(1j * k * th)) == k


def test_det_winding_multiplicative(rng):
    th = 2 * np.pi * np.arange(48) / 48
    loop = np.array([np.diag([np.exp(2j * a), np.exp(-1j * a), 1.0]) for a in th])
    V = random_unitary(rng, 3)
    assert matfun.det_phase_winding(V @ loop @ V.conj().T) == 1


def test_det_winding_refuses_coarse_sampling():
    th = 2 * np.pi * np.arange(8) / 8
    with pytest.raises(SamplingTooCoarse):
        matfun.det_phase_winding(np.exp(3j * th))


def test_det_winding_refuses_singular_sample():
    with pytest.raises(SingularSample):
        matfun.det_phase_winding(np.array([1.0, 0.0, -1.0]))


def test_match_overlaps_recovers_permutation(rng):
    V = random_unitary(rng, 5)
    perm = np.array([3, 0, 4, 1, 2])
    W = np.empty_like(V)
    W[:, perm] = V
    assert np.array_equal(matfun.match_overlaps(V, W), perm)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2**31))
def test_functional_calculus_is_spectral(m, seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(rng, m, 3.0)
    F = matfun.functional_calculus(H, np.tanh)
    assert_allclose(np.linalg.eigvalsh(F), np.sort(np.tanh(np.linalg.eigvalsh(H))), atol=1e-9)
    assert_allclose(F @ H, H @ F, atol=1e-9)
