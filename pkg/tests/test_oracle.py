import numpy as np
import pytest
from numpy.testing import assert_allclose

from ncspecflow import _signs
from ncspecflow.algebra import AlgebraShape, scalar
from ncspecflow.errors import ScanTooCoarse
from ncspecflow.fixtures import divergence_path, random_path, random_unitary
from ncspecflow.maslov import LagrangianPath, interval_spectrum, maslov_pair
from ncspecflow.oracle import (
    SIGN_NAMES,
    ShootingConfig,
    dense_crossing_oracle,
    naive_crossing_count,
    pin_sign_constants,
    shooting_matrix,
    shooting_maslov,
    shooting_spectrum,
)
from ncspecflow.specflow import spectral_flow

TOL_DIP = 1e-8


def test_shooting_matrix_is_singular_on_spectrum(rng):
    u0, u1 = random_unitary(rng, 2), random_unitary(rng, 2)
    for lam in interval_spectrum(u0.conj().T @ u1, (-np.pi, np.pi)):
        assert np.linalg.svd(shooting_matrix(u0, u1, lam), compute_uv=False)[-1] < 1e-10


def test_shooting_matches_interval_spectrum(rng):
    for _ in range(5):
        u0, u1 = random_unitary(rng, 3), random_unitary(rng, 3)
        dips = shooting_spectrum(u0, u1)
        lam = interval_spectrum(u0.conj().T @ u1, (-np.pi, np.pi))
        assert dips.size == lam.size
        assert_allclose(dips, lam, atol=TOL_DIP)


def test_shooting_resolves_close_pair():
    u0 = np.eye(2)
    u1 = np.diag(np.exp(1j * np.array([0.4, 0.4 + 2e-4])))
    dips = shooting_spectrum(u0, u1)
    lam = interval_spectrum(u1, (-np.pi, np.pi))
    assert_allclose(dips, lam, atol=TOL_DIP)


def test_window_end_on_spectrum():
    with pytest.raises(ScanTooCoarse):
        shooting_spectrum(np.eye(1), np.eye(1), ShootingConfig(window=(0.0, 1.0)))


def test_too_few_cells_rejected():
    with pytest.raises(ValueError):
        ShootingConfig(cells=2).n_cells(3)


def test_shooting_maslov_rotation():
    shape = AlgebraShape((scalar(1),))
    t = np.linspace(0, 1, 40)
    u0 = np.ones((40, 1, 1, 1), dtype=complex)
    u1 = np.exp(1j * (np.pi + 2 * np.pi * t)).reshape(-1, 1, 1, 1)
    lp = LagrangianPath(shape, 1, t, [u0], [u1])
    assert shooting_maslov(lp) == maslov_pair(lp)[0]


def test_dense_oracle_matches_flow(rng):
    shape = AlgebraShape((scalar(3),))
    for _ in range(5):
        p = random_path(rng, shape, 1)
        assert dense_crossing_oracle(p) == spectral_flow(p).value


def test_naive_counts_grow_on_divergence_fixture():
    counts = [naive_crossing_count(divergence_path(d)) for d in (8, 16, 32)]
    assert counts[0] < counts[1] < counts[2]


def test_pinned_constants_match_frozen_record():
    rec = pin_sign_constants()
    assert rec == {k: getattr(_signs, k) for k in SIGN_NAMES}
