import numpy as np
import pytest
from numpy.testing import assert_allclose

from ncspecflow.algebra import AElement, AlgebraShape, Evaluation, loop, scalar
from ncspecflow.errors import GapHitsSpectrum, NoGapFound, NotHermitian, NotNormalizing
from ncspecflow.fixtures import divergence_path, random_invertible_hermitian, random_path
from ncspecflow.oppath import (
    HermPath,
    find_segments,
    normalizing_transform,
    trivializing_operator,
    validate_path,
)

SHAPE = AlgebraShape((scalar(2), loop(1, 16)))


def _line(a, b, n=33):
    t = np.linspace(0, 1, n)
    return HermPath(AlgebraShape((scalar(1),)), 1, t, [((1 - t) * a + t * b).reshape(-1, 1, 1, 1)])


def test_rejects_bad_grid():
    with pytest.raises(ValueError):
        HermPath(AlgebraShape((scalar(1),)), 1, [0.0, 0.7], [np.zeros((2, 1, 1, 1))])


def test_rejects_non_hermitian():
    B = np.array([[[[0, 1], [0, 0]]]] * 2, dtype=complex)
    with pytest.raises(NotHermitian):
        HermPath(AlgebraShape((scalar(2),)), 1, [0, 1], [B])


def test_valid_path_verdict():
    v = validate_path(_line(-1.0, 1.0))
    assert v.verdict == "valid"
    assert_allclose(v.endpoint_gap, 1.0)


def test_singular_endpoint_is_invalid():
    assert validate_path(_line(0.0, 1.0)).verdict == "invalid"


def test_coarse_path_needs_refinement():
    assert validate_path(_line(-1.0, 1.0, n=3)).verdict == "refine"


def test_divergence_fixture_is_never_valid():
    for dim in (8, 16, 32):
        assert validate_path(divergence_path(dim)).verdict != "valid"


def test_interp_and_resample(rng):
    p = random_path(rng, SHAPE, 1, n_samples=9)
    q = p.resampled(np.linspace(0, 1, 17))
    assert_allclose(q.blocks[0][::2], p.blocks[0], atol=1e-12)
    assert_allclose(q.blocks[1][1], 0.5 * (p.blocks[1][0] + p.blocks[1][1]), atol=1e-12)


def test_eigen_curves_follow_crossings():
    # two diagonal eigenvalues crossing; matched curves keep their identity
    t = np.linspace(0, 1, 21)
    B = np.array([np.diag([1 - 2 * tv, -1 + 2 * tv]) for tv in t])[:, None]
    p = HermPath(AlgebraShape((scalar(2),)), 1, t, [B])
    curves = p.eigen_curves(0)[:, 0]
    assert_allclose(curves[:, 0], -1 + 2 * t, atol=1e-12)
    assert_allclose(curves[:, 1], 1 - 2 * t, atol=1e-12)


def test_path_functoriality_shapes(rng):
    p = random_path(rng, SHAPE, 1, n_samples=9)
    q = p.apply(Evaluation(1, 3))
    assert q.shape == AlgebraShape((scalar(2), scalar(1)))
    assert_allclose(q.blocks[1][:, 0], p.blocks[1][:, 3])


def test_normalizing_transform_keeps_signs(rng):
    p = random_path(rng, SHAPE, 1, n_samples=9)
    q = normalizing_transform(p, np.arctan)
    for b in range(2):
        assert np.array_equal(np.sign(p.eigenvalues(b)), np.sign(q.eigenvalues(b)))


@pytest.mark.parametrize("f", [np.cos, lambda x: -x, lambda x: x ** 2, lambda x: x + 0.1])
def test_normalizing_transform_rejects(f, rng):
    p = random_path(rng, SHAPE, 1, n_samples=5)
    with pytest.raises(NotNormalizing):
        normalizing_transform(p, f)


def test_trivializing_operator_inverts(rng):
    D = random_invertible_hermitian(rng, SHAPE, 2, gap=0.3)
    A = trivializing_operator(D, 0.9)
    for B, Ab in zip(D.blocks, A.blocks):
        w = np.linalg.eigvalsh(B + Ab)
        assert np.abs(w).min() > 1e-6
        # eigenvalues inside [-a, a] move up by 2a
        w0 = np.linalg.eigvalsh(B)
        expected = np.sort(np.where(np.abs(w0) <= 0.9, w0 + 1.8, w0), axis=-1)
        assert_allclose(w, expected, atol=1e-10)


def test_trivializing_operator_gap_hit():
    D = AElement(AlgebraShape((scalar(2),)), 1, (np.diag([0.5, -1.0]),))
    with pytest.raises(GapHitsSpectrum):
        trivializing_operator(D, 0.5)


def test_segments_cover_grid(rng):
    p = random_path(rng, SHAPE, 2)
    segs = find_segments(p)
    assert segs[0].start == 0 and segs[-1].stop == p.n_samples - 1
    assert all(a.stop == b.start for a, b in zip(segs, segs[1:]))
    assert all(s.level > 0 for s in segs)


def test_segments_random_strategy_covers_grid(rng):
    p = random_path(rng, SHAPE, 2)
    segs = find_segments(p, strategy="random", rng=np.random.default_rng(1))
    assert segs[0].start == 0 and segs[-1].stop == p.n_samples - 1


def test_segments_refuse_singular_endpoint():
    with pytest.raises(NoGapFound):
        find_segments(_line(0.0, 1.0))
