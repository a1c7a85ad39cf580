import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ncspecflow.algebra import AElement, AlgebraShape, loop, scalar
from ncspecflow.errors import NotAlmostInvolution, NotLagrangian, NotOdd, SingularEndpoint
from ncspecflow.fixtures import (
    random_almost_involution,
    random_graded_path,
    random_kernel_instance,
    random_path,
    unitary_loop,
)
from ncspecflow.oddflow import (
    GradedHermPath,
    LagrangianProjection,
    chern_from_frames,
    grading,
    odd_from_W,
    odd_rel_index,
    odd_spectral_flow,
    suspend_bounded_check,
    suspend_even_to_odd,
    suspend_odd_to_even,
    splitting_correction_check,
)
from ncspecflow.oppath import HermPath

LOOP = AlgebraShape((loop(1, 32),))


def _winding_path(w0, w1, N=32, n=17):
    th = 2 * np.pi * np.arange(N) / N
    t = np.linspace(0, 1, n)
    W = np.array([[[[(1 - tv) * np.exp(1j * w0 * a) + tv * np.exp(1j * w1 * a)]] for a in th] for tv in t])
    return GradedHermPath.from_W(AlgebraShape((loop(1, N),)), 2, t, [W])


def test_odd_from_W_anticommutes():
    W = np.array([[[1.0, 2.0], [0.5j, 1.0]]])
    X = odd_from_W(W)
    s = grading(4)
    assert_allclose(X @ s + s @ X, 0, atol=1e-14)
    assert_allclose(X, np.swapaxes(X, -1, -2).conj())


def test_even_path_rejected():
    t = np.linspace(0, 1, 5)
    with pytest.raises(NotOdd):
        GradedHermPath(HermPath(AlgebraShape((scalar(2),)), 1, t, [np.repeat(np.eye(2)[None, None], 5, 0)]))


def test_odd_flow_counts_winding_change():
    g = _winding_path(0, 2)
    assert odd_spectral_flow(g).components == (2,)


def test_odd_flow_singular_endpoint():
    th = LOOP[0].thetas()
    t = np.linspace(0, 1, 5)
    W = np.array([[[[tv * np.exp(1j * a)]] for a in th] for tv in t])
    g0 = GradedHermPath.from_W(LOOP, 2, t, [W])
    with pytest.raises(SingularEndpoint):
        odd_spectral_flow(g0)


def test_odd_rel_index_additive_and_conjugation(rng):
    th = LOOP[0].thetas()
    u = AElement(LOOP, 1, (unitary_loop(rng, 1, th, 1),))
    v = AElement(LOOP, 1, (unitary_loop(rng, 1, th, -2),))
    one = AElement(LOOP, 1, (np.ones((32, 1, 1), dtype=complex),))
    P, Q, R = (LagrangianProjection.from_unitary(x) for x in (u, v, one))
    assert odd_rel_index(P, Q).components == (3,)
    assert odd_rel_index(P, R) + odd_rel_index(R, Q) == odd_rel_index(P, Q)
    assert odd_rel_index(Q, P) == -odd_rel_index(P, Q)
    # conjugation by an even unitary diag(a, a) leaves u_P u_Q* conjugated
    a = unitary_loop(rng, 1, th, 3)
    conj = lambda x: AElement(LOOP, 1, (a @ x.blocks[0] @ np.swapaxes(a, -1, -2).conj(),))
    Pc, Qc = LagrangianProjection.from_unitary(conj(u)), LagrangianProjection.from_unitary(conj(v))
    assert odd_rel_index(Pc, Qc) == odd_rel_index(P, Q)


def test_lagrangian_projection_rejects_even():
    P = AElement(AlgebraShape((scalar(2),)), 1, (np.diag([1.0, 0.0]),))
    with pytest.raises(NotLagrangian):
        LagrangianProjection(P)


def test_chern_of_trivial_frames():
    frames = np.zeros((8, 8, 2, 1), dtype=complex)
    frames[..., 0, 0] = 1
    assert chern_from_frames(frames) == 0


def test_suspend_even_to_odd(rng):
    shape = AlgebraShape((scalar(2), scalar(1)))
    for _ in range(3):
        res = suspend_even_to_odd(random_path(rng, shape, 1, n_samples=97))
        assert res["equal"]


def test_suspend_odd_to_even(rng):
    for w in ((0, 1), (1, -1)):
        g = random_graded_path(rng, AlgebraShape((loop(2, 32),)), 1, windings=[w])
        res = suspend_odd_to_even(g)
        assert res["odd_flow"] == [w[1] - w[0]]
        assert res["equal"]


def test_suspend_bounded(rng):
    F = random_almost_involution(rng, AlgebraShape((loop(2, 16), scalar(1))), 1)
    res = suspend_bounded_check(F)
    assert res["odd_flow"] == res["exp_winding"] == [0, 0]


def test_suspend_bounded_rejects():
    F = AElement(AlgebraShape((scalar(1),)), 1, (np.array([[0.5]]),))
    with pytest.raises(NotAlmostInvolution):
        suspend_bounded_check(F)


def test_splitting_correction(rng):
    for w in (1, -2):
        D, L0, L1 = random_kernel_instance(rng, winding=w)
        res = splitting_correction_check(D, L0, L1, kernel_rank=1)
        assert res["equal"] and abs(res["pair_class"][0]) == abs(w)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=-3, max_value=3), st.integers(min_value=-3, max_value=3),
       st.integers(min_value=0, max_value=2**31))
def test_property_odd_flow_is_winding_difference(w0, w1, seed):
    g = random_graded_path(np.random.default_rng(seed), AlgebraShape((loop(2, 32),)), 1, windings=[(w0, w1)])
    assert odd_spectral_flow(g).components == (w1 - w0,)
