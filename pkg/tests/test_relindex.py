import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncspecflow.algebra import AElement, AlgebraShape, loop, scalar
from ncspecflow.errors import NonConstantRank, NotProjection
from ncspecflow.fixtures import random_projection, random_unitary_element
from ncspecflow.relindex import (
    ProjectionPair,
    rel_index,
    rel_index_axiom_suite,
    rel_index_crossing,
    rel_index_fredholm,
)

SHAPE = AlgebraShape((scalar(2), loop(1, 16)))


def test_rejects_non_projection():
    with pytest.raises(NotProjection):
        rel_index(AElement(AlgebraShape((scalar(1),)), 1, (np.array([[0.5]]),)),
                  AElement(AlgebraShape((scalar(1),)), 1, (np.array([[1.0]]),)))


def test_rank_jump_in_theta_rejected():
    shape = AlgebraShape((loop(1, 8),))
    B = np.array([[[1.0 if j < 4 else 0.0]] for j in range(8)])
    P = AElement(shape, 1, (B,))
    with pytest.raises(NonConstantRank):
        ProjectionPair(P, P)


def test_diagonal_examples():
    shape = AlgebraShape((scalar(3),))
    P = AElement(shape, 1, (np.diag([1.0, 1.0, 0.0]),))
    Q = AElement(shape, 1, (np.diag([0.0, 0.0, 1.0]),))
    assert rel_index(P, Q).components == (1,)
    assert rel_index(Q, P).components == (-1,)
    Z = AElement.zeros(shape, 1)
    assert rel_index(P, Z).components == (2,)


def test_constructions_agree(rng):
    for _ in range(20):
        pp = ProjectionPair(random_projection(rng, SHAPE, 2), random_projection(rng, SHAPE, 2))
        assert rel_index_fredholm(pp) == rel_index_crossing(pp)


def test_conjugation_invariance(rng):
    P, Q = random_projection(rng, SHAPE, 2), random_projection(rng, SHAPE, 2)
    U = random_unitary_element(rng, SHAPE, 2, windings=[0, 2])
    conj = lambda X: U @ X @ U.adjoint()
    assert rel_index(conj(P), conj(Q)) == rel_index(P, Q)


def test_axiom_suite_passes():
    report = rel_index_axiom_suite(SHAPE, trials=10, seed=3)
    assert report.ok, report.failures
    assert set(report.passed) >= {"uniqueness", "additivity", "antisymmetry", "stabilization",
                                  "normalization", "conjugation", "functoriality"}


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31))
def test_property_antisymmetry_and_cocycle(seed):
    rng = np.random.default_rng(seed)
    P, Q, R = (random_projection(rng, SHAPE, 2) for _ in range(3))
    assert rel_index(Q, P) == -rel_index(P, Q)
    assert rel_index(P, Q) + rel_index(Q, R) == rel_index(P, R)
