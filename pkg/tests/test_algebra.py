import numpy as np
import pytest
from numpy.testing import assert_allclose

from ncspecflow.algebra import (
    AElement,
    AlgebraShape,
    Composite,
    Evaluation,
    Inclusion,
    KOneClass,
    KZeroClass,
    Permutation,
    Rotation,
    direct_sum,
    loop,
    pushforward,
    scalar,
)
from ncspecflow.errors import ShapeMismatch, UnsupportedHomomorphism

SHAPE = AlgebraShape((scalar(2), loop(1, 8)))


def test_loop_needs_eight_samples():
    with pytest.raises(ValueError):
        loop(1, 4)


def test_shape_roundtrip():
    assert AlgebraShape.from_dict(SHAPE.to_dict()) == SHAPE


def test_element_shapes_checked():
    with pytest.raises(ShapeMismatch):
        AElement(SHAPE, 1, (np.eye(2), np.eye(1)))


def test_element_arithmetic():
    I = AElement.identity(SHAPE, 2)
    Z = AElement.zeros(SHAPE, 2)
    assert (I + Z).allclose(I)
    assert (I - I).allclose(Z)
    assert (I @ I).allclose(I)
    assert_allclose(I.scale(2.0).norm(), 2.0)


def test_direct_sum_blocks():
    x = AElement.identity(SHAPE, 1)
    y = AElement.zeros(SHAPE, 2)
    s = direct_sum(x, y)
    assert s.rank == 3
    assert_allclose(s.blocks[0][0], np.diag([1, 1, 0, 0, 0, 0]))


def test_k1_rejects_scalar_component():
    with pytest.raises(ValueError):
        KOneClass(SHAPE, (1, 0))


def test_k_group_operations():
    a = KZeroClass(SHAPE, (1, 2))
    b = KZeroClass(SHAPE, (3, -1))
    assert (a + b).components == (4, 1)
    assert (a - b).components == (-2, 3)
    assert (-a).components == (-1, -2)
    assert KZeroClass.zero(SHAPE).components == (0, 0)


def test_evaluation_sends_k1_to_zero():
    c = KOneClass(SHAPE, (0, 3))
    img = pushforward(c, Evaluation(1, 2))
    assert img.components == (0, 0)
    assert img.shape == AlgebraShape((scalar(2), scalar(1)))
    assert pushforward(KZeroClass(SHAPE, (1, 4)), Evaluation(1, 0)).components == (1, 4)


def test_evaluation_picks_sample():
    x = AElement.from_function(SHAPE, 1, lambda b, th: np.eye(2 if b == 0 else 1) * (1 + np.cos(th)))
    y = Evaluation(1, 2).apply(x)
    assert_allclose(y.blocks[1][0], [[1 + np.cos(np.pi / 2)]])


def test_rotation_rolls_theta():
    x = AElement.from_function(SHAPE, 1, lambda b, th: np.eye(2 if b == 0 else 1) * th)
    y = Rotation(1, 3).apply(x)
    assert_allclose(y.blocks[1][0, 0, 0], 3 * 2 * np.pi / 8)


def test_rotation_requires_loop():
    with pytest.raises(UnsupportedHomomorphism):
        Rotation(0, 1).target(SHAPE)


def test_permutation_and_inclusion():
    c = KZeroClass(SHAPE, (5, 7))
    assert pushforward(c, Permutation((1, 0))).components == (7, 5)
    inc = Inclusion((0, None, 1, 0), extra=((1, scalar(3)),))
    assert pushforward(c, inc).components == (5, 0, 7, 5)
    x = inc.apply(AElement.identity(SHAPE, 1))
    assert_allclose(x.blocks[1], 0)


def test_composite_matches_sequential():
    homs = (Rotation(1, 2), Permutation((1, 0)), Evaluation(0, 1))
    c = KOneClass(SHAPE, (0, 2))
    step = c
    for h in homs:
        step = pushforward(step, h)
    assert pushforward(c, Composite(homs)) == step


def test_unknown_homomorphism_rejected():
    with pytest.raises(UnsupportedHomomorphism):
        pushforward(KZeroClass(SHAPE, (0, 0)), object())
