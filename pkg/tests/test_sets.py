"""Projections, membership, and normal-cone characterization."""

import numpy as np
import pytest

from pdopt.sets import Ball, Box, HalfSpace, ProductSet, WholeSpace, in_normal_cone

SQRT2 = np.sqrt(2.0)


def all_variants():
    return [
        WholeSpace(2),
        Ball([0.0, 0.0], SQRT2),
        Ball([1.0, -2.0], 0.7),
        HalfSpace([-1.0, 0.0], 1.0),
        HalfSpace([0.0, 1.0], -0.5),
        HalfSpace([2.0, 3.0], 4.0),
        Box([-1.0, 0.0], [2.0, 1.5]),
        Box([-np.inf, -1.0], [0.0, np.inf]),
    ]


def test_ball_radial_projection():
    ball = Ball([0.0, 0.0], SQRT2)
    assert np.allclose(ball.project([2.0, 2.0]), [1.0, 1.0], atol=1e-15)


def test_half_space_clamp():
    hs = HalfSpace([-1.0, 0.0], 1.0)  # x_1 >= -1
    assert np.allclose(hs.project([-2.0, 0.0]), [-1.0, 0.0], atol=1e-15)


def test_projection_identity_inside():
    for s in all_variants():
        x = s.project(np.array([0.3, -0.7]))
        assert np.array_equal(s.project(x), x)


def test_product_projection_golden():
    product = ProductSet([Ball([0.0, 0.0], SQRT2), HalfSpace([-1.0, 0.0], 1.0), HalfSpace([0.0, 1.0], -0.5)])
    X = np.array([[2.0, 2.0], [-2.0, 0.0], [0.0, 0.0]])
    expected = np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -0.5]])
    assert np.allclose(product.project(X), expected, atol=1e-15)


def test_product_whole_space_identity():
    product = ProductSet([WholeSpace(2), WholeSpace(2)])
    X = np.array([[1.0, 2.0], [3.0, -4.0]])
    assert np.array_equal(product.project(X), X)
    assert product.is_whole_space()


def test_product_single_ball_inside():
    product = ProductSet([Ball([0.0, 0.0], 1.0)])
    X = np.array([[0.25, -0.25]])
    assert np.array_equal(product.project(X), X)


def test_product_dimension_mismatch():
    product = ProductSet([WholeSpace(2), WholeSpace(2)])
    with pytest.raises(ValueError):
        product.project(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        ProductSet([WholeSpace(2), WholeSpace(3)])


def test_contains_examples():
    assert Ball([0.0, 0.0], SQRT2).contains([1.0, 1.0])
    assert not HalfSpace([0.0, 1.0], -0.5).contains([0.0, 0.0])
    assert Box([0.0, 0.0], [1.0, 1.0]).contains([0.5, 0.5])
    assert Box([-np.inf, -1.0], [0.0, np.inf]).contains([-100.0, 1e9])


def test_box_requires_ordered_bounds():
    with pytest.raises(ValueError):
        Box([1.0], [0.0])
    with pytest.raises(ValueError):
        Ball([0.0], 0.0)
    with pytest.raises(ValueError):
        HalfSpace([0.0, 0.0], 1.0)


def _random_points(rng, count):
    return rng.uniform(-4.0, 4.0, size=(count, 2))


@pytest.mark.parametrize("s", all_variants(), ids=lambda s: repr(s))
def test_projection_idempotent(s):
    rng = np.random.default_rng(42)
    x = _random_points(rng, 10_000)
    p = s.project(x)
    assert np.max(np.linalg.norm(s.project(p) - p, axis=-1)) <= 1e-12


@pytest.mark.parametrize("s", all_variants(), ids=lambda s: repr(s))
def test_projection_nonexpansive(s):
    rng = np.random.default_rng(43)
    x = _random_points(rng, 10_000)
    y = _random_points(rng, 10_000)
    lhs = np.linalg.norm(s.project(x) - s.project(y), axis=-1)
    rhs = np.linalg.norm(x - y, axis=-1)
    assert np.all(lhs <= rhs + 1e-12)


@pytest.mark.parametrize("s", all_variants(), ids=lambda s: repr(s))
def test_projection_variational_inequality(s):
    # <x - Px, z - Px> <= 0 for any z in the set (sampled by projection)
    rng = np.random.default_rng(44)
    x = _random_points(rng, 10_000)
    z = s.project(_random_points(rng, 10_000))
    px = s.project(x)
    inner = np.sum((x - px) * (z - px), axis=-1)
    assert np.max(inner) <= 1e-9


def test_normal_cone_interior_zero_vector():
    ball = Ball([0.0, 0.0], 1.0)
    assert in_normal_cone(ball, [0.1, 0.2], [0.0, 0.0])


def test_normal_cone_interior_rejects_nonzero():
    ball = Ball([0.0, 0.0], 1.0)
    assert not in_normal_cone(ball, [0.1, 0.2], [0.05, 0.0])


def test_normal_cone_boundary_radial():
    ball = Ball([0.0, 0.0], 1.0)
    # outward radial direction at (1, 0): P{(1.5, 0)} = (1, 0)
    assert in_normal_cone(ball, [1.0, 0.0], [0.5, 0.0])
    assert not in_normal_cone(ball, [1.0, 0.0], [0.0, 0.5])


def test_normal_cone_requires_membership():
    with pytest.raises(ValueError):
        in_normal_cone(Ball([0.0, 0.0], 1.0), [2.0, 0.0], [1.0, 0.0])


@pytest.mark.parametrize(
    "s", [Ball([0.0, 0.0], SQRT2), HalfSpace([2.0, 3.0], 4.0), Box([-1.0, 0.0], [2.0, 1.5])], ids=lambda s: repr(s)
)
def test_normal_cone_projection_consistency(s):
    # v = t (x - Px) for exterior x is normal at Px for every t >= 0, and
    # any such accepted direction must project straight back onto Px
    rng = np.random.default_rng(45)
    checked = 0
    for _ in range(300):
        x = rng.uniform(-6.0, 6.0, size=2)
        px = s.project(x)
        v = x - px
        if np.linalg.norm(v) < 1e-9:
            continue
        checked += 1
        for t in (0.5, 1.0, 3.0):
            assert in_normal_cone(s, px, t * v)
            assert np.linalg.norm(s.project(px + t * v) - px) <= 1e-9 * (1 + t * np.linalg.norm(v))
        # a tangential move of the same size is not normal
        tangent = np.array([-v[1], v[0]])
        assert not in_normal_cone(s, px, tangent)
    assert checked > 100
