import numpy as np
import pytest

from qszego.errors import BadAlpha, BadScale, DimMismatch, NotInDomain, OrderTooHigh, StepTooSmall
from qszego.group import (
    GroupDim, apply_word, apply_Y, b_matrix, bracket, dilate, dist, group_inv, group_mul, hom_norm, homdeg,
    join, monomial, multi_indices, pi_inv, pi_map, random_points, sub_laplacian, taylor_left, to_unit_sphere,
)

D2 = GroupDim(2)
D3 = GroupDim(3)


def e(dim, pos):
    v = np.zeros(dim.topdim)
    v[pos] = 1.0
    return v


@pytest.mark.parametrize("alpha", [1, 2, 3])
def test_structure_matrices_are_skew_and_orthogonal(alpha):
    b = b_matrix(alpha)
    assert np.array_equal(b.T, -b)
    assert np.array_equal(b @ b.T, np.eye(4, dtype=int))


def test_structure_matrices_anticommute():
    b1, b2, b3 = (b_matrix(a) for a in (1, 2, 3))
    assert np.array_equal(b1 @ b2 + b2 @ b1, np.zeros((4, 4), dtype=int))
    assert np.array_equal(b2 @ b3 + b3 @ b2, np.zeros((4, 4), dtype=int))


@pytest.mark.parametrize("alpha", [0, 4, "1"])
def test_b_matrix_rejects_bad_alpha(alpha):
    with pytest.raises(BadAlpha):
        b_matrix(alpha)


def test_product_of_two_horizontal_units():
    g = e(D2, 3)
    h = e(D2, 4)
    prod = group_mul(g, h)
    assert np.array_equal(prod, join([2.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]))
    assert np.array_equal(group_mul(h, g), join([-2.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]))


def test_bracket_is_antisymmetric(rng):
    y = rng.normal(size=(50, 8))
    yp = rng.normal(size=(50, 8))
    assert np.allclose(bracket(y, yp), -bracket(yp, y), atol=0)
    assert np.allclose(bracket(y, y), 0.0, atol=1e-14)


@pytest.mark.parametrize("dim", [D2, D3])
def test_group_axioms(dim, rng):
    g, h, k = (random_points(dim, rng, 500) for _ in range(3))
    assert np.allclose(group_mul(group_mul(g, h), k), group_mul(g, group_mul(h, k)), atol=1e-12, rtol=0)
    assert np.allclose(group_mul(g, group_inv(g)), 0.0, atol=1e-14)
    assert np.array_equal(group_mul(g, np.zeros(dim.topdim)), g)


@pytest.mark.parametrize("dim", [D2, D3])
def test_dilation_is_an_automorphism_and_norm_is_homogeneous(dim, rng):
    g, h = random_points(dim, rng, 300), random_points(dim, rng, 300)
    r = np.exp(rng.normal(size=300))
    lhs = dilate(r, group_mul(g, h))
    rhs = group_mul(dilate(r, g), dilate(r, h))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
    assert np.allclose(hom_norm(dilate(r, g)), r * hom_norm(g), rtol=1e-13)


def test_distance_is_left_invariant(rng):
    g, h, k = (random_points(D2, rng, 200) for _ in range(3))
    assert np.allclose(dist(group_mul(k, g), group_mul(k, h)), dist(g, h), rtol=1e-10)


def test_unit_sphere_projection(rng):
    g = random_points(D2, rng, 100, spread=3.0)
    assert np.allclose(hom_norm(to_unit_sphere(g)), 1.0, rtol=1e-14)


def test_bad_scale_and_dimension():
    with pytest.raises(BadScale):
        dilate(0.0, np.zeros(7))
    with pytest.raises(DimMismatch):
        group_mul(np.zeros(7), np.zeros(11))
    with pytest.raises(DimMismatch):
        D2.check(np.zeros(11))
    with pytest.raises(ValueError):
        GroupDim(1)


def test_lift_and_projection_round_trip(rng):
    g = random_points(D3, rng, 40)
    s = rng.uniform(0.1, 2.0, size=40)
    q = pi_inv(s, g)
    assert q.shape == (40, 3, 4)
    s2, g2 = pi_map(q)
    assert np.allclose(s2, s, atol=1e-13)
    assert np.allclose(g2, g, atol=1e-15)


def test_lift_of_a_known_point():
    g = join([1.0, 2.0, 3.0], [1.0, 0.0, 0.0, 1.0])
    q = pi_inv(0.5, g)
    assert np.array_equal(q[0], [2.5, 1.0, 2.0, 3.0])
    assert np.array_equal(q[1], [1.0, 0.0, 0.0, 1.0])


def test_projection_rejects_points_outside_the_domain():
    q = np.array([[0.5, 0, 0, 0], [1.0, 0, 0, 0]])
    with pytest.raises(NotInDomain):
        pi_map(q)


def test_horizontal_field_on_coordinates():
    # Y_k applied to t_alpha gives 2 sum_j b^alpha_{jk} y_j
    g = join([0.3, -0.2, 0.1], [0.5, -1.0, 0.25, 2.0])
    y = g[3:]
    for k in range(4):
        for alpha in range(3):
            got = apply_Y(D2, k, lambda p, a=alpha: p[..., a], g, h=1e-2)
            want = 2.0 * b_matrix(alpha + 1)[:, k] @ y
            assert got == pytest.approx(want, abs=1e-12)


def test_field_commutator_on_a_vertical_coordinate():
    # [Y_0, Y_1] t_1 = 4 b^1_{01}
    g = join([0.0, 0.0, 0.0], [0.2, 0.1, -0.4, 0.3])
    val = apply_word(D2, (0, 1), lambda p: p[..., 0], g, h=1e-2) - apply_word(
        D2, (1, 0), lambda p: p[..., 0], g, h=1e-2)
    assert val == pytest.approx(4.0 * b_matrix(1)[0, 1], abs=1e-9)


@pytest.mark.parametrize("dim", [D2, D3])
def test_sub_laplacian_of_simple_functions(dim, rng):
    g = random_points(dim, rng, 5)
    ysq = sub_laplacian(dim, lambda p: np.sum(p[..., 3:] ** 2, axis=-1), g, h=1e-2)
    assert np.allclose(ysq, 2 * dim.horiz, atol=1e-9)
    t1 = sub_laplacian(dim, lambda p: p[..., 0], g, h=1e-2)
    assert np.allclose(t1, 0.0, atol=1e-9)


def test_left_invariance_of_fields(rng):
    f = lambda p: np.sin(p[..., 0]) * np.cos(p[..., 3]) + p[..., 5] ** 2 * p[..., 2]
    g = random_points(D2, rng, 4)
    k0 = random_points(D2, rng, 1)[0]
    for word in [(0,), (2, 5), (4,)]:
        moved = apply_word(D2, word, lambda p: f(group_mul(k0, p)), g, h=1e-3, richardson=True)
        direct = apply_word(D2, word, f, group_mul(k0, g), h=1e-3, richardson=True)
        assert np.allclose(moved, direct, atol=1e-7)


def test_step_and_order_guards():
    g = np.zeros(7)
    with pytest.raises(StepTooSmall):
        apply_word(D2, (0, 1, 2, 3), lambda p: p[..., 0], g, h=1e-5)
    with pytest.raises(OrderTooHigh):
        apply_word(D2, (4, 5, 6), lambda p: p[..., 0], g, h=1e-2)


def test_multi_index_degrees():
    idx = multi_indices(D2, 2)
    assert idx[0] == (0,) * 7
    assert sum(1 for I in idx if homdeg(D2, I) == 1) == 4
    # degree two: 10 horizontal squares and products plus 3 vertical
    assert sum(1 for I in idx if homdeg(D2, I) == 2) == 13
    assert homdeg(D2, (0, 0, 0, 0, 1, 0, 2)) == 6


def test_monomials_are_homogeneous(rng):
    g = random_points(D2, rng, 10)
    r = 1.7
    for I in multi_indices(D2, 4):
        lhs = monomial(D2, I, dilate(r, g))
        assert np.allclose(lhs, r ** homdeg(D2, I) * monomial(D2, I, g), rtol=1e-12, atol=1e-14)


def test_left_taylor_polynomial_remainder(rng):
    f = lambda p: np.exp(0.3 * p[..., 3] - 0.2 * p[..., 0]) + p[..., 4] * p[..., 6]
    g = random_points(D2, rng, 1)[0] * 0.5
    poly = taylor_left(D2, f, g, 2, h=1e-2)
    assert poly.homdeg == 2
    u = random_points(D2, rng, 1)[0]
    errs = []
    for r in (0.1, 0.05):
        du = dilate(r, u)
        errs.append(abs(f(group_mul(g, du)) - poly(du)[0]))
    # remainder is O(r^3) in the homogeneous scale
    assert errs[1] < errs[0] / 5
