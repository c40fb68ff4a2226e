import numpy as np
import pytest

from qszego.errors import DiagonalSingularity, ZeroArgument
from qszego.group import GroupDim, dilate, group_mul, random_points
from qszego.kernel import (
    KernelContext, kernel_argument, kernel_boundary, kernel_upper, oracle_form, s_oracle, s_quat, s_slice,
    s_slice_series,
)
from qszego.quaternion import I, J, K, ONE, quat, quat_abs

# frozen from the symbolic route (exact integer arithmetic on the rational form)
PINNED_N2 = [
    (ONE, 12 * ONE),
    (I, 4 * I),
    (ONE + I, -I),
    (ONE + J, -J),
]


@pytest.mark.parametrize("arg,want", PINNED_N2)
@pytest.mark.parametrize("c", [1.0, 2.5])
def test_pinned_values(arg, want, c):
    ctx = KernelContext.for_n(2, c)
    assert np.allclose(s_quat(ctx, arg), c * want, atol=1e-13)
    assert np.allclose(s_oracle(ctx, arg), c * want, atol=0)


def test_oracle_form_shape_for_n2():
    form = oracle_form(2)
    assert len(form.numerator) == 16
    assert form.degree == 3
    assert form.denom_power == 4


@pytest.mark.parametrize("n", [2, 3, 4])
def test_closed_form_matches_symbolic_route(n, rng):
    ctx = KernelContext.for_n(n)
    xi = rng.normal(size=(300, 4)) * np.exp(rng.normal(size=(300, 1)))
    a = s_quat(ctx, xi)
    b = s_oracle(ctx, xi)
    rel = quat_abs(a - b) / quat_abs(b)
    assert rel.max() < 1e-9


def test_slice_forms_agree_in_the_right_half_plane(ctx3):
    z = np.array([0.5 + 0.5j, 2.0 - 0.1j, 1.0 + 3.0j, 0.01 + 0.3j])
    assert np.allclose(s_slice(ctx3, z), s_slice_series(ctx3, z), rtol=1e-12)
    with pytest.raises(ValueError):
        s_slice_series(ctx3, np.array([-1.0 + 1j]))


def test_profile_is_homogeneous(ctx2, rng):
    xi = rng.normal(size=(50, 4))
    lam = 3.0
    assert np.allclose(s_quat(ctx2, lam * xi), lam ** -(2 * ctx2.n + 1) * s_quat(ctx2, xi), rtol=1e-12)


def test_zero_argument_is_refused(ctx2):
    with pytest.raises(ZeroArgument):
        s_quat(ctx2, quat())
    with pytest.raises(ZeroArgument):
        s_oracle(ctx2, np.zeros(4))
    with pytest.raises(ZeroArgument):
        kernel_boundary(ctx2, np.zeros(7))


def test_diagonal_is_refused_at_zero_height(ctx2):
    g = np.arange(7.0) / 10
    with pytest.raises(DiagonalSingularity):
        kernel_upper(ctx2, 0.0, g, g)
    with pytest.raises(ValueError):
        kernel_upper(ctx2, -1.0, g, g)


def test_argument_at_height_only():
    sigma = kernel_argument(2.0, np.zeros(7), np.zeros(7))
    assert np.array_equal(sigma, [2.0, 0, 0, 0])


def test_upper_kernel_at_origin(ctx2):
    assert np.allclose(kernel_upper(ctx2, 1.0, np.zeros(7), np.zeros(7)), 12 * ONE)


def test_boundary_kernel_is_left_invariant(ctx2, rng):
    dim = GroupDim(2)
    g, gp, h = (random_points(dim, rng, 100) for _ in range(3))
    a = kernel_upper(ctx2, 0.0, group_mul(h, g), group_mul(h, gp))
    b = kernel_upper(ctx2, 0.0, g, gp)
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12 * np.abs(b).max())


def test_boundary_kernel_dilation(ctx2, rng):
    g = random_points(GroupDim(2), rng, 100)
    r = 0.7
    lhs = kernel_boundary(ctx2, dilate(r, g))
    assert np.allclose(lhs, r ** -10 * kernel_boundary(ctx2, g), rtol=1e-10)


def test_context_rejects_zero_normalisation():
    with pytest.raises(ValueError):
        KernelContext.for_n(2, 0.0)
