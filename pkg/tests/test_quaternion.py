import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qszego.errors import NonUnitRotor
from qszego.quaternion import (
    I, J, K, ONE, as_quat, left_matrix, quat, quat_abs, quat_conj, quat_conj_by_unit,
    quat_inv, quat_mul, rotor_to_slice, slice_to_quat, tau_embed,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
quats = arrays(np.float64, (4,), elements=finite)


def test_unit_table():
    assert np.array_equal(quat_mul(I, J), K)
    assert np.array_equal(quat_mul(J, K), I)
    assert np.array_equal(quat_mul(K, I), J)
    assert np.array_equal(quat_mul(J, I), -K)
    for u in (I, J, K):
        assert np.array_equal(quat_mul(u, u), -ONE)


@settings(max_examples=200, deadline=None)
@given(quats, quats, quats)
def test_associative(p, q, r):
    lhs = quat_mul(quat_mul(p, q), r)
    rhs = quat_mul(p, quat_mul(q, r))
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(lhs).max()))


@settings(max_examples=200, deadline=None)
@given(quats, quats)
def test_norm_multiplicative_and_conj_antihom(p, q):
    pq = quat_mul(p, q)
    assert quat_abs(pq) == pytest.approx(quat_abs(p) * quat_abs(q), rel=1e-12, abs=1e-12)
    assert np.allclose(quat_conj(pq), quat_mul(quat_conj(q), quat_conj(p)), atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(quats, quats)
def test_tau_is_multiplicative(p, q):
    lhs = tau_embed(quat_mul(p, q))
    rhs = tau_embed(p) @ tau_embed(q)
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(lhs).max()))
    assert np.linalg.det(tau_embed(p)).real == pytest.approx(quat_abs(p) ** 2, rel=1e-9, abs=1e-9)


def test_left_matrix_matches_product(rng):
    p, q = rng.normal(size=(2, 4))
    assert np.allclose(left_matrix(p) @ q, quat_mul(p, q))


def test_inverse(rng):
    q = rng.normal(size=(50, 4))
    assert np.allclose(quat_mul(q, quat_inv(q)), ONE, atol=1e-14)


def test_shape_check():
    with pytest.raises(ValueError):
        as_quat([1.0, 2.0, 3.0])


def test_rotor_rejects_non_unit():
    with pytest.raises(NonUnitRotor):
        quat_conj_by_unit(quat(1.0 + 1e-9), quat(0, 1))
    quat_conj_by_unit(quat(1.0 + 1e-13), quat(0, 1))


@pytest.mark.parametrize(
    "xi",
    [quat(1, 2, 3, 4), quat(0, 1, 0, 0), quat(0, -1, 0, 0), quat(2, 0, 1e-200, 0), quat(1, 1e-9, 3, 0),
     quat(1, -5, 1e-13, 1e-13), quat(0.5, 1 - 1e-15, 1e-9, 0)],
)
def test_rotor_lands_on_lower_slice(xi):
    sigma, z = rotor_to_slice(xi)
    rotated = quat_conj_by_unit(sigma, xi)
    assert np.allclose(rotated, slice_to_quat(z), atol=1e-10 * max(1, quat_abs(xi)))
    assert z.imag <= 0


def test_rotor_batch(rng):
    xi = rng.normal(size=(1000, 4))
    sigma, z = rotor_to_slice(xi)
    rotated = quat_conj_by_unit(sigma, xi)
    assert np.max(np.abs(rotated - slice_to_quat(z))) < 1e-10
