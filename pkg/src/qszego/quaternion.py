"""Quaternion arithmetic on numpy arrays.

A quaternion is stored as the last axis of length 4, ordered along
1, i, j, k.  Every function broadcasts over leading axes, so a batch of
quaternions is simply an array of shape ``(..., 4)``.
"""

from __future__ import annotations

import numpy as np

from .errors import NonUnitRotor

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])

# relative squared size of (x3, x4) below which the rotor uses the axis branches
DEGENERATE_ROTOR = 1e-24
UNIT_TOL = 1e-12


def as_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1:] != (4,):
        raise ValueError(f"quaternion arrays need a trailing axis of length 4, got shape {q.shape}")
    return q


def quat(x1=0.0, x2=0.0, x3=0.0, x4=0.0) -> np.ndarray:
    return np.array([x1, x2, x3, x4], dtype=float)


def quat_mul(p, q) -> np.ndarray:
    """Hamilton product with ij = k, jk = i, ki = j."""
    p = as_quat(p)
    q = as_quat(q)
    a1, a2, a3, a4 = np.moveaxis(p, -1, 0)
    b1, b2, b3, b4 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            a1 * b1 - a2 * b2 - a3 * b3 - a4 * b4,
            a1 * b2 + a2 * b1 + a3 * b4 - a4 * b3,
            a1 * b3 - a2 * b4 + a3 * b1 + a4 * b2,
            a1 * b4 + a2 * b3 - a3 * b2 + a4 * b1,
        ],
        axis=-1,
    )


def quat_conj(q) -> np.ndarray:
    q = as_quat(q)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_abs2(q) -> np.ndarray:
    q = as_quat(q)
    return np.sum(q * q, axis=-1)


def quat_abs(q) -> np.ndarray:
    return np.sqrt(quat_abs2(q))


def quat_inv(q) -> np.ndarray:
    q = as_quat(q)
    return quat_conj(q) / quat_abs2(q)[..., None]


def imag_abs(q) -> np.ndarray:
    q = as_quat(q)
    return np.sqrt(np.sum(q[..., 1:] ** 2, axis=-1))


def quat_conj_by_unit(sigma, xi) -> np.ndarray:
    """Return sigma * xi * conj(sigma) for a unit rotor sigma."""
    sigma = as_quat(sigma)
    dev = np.abs(quat_abs(sigma) - 1.0)
    if np.any(dev > UNIT_TOL):
        raise NonUnitRotor(f"rotor norm deviates from 1 by {float(np.max(dev)):.3e}")
    return quat_mul(quat_mul(sigma, xi), quat_conj(sigma))


def rotor_to_slice(xi):
    """Unit rotor moving ``xi`` onto the lower half of the i-slice.

    Returns ``(sigma, z)`` with ``sigma * xi * conj(sigma) = Re(xi) - |Im xi| i``
    and ``z`` the complex number ``Re(xi) - |Im xi| 1j``.  Works on batches.
    """
    xi = as_quat(xi)
    x1, x2, x3, x4 = np.moveaxis(xi, -1, 0)
    im = imag_abs(xi)
    rest2 = x3 * x3 + x4 * x4
    axis = rest2 <= DEGENERATE_ROTOR * im * im

    # 1 - x2/|Im| computed without cancellation when x2 is close to |Im|
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = np.where(x2 > 0, rest2 / (im + x2), im - x2)
        y2 = np.sqrt(0.5 * gap / im)
        y3 = -x3 / (2.0 * im * y2)
        y4 = -x4 / (2.0 * im * y2)

    sigma = np.zeros(np.broadcast(x1).shape + (4,))
    generic = ~axis
    sigma[..., 1] = np.where(generic, y2, 0.0)
    sigma[..., 2] = np.where(generic, y3, np.where(x2 > 0, 1.0, 0.0))
    sigma[..., 3] = np.where(generic, y4, 0.0)
    sigma[..., 0] = np.where(axis & ~(x2 > 0), 1.0, 0.0)
    # renormalise away the last ulp so the rotor passes the unit check
    sigma = sigma / quat_abs(sigma)[..., None]
    z = x1 - 1j * im
    return sigma, z


def slice_to_quat(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape + (4,))
    out[..., 0] = z.real
    out[..., 1] = z.imag
    return out


def tau_embed(q) -> np.ndarray:
    """2x2 complex matrix representation; multiplicative with det = |q|^2."""
    q = as_quat(q)
    x1, x2, x3, x4 = np.moveaxis(q, -1, 0)
    m = np.empty(q.shape[:-1] + (2, 2), dtype=complex)
    m[..., 0, 0] = x1 + 1j * x4
    m[..., 0, 1] = -x2 - 1j * x3
    m[..., 1, 0] = x2 - 1j * x3
    m[..., 1, 1] = x1 - 1j * x4
    return m


def left_matrix(q) -> np.ndarray:
    """Real 4x4 matrix of v -> q v."""
    q = as_quat(q)
    x1, x2, x3, x4 = np.moveaxis(q, -1, 0)
    rows = [
        [x1, -x2, -x3, -x4],
        [x2, x1, -x4, x3],
        [x3, x4, x1, -x2],
        [x4, -x3, x2, x1],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)
