"""Closed-form Cauchy-Szego kernel on the flat model of the Siegel domain.

``s(xi)`` is evaluated by rotating ``xi`` onto the lower i-slice, applying
the summed polar form there and rotating back.  An independent symbolic
route (:func:`s_oracle`) differentiates ``conj(x)/|x|^4`` exactly with
integer-coefficient polynomials and is the reference for all pinned values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DiagonalSingularity, ZeroArgument
from .group import GroupDim, dist, split
from .quaternion import as_quat, quat_conj, quat_mul, rotor_to_slice, slice_to_quat

# boundary kernel calls closer than this to the diagonal are refused
DIAGONAL_GUARD = 1e-8


@dataclass(frozen=True)
class KernelContext:
    dim: GroupDim
    c: float = 1.0
    tol: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)

    def __post_init__(self):
        if self.c == 0:
            raise ValueError("the kernel normalisation c must be nonzero")

    @classmethod
    def for_n(cls, n: int, c: float = 1.0, tol: Tolerances | None = None) -> "KernelContext":
        return cls(GroupDim(n), c, tol or DEFAULT_TOLERANCES)

    @property
    def n(self) -> int:
        return self.dim.n


# ---------------------------------------------------------------- slice forms


def s_slice(ctx: KernelContext, z) -> np.ndarray:
    """Kernel profile on the complex i-slice, via the summed polar form."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    if np.any(r == 0):
        raise ZeroArgument("s is singular at 0")
    n = ctx.n
    w = z / r
    wc2 = np.conj(w) ** 2
    total = np.zeros_like(z)
    power = np.ones_like(z)
    for k in range(2 * n - 1):
        total = total + (k + 1) * power
        power = power * wc2
    return ctx.c * math.factorial(2 * n - 2) * w ** (2 * n - 3) * total / r ** (2 * n + 1)


def s_slice_series(ctx: KernelContext, z) -> np.ndarray:
    """Two-sum series form of the slice profile, valid for Re z > 0.

    Kept as an independent cross-check of :func:`s_slice`.
    """
    alpha = np.asarray(z, dtype=complex)
    if np.any(alpha.real <= 0):
        raise ValueError("the series form needs a positive real part")
    n = ctx.n
    zz = alpha.real + 1j * np.abs(alpha.imag)
    zb = np.conj(zz)
    f = math.factorial(2 * n - 2)
    first = sum((2 * n - k - 1) * (k + 1) / (zz ** (2 * n - k) * zb ** (k + 2)) for k in range(2 * n - 1))
    second = sum((2 * n - k - 2) * (k + 1) / (zz ** (2 * n - k - 1) * zb ** (k + 2)) for k in range(2 * n - 2))
    return ctx.c * f * (np.conj(alpha) * first - second)


def s_quat(ctx: KernelContext, xi) -> np.ndarray:
    """Kernel profile at a quaternion argument (batched over leading axes)."""
    xi = as_quat(xi)
    if np.any(np.all(xi == 0, axis=-1)):
        raise ZeroArgument("s is singular at 0")
    sigma, z = rotor_to_slice(xi)
    val = slice_to_quat(s_slice(ctx, z))
    return quat_mul(quat_mul(quat_conj(sigma), val), sigma)


# ---------------------------------------------------------------- symbolic oracle


def _padd(p, q, scale=1):
    out = dict(p)
    for e, c in q.items():
        cur = out.get(e, (0, 0, 0, 0))
        out[e] = tuple(a + scale * b for a, b in zip(cur, c))
    return {e: c for e, c in out.items() if any(c)}


def _pmul_mono(p, exps, coef):
    return {tuple(a + b for a, b in zip(e, exps)): tuple(coef * x for x in c) for e, c in p.items()}


def _pdiff1(p):
    out = {}
    for e, c in p.items():
        if e[0]:
            ne = (e[0] - 1,) + e[1:]
            out[ne] = tuple(e[0] * x for x in c)
    return out


@dataclass(frozen=True)
class RationalQForm:
    """``numerator(x) / |x|^(2*denom_power)`` with integer quaternion coefficients."""

    numerator: dict
    denom_power: int

    @classmethod
    def fueter_seed(cls) -> "RationalQForm":
        # conj(x) / |x|^4
        num = {
            (1, 0, 0, 0): (1, 0, 0, 0),
            (0, 1, 0, 0): (0, -1, 0, 0),
            (0, 0, 1, 0): (0, 0, -1, 0),
            (0, 0, 0, 1): (0, 0, 0, -1),
        }
        return cls(num, 2)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.numerator), default=0)

    def d_x1(self) -> "RationalQForm":
        """Quotient rule: d(P/rho^m) = (rho dP - 2 m x1 P) / rho^(m+1)."""
        dp = _pdiff1(self.numerator)
        rho_dp = {}
        for i in range(4):
            sq = [0, 0, 0, 0]
            sq[i] = 2
            rho_dp = _padd(rho_dp, _pmul_mono(dp, tuple(sq), 1))
        x1p = _pmul_mono(self.numerator, (1, 0, 0, 0), 2 * self.denom_power)
        return RationalQForm(_padd(rho_dp, x1p, scale=-1), self.denom_power + 1)

    def __call__(self, x) -> np.ndarray:
        x = as_quat(x)
        rho = np.sum(x * x, axis=-1)
        out = np.zeros(x.shape)
        for e, c in self.numerator.items():
            mono = x[..., 0] ** e[0] * x[..., 1] ** e[1] * x[..., 2] ** e[2] * x[..., 3] ** e[3]
            out = out + mono[..., None] * np.asarray(c, dtype=float)
        return out / rho[..., None] ** self.denom_power


@lru_cache(maxsize=None)
def oracle_form(n: int) -> RationalQForm:
    form = RationalQForm.fueter_seed()
    for _ in range(2 * (n - 1)):
        form = form.d_x1()
    return form


def s_oracle(ctx: KernelContext, xi) -> np.ndarray:
    xi = as_quat(xi)
    if np.any(np.all(xi == 0, axis=-1)):
        raise ZeroArgument("s is singular at 0")
    return ctx.c * oracle_form(ctx.n)(xi)


# ---------------------------------------------------------------- kernels on the flat model


def kernel_argument(s, g, gp) -> np.ndarray:
    """Quaternion argument q1 + conj(p1) - 2 sum conj(p_k) q_k of the kernel."""
    s = np.asarray(s, dtype=float)
    g = np.asarray(g, dtype=float)
    gp = np.asarray(gp, dtype=float)
    t, x = split(g)
    tp, y = split(gp)
    m = x.shape[-1] // 4
    xb = x.reshape(x.shape[:-1] + (m, 4))
    yb = y.reshape(y.shape[:-1] + (m, 4))
    cross = np.sum(quat_mul(quat_conj(yb), xb), axis=-2)
    shape = np.broadcast_shapes(s.shape, g.shape[:-1], gp.shape[:-1])
    sigma = np.empty(shape + (4,))
    sigma[..., 0] = s + np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1)
    sigma[..., 1:] = t - tp
    return sigma - 2.0 * cross


def kernel_upper(ctx: KernelContext, s, g, gp) -> np.ndarray:
    """K((s, g), g') for heights ``s >= 0`` (batched)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("height must be nonnegative")
    if np.any(s == 0):
        near = (s == 0) & (dist(g, gp) < DIAGONAL_GUARD)
        if np.any(near):
            raise DiagonalSingularity("boundary kernel evaluated on the diagonal")
    sigma = kernel_argument(s, g, gp)
    return s_quat(ctx, sigma)


def kernel_boundary(ctx: KernelContext, g) -> np.ndarray:
    """K(g) = s(|y|^2 + t1 i + t2 j + t3 k) for g != 0."""
    g = ctx.dim.check(g)
    t, y = split(g)
    arg = np.empty(g.shape[:-1] + (4,))
    arg[..., 0] = np.sum(y * y, axis=-1)
    arg[..., 1:] = t
    if np.any(np.all(arg == 0, axis=-1)):
        raise ZeroArgument("boundary kernel is singular at the identity")
    return s_quat(ctx, arg)
