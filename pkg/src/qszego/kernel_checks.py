"""Numerical verification of kernel properties.

Regularity residuals, the sub-Laplacian heat equation, subharmonicity of
``|K|^p``, non-vanishing on the unit sphere and decay slopes of derivatives.
Everything is batched over leading axes of the point arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .errors import NearZeroModulus, OrderTooHigh
from .group import GroupDim, apply_word, dilate, homdeg, hom_norm, sub_laplacian, word_of
from .kernel import KernelContext, kernel_boundary, kernel_upper, s_oracle, s_quat
from .quaternion import I, J, K, ONE, quat_abs, quat_mul


def _kernel(ctx, kernel):
    return kernel or (lambda s, g, gp: kernel_upper(ctx, s, g, gp))


def _field_fn(kern, s, gp):
    """(s, g') frozen; returns g -> K((s, g), g') on stencil arrays."""
    s = np.asarray(s, dtype=float)[..., None]
    gp = np.asarray(gp, dtype=float)[..., None, :]
    return lambda pts: kern(s, pts, gp)


def cauchy_fueter_terms(ctx: KernelContext, s, g, gp, h, kernel=None):
    """The n quaternion values Q_0 K, Q_1 K, ... of the regularity system.

    Units multiply from the left.  Returned array has shape ``(..., n, 4)``.
    ``kernel(s, g, g')`` overrides the evaluated function.
    """
    dim = ctx.dim
    kern = _kernel(ctx, kernel)
    f = _field_fn(kern, s, gp)
    units = (ONE, I, J, K)
    d = h * h
    out = [(kern(s + d, g, gp) - kern(s - d, g, gp)) / (2 * d)]
    for a in range(3):
        out[0] = out[0] + quat_mul(units[a + 1], apply_word(dim, (dim.horiz + a,), f, g, h))
    for l in range(ctx.n - 1):
        acc = 0.0
        for j in range(4):
            acc = acc + quat_mul(units[j], apply_word(dim, (4 * l + j,), f, g, h))
        out.append(acc)
    return np.stack(out, axis=-2)


def cauchy_fueter_residual(ctx: KernelContext, s, g, gp, h=1e-3, kernel=None):
    """Largest |Q_m K| over m, divided by |K| at the point."""
    val = _kernel(ctx, kernel)(s, g, gp)
    terms = cauchy_fueter_terms(ctx, s, g, gp, h, kernel)
    return np.max(quat_abs(terms), axis=-1) / quat_abs(val)


def heat_operator(ctx: KernelContext, f_height, f_fields, s, g, h, sign=-1.0):
    """Delta_H F / (8(n-1)) + sign * dF/ds for a function of (s, g)."""
    dim = ctx.dim
    d = h * h
    ds = (f_height(s + d) - f_height(s - d)) / (2 * d)
    lap = sub_laplacian(dim, f_fields, g, h)
    return lap / (8.0 * (ctx.n - 1)) + sign * ds


def heat_residual(ctx: KernelContext, s, g, gp, h=1e-3, kernel=None, sign=-1.0):
    """|(Delta_H/(8(n-1)) - d/ds) K| / |K| at (s, g) with g' fixed.

    ``sign=+1`` evaluates the operator with the opposite sign of the time
    derivative, which the kernel does not satisfy.
    """
    s = np.asarray(s, dtype=float)
    kern = _kernel(ctx, kernel)
    fh = lambda ss: kern(ss, g, gp)
    res = heat_operator(ctx, fh, _field_fn(kern, s, gp), s, g, h, sign)
    return quat_abs(res) / quat_abs(kern(s, g, gp))


def observed_order(res_h, res_half):
    """Per-point convergence order log2(r(h)/r(h/2))."""
    return np.log2(np.asarray(res_h) / np.asarray(res_half))


# ---------------------------------------------------------------- subharmonicity


@dataclass
class SubharmonicResult:
    value: np.ndarray  # direct FD of L|K|^p
    identity: np.ndarray  # right-hand side assembled from first derivatives
    scale: np.ndarray  # size of the positive term, used for tolerances


def subharmonicity_check(ctx: KernelContext, s, g, gp, pw: float, h=1e-3, richardson=True) -> SubharmonicResult:
    """L|K|^pw with L = Delta_H/(8(n-1)) - d/ds, by two routes."""
    if not 2.0 / 3.0 - 1e-12 <= pw <= 1.0:
        raise ValueError("subharmonicity exponent must lie in [2/3, 1]")
    dim = ctx.dim
    s = np.asarray(s, dtype=float)
    kval = kernel_upper(ctx, s, g, gp)
    mod = quat_abs(kval)
    if np.any(mod < 1e-8):
        raise NearZeroModulus("|K| too small for the subharmonicity identity")

    fields = _field_fn(_kernel(ctx, None), s, gp)
    pw_fields = lambda pts: quat_abs(fields(pts)) ** pw

    def pw_height(ss):
        return quat_abs(kernel_upper(ctx, ss, g, gp)) ** pw

    def direct(hh):
        return heat_operator(ctx, pw_height, pw_fields, s, g, hh)

    value = direct(h)
    if richardson:
        value = (4.0 * direct(h / 2) - value) / 3.0

    norm_sq = mod * mod
    cross = 0.0
    grad = 0.0
    for k in range(dim.horiz):
        yk = apply_word(dim, (k,), fields, g, h, richardson=True)
        cross = cross + np.sum(yk * kval, axis=-1) ** 2
        grad = grad + np.sum(yk * yk, axis=-1)
    m = 8.0 * (ctx.n - 1)
    positive = pw * norm_sq ** (pw / 2 - 1) * grad / m
    identity = pw * (pw - 2) * norm_sq ** (pw / 2 - 2) * cross / m + positive
    return SubharmonicResult(value, identity, positive)


# ---------------------------------------------------------------- non-vanishing


@dataclass
class SphereMinimum:
    point: np.ndarray
    value: float
    noise: float
    radius: float
    samples: int
    coarse_value: float


def sphere_samples(dim: GroupDim, count: int, seed: int, radius: float = 1.0) -> np.ndarray:
    """Scrambled Sobol points pushed to Gaussian directions, then onto the sphere."""
    sob = stats.qmc.Sobol(d=dim.topdim, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(count, 2))))
    u = sob.random_base2(m)[:count]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    v = stats.norm.ppf(u)
    return dilate(radius / hom_norm(v), v)


def min_abs_on_sphere(ctx: KernelContext, samples: int = 100_000, refine: bool = True, radius: float = 1.0,
                      seed: int = 0, starts: int = 6) -> SphereMinimum:
    """Minimise |K| over {||g|| = radius}: QMC scan, then local polish."""
    dim = ctx.dim
    pts = sphere_samples(dim, samples, seed, radius)
    vals = quat_abs(kernel_boundary(ctx, pts))
    order = np.argsort(vals, kind="stable")
    coarse = float(vals[order[0]])
    best_pt, best_val = pts[order[0]], coarse

    def objective(v):
        v = np.asarray(v, dtype=float)
        if not np.any(v):
            return np.inf
        return float(quat_abs(kernel_boundary(ctx, dilate(radius / hom_norm(v), v))))

    if refine:
        for idx in order[:starts]:
            res = optimize.minimize(
                objective, pts[idx], method="Nelder-Mead",
                options={"xatol": 1e-12 * max(radius, 1.0) ** 2, "fatol": 1e-16 * best_val, "maxiter": 40_000, "maxfev": 40_000},
            )
            if res.fun < best_val:
                best_val = float(res.fun)
                best_pt = dilate(radius / hom_norm(res.x), res.x)
    assert best_val > 0, "kernel vanished on the sphere"
    # disagreement between two independent evaluation routes
    t, y = best_pt[:3], best_pt[3:]
    arg = np.concatenate([[y @ y], t])
    noise = float(quat_abs(s_quat(ctx, arg) - s_oracle(ctx, arg))) + 64 * np.finfo(float).eps * best_val
    return SphereMinimum(best_pt, best_val, noise, radius, samples, coarse)


# ---------------------------------------------------------------- decay


@dataclass
class DecayFit:
    slope: float
    slopes: np.ndarray
    radii: np.ndarray
    values: np.ndarray


def decay_exponent(ctx: KernelContext, index, radii=None, rays: int = 8, seed: int = 0, h: float = 1e-3) -> DecayFit:
    """Log-log slope of |Y^I K((1,0), g)| along rays g = delta_r(omega)."""
    dim = ctx.dim
    index = tuple(index)
    if homdeg(dim, index) > 2:
        raise OrderTooHigh("decay fits are limited to homogeneous order 2")
    radii = np.geomspace(10.0, 1000.0, 9) if radii is None else np.asarray(radii, dtype=float)
    omegas = sphere_samples(dim, rays, seed)
    origin = np.zeros(dim.topdim)

    def f(pts):
        return kernel_upper(ctx, 1.0, origin, pts)

    values = np.empty((rays, len(radii)))
    for i, r in enumerate(radii):
        pts = dilate(np.full(rays, r), omegas)
        val = apply_word(dim, word_of(index), f, pts, h, scale=r, richardson=bool(index and any(index)))
        values[:, i] = quat_abs(val)
    logr = np.log(radii)
    slopes = np.array([np.polyfit(logr, np.log(v), 1)[0] for v in values])
    return DecayFit(float(np.mean(slopes)), slopes, radii, values)
