"""The quaternionic Heisenberg group and its left-invariant calculus.

Points are numpy arrays of shape ``(..., 4n-1)`` laid out as
``[t1, t2, t3, y1, ..., y_{4n-4}]`` (vertical part first).

Vector fields and multi-indices use a separate *field index*
``k = 0 .. 4n-2``: ``k < 4n-4`` is the horizontal field along ``y_{k+1}``,
``k = 4n-4 + a`` is the vertical field along ``t_{a+1}``.  A multi-index is
a tuple of exponents in field order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import FD_STEP, MAX_FD_HOMDEG
from .errors import BadAlpha, BadScale, DimMismatch, NotInDomain, OrderTooHigh, StepTooSmall

_B = np.array(
    [
        [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]],
        [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]],
        [[0, 0, 0, 1], [0, 0, -1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]],
    ],
    dtype=np.int64,
)
# (alpha, k, j, sign) for every nonzero entry, used by the hand-unrolled bracket
_B_TERMS = [(a, k, j, int(_B[a, k, j])) for a in range(3) for k in range(4) for j in range(4) if _B[a, k, j]]


def b_matrix(alpha: int) -> np.ndarray:
    """Skew 4x4 structure matrix for ``alpha`` in {1, 2, 3}."""
    if alpha not in (1, 2, 3):
        raise BadAlpha(f"alpha must be 1, 2 or 3, got {alpha!r}")
    return _B[alpha - 1].copy()


@dataclass(frozen=True)
class GroupDim:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")

    @property
    def horiz(self) -> int:
        return 4 * self.n - 4

    @property
    def vert(self) -> int:
        return 3

    @property
    def topdim(self) -> int:
        return 4 * self.n - 1

    @property
    def Q(self) -> int:
        return 4 * self.n + 2

    def check(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape[-1:] != (self.topdim,):
            raise DimMismatch(f"expected trailing axis {self.topdim} for n={self.n}, got shape {g.shape}")
        return g


def split(g):
    """View a point array as (t, y)."""
    return g[..., :3], g[..., 3:]


def join(t, y) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(t.shape[:-1], y.shape[:-1])
    out = np.empty(shape + (3 + y.shape[-1],))
    out[..., :3] = t
    out[..., 3:] = y
    return out


def bracket(y, yp) -> np.ndarray:
    """The vertical cocycle B(y, y') in R^3."""
    y = np.asarray(y, dtype=float)
    yp = np.asarray(yp, dtype=float)
    m = y.shape[-1] // 4
    yb = y.reshape(y.shape[:-1] + (m, 4))
    pb = yp.reshape(yp.shape[:-1] + (m, 4))
    shape = np.broadcast_shapes(yb.shape[:-1], pb.shape[:-1])[:-1]
    out = np.zeros(shape + (3,))
    for a, k, j, s in _B_TERMS:
        term = np.sum(yb[..., k] * pb[..., j], axis=-1)
        if s > 0:
            out[..., a] += term
        else:
            out[..., a] -= term
    return 2.0 * out


def group_mul(g, h) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    if g.shape[-1] != h.shape[-1]:
        raise DimMismatch(f"points of length {g.shape[-1]} and {h.shape[-1]} live in different groups")
    t, y = split(g)
    s, z = split(h)
    return join(t + s + bracket(y, z), y + z)


def group_inv(g) -> np.ndarray:
    return -np.asarray(g, dtype=float)


def dilate(r, g) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise BadScale("dilation factor must be positive")
    g = np.asarray(g, dtype=float)
    t, y = split(g)
    r = r[..., None]
    return join(r * r * t, r * y)


def hom_norm(g) -> np.ndarray:
    t, y = split(np.asarray(g, dtype=float))
    y2 = np.sum(y * y, axis=-1)
    t2 = np.sum(t * t, axis=-1)
    return (y2 * y2 + t2) ** 0.25


def dist(g, h) -> np.ndarray:
    return hom_norm(group_mul(group_inv(h), g))


def to_unit_sphere(g) -> np.ndarray:
    """Radially dilate nonzero points onto the unit sphere of the norm."""
    return dilate(1.0 / hom_norm(g), g)


def pi_inv(s, g) -> np.ndarray:
    """Lift a point (s, g) of the flat model to n quaternions (shape ``(..., n, 4)``)."""
    s = np.asarray(s, dtype=float)
    g = np.asarray(g, dtype=float)
    t, y = split(g)
    m = y.shape[-1] // 4
    shape = np.broadcast_shapes(s.shape, g.shape[:-1])
    q = np.empty(shape + (m + 1, 4))
    q[..., 0, 0] = s + np.sum(y * y, axis=-1)
    q[..., 0, 1:] = t
    q[..., 1:, :] = y.reshape(y.shape[:-1] + (m, 4))
    return q


def pi_map(q):
    """Inverse of :func:`pi_inv`: quaternions ``(..., n, 4)`` to ``(s, g)``."""
    q = np.asarray(q, dtype=float)
    y = q[..., 1:, :].reshape(q.shape[:-2] + (-1,))
    s = q[..., 0, 0] - np.sum(y * y, axis=-1)
    if np.any(s <= 0):
        raise NotInDomain("Re q1 must exceed |q'|^2")
    return s, join(q[..., 0, 1:], y)


# ---------------------------------------------------------------- multi-indices


def field_degree(dim: GroupDim, k: int) -> int:
    return 1 if k < dim.horiz else 2


def field_coord(dim: GroupDim, k: int) -> int:
    """Array position of the coordinate paired with field ``k``."""
    return 3 + k if k < dim.horiz else k - dim.horiz


def homdeg(dim: GroupDim, index) -> int:
    index = tuple(index)
    return sum(index[: dim.horiz]) + 2 * sum(index[dim.horiz:])


def topdeg(index) -> int:
    return sum(index)


@lru_cache(maxsize=None)
def _multi_indices(n: int, max_deg: int):
    dim = GroupDim(n)
    out = []
    for nv in range(max_deg // 2 + 1):
        for vert in _compositions(nv, dim.vert):
            for nh in range(max_deg - 2 * nv + 1):
                for hor in _compositions(nh, dim.horiz):
                    out.append(hor + vert)
    out.sort(key=lambda I: (homdeg(dim, I), tuple(-e for e in I)))
    return tuple(out)


def _compositions(total: int, parts: int):
    for cuts in itertools.combinations_with_replacement(range(parts), total):
        counts = [0] * parts
        for c in cuts:
            counts[c] += 1
        yield tuple(counts)


def multi_indices(dim: GroupDim, max_deg: int, min_deg: int = 0):
    """All multi-indices with ``min_deg <= d(I) <= max_deg`` in a fixed order."""
    return [I for I in _multi_indices(dim.n, max_deg) if homdeg(dim, I) >= min_deg]


def monomial(dim: GroupDim, index, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    out = np.ones(g.shape[:-1])
    for k, e in enumerate(index):
        if e:
            out = out * g[..., field_coord(dim, k)] ** e
    return out


@dataclass
class HomPolynomial:
    """Quaternion-coefficient polynomial in the group coordinates."""

    dim: GroupDim
    coeffs: dict = field(default_factory=dict)

    @property
    def homdeg(self) -> int:
        degs = [homdeg(self.dim, I) for I, c in self.coeffs.items() if np.any(np.asarray(c) != 0)]
        return max(degs, default=0)

    def __call__(self, g) -> np.ndarray:
        g = self.dim.check(g)
        out = np.zeros(g.shape[:-1] + (4,))
        for I, c in self.coeffs.items():
            out = out + monomial(self.dim, I, g)[..., None] * np.asarray(c, dtype=float)
        return out


# ---------------------------------------------------------------- vector fields

_CENTRAL = {
    1: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    2: (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0])),
    3: (np.array([-2, -1, 1, 2]), np.array([-0.5, 1.0, -1.0, 0.5])),
    4: (np.array([-2, -1, 0, 1, 2]), np.array([1.0, -4.0, 6.0, -4.0, 1.0])),
}


def field_direction(dim: GroupDim, k: int, g) -> np.ndarray:
    """Coefficient vector of field ``k`` at ``g`` (the tangent of s -> g.(s e_k))."""
    g = np.asarray(g, dtype=float)
    e = np.zeros(dim.topdim)
    e[field_coord(dim, k)] = 1.0
    v = np.broadcast_to(e, g.shape).copy()
    if k < dim.horiz:
        v[..., :3] = bracket(split(g)[1], split(e)[1])
    return v


def _runs(word):
    """Group a word of field indices into (field, power) runs."""
    return [(k, len(list(grp))) for k, grp in itertools.groupby(word)]


def _word_stencil(dim: GroupDim, word, g, h, scale):
    """Stencil points and weights for Y_{w1} ... Y_{wm} f at g."""
    runs = _runs(word)
    pts = np.asarray(g, dtype=float)[..., None, :]
    weights = np.ones(1)
    # apply runs innermost-last: point = g . (s1 e_k1) . (s2 e_k2) ...
    for k, a in runs:
        if a not in _CENTRAL:
            raise OrderTooHigh(f"power {a} of a single field is beyond the stencil table")
        offs, w = _CENTRAL[a]
        step = h * scale if k < dim.horiz else (h * scale) ** 2
        shift = np.zeros((len(offs), dim.topdim))
        shift[:, field_coord(dim, k)] = offs * step
        new = group_mul(pts[..., :, None, :], shift)
        pts = new.reshape(new.shape[:-3] + (-1, dim.topdim))
        weights = np.outer(weights, w / step**a).ravel()
    return pts, weights


def _check_step(dim: GroupDim, word, h):
    # stencil weights grow like h^-d(word) relative to the function scale
    if np.finfo(float).eps * h ** (-homdeg_word(dim, word)) > 1e-3:
        raise StepTooSmall(f"step h={h:g} lets rounding dominate for word {word}")


def homdeg_word(dim: GroupDim, word) -> int:
    return sum(field_degree(dim, k) for k in word)


def apply_word(dim: GroupDim, word, f, g, h=FD_STEP, scale=1.0, richardson=False, full_output=False):
    """Apply ``Y_{w1} Y_{w2} ... Y_{wm}`` (outermost first) to ``f`` at ``g``.

    ``f`` maps point arrays ``(..., 4n-1)`` to scalars ``(...)`` or
    quaternions ``(..., 4)``.  Horizontal fields use step ``h*scale`` and
    vertical fields ``(h*scale)**2``.  With ``richardson`` the results at
    ``h`` and ``h/2`` are combined to cancel the leading error term; the
    difference between the two is reported as the error estimate.
    """
    g = dim.check(g)
    word = tuple(word)
    if not word:
        val = np.asarray(f(g))
        return (val, np.zeros_like(val)) if full_output else val
    if homdeg_word(dim, word) > MAX_FD_HOMDEG:
        raise OrderTooHigh(f"homogeneous order {homdeg_word(dim, word)} exceeds {MAX_FD_HOMDEG}")
    if h <= 0:
        raise StepTooSmall("step must be positive")
    _check_step(dim, word, h)

    def once(hh):
        pts, w = _word_stencil(dim, word, g, hh, scale)
        vals = np.asarray(f(pts))
        if vals.ndim == pts.ndim:  # quaternion valued
            return np.einsum("...pc,p->...c", vals, w)
        return vals @ w

    coarse = once(h)
    if not richardson:
        return (coarse, np.full(np.shape(coarse), np.nan)) if full_output else coarse
    fine = once(h / 2)
    val = (4.0 * fine - coarse) / 3.0
    return (val, np.abs(fine - coarse) / 3.0) if full_output else val


def word_of(index) -> tuple:
    """Expand a multi-index into its ordered word Y_1^{a1} Y_2^{a2} ..."""
    return tuple(k for k, e in enumerate(index) for _ in range(e))


def apply_Y(dim: GroupDim, k: int, f, g, h=FD_STEP, **kw):
    return apply_word(dim, (k,), f, g, h, **kw)


def apply_YI(dim: GroupDim, index, f, g, h=FD_STEP, **kw):
    index = tuple(index)
    if len(index) != dim.topdim:
        raise DimMismatch(f"multi-index needs {dim.topdim} entries")
    return apply_word(dim, word_of(index), f, g, h, **kw)


def sub_laplacian(dim: GroupDim, f, g, h=FD_STEP, **kw):
    total = 0.0
    for k in range(dim.horiz):
        total = total + apply_word(dim, (k, k), f, g, h, **kw)
    return total


def taylor_left(dim: GroupDim, f, g, k: int, h=FD_STEP, richardson=True) -> HomPolynomial:
    """Left Taylor polynomial of homogeneous degree ``k`` of ``f`` at ``g``.

    Uses ``f(g.u) = sum_m (X^m f)(g)/m!`` with ``X = sum u_i Y_i``, keeping
    the words whose homogeneous degree is at most ``k``.
    """
    if k > 2:
        raise OrderTooHigh("left Taylor polynomials are limited to degree 2")
    g = dim.check(g)
    coeffs: dict = {}
    fields = range(dim.topdim)
    for m in range(k + 1):
        for word in itertools.product(fields, repeat=m):
            if homdeg_word(dim, word) > k:
                continue
            val = np.asarray(apply_word(dim, word, f, g, h, richardson=richardson), dtype=float)
            if val.shape == ():
                val = np.array([float(val), 0.0, 0.0, 0.0])
            index = [0] * dim.topdim
            for w in word:
                index[w] += 1
            key = tuple(index)
            coeffs[key] = coeffs.get(key, 0.0) + val / math.factorial(m)
    return HomPolynomial(dim, coeffs)


# ---------------------------------------------------------------- sampling


def random_points(dim: GroupDim, rng: np.random.Generator, size, spread=1.0) -> np.ndarray:
    """Gaussian points with y ~ spread and t ~ spread^2."""
    t = rng.normal(scale=spread**2, size=(size, 3))
    y = rng.normal(scale=spread, size=(size, dim.horiz))
    return join(t, y)
