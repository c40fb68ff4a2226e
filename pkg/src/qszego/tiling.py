"""Self-similar tiles of the quaternionic Heisenberg group.

The basic tile is ``A = {y in [0,1)^{4n-4}, F(y) <= t < F(y) + 1}`` with the
series ``F_j(y) = sum_m 4^-m B_j([2^m y] mod 2, <2^m y>)``.  Its lattice
left-translates tile the group and ``delta_2 A`` is the union of the 2^(4n+2)
translates indexed by ``a in {0,1}^(4n-4), b in {0,1,2,3}^3``.  A tile at
scale ``j`` is ``delta_{2^j} tau_gamma(A)``.

Faces use the half-open convention so every point has exactly one tile.
Float comparisons carry a certified error; anything inside it is settled in
exact rational arithmetic (every float is a dyadic rational, for which the
series terminates).
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .config import TRUNCATION_DEPTH
from .errors import BoundaryUncertain, DepthTooShallow, NoCandidateFound
from .group import _B_TERMS, GroupDim, bracket, dilate, dist, group_inv, group_mul, join, split

EPS = np.finfo(float).eps
# partial sums of dyadic data with denominator 2^M are exact in binary64 while 2M + 4 <= 53
EXACT_DEPTH = 24


class Membership(enum.Enum):
    NO = 0
    YES = 1
    UNCERTAIN = -1


@dataclass(frozen=True)
class BasicTileData:
    dim: GroupDim
    m0: int = TRUNCATION_DEPTH

    @property
    def mbound(self) -> float:
        # four +-1 entries per block, each product bounded by 1, times the factor 2
        return 8.0 * (self.dim.n - 1)

    @property
    def n0(self) -> int:
        return math.floor(2 + math.log(self.mbound, 4)) + 1

    @property
    def tail(self) -> float:
        return self.mbound * 4.0 ** (-self.m0) / 3.0

    @property
    def center(self) -> np.ndarray:
        y = np.full(self.dim.horiz, 2.0 ** (-self.n0 - 1))
        return join(np.full(3, 0.5), y)


@lru_cache(maxsize=None)
def basic_tile(n: int, m0: int = TRUNCATION_DEPTH) -> BasicTileData:
    return BasicTileData(GroupDim(n), m0)


@dataclass(frozen=True, order=True)
class TileAddress:
    j: int
    a: tuple
    b: tuple

    def __post_init__(self):
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "a", tuple(int(v) for v in self.a))
        object.__setattr__(self, "b", tuple(int(v) for v in self.b))
        if len(self.b) != 3 or len(self.a) % 4:
            raise ValueError("tile address needs 4(n-1) horizontal and 3 vertical integers")

    @property
    def n(self) -> int:
        return len(self.a) // 4 + 1

    @property
    def gamma(self) -> np.ndarray:
        return join(np.array(self.b, dtype=float), np.array(self.a, dtype=float))

    @property
    def width(self) -> float:
        return 2.0**self.j

    def to_json(self) -> dict:
        return {"j": self.j, "a": list(self.a), "b": list(self.b)}

    @classmethod
    def from_json(cls, obj) -> "TileAddress":
        return cls(obj["j"], obj["a"], obj["b"])

    @classmethod
    def origin(cls, n: int, j: int = 0) -> "TileAddress":
        return cls(j, (0,) * (4 * n - 4), (0, 0, 0))


# ---------------------------------------------------------------- the F series


def F_eval(y, m0: int = TRUNCATION_DEPTH):
    """Truncated F series and a certified error bound, batched over rows.

    Returns ``(F, err)`` with ``F`` of shape ``(..., 3)`` and ``err`` of
    shape ``(...,)``.  ``err`` is 0 when the series terminates early enough
    for the float sum to be exact.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[-1] // 4 + 1
    data = basic_tile(n, m0)
    total = np.zeros(y.shape[:-1] + (3,))
    absum = np.zeros(y.shape[:-1])
    live = np.ones(y.shape[:-1], dtype=bool)
    ended = np.full(y.shape[:-1], m0 + 1)
    cur = y - np.floor(y)
    for m in range(1, m0 + 1):
        cur = cur * 2.0
        fl = np.floor(cur)
        frac = cur - fl
        parity = fl - 2.0 * np.floor(fl / 2.0)
        term = bracket(parity, frac) * 4.0 ** (-m)
        total += term
        absum += np.sum(np.abs(term), axis=-1)
        done = np.all(frac == 0, axis=-1)
        ended = np.where(live & done, m, ended)
        live &= ~done
        cur = frac
        if not live.any():
            break
    err = np.where(live, data.tail, 0.0)
    # rounding of the partial sum unless the dyadic data is short enough to be exact
    err = err + np.where(ended <= EXACT_DEPTH, 0.0, 8 * m0 * EPS * absum)
    return total, err


def _bracket_exact(y, yp):
    out = [Fraction(0)] * 3
    for a, k, j, s in _B_TERMS:
        for l in range(len(y) // 4):
            out[a] += s * y[4 * l + k] * yp[4 * l + j]
    return [2 * v for v in out]


def F_exact(y):
    """Exact value of the F series for rational (for example float) input."""
    y = [Fraction(v) for v in y]
    cur = [v - math.floor(v) for v in y]
    total = [Fraction(0)] * 3
    scale = Fraction(1)
    while any(cur):
        scale /= 4
        cur = [2 * v for v in cur]
        fl = [math.floor(v) for v in cur]
        frac = [v - f for v, f in zip(cur, fl)]
        parity = [f % 2 for f in fl]
        for a, val in enumerate(_bracket_exact(parity, frac)):
            total[a] += scale * val
        cur = frac
    return total


# ---------------------------------------------------------------- membership


def _membership_floats(j, a, b, g, m0):
    """Codes 1/0/-1 for batched addresses (a, b at scale j) and points g."""
    g = np.asarray(g, dtype=float)
    gs = dilate(np.full(g.shape[:-1], 2.0 ** (-j)), g) if j else g
    gamma = join(np.asarray(b, dtype=float), np.asarray(a, dtype=float))
    local = group_mul(group_inv(gamma), gs)
    t, y = split(local)
    inside_y = np.all((y >= 0) & (y < 1), axis=-1)
    code = np.zeros(inside_y.shape, dtype=np.int64)
    if not inside_y.any():
        return code
    ts = np.broadcast_to(split(gs)[0], t.shape)[inside_y]
    tb = np.broadcast_to(gamma[..., :3], t.shape)[inside_y]
    t = t[inside_y]
    F, err = F_eval(y[inside_y], m0)
    u = t - F
    # points inside the rounding slack of a face are settled exactly
    slack = err[:, None] + 8 * EPS * (np.abs(ts) + np.abs(tb) + np.abs(t - ts) + 1.0)
    sure_in = np.all((u >= slack) & (u < 1 - slack), axis=-1)
    sure_out = np.any((u < -slack) | (u >= 1 + slack), axis=-1)
    code[inside_y] = np.where(sure_in, 1, np.where(sure_out, 0, -1))
    return code


def _membership_exact(j, a, b, g) -> bool:
    scale = Fraction(2) ** (-j)
    gq = [Fraction(float(v)) for v in g]
    t = [v * scale * scale for v in gq[:3]]
    y = [v * scale for v in gq[3:]]
    yl = [v - ai for v, ai in zip(y, a)]
    if not all(0 <= v < 1 for v in yl):
        return False
    cocycle = _bracket_exact([Fraction(ai) for ai in a], yl)
    F = F_exact(yl)
    u = [tt - bb - cc - ff for tt, bb, cc, ff in zip(t, b, cocycle, F)]
    return all(0 <= v < 1 for v in u)


def contains_many(j, a, b, g, m0: int = TRUNCATION_DEPTH, exact: bool = True) -> np.ndarray:
    """Vectorised membership codes (1 yes, 0 no, -1 undecided)."""
    code = _membership_floats(j, a, b, g, m0)
    if exact and np.any(code < 0):
        a_b = np.asarray(a)
        g_b = np.asarray(g, dtype=float)
        a_b = np.broadcast_to(a_b, code.shape + a_b.shape[-1:])
        b_b = np.broadcast_to(np.asarray(b), code.shape + (3,))
        g_b = np.broadcast_to(g_b, code.shape + g_b.shape[-1:])
        for idx in map(tuple, np.argwhere(code < 0)):
            code[idx] = int(_membership_exact(j, a_b[idx].tolist(), b_b[idx].tolist(), g_b[idx]))
    return code


def tile_contains(addr: TileAddress, g, m0: int = TRUNCATION_DEPTH, exact: bool = True) -> Membership:
    """Whether ``g`` lies in the tile.  With ``exact=False`` undecided cases
    near a face are reported as ``Membership.UNCERTAIN``."""
    code = int(contains_many(addr.j, addr.a, addr.b, np.asarray(g, dtype=float), m0, exact))
    return Membership(code)


# ---------------------------------------------------------------- addressing


def locate_many(g, j: int, m0: int = TRUNCATION_DEPTH, exact: bool = True):
    """Integer arrays ``(a, b)`` of the scale-``j`` tiles containing each row of ``g``."""
    g = np.asarray(g, dtype=float)
    gs = dilate(np.full(g.shape[:-1], 2.0 ** (-j)), g) if j else g
    t, y = split(gs)
    a = np.floor(y)
    u = y - a
    F, err = F_eval(u, m0)
    base = t - bracket(a, u) - F
    b = np.floor(base)
    frac = base - b
    slack = err[..., None] + 16 * EPS * (np.abs(t) + np.abs(base) + 1.0)
    close = np.any((frac < slack) | (1 - frac < slack), axis=-1)
    a = a.astype(np.int64)
    b = b.astype(np.int64)
    if np.any(close):
        if not exact:
            raise BoundaryUncertain(f"{int(close.sum())} points lie within the truncation error of a face")
        for idx in map(tuple, np.argwhere(close)):
            b[idx] = _locate_exact(j, a[idx].tolist(), g[idx])
    return a, b


def _locate_exact(j, a, g):
    scale = Fraction(2) ** (-j)
    gq = [Fraction(float(v)) for v in g]
    t = [v * scale * scale for v in gq[:3]]
    u = [v * scale - ai for v, ai in zip(gq[3:], a)]
    cocycle = _bracket_exact([Fraction(ai) for ai in a], u)
    F = F_exact(u)
    return [math.floor(tt - cc - ff) for tt, cc, ff in zip(t, cocycle, F)]


def locate(g, j: int = 0, m0: int = TRUNCATION_DEPTH, exact: bool = True) -> TileAddress:
    a, b = locate_many(np.asarray(g, dtype=float)[None, :], j, m0, exact)
    return TileAddress(j, a[0], b[0])


def _bracket_int(y, yp) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    yp = np.asarray(yp, dtype=np.int64)
    m = y.shape[-1] // 4
    yb = y.reshape(y.shape[:-1] + (m, 4))
    pb = yp.reshape(yp.shape[:-1] + (m, 4))
    shape = np.broadcast_shapes(yb.shape[:-1], pb.shape[:-1])[:-1]
    out = np.zeros(shape + (3,), dtype=np.int64)
    for al, k, jj, s in _B_TERMS:
        out[..., al] += s * np.sum(yb[..., k] * pb[..., jj], axis=-1)
    return 2 * out


@lru_cache(maxsize=None)
def child_offsets(n: int):
    """The digit set: a' in {0,1}^(4n-4), b' in {0,...,3}^3, in a fixed order."""
    horiz = 4 * n - 4
    digits = []
    for ap in itertools.product((0, 1), repeat=horiz):
        for bp in itertools.product(range(4), repeat=3):
            digits.append((ap, bp))
    return tuple(digits)


def children(addr: TileAddress) -> list:
    a = np.array(addr.a, dtype=np.int64)
    b = np.array(addr.b, dtype=np.int64)
    digits = child_offsets(addr.n)
    ap = np.array([d[0] for d in digits], dtype=np.int64)
    bp = np.array([d[1] for d in digits], dtype=np.int64)
    # delta_2(gamma) . gamma' = (4b + b' + B(2a, a'), 2a + a')
    ca = 2 * a + ap
    cb = 4 * b + bp + 2 * _bracket_int(a, ap)
    return [TileAddress(addr.j - 1, x, y) for x, y in zip(ca, cb)]


def parent(addr: TileAddress) -> TileAddress:
    a = np.array(addr.a, dtype=np.int64)
    b = np.array(addr.b, dtype=np.int64)
    ap = a % 2
    pa = (a - ap) // 2
    rem = b - 2 * _bracket_int(pa, ap)
    return TileAddress(addr.j + 1, pa, rem // 4)


def tile_center(addr: TileAddress) -> np.ndarray:
    data = basic_tile(addr.n)
    return dilate(addr.width, group_mul(addr.gamma, data.center))


def tile_width(addr: TileAddress) -> float:
    return addr.width


def sample_basic_tile(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points of A (the tile has unit volume in every fibre)."""
    dim = GroupDim(n)
    y = rng.random((count, dim.horiz))
    F, _ = F_eval(y)
    return join(F + rng.random((count, 3)), y)


def grid_basic_tile(n: int, per_axis: int) -> np.ndarray:
    """Cell-midpoint grid of A: per_axis^(4n-1) points."""
    dim = GroupDim(n)
    levels = (np.arange(per_axis) + 0.5) / per_axis
    y = np.array(list(itertools.product(levels, repeat=dim.horiz)))
    tt = np.array(list(itertools.product(levels, repeat=3)))
    F, _ = F_eval(y)
    pts = F[:, None, :] + tt[None, :, :]
    yy = np.broadcast_to(y[:, None, :], (len(y), len(tt), dim.horiz))
    return join(pts, yy).reshape(-1, dim.topdim)


def to_tile(addr: TileAddress, local) -> np.ndarray:
    """Map points of A onto the tile: g -> delta_{2^j}(gamma . g)."""
    local = np.asarray(local, dtype=float)
    return dilate(np.full(local.shape[:-1], addr.width), group_mul(addr.gamma, local))


# ---------------------------------------------------------------- audits


@dataclass
class SandwichConstants:
    inner: float
    outer: float


def sandwich_constants(addr: TileAddress, directions, local_samples, radial_steps: int = 200,
                       max_radius: float = 0.25) -> SandwichConstants:
    """Inner and outer ball radii around the tile center, in units of the width.

    ``inner`` is the smallest first-exit radius along the given directions
    (unit-sphere points); ``outer`` the largest distance from the center to
    the given points of A mapped into the tile.
    """
    c = tile_center(addr)
    w = addr.width
    pts = to_tile(addr, local_samples)
    outer = float(np.max(dist(pts, c))) / w
    radii = np.linspace(0.0, max_radius, radial_steps + 1)[1:]
    rays = dilate(np.repeat(radii * w, len(directions)), np.tile(directions, (len(radii), 1)))
    cand = group_mul(c, rays)
    code = contains_many(addr.j, addr.a, addr.b, cand).reshape(len(radii), len(directions))
    inside = code == 1
    first_out = np.where(inside.all(axis=0), len(radii), np.argmin(inside, axis=0))
    lo = np.where(first_out > 0, radii[np.maximum(first_out - 1, 0)], 0.0)
    hi = np.where(first_out < len(radii), radii[np.minimum(first_out, len(radii) - 1)], max_radius)
    open_ray = first_out < len(radii)
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        p = group_mul(c, dilate(mid * w, directions))
        ok = contains_many(addr.j, addr.a, addr.b, p) == 1
        lo = np.where(ok & open_ray, mid, lo)
        hi = np.where(~ok & open_ray, mid, hi)
    exits = np.where(open_ray, lo, max_radius)
    return SandwichConstants(float(min(exits)), outer)


# ---------------------------------------------------------------- sign tiles

SIGN_CHUNK = 16384


@dataclass
class SignTile:
    tile: TileAddress
    component: int  # 0..3 along 1, i, j, k
    magnitude: float
    sign: int
    center_value: float
    samples: int
    distance: float  # center distance in widths
    lipschitz_bound: float  # |grad K| * tile diameter over the pair, for rigor assessment


def _pair_sample(g, c, other: TileAddress, grid: np.ndarray):
    """Pairs (g, g_hat): grid of T against the reversed grid of T_hat, plus each grid against the other center."""
    gh = to_tile(other, grid)
    ch = tile_center(other)
    first = np.concatenate([g, g, np.broadcast_to(c, g.shape)])
    second = np.concatenate([gh[::-1], np.broadcast_to(ch, gh.shape), gh])
    return first, second


def _candidates(addr: TileAddress, r_lo: float, r_hi: float, directions, growth: float = 1.25):
    c = tile_center(addr)
    w = addr.width
    seen = {addr}
    rho = r_lo
    while rho <= r_hi * (1 + 1e-12):
        pts = group_mul(c, dilate(np.full(len(directions), rho * w), directions))
        a, b = locate_many(pts, addr.j)
        for x, y in zip(a, b):
            cand = TileAddress(addr.j, x, y)
            if cand in seen:
                continue
            seen.add(cand)
            dc = float(dist(tile_center(cand), c)) / w
            if r_lo <= dc <= r_hi:
                yield cand, dc
        rho *= growth


def default_directions(dim: GroupDim, extra: int = 24, seed: int = 7) -> np.ndarray:
    """Coordinate axes (both signs) followed by QMC directions, all on the unit sphere."""
    from .kernel_checks import sphere_samples

    axes = np.concatenate([np.eye(dim.topdim), -np.eye(dim.topdim)])
    return np.concatenate([axes, sphere_samples(dim, extra, seed)])


def sign_tile_search(ctx, addr: TileAddress, annulus=(3.0, 64.0), per_axis: int = 5, threshold: float = 0.0,
                     min_ratio: float = 0.25, directions=None) -> SignTile:
    """First same-scale tile on which one kernel component keeps a sign.

    Accepts a candidate when a component has one sign on every sampled pair
    and its smallest modulus is at least ``threshold * 2^(-Qj)`` and at least
    ``min_ratio`` times its value between the two centers.
    """
    from .kernel import kernel_boundary

    r_lo, r_hi = annulus
    if r_lo < 3:
        raise ValueError("annulus must start at least 3 widths out")
    dim = ctx.dim
    directions = default_directions(dim) if directions is None else directions
    grid = grid_basic_tile(dim.n, per_axis)
    floor = threshold * 2.0 ** (-dim.Q * addr.j)
    c = tile_center(addr)
    g_grid = to_tile(addr, grid)
    best = None
    for cand, dc in _candidates(addr, r_lo, r_hi, directions):
        center_val = kernel_boundary(ctx, group_mul(group_inv(tile_center(cand)), c))
        sgn = np.sign(center_val)
        need = np.maximum(floor, min_ratio * np.abs(center_val))
        g, gh = _pair_sample(g_grid, c, cand, grid)
        # strided chunks so early chunks already span both tiles
        chunks = max(1, len(g) // SIGN_CHUNK)
        order = np.argsort(np.arange(len(g)) % chunks, kind="stable")
        low = np.full(4, np.inf)
        alive = sgn != 0
        for part in np.array_split(order, chunks):
            vals = kernel_boundary(ctx, group_mul(group_inv(gh[part]), g[part]))
            low = np.minimum(low, np.min(sgn * vals, axis=0))
            alive &= (low > 0) & (low >= need)
            if not alive.any():
                break
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(sgn != 0, low / np.abs(center_val), -np.inf)
        i = int(np.argmax(np.where(alive, ratios, -np.inf))) if alive.any() else int(np.argmax(ratios))
        if best is None or ratios[i] > best[0]:
            best = (float(ratios[i]), cand, i)
        if alive.any():
            lip = _lipschitz_estimate(ctx, addr, cand, center_val)
            return SignTile(cand, i, float(low[i]), int(sgn[i]), float(center_val[i]), len(g), dc, lip)
    raise NoCandidateFound("no sign tile in the annulus", near_miss=best)


def _lipschitz_estimate(ctx, addr, cand, center_val):
    """Horizontal gradient size at the center pair times the tile width, relative to |K|."""
    from .group import apply_word
    from .kernel import kernel_boundary

    dim = ctx.dim
    x = group_mul(group_inv(tile_center(cand)), tile_center(addr))
    f = lambda p: kernel_boundary(ctx, p)
    grad = 0.0
    for k in range(dim.horiz):
        v = apply_word(dim, (k,), f, x, 1e-3, scale=addr.width, richardson=True)
        grad += float(np.sum(v * v))
    return math.sqrt(grad) * addr.width / float(np.linalg.norm(center_val))


@dataclass
class SignPair:
    low: TileAddress  # T'
    high: TileAddress  # T''
    kappa: float


def _descend(addr: TileAddress, digits, depth: int) -> TileAddress:
    cur = addr
    for _ in range(depth):
        kids = children(cur)
        want = tuple(digits)
        # b digit 1 keeps the descendant away from the vertical faces
        idx = child_offsets(addr.n).index((want, (1, 1, 1)))
        cur = kids[idx]
    return cur


def sign_lemma_probe(addr: TileAddress, signs, depth: int = 2, samples: int = 256, seed: int = 0) -> SignPair:
    """Descendants T', T'' of ``addr`` with signs_j (g_j - h_j) >= kappa * width
    for g in T'' and h in T'.  ``kappa`` is measured on sampled pairs."""
    signs = np.asarray(signs, dtype=int)
    if len(signs) != len(addr.a) or not np.all(np.abs(signs) == 1):
        raise ValueError("signs must be a +-1 vector over the horizontal coordinates")
    if depth < 2:
        raise DepthTooShallow("separated descendants need depth >= 2")
    high = _descend(addr, (signs > 0).astype(int), depth)
    low = _descend(addr, (signs < 0).astype(int), depth)
    rng = np.random.default_rng(seed)
    loc = sample_basic_tile(addr.n, samples, rng)
    gh = split(to_tile(high, loc))[1]
    gl = split(to_tile(low, loc))[1]
    gaps = signs * (gh[:, None, :] - gl[None, :, :])
    kappa = float(np.min(gaps)) / addr.width
    if kappa <= 0:
        raise DepthTooShallow(f"sampled gap {kappa:.3g} is not positive at depth {depth}")
    return SignPair(low, high, kappa)
