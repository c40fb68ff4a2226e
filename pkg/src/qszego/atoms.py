"""Hardy-space atoms and their Cauchy-Szego projections.

An atom is a closed-form template (a smooth bump times a random polynomial,
with its low moments removed) living in local coordinates
``u = delta_{1/r}(g0^-1 g)`` on the unit ball.  Quadrature nodes are
antithetic scrambled-Sobol points of the unit ball, so odd moments vanish
on the nodes by symmetry.  The template can be resampled at any density for
audits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import optimize, stats

from .config import LAMBDA, OUTER_FACTOR
from .errors import BadExponent, GramSingular, TailDominates, TooManyNodes
from .group import GroupDim, dilate, group_inv, group_mul, hom_norm, monomial, multi_indices
from .kernel import KernelContext, kernel_upper
from .quaternion import ONE, as_quat, quat_abs, quat_mul

TEMPLATES = ("bump-poly", "half-ball")
# nodes times evaluation points per kernel batch
BATCH = 1 << 20
# far-field values must exceed this many ulps of the term-modulus sum to be trusted
ROUNDING_MARGIN = 1e2


# ---------------------------------------------------------------- ball volume


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    error: float
    samples: int


def _box_samples(dim: GroupDim, m: int, seed: int) -> np.ndarray:
    sob = stats.qmc.Sobol(d=dim.topdim, scramble=True, seed=seed)
    return 2.0 * sob.random_base2(m) - 1.0


@lru_cache(maxsize=None)
def unit_ball_volume(n: int, m: int = 18, replicates: int = 8) -> VolumeEstimate:
    """|B(0,1)| by hit counting in the box |t_a| <= 1, |y_k| <= 1.

    The error is the standard error over independently scrambled replicates.
    """
    dim = GroupDim(n)
    box = 2.0**dim.topdim
    est = []
    for rep in range(replicates):
        u = _box_samples(dim, m, seed=1000 + rep)
        est.append(box * np.mean(hom_norm(u) < 1.0))
    est = np.array(est)
    return VolumeEstimate(float(est.mean()), float(est.std(ddof=1) / math.sqrt(replicates)), replicates << m)


def ball_volume(r: float, n: int = 2) -> float:
    """|B(g, r)| = r^Q |B(0,1)| for any center g."""
    if r <= 0:
        raise ValueError("radius must be positive")
    dim = GroupDim(n)
    return r**dim.Q * unit_ball_volume(n).value


@lru_cache(maxsize=32)
def unit_ball_nodes(n: int, count: int, seed: int = 0) -> np.ndarray:
    """``count`` antithetic quasi-random points of the open unit ball."""
    if count % 2:
        raise ValueError("node count must be even")
    dim = GroupDim(n)
    half = count // 2
    frac = unit_ball_volume(n).value / 2.0**dim.topdim
    m = max(int(math.ceil(math.log2(1.3 * half / frac))), 4)
    while True:
        u = _box_samples(dim, m, seed)
        u = u[hom_norm(u) < 1.0]
        if len(u) >= half:
            break
        m += 1
    u = u[:half]
    out = np.concatenate([u, -u])
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------- atoms


def min_alpha(n: int, p: float) -> int:
    return math.floor(GroupDim(n).Q * (1.0 / p - 1.0) + 1e-12)


def _bump(u):
    t = u[..., :3]
    y = u[..., 3:]
    y2 = np.sum(y * y, axis=-1)
    rho4 = y2 * y2 + np.sum(t * t, axis=-1)
    return np.where(rho4 < 1.0, (1.0 - np.minimum(rho4, 1.0)) ** 3, 0.0)


@dataclass(frozen=True)
class Atom:
    n: int
    center: tuple
    radius: float
    p: float
    alpha: int
    seed: int
    template: str
    node_count: int
    scale: float
    right: tuple = (1.0, 0.0, 0.0, 0.0)
    raw: tuple = ()  # (index, quaternion) pairs of the random polynomial
    correction: tuple = ()  # (index, quaternion) pairs removed to kill moments

    @property
    def dim(self) -> GroupDim:
        return GroupDim(self.n)

    @property
    def volume(self) -> float:
        return ball_volume(self.radius, self.n)

    @property
    def bound(self) -> float:
        return self.volume ** (-1.0 / self.p)

    def local(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        return dilate(1.0 / self.radius, group_mul(group_inv(np.asarray(self.center)), g))

    def template_values(self, u) -> np.ndarray:
        """Unscaled template at local points (zero outside the unit ball)."""
        u = np.asarray(u, dtype=float)
        inside = hom_norm(u) < 1.0
        if self.template == "half-ball":
            return np.where(inside, np.where(u[..., 0] >= 0, 1.0, -1.0), 0.0)[..., None] * ONE
        poly = np.zeros(u.shape[:-1] + (4,))
        for I, c in self.raw:
            poly += monomial(self.dim, I, u)[..., None] * np.asarray(c)
        for I, c in self.correction:
            poly -= monomial(self.dim, I, u)[..., None] * np.asarray(c)
        return (_bump(u) * inside)[..., None] * poly

    def local_values(self, u) -> np.ndarray:
        return self.scale * quat_mul(self.template_values(u), np.asarray(self.right))

    def __call__(self, g) -> np.ndarray:
        return self.local_values(self.local(g))

    # quadrature data
    @property
    def local_nodes(self) -> np.ndarray:
        return unit_ball_nodes(self.n, self.node_count, self.seed)

    @property
    def nodes(self) -> np.ndarray:
        return group_mul(np.asarray(self.center), dilate(self.radius, self.local_nodes))

    @property
    def weight(self) -> float:
        return self.volume / self.node_count

    def node_values(self) -> np.ndarray:
        return self.local_values(self.local_nodes)

    # transformations
    def dilated(self, eps: float) -> "Atom":
        """eps^(Q/2p) a(delta_sqrt(eps) g), supported on B(delta_{1/sqrt eps} g0, r/sqrt eps)."""
        root = math.sqrt(eps)
        c = dilate(1.0 / root, np.asarray(self.center))
        return replace(self, center=tuple(c), radius=self.radius / root,
                       scale=self.scale * eps ** (self.dim.Q / (2.0 * self.p)))

    def translated(self, h) -> "Atom":
        c = group_mul(np.asarray(h, dtype=float), np.asarray(self.center))
        return replace(self, center=tuple(c))

    def times(self, lam) -> "Atom":
        """Right multiplication of the values by a quaternion."""
        return replace(self, right=tuple(quat_mul(np.asarray(self.right), as_quat(lam))))

    def with_scale(self, factor: float) -> "Atom":
        return replace(self, scale=self.scale * factor)

    def to_json(self) -> dict:
        return {
            "n": self.n, "center": list(self.center), "radius": self.radius, "p": self.p,
            "alpha": self.alpha, "seed": self.seed, "template": self.template,
            "nodes": self.node_count, "right": list(self.right),
        }

    @classmethod
    def from_json(cls, obj) -> "Atom":
        atom = make_atom(obj["center"], obj["radius"], obj["p"], obj["alpha"], obj["seed"],
                         n=obj["n"], nodes=obj["nodes"], template=obj["template"])
        return atom.times(obj.get("right", (1.0, 0.0, 0.0, 0.0)))


def _check_exponent(n, p, alpha):
    if not 2.0 / 3.0 < p <= 1.0:
        raise BadExponent("p must lie in (2/3, 1]")
    floor = min_alpha(n, p)
    if alpha is None:
        return floor
    if alpha < floor:
        raise BadExponent(f"alpha must be at least {floor} for p={p}")
    return int(alpha)


def _polish_sup(fn, starts, iters=400):
    """Local maximisation of |template| from the given local points."""
    best = 0.0
    for x0 in starts:
        obj = lambda v: -float(quat_abs(fn(np.asarray(v)[None, :]))[0])
        res = optimize.minimize(obj, x0, method="Nelder-Mead", options={"maxiter": iters, "xatol": 1e-9, "fatol": 1e-14})
        best = max(best, -res.fun)
    return best


def make_atom(center, radius: float, p: float, alpha: int | None = None, seed: int = 0, n: int = 2,
              nodes: int = 1 << 14, template: str = "bump-poly", audit: int = 1 << 15) -> Atom:
    """Build an atom on ``B(center, radius)`` whose node moments vanish up to degree ``alpha``."""
    alpha = _check_exponent(n, p, alpha)
    if template not in TEMPLATES:
        raise ValueError(f"unknown template {template!r}")
    dim = GroupDim(n)
    center = tuple(float(v) for v in dim.check(np.asarray(center, dtype=float)))
    base = Atom(n, center, float(radius), float(p), alpha, int(seed), template, int(nodes), 1.0)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if template == "half-ball":
        if alpha > 0:
            raise BadExponent("the half-ball template only cancels constants")
        return replace(base, scale=base.bound)

    rng = np.random.default_rng(seed)
    raw = []
    for I in multi_indices(dim, alpha + 2):
        raw.append((I, tuple(rng.normal(size=4) / (1.0 + sum(I)))))
    atom = replace(base, raw=tuple(raw))
    u = atom.local_nodes
    f = atom.template_values(u)
    bump = _bump(u)
    basis = multi_indices(dim, alpha)
    mono = np.stack([monomial(dim, I, u) for I in basis], axis=-1)
    gram = mono.T @ (bump[:, None] * mono)
    if np.linalg.cond(gram) > 1e13:
        raise GramSingular("moment Gram matrix is numerically singular; reseed")
    coef = np.linalg.solve(gram, mono.T @ f)
    # one step of iterative refinement
    resid = mono.T @ (f - bump[:, None] * (mono @ coef))
    coef += np.linalg.solve(gram, resid)
    atom = replace(atom, correction=tuple((I, tuple(c)) for I, c in zip(basis, coef)))

    vals = quat_abs(atom.template_values(u))
    extra = unit_ball_nodes(n, audit, seed + 7919)
    audit_vals = quat_abs(atom.template_values(extra))
    pool = np.concatenate([u, extra])
    allv = np.concatenate([vals, audit_vals])
    starts = pool[np.argsort(allv)[-3:]]
    sup = max(float(allv.max()), _polish_sup(atom.template_values, starts))
    return replace(atom, scale=0.98 * atom.bound / sup)


@dataclass
class AtomReport:
    support_ok: bool
    linf_ok: bool
    moments_ok: bool
    linf_ratio: float  # sup |a| / |B|^(-1/p)
    moment_residuals: dict  # index -> relative residual on the nodes
    audit_moments: dict  # index -> relative residual on independent audit nodes (QMC-limited)
    weight_sum_error: float

    @property
    def passed(self) -> bool:
        return self.support_ok and self.linf_ok and self.moments_ok


def check_atom(atom: Atom, audit_density: int = 1 << 16, moment_tol: float = 1e-9) -> AtomReport:
    """Support, size and cancellation conditions of an atom."""
    dim = atom.dim
    u = atom.local_nodes
    audit = unit_ball_nodes(atom.n, audit_density, atom.seed + 104729)
    # support: nothing outside the ball, checked on a shell around it
    shell = dilate(np.linspace(1.0 + 1e-9, 1.5, len(audit)) / hom_norm(audit), audit)
    support_ok = bool(np.all(hom_norm(u) < 1.0) and not np.any(quat_abs(atom.local_values(shell)) > 0))

    pool = np.concatenate([u, audit])
    pool_vals = quat_abs(atom.local_values(pool))
    # sampled maxima miss narrow peaks; polish the best few
    sup = max(float(pool_vals.max()), _polish_sup(atom.local_values, pool[np.argsort(pool_vals)[-3:]]))
    ratio = sup / atom.bound
    linf_ok = ratio <= 1.0 + 1e-12

    vals = atom.local_values(u)
    unit_w = 1.0 / len(u)
    # local moments over |B(0,1)|, so the scale is ||a||_inf (|u^I| <= 1 on the ball)
    norm = sup
    residuals = {}
    audit_res = {}
    avals = atom.local_values(audit)
    for I in multi_indices(dim, atom.alpha):
        m = np.sum(monomial(dim, I, u)[:, None] * vals, axis=0) * unit_w
        residuals[I] = float(np.max(np.abs(m)) / norm)
        ma = np.mean(monomial(dim, I, audit)[:, None] * avals, axis=0)
        audit_res[I] = float(np.max(np.abs(ma)) / norm)
    moments_ok = all(v < moment_tol for v in residuals.values())
    weight_err = abs(atom.weight * atom.node_count - atom.volume) / atom.volume
    return AtomReport(support_ok, bool(linf_ok), moments_ok, ratio, residuals, audit_res, weight_err)


# ---------------------------------------------------------------- projection


def _project_sum(ctx, atom: Atom, s, pts, mask=None, magnitude=False):
    """Node sum for the projection; with ``magnitude`` also the sum of term moduli (the rounding scale)."""
    nodes = atom.nodes
    vals = atom.node_values() * atom.weight
    if mask is not None:
        nodes, vals = nodes[mask], vals[mask] * (len(mask) / mask.sum())
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.zeros((len(pts), 4))
    size = np.zeros(len(pts))
    step = max(1, BATCH // len(nodes))
    for i in range(0, len(pts), step):
        chunk = pts[i:i + step]
        ker = kernel_upper(ctx, s, chunk[:, None, :], nodes[None, :, :])
        terms = quat_mul(ker, vals[None, :, :])
        out[i:i + step] = np.sum(terms, axis=1)
        if magnitude:
            size[i:i + step] = np.sum(quat_abs(terms), axis=1)
    return (out, size) if magnitude else out


def project_atom(ctx: KernelContext, atom: Atom, s: float, g, error: bool = False):
    """Cauchy-Szego projection of the atom at the points ``(s, g)``, ``s > 0``.

    With ``error=True`` also returns the change against the half node set
    made of the first antithetic pairs (a conservative node-doubling error).
    """
    if s <= 0:
        raise ValueError("projection height must be positive")
    g = np.asarray(g, dtype=float)
    single = g.ndim == 1
    val = _project_sum(ctx, atom, s, g)
    if not error:
        return val[0] if single else val
    half = atom.node_count // 2
    mask = np.zeros(atom.node_count, dtype=bool)
    mask[: half // 2] = True
    mask[half: half + half // 2] = True
    coarse = _project_sum(ctx, atom, s, g, mask)
    err = quat_abs(val - coarse)
    return (val[0], float(err[0])) if single else (val, err)


# ---------------------------------------------------------------- H^p scans


@dataclass
class HpScan:
    eps: np.ndarray
    values: np.ndarray  # integral of |P a(eps, .)|^p including the tail bound
    tail: np.ndarray  # tail bound beyond the outer radius
    tail_share: np.ndarray
    outer_radius: np.ndarray
    decay: np.ndarray  # exponent used for the tail

    def rows(self):
        return [
            {"eps": float(e), "value": float(v), "tail_share": float(s)}
            for e, v, s in zip(self.eps, self.values, self.tail_share)
        ]


@lru_cache(maxsize=8)
def sphere_directions(n: int, count: int, seed: int = 11):
    """Points of the unit sphere distributed like the polar-coordinate measure."""
    u = unit_ball_nodes(n, count, seed)
    return dilate(1.0 / hom_norm(u), u)


def _radial_rule(inner: float, outer: float, order: int):
    """Gauss-Legendre nodes on [0, inner/8] and on doubling panels up to ``outer``.

    Returns ``(nodes, weights, edges)``; panel ``i`` spans ``edges[i:i+2]``.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    edges = [0.0, inner / 8.0]
    while edges[-1] < outer * (1 - 1e-12):
        edges.append(min(2.0 * edges[-1], outer))
    r, wr = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        r.append(0.5 * (b - a) * x + 0.5 * (a + b))
        wr.append(0.5 * (b - a) * w)
    return np.concatenate(r), np.concatenate(wr), np.array(edges)


def hp_integral(ctx: KernelContext, atom: Atom, eps: float, directions: int = 64, order: int = 5,
                lam: float = LAMBDA, outer_factor: float = OUTER_FACTOR):
    """Integral of |P a(eps, h)|^p over h, in polar coordinates about the atom center.

    Returns ``(value, tail, cut_radius, decay)``; ``value`` includes the tail
    extrapolated beyond ``cut_radius``, the edge of the last radial panel whose
    values stand clear of rounding (at most ``outer_factor * lam * max(r, sqrt eps)``).
    """
    dim = atom.dim
    p = atom.p
    length = max(atom.radius, math.sqrt(eps))
    outer = outer_factor * lam * length
    radii, rw, edges = _radial_rule(lam * length, outer, order)
    omega = sphere_directions(atom.n, directions)
    sigma = dim.Q * unit_ball_volume(atom.n).value / len(omega)
    pts = dilate(np.repeat(radii, len(omega)), np.tile(omega, (len(radii), 1)))
    pts = group_mul(np.asarray(atom.center), pts)
    proj, size = _project_sum(ctx, atom, eps, pts, magnitude=True)
    vals = quat_abs(proj).reshape(len(radii), len(omega))
    size = size.reshape(vals.shape)

    # the cancelled far field eventually sinks below rounding of the node sum and
    # integrating that noise diverges; the body stops at the last panel resolved
    # in every direction and the tail is extrapolated from its outer edge
    resolved = np.all(vals > ROUNDING_MARGIN * np.finfo(float).eps * size, axis=1)
    panels = resolved.reshape(-1, order).all(axis=1)
    bad = np.nonzero(~panels)[0]
    last = (int(bad[0]) if bad.size else len(panels)) - 1
    last = max(last, 1)
    stop = (last + 1) * order
    cut = float(edges[last + 1])
    body = float(np.sum(rw[:stop, None] * radii[:stop, None] ** (dim.Q - 1) * vals[:stop] ** p) * sigma)

    k = stop - 1
    kappa = dim.Q + atom.alpha + 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        local = -np.log(vals[k] / vals[k - order]) / np.log(radii[k] / radii[k - order])
    slope = float(min(kappa, np.nanmin(local)))
    const = vals[k] * radii[k] ** slope
    if slope * p <= dim.Q:
        tail = math.inf
    else:
        tail = float(np.sum(const**p) * sigma * cut ** (dim.Q - slope * p) / (slope * p - dim.Q))
    return body + tail, tail, cut, slope


def hp_scan(ctx: KernelContext, atom: Atom, eps_grid, directions: int = 64, order: int = 5,
            tail_share: float = 0.2, **kw) -> HpScan:
    """H^p-type integrals of the projection at each height in ``eps_grid``."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    out = [hp_integral(ctx, atom, e, directions, order, **kw) for e in eps_grid]
    values = np.array([o[0] for o in out])
    tail = np.array([o[1] for o in out])
    share = tail / values
    if np.any(share > tail_share):
        warnings.warn(f"tail bound exceeds {tail_share:.0%} of the total", TailDominates, stacklevel=2)
    return HpScan(eps_grid, values, tail, share, np.array([o[2] for o in out]), np.array([o[3] for o in out]))


# ---------------------------------------------------------------- pointwise growth


@dataclass
class PointwiseReport:
    eps: np.ndarray
    values: np.ndarray
    normalised: np.ndarray  # |P a(eps, 0)| * eps^((2n+1)/p)
    exponent: float  # fitted slope of log |P a| against log eps on the small-eps half
    floor: float  # -(2n+1)/p - 0.3

    @property
    def passed(self) -> bool:
        return bool(np.all(np.isfinite(self.normalised))) and self.exponent >= self.floor


def pointwise_bound_check(ctx: KernelContext, atom: Atom, eps_list) -> PointwiseReport:
    eps = np.sort(np.asarray(eps_list, dtype=float))
    origin = np.zeros(atom.dim.topdim)
    vals = np.array([quat_abs(project_atom(ctx, atom, e, origin)) for e in eps])
    power = (2 * atom.n + 1) / atom.p
    k = max(2, len(eps) // 2)
    slope = float(np.polyfit(np.log(eps[:k]), np.log(vals[:k]), 1)[0])
    return PointwiseReport(eps, vals, vals * eps**power, slope, -power - 0.3)


# ---------------------------------------------------------------- commutators


MAX_COMMUTATOR_NODES = 2000


@dataclass
class CommutatorResult:
    matrix: np.ndarray  # (4M, M): the real component matrices stacked
    singular_values: np.ndarray
    scale: float


def tile_patch_nodes(n: int, count: int, seed: int = 0):
    """Equal-weight random nodes of the basic tile (unit volume)."""
    from .tiling import sample_basic_tile

    pts = sample_basic_tile(n, count, np.random.default_rng(seed))
    return pts, np.full(count, 1.0 / count)


def commutator_matrix(ctx: KernelContext, symbol, nodes, weights, t: float) -> CommutatorResult:
    """Discretised [b, P] at height ``t``: entries (b(x) - b(y)) K((t,x), y) w_y."""
    nodes = np.asarray(nodes, dtype=float)
    if len(nodes) > MAX_COMMUTATOR_NODES:
        raise TooManyNodes(f"at most {MAX_COMMUTATOR_NODES} nodes")
    if t <= 0:
        raise ValueError("regularisation height must be positive")
    b = np.asarray(symbol(nodes), dtype=float)
    ker = kernel_upper(ctx, t, nodes[:, None, :], nodes[None, :, :]) * np.asarray(weights)[None, :, None]
    diff = b[:, None] - b[None, :]
    mat = np.concatenate([diff * ker[..., c] for c in range(4)], axis=0)
    plain = np.concatenate([ker[..., c] for c in range(4)], axis=0)
    scale = float(np.linalg.norm(plain, 2) * max(np.max(np.abs(b)), 1.0))
    return CommutatorResult(mat, np.linalg.svd(mat, compute_uv=False), scale)
