"""Verification batteries shared by the command line and the test suite.

Each battery takes a :class:`RunConfig` and returns a :class:`BatteryResult`
holding what was measured next to the bound it was held to.
"""

from __future__ import annotations

import itertools
import math
import time
import warnings
from functools import wraps

import numpy as np

from . import atoms as at
from . import kernel_checks as kc
from . import tiling as tl
from .errors import TailDominates
from .group import (
    GroupDim, apply_word, dilate, homdeg, group_inv, group_mul, hom_norm, multi_indices, pi_inv, pi_map,
    random_points,
)
from .kernel import KernelContext, kernel_upper, s_oracle, s_quat
from .quaternion import quat, quat_abs, quat_mul
from .report import BatteryResult, RunConfig

REGISTRY = {}


def battery(name):
    def deco(fn):
        @wraps(fn)
        def run(cfg: RunConfig, **kw) -> BatteryResult:
            start = time.perf_counter()
            res = fn(cfg, **kw)
            res.runtime = time.perf_counter() - start
            return res

        REGISTRY[name] = run
        return run

    return deco


def _ctx(cfg: RunConfig, n=None) -> KernelContext:
    return KernelContext.for_n(n or cfg.n, cfg.c, cfg.tol)


# ---------------------------------------------------------------- group


@battery("group")
def group_battery(cfg: RunConfig, ns=(2, 3)) -> BatteryResult:
    count = cfg.count(10_000)
    tol = cfg.tol.group
    measured = {}
    for n in ns:
        dim = GroupDim(n)
        rng = cfg.rng("group", f"points-{n}")
        g, h, w = (random_points(dim, rng, count) for _ in range(3))
        r = rng.uniform(0.25, 4.0, count)
        assoc = np.abs(group_mul(group_mul(g, h), w) - group_mul(g, group_mul(h, w))).max()
        inv = max(np.abs(group_mul(g, group_inv(g))).max(), np.abs(group_mul(group_inv(g), g)).max())
        auto = np.abs(dilate(r, group_mul(g, h)) - group_mul(dilate(r, g), dilate(r, h))).max()
        norm = np.abs(hom_norm(dilate(r, g)) - r * hom_norm(g)).max()
        s = rng.uniform(0.1, 3.0, count)
        s2, g2 = pi_map(pi_inv(s, g))
        lift = max(np.abs(s2 - s).max(), np.abs(g2 - g).max())
        measured[f"n{n}"] = {"associativity": assoc, "inverse": inv, "dilation_automorphism": auto,
                             "norm_homogeneity": norm, "lift_roundtrip": lift}
    worst = max(v for m in measured.values() for v in m.values())
    return BatteryResult("group", worst < tol, "group axioms, dilation automorphism and norm homogeneity",
                         measured, {"max_componentwise_error": tol, "samples": count})


def _quadratic(dim, rng):
    c0 = rng.normal()
    lin = rng.normal(size=dim.topdim)
    mat = rng.normal(size=(dim.topdim, dim.topdim))
    mat = 0.5 * (mat + mat.T)

    def f(g):
        return c0 + g @ lin + np.einsum("...i,ij,...j->...", g, mat, g)

    def grad(g):
        return lin + 2.0 * g @ mat

    return f, grad


@battery("commutator-table")
def commutator_table(cfg: RunConfig, ns=(2, 3), points=4, h=1e-2) -> BatteryResult:
    from .group import b_matrix

    measured = {}
    worst = 0.0
    for n in ns:
        dim = GroupDim(n)
        rng = cfg.rng("commutator-table", f"poly-{n}")
        f, grad = _quadratic(dim, rng)
        g = random_points(dim, rng, points)
        bs = np.stack([b_matrix(a) for a in (1, 2, 3)])
        err = 0.0
        for k, j in itertools.product(range(dim.topdim), repeat=2):
            kj = apply_word(dim, (k, j), f, g, h, richardson=True)
            jk = apply_word(dim, (j, k), f, g, h, richardson=True)
            expected = np.zeros(points)
            if k < dim.horiz and j < dim.horiz and k // 4 == j // 4:
                coef = 4.0 * bs[:, k % 4, j % 4]
                expected = grad(g)[:, :3] @ coef
            err = max(err, float(np.abs(kj - jk - expected).max()))
        measured[f"n{n}"] = err
        worst = max(worst, err)
    return BatteryResult("commutator-table", worst < cfg.tol.commutator,
                         "finite-difference field commutators match the structure constants",
                         measured, {"max_error": cfg.tol.commutator})


# ---------------------------------------------------------------- kernel


PINNED = {(1, 0, 0, 0): (12, 0, 0, 0), (0, 1, 0, 0): (0, 4, 0, 0), (1, 1, 0, 0): (0, -1, 0, 0), (1, 0, 1, 0): (0, 0, -1, 0)}


@battery("oracle")
def oracle_battery(cfg: RunConfig, ns=(2, 3), count=200) -> BatteryResult:
    measured = {}
    ok = True
    for n in ns:
        ctx = _ctx(cfg, n)
        xi = cfg.rng("oracle", f"args-{n}").normal(size=(count, 4))
        a, b = s_quat(ctx, xi), s_oracle(ctx, xi)
        rel = float(np.max(quat_abs(a - b) / quat_abs(b)))
        measured[f"n{n}_max_rel_error"] = rel
        ok &= rel < cfg.tol.oracle_rel
    if 2 in ns:
        ctx = _ctx(cfg, 2)
        pins = {}
        for arg, want in PINNED.items():
            got = s_quat(ctx, np.array(arg, dtype=float))
            pins[str(arg)] = float(quat_abs(got - cfg.c * np.array(want)) / (abs(cfg.c) * np.linalg.norm(want)))
        measured["pinned_rel_error"] = pins
        ok &= max(pins.values()) < cfg.tol.oracle_rel
    return BatteryResult("oracle", bool(ok), "slice evaluation agrees with exact symbolic differentiation",
                         measured, {"max_rel_error": cfg.tol.oracle_rel, "arguments": count})


def _unit_quats(rng, size):
    q = rng.normal(size=(size, 4))
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


@battery("invariance")
def invariance_battery(cfg: RunConfig) -> BatteryResult:
    ctx = _ctx(cfg, 2) if cfg.n != 2 else _ctx(cfg)
    dim = ctx.dim
    count = cfg.count(1000)
    rng = cfg.rng("invariance", "points")
    g, gp, h = (random_points(dim, rng, count) for _ in range(3))
    s = rng.uniform(0.1, 2.0, count)
    base = kernel_upper(ctx, s, g, gp)
    size = quat_abs(base)

    moved = kernel_upper(ctx, s, group_mul(h, g), group_mul(h, gp))
    trans = float(np.max(quat_abs(moved - base) / size))

    r = rng.uniform(0.5, 2.0, count)
    scaled = kernel_upper(ctx, r * r * s, dilate(r, g), dilate(r, gp)) * (r ** dim.Q)[:, None]
    dil = float(np.max(quat_abs(scaled - base) / size))

    a = _unit_quats(rng, count)
    rot = lambda p: np.concatenate([p[:, :3], quat_mul(a, p[:, 3:])], axis=-1)
    rotated = kernel_upper(ctx, s, rot(g), rot(gp))
    rotation = float(np.max(quat_abs(rotated - base) / size))

    # conjugation covariance of the profile on the full quaternion argument
    xi = rng.normal(size=(count, 4))
    sig = _unit_quats(rng, count)
    conj = lambda q: quat_mul(quat_mul(sig, q), sig * np.array([1, -1, -1, -1]))
    cov = float(np.max(quat_abs(s_quat(ctx, conj(xi)) - conj(s_quat(ctx, xi))) / quat_abs(s_quat(ctx, xi))))

    tol = cfg.tol
    measured = {"translation": trans, "dilation": dil, "rotation": rotation, "rotor_covariance": cov}
    ok = trans < tol.translation and dil < tol.dilation and rotation < tol.rotation and cov < tol.rotor
    return BatteryResult("invariance", ok, "kernel invariance under translations, dilations and rotations",
                         measured, {"translation": tol.translation, "dilation": tol.dilation,
                                    "rotation": tol.rotation, "rotor_covariance": tol.rotor, "samples": count})


def _regularity_points(cfg, dim, count, battery):
    rng = cfg.rng(battery, "points")
    g = random_points(dim, rng, count)
    g = dilate(rng.uniform(0.05, 1.0, count) / hom_norm(g), g)
    gp = random_points(dim, rng, count, spread=0.7)
    return g, gp


@battery("regularity")
def regularity_battery(cfg: RunConfig, h=1e-3, h_order=(1e-2, 5e-3)) -> BatteryResult:
    ctx = _ctx(cfg)
    count = cfg.count(1000)
    g, gp = _regularity_points(cfg, ctx.dim, count, "regularity")
    s = np.ones(count)
    tol = cfg.tol
    out = {}
    ok = True
    for name, fn in (("cauchy_fueter", kc.cauchy_fueter_residual), ("heat", kc.heat_residual)):
        res = fn(ctx, s, g, gp, h)
        coarse, fine = fn(ctx, s, g, gp, h_order[0]), fn(ctx, s, g, gp, h_order[1])
        order = kc.observed_order(coarse, fine)
        out[name] = {"max_residual": float(res.max()), "order_min": float(order.min()),
                     "order_median": float(np.median(order)), "order_max": float(order.max())}
        ok &= res.max() < tol.pde_abs and tol.pde_order[0] <= order.min() and order.max() <= tol.pde_order[1]
    wrong = kc.heat_residual(ctx, s, g, gp, h, sign=1.0)
    out["opposite_sign_heat_median"] = float(np.median(wrong))
    return BatteryResult("regularity", bool(ok), "regularity system and heat equation residuals converge at second order",
                         out, {"max_residual": tol.pde_abs, "order_range": list(tol.pde_order), "points": count,
                               "h": h, "order_steps": list(h_order)})


@battery("subharmonic")
def subharmonic_battery(cfg: RunConfig, powers=(2.0 / 3.0, 0.9, 1.0), h=1e-3) -> BatteryResult:
    ctx = _ctx(cfg)
    count = cfg.count(1000)
    g, gp = _regularity_points(cfg, ctx.dim, count, "subharmonic")
    s = np.ones(count)
    tol = cfg.tol
    out = {}
    ok = True
    for pw in powers:
        res = kc.subharmonicity_check(ctx, s, g, gp, pw, h)
        low = float(np.min(res.value / res.scale))
        ident = float(np.max(np.abs(res.value - res.identity) / res.scale))
        out[f"p={pw:.4f}"] = {"min_value_over_scale": low, "identity_rel_error": ident}
        ok &= low >= -tol.subharmonic and ident < tol.identity_rel
    return BatteryResult("subharmonic", bool(ok), "powers of the kernel modulus are subsolutions of the heat operator",
                         out, {"min_value_over_scale": -tol.subharmonic, "identity_rel_error": tol.identity_rel,
                               "points": count})


def decay_cases(dim: GroupDim) -> dict:
    """Representative multi-indices of homogeneous degree 0, 1 and 2."""
    def unit(*ks):
        idx = [0] * dim.topdim
        for k in ks:
            idx[k] += 1
        return tuple(idx)

    return {
        "d0": unit(),
        "d1_horizontal": unit(0),
        "d2_vertical": unit(dim.horiz),
        "d2_horizontal_square": unit(0, 0),
        "d2_horizontal_mixed": unit(0, 1),
    }


@battery("decay")
def decay_battery(cfg: RunConfig, index=None) -> BatteryResult:
    ctx = _ctx(cfg)
    dim = ctx.dim
    slack = dict(zip((0, 1, 2), cfg.tol.decay_slack))
    cases = {"custom": tuple(index)} if index is not None else decay_cases(dim)
    out = {}
    ok = True
    for name, idx in cases.items():
        d = homdeg(dim, idx)
        fit = kc.decay_exponent(ctx, idx, seed=int(cfg.rng("decay", name).integers(1 << 30)))
        target = -(dim.Q + d)
        out[name] = {"slope": fit.slope, "target": target, "ray_spread": float(np.ptp(fit.slopes))}
        ok &= abs(fit.slope - target) <= slack[d]
    return BatteryResult("decay", bool(ok), "log-log decay slopes of kernel derivatives",
                         out, {"slack_by_degree": cfg.tol.decay_slack})


@battery("min-sphere")
def min_sphere_battery(cfg: RunConfig, radii=(1.0, 2.0)) -> BatteryResult:
    ctx = _ctx(cfg)
    count = cfg.count(100_000)
    seed = int(cfg.rng("min-sphere", "sobol").integers(1 << 30))
    runs = [kc.min_abs_on_sphere(ctx, count, radius=r, seed=seed) for r in radii]
    first = runs[0]
    # |K| is homogeneous of degree -Q
    consistency = max(abs(r.value * r.radius ** ctx.dim.Q / first.value - 1.0) for r in runs[1:])
    margin = first.value / first.noise
    out = {"minimum": first.value, "minimizer": first.point.tolist(), "noise": first.noise, "margin": margin,
           "coarse_minimum": first.coarse_value, "radius_consistency": consistency}
    ok = first.value > 0 and margin >= 1e3 and consistency < cfg.tol.sphere_dilation
    return BatteryResult("min-sphere", bool(ok), "the boundary kernel never vanishes on the unit sphere",
                         out, {"margin": 1e3, "radius_consistency": cfg.tol.sphere_dilation, "samples": count})


# ---------------------------------------------------------------- tiling


@battery("tiling")
def tiling_battery(cfg: RunConfig, scales=range(-3, 4)) -> BatteryResult:
    n = cfg.n
    dim = GroupDim(n)
    count = cfg.count(10_000)
    out = {}

    # partition: exactly one tile among the located one and its neighbours
    pts = random_points(dim, cfg.rng("tiling", "partition"), count, spread=3.0)
    bad = 0
    for j in scales:
        a, b = tl.locate_many(pts, j)
        hits = (tl.contains_many(j, a, b, pts) == 1).astype(int)
        for da in itertools.product((-1, 0, 1), repeat=dim.horiz):
            if any(da):
                hits += tl.contains_many(j, a + np.array(da), b, pts) == 1
        for db in itertools.product((-1, 0, 1), repeat=3):
            if any(db):
                hits += tl.contains_many(j, a, b + np.array(db), pts) == 1
        bad += int(np.sum(hits != 1))
    out["partition_failures"] = bad

    rng = cfg.rng("tiling", "addresses")
    addrs = [tl.TileAddress(int(j), rng.integers(-50, 50, dim.horiz), rng.integers(-50, 50, 3)) for j in scales]
    kids_ok = all(len(tl.children(t)) == 2 ** dim.Q for t in addrs)
    parent_ok = all(tl.parent(k) == t for t in addrs for k in tl.children(t))
    out["child_count"] = len(tl.children(addrs[0]))
    out["parent_of_child_identity"] = parent_ok

    # self-similarity: delta_{1/2} tau_g'(A) lies in A, and every point of A has exactly one piece
    local = tl.sample_basic_tile(n, count, cfg.rng("tiling", "self-similar"))
    digits = tl.child_offsets(n)
    offs = np.array([np.concatenate([bp, ap]) for ap, bp in digits], dtype=float)
    pick = offs[cfg.rng("tiling", "digits").integers(0, len(digits), count)]
    forward = tl.contains_many(0, (0,) * dim.horiz, (0, 0, 0), dilate(0.5, group_mul(pick, local)))
    doubled = dilate(2.0, local)
    pieces = np.zeros(count, dtype=int)
    for ap, bp in digits:
        pieces += tl.contains_many(0, ap, bp, doubled) == 1
    out["self_similar_forward_failures"] = int(np.sum(forward != 1))
    out["self_similar_cover_failures"] = int(np.sum(pieces != 1))

    # dyadic inputs: the float series is exact and flagged as such
    drng = cfg.rng("tiling", "dyadic")
    dy_bad = 0
    for _ in range(200):
        k = int(drng.integers(1, 25))
        y = drng.integers(0, 2**k, dim.horiz) / 2.0**k
        F, err = tl.F_eval(y)
        exact = np.array([float(v) for v in tl.F_exact(y)])
        dy_bad += int(err != 0 or np.any(F != exact))
    out["dyadic_exactness_failures"] = dy_bad

    # ball sandwich constants in units of the width
    from .kernel_checks import sphere_samples

    dirs = sphere_samples(dim, 256, 3)
    pts_a = tl.sample_basic_tile(n, 4000, cfg.rng("tiling", "sandwich"))
    consts = [tl.sandwich_constants(t, dirs, pts_a) for t in addrs]
    inner = np.array([c.inner for c in consts])
    outer = np.array([c.outer for c in consts])
    spread = max(np.ptp(inner) / inner.mean(), np.ptp(outer) / outer.mean())
    out["sandwich_inner"] = inner.tolist()
    out["sandwich_outer"] = outer.tolist()
    out["sandwich_relative_spread"] = float(spread)

    ok = (bad == 0 and kids_ok and parent_ok and out["self_similar_forward_failures"] == 0
          and out["self_similar_cover_failures"] == 0 and dy_bad == 0 and spread <= cfg.tol.scale_ratio
          and inner.min() > 0)
    return BatteryResult("tiling", bool(ok), "tiles partition the group and nest self-similarly",
                         out, {"samples": count, "scales": list(scales), "sandwich_spread": cfg.tol.scale_ratio})


@battery("sign-tiles")
def sign_tile_battery(cfg: RunConfig, tiles=10, scales=(0, 1, 2)) -> BatteryResult:
    ctx = _ctx(cfg)
    dim = ctx.dim
    rng = cfg.rng("sign-tiles", "tiles")
    rows = []
    worst = 0.0
    found = 0
    for k in range(cfg.count(tiles)):
        a = rng.integers(-20, 20, dim.horiz)
        b = rng.integers(-20, 20, 3)
        mags = {}
        for j in scales:
            try:
                st = tl.sign_tile_search(ctx, tl.TileAddress(j, a, b))
            except tl.NoCandidateFound:
                continue
            found += 1
            mags[j] = st.magnitude * 2.0 ** (dim.Q * j)
            rows.append({"tile": k, "j": j, "component": st.component, "sign": st.sign,
                         "magnitude": st.magnitude, "normalised": mags[j], "distance": st.distance,
                         "samples": st.samples})
        if len(mags) == len(scales):
            ref = mags[scales[0]]
            worst = max(worst, max(abs(m / ref - 1.0) for m in mags.values()))
        else:
            worst = math.inf
    total = cfg.count(tiles) * len(scales)
    out = {"found": found, "searched": total, "max_scaling_deviation": worst,
           "normalised_floor_min": min(r["normalised"] for r in rows) if rows else 0.0}
    ok = found == total and worst <= cfg.tol.scale_ratio
    return BatteryResult("sign-tiles", bool(ok), "a nearby same-scale tile sees one kernel component with fixed sign",
                         out, {"scaling_deviation": cfg.tol.scale_ratio, "grid_per_axis": 5}, series=rows)


# ---------------------------------------------------------------- atoms


ATOM_CLASSES = ((1.0, 0), (0.8, 3))


@battery("atoms")
def atom_battery(cfg: RunConfig, nodes=1 << 13, directions=64, radii=(0.1, 1.0, 10.0, 100.0),
                 rel_eps=(1.0, 1e2, 1e4)) -> BatteryResult:
    """Atom validity, the height-dilation identity and sup-over-height uniformity.

    Heights are taken relative to the atom scale, ``eps = r^2 * e`` with ``e``
    spanning four decades, and atoms of every radius get their own center.
    """
    ctx = _ctx(cfg)
    n = ctx.n
    dim = ctx.dim
    rng = cfg.rng("atoms", "centers")
    out = {}
    ok = True

    # validity across exponents
    checks = {}
    for p, alpha in ((1.0, 0), (0.8, 2), (0.8, 3), (0.7, at.min_alpha(n, 0.7))):
        atom = at.make_atom(random_points(dim, rng, 1)[0], 1.0, p, alpha, seed=int(rng.integers(1 << 20)), n=n, nodes=nodes)
        rep = at.check_atom(atom)
        checks[f"p={p},alpha={alpha}"] = {"passed": rep.passed, "linf_ratio": rep.linf_ratio,
                                           "max_moment_residual": max(rep.moment_residuals.values()),
                                           "moments": len(rep.moment_residuals)}
        ok &= rep.passed and max(rep.moment_residuals.values()) < cfg.tol.moment_rel
    out["validity"] = checks

    # height-dilation identity: direct integral at eps against the dilated atom at height 1
    atom = at.make_atom(random_points(dim, rng, 1)[0], 1.0, 1.0, 0, seed=3, n=n, nodes=nodes)
    ident = {}
    # powers of two would make both routes bit-identical
    for eps in (0.3, 3.7):
        direct = at.hp_integral(ctx, atom, eps, directions)[0]
        reduced = at.hp_integral(ctx, atom.dilated(eps), 1.0, directions)[0]
        ident[str(eps)] = abs(direct - reduced) / abs(reduced)
    coarse = at.hp_integral(ctx, at.make_atom(atom.center, 1.0, 1.0, 0, seed=3, n=n, nodes=nodes // 2), 1.0, directions)[0]
    fine = at.hp_integral(ctx, atom, 1.0, directions)[0]
    quad_err = abs(fine - coarse) / fine
    out["dilation_identity_rel_error"] = ident
    out["quadrature_rel_error_estimate"] = quad_err
    ok &= max(ident.values()) < quad_err

    # uniformity of the sup over heights across radii and centers
    series = []
    uniform = {}
    for p, alpha in ATOM_CLASSES:
        sups = []
        shares = []
        per_eps_ratio = []
        for r in radii:
            # a fresh template per radius; a shared one would make the radii agree by invariance alone
            a = at.make_atom(random_points(dim, rng, 1)[0] * r, r, p, alpha, seed=int(rng.integers(1 << 20)),
                             n=n, nodes=nodes)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TailDominates)
                scan = at.hp_scan(ctx, a, r * r * np.asarray(rel_eps), directions)
            sups.append(float(scan.values.max()))
            shares.append(float(scan.tail_share.max()))
            per_eps_ratio.append(float(scan.values.max() / scan.values.min()))
            for row in scan.rows():
                series.append({"p": p, "alpha": alpha, "radius": r, **row})
        key = f"p={p},alpha={alpha}"
        uniform[key] = {"sup_by_radius": sups, "sup_ratio": max(sups) / min(sups), "max_tail_share": max(shares),
                        "max_over_min_across_heights": max(per_eps_ratio)}
        ok &= max(sups) / min(sups) <= cfg.tol.hp_ratio and max(shares) < cfg.tol.tail_share
    out["uniformity"] = uniform
    return BatteryResult("atoms", bool(ok), "atoms are valid and their projections obey a uniform H^p-type bound",
                         out, {"moment_rel": cfg.tol.moment_rel, "sup_ratio": cfg.tol.hp_ratio,
                               "tail_share": cfg.tol.tail_share, "radii": list(radii),
                               "relative_heights": list(rel_eps)}, series=series)


SYMBOLS = {
    "const": lambda g: np.full(len(g), 7.0),
    "shifted": lambda g: np.minimum(hom_norm(g), 1.0) + 3.0,
    "norm": lambda g: np.minimum(hom_norm(g), 1.0),
}


@battery("commutator")
def commutator_battery(cfg: RunConfig, symbol="const", nodes=500, height=1.0) -> BatteryResult:
    ctx = _ctx(cfg)
    pts, w = at.tile_patch_nodes(ctx.n, cfg.count(nodes), seed=int(cfg.rng("commutator", "nodes").integers(1 << 30)))
    res = at.commutator_matrix(ctx, SYMBOLS[symbol], pts, w, height)
    top = float(res.singular_values.max())
    out = {"symbol": symbol, "nodes": len(pts), "max_singular_value": top, "scale": res.scale,
           "leading_singular_values": res.singular_values[:8].tolist()}
    if symbol == "const":
        ok = top < cfg.tol.singular_rel * res.scale
        expected = {"max_singular_value": f"< {cfg.tol.singular_rel:g} * scale"}
        claim = "a constant symbol commutes with the projection"
    else:
        # constant shifts leave the commutator unchanged
        base = at.commutator_matrix(ctx, SYMBOLS["norm"], pts, w, height).singular_values
        shift = float(np.max(np.abs(res.singular_values - base)) / max(base.max(), 1e-300))
        out["shift_invariance_rel_error"] = shift
        ok = shift < 1e-10
        expected = {"shift_invariance_rel_error": 1e-10}
        claim = "the commutator is unchanged when a constant is added to the symbol"
    return BatteryResult("commutator", bool(ok), claim,
                         out, expected)


ALL = ("group", "commutator-table", "oracle", "invariance", "regularity", "decay", "min-sphere",
       "tiling", "sign-tiles", "atoms", "subharmonic", "commutator")


def run_all(cfg: RunConfig, names=ALL):
    from concurrent.futures import ThreadPoolExecutor

    if cfg.threads <= 1:
        return [REGISTRY[name](cfg) for name in names]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        futures = [pool.submit(REGISTRY[name], cfg) for name in names]
        return [f.result() for f in futures]
