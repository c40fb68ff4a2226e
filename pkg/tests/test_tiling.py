from fractions import Fraction

import numpy as np
import pytest

from qszego import tiling as tl
from qszego.errors import BoundaryUncertain, DepthTooShallow
from qszego.group import GroupDim, join, random_points
from qszego.kernel import KernelContext

ORIGIN = tl.TileAddress.origin(2)


def test_basic_tile_constants():
    data = tl.basic_tile(2)
    assert data.mbound == 8.0
    assert data.n0 == 4
    assert data.tail == pytest.approx(8.0 * 4.0**-26 / 3.0)
    assert tl.basic_tile(3).mbound == 16.0


def test_address_validation_and_round_trip():
    addr = tl.TileAddress(3, (1, -2, 0, 5), (7, 0, -1))
    assert tl.TileAddress.from_json(addr.to_json()) == addr
    assert addr.width == 8.0
    assert np.array_equal(addr.gamma, [7, 0, -1, 1, -2, 0, 5])
    with pytest.raises(ValueError):
        tl.TileAddress(0, (1, 2, 3), (0, 0, 0))


@pytest.mark.parametrize("n,count", [(2, 1024), (3, 2**14)])
def test_child_count(n, count):
    kids = tl.children(tl.TileAddress.origin(n))
    assert len(kids) == count == 2 ** (4 * n + 2)
    assert len(set(kids)) == count


def test_parent_inverts_children(rng):
    for _ in range(5):
        addr = tl.TileAddress(int(rng.integers(-3, 4)), rng.integers(-9, 10, size=4), rng.integers(-9, 10, size=3))
        assert all(tl.parent(k) == addr for k in tl.children(addr))


def test_dyadic_series_is_exact(rng):
    y = rng.integers(0, 2**12, size=(50, 4)) / 2.0**12
    F, err = tl.F_eval(y)
    assert np.all(err == 0)
    for row, val in zip(y, F):
        assert [Fraction(v) for v in val] == tl.F_exact(row)


def test_generic_series_error_bound(rng):
    y = rng.random((20, 4))
    F, err = tl.F_eval(y)
    assert np.all(err > 0)
    for row, val, e in zip(y, F, err):
        exact = np.array([float(v) for v in tl.F_exact(row)])
        assert np.all(np.abs(val - exact) <= e)


def test_series_is_bounded_by_the_certified_constant(rng):
    F, _ = tl.F_eval(rng.random((2000, 4)))
    # |F| <= mbound/3 with mbound an upper bound of |B(parity, frac)| per level
    assert np.abs(F).max() <= tl.basic_tile(2).mbound / 3


def test_basic_tile_samples_are_located_in_the_origin_tile(rng):
    pts = tl.sample_basic_tile(2, 2000, rng)
    a, b = tl.locate_many(pts, 0)
    assert not a.any() and not b.any()


@pytest.mark.parametrize("j", [-2, 0, 3])
def test_tiles_partition_the_group(j, rng):
    pts = random_points(GroupDim(2), rng, 500, spread=4.0)
    a, b = tl.locate_many(pts, j)
    inside = tl.contains_many(j, a, b, pts)
    assert np.all(inside == 1)
    # a shifted vertical address never contains the point
    assert np.all(tl.contains_many(j, a, b + np.array([1, 0, 0]), pts) == 0)


def test_children_cover_the_parent(rng):
    addr = tl.TileAddress(1, (0, 1, 0, -1), (2, 0, 0))
    pts = tl.to_tile(addr, tl.sample_basic_tile(2, 300, rng))
    kid_set = set(tl.children(addr))
    for p in pts:
        assert tl.locate(p, 0) in kid_set


def test_boundary_points_are_settled_exactly():
    # t on the lower face of the origin tile with y = 0
    g = join([0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0])
    assert tl.locate(g, 0) == ORIGIN
    g = join([1.0, 0.0, 0.0], np.zeros(4))
    assert tl.locate(g, 0).b == (1, 0, 0)
    with pytest.raises(BoundaryUncertain):
        tl.locate_many(g[None, :], 0, exact=False)
    assert tl.tile_contains(ORIGIN, g, exact=False) is not tl.Membership.YES


def test_sandwich_constants_are_scale_free(rng):
    dirs = tl.default_directions(GroupDim(2))
    local = tl.sample_basic_tile(2, 2000, rng)
    a = tl.sandwich_constants(ORIGIN, dirs, local)
    b = tl.sandwich_constants(tl.TileAddress(2, (1, 0, 0, 0), (0, 1, 0)), dirs, local)
    assert 0 < a.inner < a.outer
    assert b.inner == pytest.approx(a.inner, rel=1e-6)
    assert b.outer == pytest.approx(a.outer, rel=1e-6)


@pytest.fixture(scope="module")
def found():
    return tl.sign_tile_search(KernelContext.for_n(2), ORIGIN)


def test_sign_tile_search_from_the_origin(found):
    # regression pin from the first full search
    assert found.tile == tl.TileAddress(0, (1, 0, 0, -4), (6, -4, 0))
    assert found.component == 3
    assert found.magnitude == pytest.approx(1.227e-7, rel=1e-3)
    assert found.samples >= 5**7


def test_sign_tile_scales_with_the_tile(found):
    up = tl.sign_tile_search(KernelContext.for_n(2), tl.TileAddress.origin(2, 1))
    assert up.tile == tl.TileAddress(1, found.tile.a, found.tile.b)
    assert up.magnitude == pytest.approx(found.magnitude * 2.0**-10, rel=1e-9)


def test_sign_lemma_descendants():
    pair = tl.sign_lemma_probe(ORIGIN, [1, -1, 1, 1])
    assert pair.kappa == pytest.approx(0.50108, abs=1e-4)
    assert tl.parent(tl.parent(pair.high)) == ORIGIN
    with pytest.raises(DepthTooShallow):
        tl.sign_lemma_probe(ORIGIN, [1, 1, 1, 1], depth=1)
    with pytest.raises(ValueError):
        tl.sign_lemma_probe(ORIGIN, [1, 0, 1, 1])
