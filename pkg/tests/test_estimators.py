import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qszego.errors import DimMismatch
from qszego.estimators import AtomProjector, KernelEvaluator, TileLocator
from qszego.group import GroupDim, random_points
from qszego.kernel import KernelContext, kernel_boundary
from qszego.tiling import sample_basic_tile


def test_kernel_evaluator_matches_direct_call(rng):
    X = random_points(GroupDim(2), rng, 10)
    out = KernelEvaluator().fit_transform(X)
    assert out.shape == (10, 4)
    assert np.allclose(out, kernel_boundary(KernelContext.for_n(2), X))


def test_kernel_evaluator_upper_height():
    out = KernelEvaluator(height=1.0).fit_transform(np.zeros((1, 7)))
    assert np.allclose(out, [[12.0, 0, 0, 0]])


def test_unfitted_and_shape_errors(rng):
    with pytest.raises(NotFittedError):
        KernelEvaluator().transform(np.ones((1, 7)))
    with pytest.raises(DimMismatch):
        KernelEvaluator(n=3).fit(np.ones((2, 7)))


def test_tile_locator(rng):
    X = sample_basic_tile(2, 50, rng)
    out = TileLocator().fit_transform(X)
    assert out.shape == (50, 7)
    assert not out.any()


def test_params_clone():
    est = TileLocator(n=3, j=2)
    assert clone(est).get_params() == {"n": 3, "j": 2}


def test_atom_projector(rng):
    X = random_points(GroupDim(2), rng, 3)
    out = AtomProjector(nodes=1024).fit(X).transform(X)
    assert out.shape == (3, 4)
    assert np.all(np.isfinite(out))
