"""scikit-learn style transformers over group points.

Rows of ``X`` are group points laid out as ``[t1, t2, t3, y1, ..., y_{4n-4}]``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .atoms import make_atom, project_atom
from .group import GroupDim, group_inv, group_mul
from .kernel import KernelContext, kernel_boundary, kernel_upper
from .tiling import locate_many


def _points(X, n):
    X = check_array(X, dtype=np.float64)
    GroupDim(n).check(X)
    return X


class KernelEvaluator(TransformerMixin, BaseEstimator):
    """Kernel values K((height, x), base) as four quaternion components per row.

    ``height=0`` evaluates the boundary kernel ``K(base^-1 x)``.
    """

    def __init__(self, n=2, c=1.0, height=0.0, base=None):
        self.n = n
        self.c = c
        self.height = height
        self.base = base

    def fit(self, X, y=None):
        X = _points(X, self.n)
        self.ctx_ = KernelContext.for_n(self.n, self.c)
        self.base_ = np.zeros(X.shape[1]) if self.base is None else GroupDim(self.n).check(np.asarray(self.base, float))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "ctx_")
        X = _points(X, self.n)
        if self.height > 0:
            return kernel_upper(self.ctx_, self.height, X, self.base_)
        return kernel_boundary(self.ctx_, group_mul(group_inv(self.base_), X))


class TileLocator(TransformerMixin, BaseEstimator):
    """Integer lattice address ``[b1, b2, b3, a1, ...]`` of the scale-``j`` tile holding each row."""

    def __init__(self, n=2, j=0):
        self.n = n
        self.j = j

    def fit(self, X, y=None):
        X = _points(X, self.n)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = _points(X, self.n)
        a, b = locate_many(X, self.j)
        return np.concatenate([b, a], axis=1)


class AtomProjector(TransformerMixin, BaseEstimator):
    """Cauchy-Szego projection of one atom, evaluated at height ``height`` over each row."""

    def __init__(self, n=2, c=1.0, center=None, radius=1.0, p=1.0, alpha=None, seed=0, nodes=1 << 13, height=1.0):
        self.n = n
        self.c = c
        self.center = center
        self.radius = radius
        self.p = p
        self.alpha = alpha
        self.seed = seed
        self.nodes = nodes
        self.height = height

    def fit(self, X=None, y=None):
        dim = GroupDim(self.n)
        center = np.zeros(dim.topdim) if self.center is None else self.center
        self.ctx_ = KernelContext.for_n(self.n, self.c)
        self.atom_ = make_atom(center, self.radius, self.p, self.alpha, self.seed, n=self.n, nodes=self.nodes)
        self.n_features_in_ = dim.topdim
        return self

    def transform(self, X):
        check_is_fitted(self, "atom_")
        X = _points(X, self.n)
        return project_atom(self.ctx_, self.atom_, self.height, X)
