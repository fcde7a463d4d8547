"""Gauss-Legendre quadrature rules on the parent domain [-1, 1]^d."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gauss_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the n-point Gauss-Legendre points and weights on [-1, 1]."""
    if n < 1:
        raise ValueError(f"need at least one quadrature point, got {n}")
    pts, wts = np.polynomial.legendre.leggauss(n)
    return pts, wts


def tensor_rule(counts: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product Gauss rule on [-1, 1]^d.

    Parameters
    ----------
    counts : tuple of int
        Number of points per direction.

    Returns
    -------
    points : ndarray (npts, d)
    weights : ndarray (npts,)
    """
    axes = [gauss_1d(n) for n in counts]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    weights = np.ones(points.shape[0])
    for w in wgrids:
        weights = weights * w.ravel()
    return points, weights
