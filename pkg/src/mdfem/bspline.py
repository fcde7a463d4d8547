"""B-spline and NURBS basis evaluation on open knot vectors.

Univariate machinery shared by curve, surface and volume meshes: knot-span
lookup, basis values with first and second derivatives, Greville abscissae,
and least-squares projection of boundary data onto a spline space.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, DomainError, RankError
from .quadrature import gauss_1d

#: Denominators smaller than this are treated as zero (0/0 == 0 convention).
DENOM_GUARD = 1e-14


def make_open_knots(degree: int, breaks) -> np.ndarray:
    """Build a clamped knot vector from breakpoints.

    The first and last breakpoints are repeated ``degree + 1`` times; the
    interior breakpoints appear once each.
    """
    breaks = np.asarray(breaks, dtype=float)
    if breaks.size < 2:
        raise ConfigError("need at least two breakpoints")
    return np.concatenate(
        [np.full(degree, breaks[0]), breaks, np.full(degree, breaks[-1])]
    )


@dataclass
class KnotVector:
    """Open knot vector with degree and optional rational weights.

    Attributes
    ----------
    knots : ndarray
        Non-decreasing knot values, clamped (first and last knot repeated
        ``degree + 1`` times).
    degree : int
        Polynomial degree p >= 0.
    weights : ndarray or None
        Positive NURBS weights, one per basis function. ``None`` means the
        basis is polynomial (all weights one).
    """

    knots: np.ndarray
    degree: int
    weights: np.ndarray | None = None
    _span_starts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        p = self.degree
        if p < 0:
            raise ConfigError(f"degree must be non-negative, got {p}")
        if self.knots.ndim != 1 or self.knots.size < 2 * (p + 1):
            raise ConfigError("knot vector too short for degree")
        if np.any(np.diff(self.knots) < 0):
            raise ConfigError("knot vector must be non-decreasing")
        if not (
            np.allclose(self.knots[: p + 1], self.knots[0])
            and np.allclose(self.knots[-(p + 1):], self.knots[-1])
        ):
            raise ConfigError("knot vector must be open (clamped at both ends)")
        if self.knots[p] == self.knots[-p - 1]:
            raise ConfigError("knot vector has an empty parameter domain")
        interior = self.knots[p + 1:-p - 1]
        if interior.size:
            _, counts = np.unique(interior, return_counts=True)
            if np.any(counts > max(p, 1)):
                raise ConfigError("interior knot multiplicity exceeds degree")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (self.n,):
                raise ConfigError(
                    f"need {self.n} weights, got {self.weights.shape}"
                )
            if np.any(self.weights <= 0.0):
                raise ConfigError("NURBS weights must be positive")
        # Knot indices that open a non-empty span, in parameter order.
        diffs = np.diff(self.knots)
        self._span_starts = np.nonzero(diffs > 0.0)[0]

    @property
    def n(self) -> int:
        """Number of basis functions: len(knots) - degree - 1."""
        return self.knots.size - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[self.degree]), float(self.knots[-self.degree - 1])

    @property
    def nspans(self) -> int:
        """Number of non-empty knot spans (elements)."""
        return self._span_starts.size

    def span_index(self, element: int) -> int:
        """Knot index of the span opening the given element."""
        return int(self._span_starts[element])

    def span_interval(self, span: int) -> tuple[float, float]:
        """Parameter interval [t_i, t_{i+1}) of a knot span."""
        return float(self.knots[span]), float(self.knots[span + 1])

    def element_of_span(self, span: int) -> int:
        """Element counter of a non-empty knot span."""
        loc = np.searchsorted(self._span_starts, span)
        if loc == self._span_starts.size or self._span_starts[loc] != span:
            raise DomainError(f"knot span {span} is empty")
        return int(loc)

    def greville(self) -> np.ndarray:
        """Greville abscissae: moving average of ``degree`` consecutive knots."""
        p = self.degree
        if p == 0:
            # Midpoints of the spans; the averaging rule has no knots to average.
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        out = np.array(
            [self.knots[i + 1: i + p + 1].sum() / p for i in range(self.n)]
        )
        return np.around(out, decimals=15)


def find_span(kv: KnotVector, x: float) -> int:
    """Locate the knot span containing x.

    Returns the unique index i with ``knots[i] <= x < knots[i+1]`` among the
    non-empty spans; the right endpoint of the domain maps to the last
    non-empty span.

    Raises
    ------
    DomainError
        If x lies outside the parameter domain.
    """
    lo, hi = kv.domain
    if x < lo or x > hi:
        raise DomainError(f"parameter {x} outside domain [{lo}, {hi}]")
    knots = kv.knots
    low = kv.degree
    high = knots.size - kv.degree - 1
    if x >= knots[high]:
        # Right endpoint: last non-empty span.
        return int(kv._span_starts[-1])
    span = int(np.searchsorted(knots, x, side="right")) - 1
    return span


def _basis_ders(knots: np.ndarray, degree: int, x: float, span: int,
                nders: int) -> np.ndarray:
    """Values and derivatives of the non-vanishing basis functions.

    Standard knot-insertion triangle evaluation; returns an array of shape
    ``(nders + 1, degree + 1)`` where row k holds the k-th derivatives of
    functions ``span - degree .. span``.
    """
    p = degree
    ne = min(nders, p)
    left = np.empty(p)
    right = np.empty(p)
    ndu = np.empty((p + 1, p + 1))
    a = np.empty((2, p + 1))
    ders = np.zeros((nders + 1, p + 1))

    ndu[0, 0] = 1.0
    for j in range(p):
        left[j] = x - knots[span - j]
        right[j] = knots[span + 1 + j] - x
        saved = 0.0
        for r in range(j + 1):
            # Lower triangle: inverse knot differences.
            ndu[j + 1, r] = 1.0 / (right[r] + left[j - r])
            temp = ndu[r, j] * ndu[j + 1, r]
            # Upper triangle: basis values.
            ndu[r, j + 1] = saved + right[r] * temp
            saved = left[j - r] * temp
        ndu[j + 1, j + 1] = saved

    ders[0, :] = ndu[:, p]
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, ne + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] * ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for ij in range(j1, j2 + 1):
                a[s2, ij] = (a[s1, ij] - a[s1, ij - 1]) * ndu[pk + 1, rk + ij]
                d += a[s2, ij] * ndu[rk + ij, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] * ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    # Multiply by the correct factors p! / (p - k)!
    r = p
    for k in range(1, ne + 1):
        ders[k, :] *= r
        r *= p - k
    return ders


def eval_basis(kv: KnotVector, x: float, nders: int = 0):
    """Evaluate the non-vanishing (rational) basis functions at x.

    Parameters
    ----------
    kv : KnotVector
    x : float
        Parameter value inside the domain.
    nders : int
        Highest derivative order requested (0, 1 or 2).

    Returns
    -------
    ders : ndarray (nders + 1, degree + 1)
        Row k holds the k-th derivative of each non-vanishing function.
    indices : ndarray (degree + 1,)
        Global indices of those functions.
    """
    if nders not in (0, 1, 2):
        raise DomainError(f"derivative order must be 0, 1 or 2, got {nders}")
    span = find_span(kv, x)
    ders = _basis_ders(kv.knots, kv.degree, x, span, nders)
    indices = np.arange(span - kv.degree, span + 1)
    if kv.weights is not None:
        ders = _rationalize(ders, kv.weights[indices], nders)
    return ders, indices


def _rationalize(ders: np.ndarray, w: np.ndarray, nders: int) -> np.ndarray:
    """Convert polynomial basis derivatives to rational ones (quotient rule)."""
    num = ders * w  # rows: w_i N_i and derivatives
    W = num.sum(axis=1)  # weight function W and derivatives
    if abs(W[0]) < DENOM_GUARD:
        raise DomainError("rational weight function vanished")
    out = np.empty_like(num)
    out[0] = num[0] / W[0]
    if nders >= 1:
        out[1] = (num[1] - out[0] * W[1]) / W[0]
    if nders >= 2:
        out[2] = (num[2] - 2.0 * out[1] * W[1] - out[0] * W[2]) / W[0]
    return out


def eval_basis_at(kv: KnotVector, xs: np.ndarray, nders: int = 0):
    """Evaluate at many parameter values.

    Returns ``(ders, indices)`` with shapes ``(npts, nders+1, p+1)`` and
    ``(npts, p+1)``.
    """
    xs = np.asarray(xs, dtype=float)
    npts = xs.size
    p = kv.degree
    ders = np.empty((npts, nders + 1, p + 1))
    indices = np.empty((npts, p + 1), dtype=int)
    for i, x in enumerate(xs.ravel()):
        ders[i], indices[i] = eval_basis(kv, x, nders)
    return ders, indices


def evaluate_spline(kv: KnotVector, coeffs: np.ndarray, xs, nders: int = 0):
    """Evaluate a spline expansion (and derivatives) at the given parameters."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    coeffs = np.asarray(coeffs, dtype=float)
    out = np.zeros((xs.size, nders + 1) + coeffs.shape[1:])
    for i, x in enumerate(xs):
        ders, idx = eval_basis(kv, x, nders)
        for k in range(nders + 1):
            out[i, k] = np.tensordot(ders[k], coeffs[idx], axes=(0, 0))
    return out


def least_squares_project(kv: KnotVector, target, span_mask=None) -> np.ndarray:
    """L2 projection of a scalar (or vector-valued) function onto the basis.

    Parameters
    ----------
    kv : KnotVector
    target : callable
        Maps an array of parameter values to function values; the result may
        have trailing component axes.
    span_mask : boolean array or None
        Which elements (non-empty spans) to integrate over. ``None`` means
        the whole domain. Functions without support in the masked region make
        the Gram matrix singular.

    Returns
    -------
    coeffs : ndarray (n, ...)
        Control values of the projection.

    Raises
    ------
    RankError
        If the Gram matrix is singular (degenerate mask).
    """
    n = kv.n
    if span_mask is None:
        span_mask = np.ones(kv.nspans, dtype=bool)
    else:
        span_mask = np.asarray(span_mask, dtype=bool)
        if span_mask.shape != (kv.nspans,):
            raise ConfigError(
                f"span mask must have length {kv.nspans}, got {span_mask.shape}"
            )
    pts, wts = gauss_1d(kv.degree + 1)
    gram = np.zeros((n, n))
    rhs = None
    for e in range(kv.nspans):
        if not span_mask[e]:
            continue
        a, b = kv.span_interval(kv.span_index(e))
        xs = 0.5 * (a + b) + 0.5 * (b - a) * pts
        scale = 0.5 * (b - a)
        vals = np.asarray(target(xs), dtype=float)
        if rhs is None:
            rhs = np.zeros((n,) + vals.shape[1:])
        for q, x in enumerate(xs):
            ders, idx = eval_basis(kv, x, 0)
            Nq = ders[0]
            w = wts[q] * scale
            gram[np.ix_(idx, idx)] += w * np.outer(Nq, Nq)
            rhs[idx] += w * np.multiply.outer(Nq, vals[q])
    if rhs is None:
        raise RankError("projection mask selects no spans")
    try:
        # Cholesky doubles as the rank check: the Gram matrix of a basis
        # restricted to the mask is PD iff every function has support there.
        c = sla.cho_factor(gram)
        sol = sla.cho_solve(c, rhs.reshape(n, -1))
    except np.linalg.LinAlgError as exc:
        raise RankError(f"singular Gram matrix in projection: {exc}") from exc
    return sol.reshape(rhs.shape)
