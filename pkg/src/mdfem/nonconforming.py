"""Overlapping-domain machinery for embedded solid regions.

When a solid mesh overlaps part of a structural model, the covered part of
the structure must not contribute stiffness. Elements fully covered are
dropped, elements crossed by the region boundary are integrated with a
filtered Gauss rule, and basis functions with (almost) no support left are
pinned to zero. `NonconformingModel` packages all of that behind the same
interface the plain models expose, so assembly and coupling code does not
care which kind it is given.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    ConfigError,
    DegenerateCutError,
    OverDeactivationError,
)
from .quadrature import gauss_1d

STANDARD, CUT, VOID = 0, 1, 2


class OverlapRegion:
    """Axis-aligned box occupied by the solid, in structural local coordinates.

    `bounds` holds one (lo, hi) pair per structural direction (mid-line
    coordinate for beams, mid-surface coordinates for plates); infinite
    extents are allowed. Points strictly inside the box count as covered,
    the boundary itself does not.
    """

    def __init__(self, bounds):
        arr = np.atleast_2d(np.asarray(bounds, dtype=float))
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ConfigError("region bounds must be (lo, hi) pairs")
        self.bounds = tuple((float(lo), float(hi)) for lo, hi in arr)
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ConfigError(f"empty region interval ({lo}, {hi})")

    @property
    def dim(self):
        return len(self.bounds)

    def signed_distance(self, pts):
        """Coordinate-wise box distance, negative inside the solid."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = np.full(pts.shape[0], -np.inf)
        for k, (lo, hi) in enumerate(self.bounds):
            d = np.maximum(d, np.maximum(lo - pts[:, k], pts[:, k] - hi))
        return d

    def inside(self, pts):
        return self.signed_distance(pts) < 0.0


def _element_samples(mesh, e):
    """Corners plus a (p+2)-per-direction interior grid, in local coords."""
    gi = mesh.element_grid_index(e)
    axes = []
    for d, i in zip(mesh.dirs, gi):
        lo, hi = d.local_interval(i)
        inner = np.linspace(lo, hi, d.degree + 4)[1:-1]
        axes.append(np.concatenate([[lo, hi], inner]))
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def classify(mesh, region: OverlapRegion) -> np.ndarray:
    """Label every element STANDARD, CUT, or VOID against the region."""
    if region.dim != mesh.dim:
        raise ConfigError(
            f"region has {region.dim} directions, mesh has {mesh.dim}")
    labels = np.empty(mesh.nelem, dtype=int)
    for e in range(mesh.nelem):
        ins = region.inside(_element_samples(mesh, e))
        if ins.all():
            labels[e] = VOID
        elif ins.any():
            labels[e] = CUT
        else:
            labels[e] = STANDARD
    return labels


def integrate_cut(mesh, e, region: OverlapRegion, ncut: int = 10):
    """Filtered Gauss rule for a cut element, in parameter coordinates.

    Builds an ncut-point tensor rule and drops every point covered by the
    region. Weights stay pre-jacobian, so the result plugs directly into
    any ``element_stiffness(e, quadrature=...)`` kernel.
    """
    gi = mesh.element_grid_index(e)
    pts_1d, wts_1d, loc_1d = [], [], []
    for d, i in zip(mesh.dirs, gi):
        g, w = gauss_1d(int(ncut))
        a, b = d.element_interval(i)
        x = 0.5 * (a + b) + 0.5 * (b - a) * g
        pts_1d.append(x)
        wts_1d.append(0.5 * (b - a) * w)
        loc_1d.append(d.param_to_local(x))
    grids = np.meshgrid(*pts_1d, indexing="ij")
    param = np.stack([np.transpose(g).ravel() for g in grids], axis=-1)
    lgrids = np.meshgrid(*loc_1d, indexing="ij")
    locs = np.stack([np.transpose(g).ravel() for g in lgrids], axis=-1)
    wgrids = np.meshgrid(*wts_1d, indexing="ij")
    wts = np.ones(param.shape[0])
    for w in wgrids:
        wts = wts * np.transpose(w).ravel()
    keep = ~region.inside(locs)
    if not keep.any():
        raise DegenerateCutError(
            f"no quadrature point of cut element {e} survives the region; "
            "the remaining sliver is below the cut-rule resolution")
    return param[keep], wts[keep]


def deactivate_dofs(mesh, labels, region: OverlapRegion, *,
                    threshold: float = 0.01, ncut: int = 10) -> np.ndarray:
    """Basis functions whose surviving support fraction is below threshold.

    The surviving measure is evaluated at the resolution of the cut rule,
    so a sliver the rule cannot see counts as fully covered. Returns the
    sorted node (control point) indices to pin.
    """
    outside = np.zeros(mesh.nelem)
    full = np.zeros(mesh.nelem)
    for e in range(mesh.nelem):
        gi = mesh.element_grid_index(e)
        meas = 1.0
        for d, i in zip(mesh.dirs, gi):
            lo, hi = d.local_interval(i)
            meas *= hi - lo
        full[e] = meas
        if labels[e] == STANDARD:
            outside[e] = meas
        elif labels[e] == CUT:
            a, b = zip(*(d.element_interval(i)
                         for d, i in zip(mesh.dirs, gi)))
            pscale = meas / np.prod(np.subtract(b, a))
            try:
                _, w = integrate_cut(mesh, e, region, ncut=ncut)
                outside[e] = w.sum() * pscale
            except DegenerateCutError:
                outside[e] = 0.0
    support = np.zeros(mesh.nnodes)
    alive = np.zeros(mesh.nnodes)
    for e in range(mesh.nelem):
        nn = mesh.element_nodes(e)
        support[nn] += full[e]
        alive[nn] += outside[e]
    inactive = np.nonzero(alive < threshold * support)[0]

    mask = np.zeros(mesh.nnodes, dtype=bool)
    mask[inactive] = True
    for e in np.nonzero(labels == CUT)[0]:
        if mask[mesh.element_nodes(e)].all():
            raise OverDeactivationError(
                f"every basis function of cut element {e} was deactivated; "
                "the region almost certainly covers more than intended")
    return inactive


class NonconformingModel:
    """Structural model with the part covered by a solid region removed.

    Wraps a beam or plate model: void elements contribute nothing, cut
    elements integrate over the surviving part only, and basis functions
    with (almost) no support left are reported through `inactive_dofs` so
    the assembler pins them. Everything else delegates to the inner model.
    """

    def __init__(self, model, region: OverlapRegion, *,
                 threshold: float = 0.01, ncut: int = 10):
        self._model = model
        if region.dim != model.mesh.dim:
            raise ConfigError(
                f"region has {region.dim} directions, structural mesh "
                f"has {model.mesh.dim}")
        self.region = region
        self.ncut = int(ncut)
        self.threshold = float(threshold)
        self.labels = classify(model.mesh, region)
        self.inactive_nodes = deactivate_dofs(
            model.mesh, self.labels, region,
            threshold=threshold, ncut=ncut)
        nc = model.ncomp_node
        self.inactive_dofs = (
            self.inactive_nodes[:, None] * nc + np.arange(nc)
        ).ravel()
        self._demoted = self._demote_unresolvable_cuts()

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        return getattr(self._model, name)

    def _demote_unresolvable_cuts(self):
        """Cut elements whose surviving sliver is below the rule resolution.

        They behave as void, which is safe only when every still-active
        basis function on them keeps support on some other live element.
        """
        mesh = self._model.mesh
        starved = []
        for e in np.nonzero(self.labels == CUT)[0]:
            try:
                integrate_cut(mesh, e, self.region, ncut=self.ncut)
            except DegenerateCutError:
                starved.append(int(e))
        if not starved:
            return frozenset()
        pinned = np.zeros(mesh.nnodes, dtype=bool)
        pinned[self.inactive_nodes] = True
        supported = np.zeros(mesh.nnodes, dtype=bool)
        for e in range(mesh.nelem):
            if self.labels[e] == VOID or e in starved:
                continue
            supported[mesh.element_nodes(e)] = True
        for e in starved:
            nn = mesh.element_nodes(e)
            orphan = ~(pinned[nn] | supported[nn])
            if orphan.any():
                raise DegenerateCutError(
                    f"cut element {e} has no surviving quadrature points "
                    "but still carries active basis functions supported "
                    "nowhere else; increase the cut rule or the "
                    "deactivation threshold")
        return frozenset(starved)

    def _filter(self, e, quadrature):
        param, wts = quadrature
        mesh = self._model.mesh
        locs = np.stack(
            [mesh.dirs[k].param_to_local(param[:, k])
             for k in range(mesh.dim)], axis=-1)
        keep = ~self.region.inside(locs)
        if not keep.any():
            raise DegenerateCutError(
                f"supplied quadrature for cut element {e} has no point "
                "outside the region")
        return param[keep], wts[keep]

    def element_stiffness(self, e, quadrature=None):
        if self.labels[e] == VOID or e in self._demoted:
            return None
        if self.labels[e] == STANDARD:
            return self._model.element_stiffness(e, quadrature=quadrature)
        if quadrature is None:
            quadrature = integrate_cut(
                self._model.mesh, e, self.region, ncut=self.ncut)
        else:
            quadrature = self._filter(e, quadrature)
        return self._model.element_stiffness(e, quadrature=quadrature)

    def pressure_load(self, p: float) -> np.ndarray:
        out = np.zeros(self._model.ndof)
        for e in range(self._model.mesh.nelem):
            if self.labels[e] == VOID or e in self._demoted:
                continue
            quad = None
            if self.labels[e] == CUT:
                quad = integrate_cut(
                    self._model.mesh, e, self.region, ncut=self.ncut)
            fe = self._model.pressure_element(e, p, quad)
            out[self._model.element_dofs(e)] += fe
        return out
