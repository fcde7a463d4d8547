"""Tensor-product meshes for solids, beams and plates.

A mesh is a tensor product of univariate directions, each either a 2-noded
Lagrange subdivision or a B-spline/NURBS knot vector. Geometry is carried by
a full control net (initialised to grid nodes or Greville points), so the
same machinery serves straight boxes and perturbed patches.

Coordinate stages: parent [-1,1]^d -> parameter (affine per element and
direction) -> stored coordinates. Solid meshes store global coordinates
(any placement rotation applied at build time); beam meshes store the local
axis coordinate with placement in ``origin``/``phi``; plate meshes store
mid-surface coordinates with the transverse offset in ``z_mid``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bspline import KnotVector, eval_basis, make_open_knots, _basis_ders
from .errors import ConfigError, ConvergenceError, DomainError, PairingError
from .quadrature import gauss_1d

MODEL_DIMS = {"solid2d": 2, "solid3d": 3, "beam": 1, "plate": 2}


class SplineDir:
    """One parametric direction carried by an open knot vector."""

    def __init__(self, kv: KnotVector, lo: float, hi: float):
        self.kv = kv
        self.lo = float(lo)
        self.hi = float(hi)
        plo, phi = kv.domain
        self._pscale = (self.hi - self.lo) / (phi - plo)
        self._poff = plo

    @property
    def degree(self):
        return self.kv.degree

    @property
    def nelem(self):
        return self.kv.nspans

    @property
    def nloc(self):
        return self.kv.degree + 1

    @property
    def n(self):
        return self.kv.n

    def element_interval(self, e):
        return self.kv.span_interval(self.kv.span_index(e))

    def local_interval(self, e):
        a, b = self.element_interval(e)
        return self.param_to_local(a), self.param_to_local(b)

    def param_to_local(self, x):
        return self.lo + (x - self._poff) * self._pscale

    def local_to_param(self, x):
        return self._poff + (x - self.lo) / self._pscale

    def node_coords(self):
        return self.param_to_local(self.kv.greville())

    def indices(self, e):
        span = self.kv.span_index(e)
        return np.arange(span - self.kv.degree, span + 1)

    def eval(self, e, xs, nders):
        """Basis derivatives at parameter values, on element e's span.

        Uses the polynomial extension of the span, so Newton iterates that
        step slightly outside the element remain well defined.
        """
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        span = self.kv.span_index(e)
        p = self.kv.degree
        out = np.empty((xs.size, nders + 1, p + 1))
        for i, x in enumerate(xs):
            out[i] = _basis_ders(self.kv.knots, p, x, span, nders)
        if self.kv.weights is not None:
            from .bspline import _rationalize

            w = self.kv.weights[self.indices(e)]
            for i in range(xs.size):
                out[i] = _rationalize(out[i], w, nders)
        return out

    def element_containing(self, x):
        from .bspline import find_span

        plo, phi = self.kv.domain
        pad = 1e-10 * max(abs(plo), abs(phi), 1.0)
        if x < plo - pad or x > phi + pad:
            raise DomainError(f"parameter {x} outside direction range")
        span = find_span(self.kv, min(max(x, plo), phi))
        return self.kv.element_of_span(span)


class LagrangeDir:
    """One direction subdivided into 2-noded linear elements."""

    degree = 1
    nloc = 2

    def __init__(self, breaks):
        self.breaks = np.asarray(breaks, dtype=float)
        if self.breaks.size < 2 or np.any(np.diff(self.breaks) <= 0):
            raise ConfigError("breaks must be strictly increasing")

    @property
    def nelem(self):
        return self.breaks.size - 1

    @property
    def n(self):
        return self.breaks.size

    def element_interval(self, e):
        return float(self.breaks[e]), float(self.breaks[e + 1])

    local_interval = element_interval

    def param_to_local(self, x):
        return x

    def local_to_param(self, x):
        return x

    def node_coords(self):
        return self.breaks.copy()

    def indices(self, e):
        return np.array([e, e + 1])

    def eval(self, e, xs, nders):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        a, b = self.element_interval(e)
        h = b - a
        out = np.zeros((xs.size, nders + 1, 2))
        out[:, 0, 0] = (b - xs) / h
        out[:, 0, 1] = (xs - a) / h
        if nders >= 1:
            out[:, 1, 0] = -1.0 / h
            out[:, 1, 1] = 1.0 / h
        return out

    def element_containing(self, x):
        if x < self.breaks[0] - 1e-12 or x > self.breaks[-1] + 1e-12:
            raise DomainError(f"coordinate {x} outside direction range")
        e = int(np.searchsorted(self.breaks, x, side="right")) - 1
        return min(max(e, 0), self.nelem - 1)


@dataclass
class Mesh:
    """Tensor-product mesh with a full control net."""

    model: str
    basis: str
    dirs: list
    nodes: np.ndarray  # (nnodes, dim) in storage coordinates
    box: np.ndarray    # (dim, 2) local extents
    origin: np.ndarray | None = None
    rotation: np.ndarray | None = None  # solids: local box -> global
    phi: float = 0.0       # beams: mid-line rotation angle
    z_mid: float = 0.0     # plates: transverse position of the mid-surface
    _bboxes: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self):
        return len(self.dirs)

    @property
    def nelem_per_dir(self):
        return tuple(d.nelem for d in self.dirs)

    @property
    def nelem(self):
        return int(np.prod(self.nelem_per_dir))

    @property
    def nnodes(self):
        return self.nodes.shape[0]

    @property
    def nen(self):
        return int(np.prod([d.nloc for d in self.dirs]))

    @property
    def degrees(self):
        return tuple(d.degree for d in self.dirs)

    def element_grid_index(self, e):
        """Per-direction element indices (first direction fastest)."""
        out = []
        for d in self.dirs:
            out.append(e % d.nelem)
            e //= d.nelem
        return tuple(out)

    def element_id(self, grid_index):
        e = 0
        for d, i in zip(reversed(self.dirs), reversed(grid_index)):
            e = e * d.nelem + i
        return e

    def element_nodes(self, e):
        """Global node indices of an element (first direction fastest)."""
        gi = self.element_grid_index(e)
        per_dir = [d.indices(i) for d, i in zip(self.dirs, gi)]
        strides = np.cumprod([1] + [d.n for d in self.dirs[:-1]])
        idx = np.zeros(1, dtype=int)
        for inds, s in zip(per_dir, strides):
            idx = ((inds * s)[:, None] + idx[None, :]).ravel()
        return idx

    def ien(self):
        return np.array([self.element_nodes(e) for e in range(self.nelem)])

    def element_interval(self, e, axis):
        return self.dirs[axis].element_interval(self.element_grid_index(e)[axis])

    def parent_to_param(self, e, parent):
        parent = np.atleast_2d(np.asarray(parent, dtype=float))
        gi = self.element_grid_index(e)
        out = np.empty_like(parent)
        for k, (d, i) in enumerate(zip(self.dirs, gi)):
            a, b = d.element_interval(i)
            out[:, k] = 0.5 * (a + b) + 0.5 * (b - a) * parent[:, k]
        return out

    def param_to_parent(self, e, param):
        param = np.atleast_2d(np.asarray(param, dtype=float))
        gi = self.element_grid_index(e)
        out = np.empty_like(param)
        for k, (d, i) in enumerate(zip(self.dirs, gi)):
            a, b = d.element_interval(i)
            out[:, k] = (2.0 * param[:, k] - (a + b)) / (b - a)
        return out

    def local_to_parent(self, e, local):
        local = np.atleast_2d(np.asarray(local, dtype=float))
        param = np.column_stack(
            [d.local_to_param(local[:, k]) for k, d in enumerate(self.dirs)]
        )
        return self.param_to_parent(e, param)

    def element_containing(self, x_local):
        """Grid element index of a point given in local box coordinates."""
        x_local = np.atleast_1d(np.asarray(x_local, dtype=float))
        gi = [
            d.element_containing(d.local_to_param(x_local[k]))
            for k, d in enumerate(self.dirs)
        ]
        return self.element_id(gi)

    def shape_ders(self, e, param, nders=1):
        """Tensor-product shape values and parameter derivatives.

        Returns ``(N, dN, d2N)`` with shapes ``(nq, nen)``,
        ``(nq, nen, dim)`` and ``(nq, nen, dim, dim)`` (``d2N`` is None
        unless requested). Local node ordering: first direction fastest.
        """
        param = np.atleast_2d(np.asarray(param, dtype=float))
        nq, dim = param.shape
        gi = self.element_grid_index(e)
        uni = [
            d.eval(i, param[:, k], nders)
            for k, (d, i) in enumerate(zip(self.dirs, gi))
        ]
        nloc = [d.nloc for d in self.dirs]
        nen = self.nen

        def combine(orders):
            out = np.ones((nq, 1))
            for k in range(dim):
                fac = uni[k][:, orders[k], :]  # (nq, nloc_k)
                out = out[:, None, :] * fac[:, :, None]  # new dir slowest
                out = out.reshape(nq, -1)
            return out

        N = combine([0] * dim)
        dN = None
        d2N = None
        if nders >= 1:
            dN = np.empty((nq, nen, dim))
            for k in range(dim):
                o = [0] * dim
                o[k] = 1
                dN[:, :, k] = combine(o)
            dN = dN
        if nders >= 2:
            d2N = np.empty((nq, nen, dim, dim))
            for k in range(dim):
                for l in range(k, dim):
                    o = [0] * dim
                    o[k] += 1
                    o[l] += 1
                    val = combine(o)
                    d2N[:, :, k, l] = val
                    d2N[:, :, l, k] = val
        return N, dN, d2N

    def map_to_physical(self, e, parent):
        """Map parent coordinates of an element to storage coordinates."""
        param = self.parent_to_param(e, parent)
        N, _, _ = self.shape_ders(e, param, nders=0)
        return N @ self.nodes[self.element_nodes(e)]

    def jacobian(self, e, parent):
        """d(storage x)/d(parent xi) and its determinant at parent points."""
        param = self.parent_to_param(e, parent)
        _, dN, _ = self.shape_ders(e, param, nders=1)
        P = self.nodes[self.element_nodes(e)]
        Jpar = np.einsum("qnj,ni->qij", dN, P)
        gi = self.element_grid_index(e)
        half = np.array(
            [0.5 * np.diff(d.element_interval(i))[0]
             for d, i in zip(self.dirs, gi)]
        )
        J = Jpar * half[None, None, :]
        det = np.linalg.det(J)
        return J, det

    def element_diameter(self, e):
        P = self.nodes[self.element_nodes(e)]
        return float(np.linalg.norm(P.max(axis=0) - P.min(axis=0)))

    def inverse_map(self, e, x, tol_scale=1e-10):
        """Newton inversion of the element map.

        Returns ``(parent, inside)``; ``inside`` is False when the converged
        point falls outside the parent box by more than 1e-8.

        Raises
        ------
        ConvergenceError
            If Newton does not reach the tolerance in 50 iterations.
        """
        x = np.asarray(x, dtype=float)
        diam = self.element_diameter(e)
        tol = tol_scale * diam
        xi = np.zeros(self.dim)
        r = self.map_to_physical(e, xi[None, :])[0] - x
        for _ in range(50):
            if np.linalg.norm(r) <= tol:
                break
            J, _ = self.jacobian(e, xi[None, :])
            try:
                step = np.linalg.solve(J[0], r)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError(f"singular jacobian: {exc}") from exc
            scale = 1.0
            for _ in range(12):
                trial = xi - scale * step
                r_new = self.map_to_physical(e, trial[None, :])[0] - x
                if np.linalg.norm(r_new) < np.linalg.norm(r) or scale < 1e-3:
                    break
                scale *= 0.5
            xi, r = trial, r_new
        else:
            raise ConvergenceError(
                f"inverse map did not converge for element {e} at {x}"
            )
        inside = bool(np.all(np.abs(xi) <= 1.0 + 1e-8))
        return xi, inside

    def element_bboxes(self):
        if self._bboxes is None:
            boxes = np.empty((self.nelem, self.dim, 2))
            for e in range(self.nelem):
                P = self.nodes[self.element_nodes(e)]
                boxes[e, :, 0] = P.min(axis=0)
                boxes[e, :, 1] = P.max(axis=0)
            self._bboxes = boxes
        return self._bboxes

    def locate(self, x):
        """Find the element containing a storage-coordinate point.

        Brute-force loop over candidate elements (bounding-box prefilter)
        with early exit on the first inside signal.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        boxes = self.element_bboxes()
        pad = 1e-8 * max(1.0, float(np.abs(x).max()))
        cand = np.nonzero(
            np.all((x >= boxes[:, :, 0] - pad) & (x <= boxes[:, :, 1] + pad),
                   axis=1)
        )[0]
        for e in cand:
            try:
                xi, inside = self.inverse_map(e, x)
            except ConvergenceError:
                continue
            if inside:
                return int(e), xi
        raise PairingError(f"no element contains point {x}")

    # Placement helpers -------------------------------------------------

    def to_global(self, x_storage):
        """Storage coordinates -> global physical coordinates."""
        x = np.atleast_2d(np.asarray(x_storage, dtype=float))
        if self.model == "beam":
            Rv = rotation_2d(self.phi)
            pts = np.column_stack([x[:, 0], np.zeros(x.shape[0])])
            return self.origin[None, :] + pts @ Rv
        if self.model == "plate":
            return np.column_stack(
                [x, np.full(x.shape[0], self.z_mid)]
            )
        if self.rotation is not None:
            return self.origin[None, :] + x @ self.rotation.T
        return x

    def global_to_local(self, x_global):
        """Global coordinates -> local box coordinates (solids)."""
        x = np.atleast_2d(np.asarray(x_global, dtype=float))
        if self.rotation is not None:
            return (x - self.origin[None, :]) @ self.rotation
        return x


def rotation_2d(phi: float) -> np.ndarray:
    """Vector rotation matrix R_v: global components -> member-local ones."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s], [-s, c]])


def build_mesh(model, basis, degrees, nelems, extents, *, origin=None,
               rotation=None, phi=0.0, z_mid=0.0, weights=None) -> Mesh:
    """Construct a tensor-product mesh.

    Parameters
    ----------
    model : str
        'solid2d', 'solid3d', 'beam' or 'plate'.
    basis : str
        'lagrange' (2-noded lines / Q4) or 'spline'.
    degrees : int or sequence
        Polynomial degree per direction. Lagrange requires degree 1.
    nelems : int or sequence
        Elements (knot spans) per direction.
    extents : sequence of (lo, hi)
        Local coordinate range per direction. Beams use the local axis
        range, plates the mid-surface rectangle.
    origin, rotation : placement of solid meshes (global = origin + R @ local)
        or, for beams, the global position of the local origin.
    phi : beam mid-line rotation angle.
    z_mid : transverse position of a plate mid-surface.
    weights : per-direction NURBS weight arrays (optional).
    """
    if model not in MODEL_DIMS:
        raise ConfigError(f"unknown model kind {model!r}")
    dim = MODEL_DIMS[model]
    if model == "plate":
        dim = 2
    degrees = _per_dir(degrees, dim, int)
    nelems = _per_dir(nelems, dim, int)
    extents = np.asarray(extents, dtype=float).reshape(dim, 2)
    if np.any(extents[:, 1] <= extents[:, 0]):
        raise ConfigError("extents must have positive length")

    dirs = []
    for k in range(dim):
        ne, p = nelems[k], degrees[k]
        if p < 1:
            raise ConfigError(f"degree must be at least 1, got {p}")
        if ne < 1:
            raise ConfigError("need at least one element per direction")
        if basis == "lagrange":
            if p != 1:
                raise ConfigError("lagrange meshes support degree 1 only")
            dirs.append(LagrangeDir(np.linspace(*extents[k], ne + 1)))
        elif basis == "spline":
            knots = make_open_knots(p, np.linspace(0.0, ne, ne + 1))
            w = None if weights is None else weights[k]
            kv = KnotVector(knots, p, w)
            dirs.append(SplineDir(kv, extents[k, 0], extents[k, 1]))
        else:
            raise ConfigError(f"unknown basis kind {basis!r}")

    coords_1d = [d.node_coords() for d in dirs]
    grids = np.meshgrid(*coords_1d, indexing="ij")
    # First direction fastest in the global node numbering.
    nodes = np.stack(
        [np.transpose(g).ravel() for g in grids], axis=-1
    )

    ndglobal = 2 if model in ("solid2d", "beam") else 3
    if origin is not None:
        origin = np.asarray(origin, dtype=float).reshape(ndglobal)
    if rotation is not None:
        rotation = np.asarray(rotation, dtype=float)
        if model not in ("solid2d", "solid3d"):
            raise ConfigError("rotation applies to solid meshes only")
    if model in ("solid2d", "solid3d"):
        if rotation is not None or origin is not None:
            if origin is None:
                origin = np.zeros(dim)
            if rotation is None:
                rotation = np.eye(dim)
            nodes = origin[None, :] + nodes @ rotation.T
    elif model == "beam":
        if origin is None:
            origin = np.zeros(2)

    return Mesh(
        model=model, basis=basis, dirs=dirs, nodes=nodes,
        box=extents, origin=origin, rotation=rotation, phi=phi, z_mid=z_mid,
    )


def _per_dir(value, dim, cast):
    if np.isscalar(value):
        return tuple(cast(value) for _ in range(dim))
    out = tuple(cast(v) for v in value)
    if len(out) != dim:
        raise ConfigError(f"expected {dim} per-direction values, got {len(out)}")
    return out


# Bulk quadrature ------------------------------------------------------


def bulk_points(mesh: Mesh, e: int, npts=None, nders=1):
    """Quadrature data for one element.

    Returns ``(param, weights, N, dNdx, d2Ndx2, phys)`` where weights
    include the physical volume measure. ``d2Ndx2`` is None unless
    ``nders >= 2`` (flat/straight geometry assumed for second derivatives).
    """
    if npts is None:
        npts = tuple(d.degree + 1 for d in mesh.dirs)
    elif np.isscalar(npts):
        npts = (int(npts),) * mesh.dim
    gi = mesh.element_grid_index(e)
    pts_1d, wts_1d = [], []
    for k, (d, i) in enumerate(zip(mesh.dirs, gi)):
        g, w = gauss_1d(npts[k])
        a, b = d.element_interval(i)
        pts_1d.append(0.5 * (a + b) + 0.5 * (b - a) * g)
        wts_1d.append(0.5 * (b - a) * w)
    grids = np.meshgrid(*pts_1d, indexing="ij")
    param = np.stack([np.transpose(g).ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*wts_1d, indexing="ij")
    wts = np.ones(param.shape[0])
    for w in wgrids:
        wts = wts * np.transpose(w).ravel()
    return _element_data(mesh, e, param, wts, nders)


def _element_data(mesh, e, param, wts, nders):
    N, dN, d2N = mesh.shape_ders(e, param, nders=nders)
    P = mesh.nodes[mesh.element_nodes(e)]
    phys = N @ P
    J = np.einsum("qnj,ni->qij", dN, P)
    det = np.linalg.det(J)
    if np.any(det <= 0):
        raise DomainError(f"non-positive jacobian in element {e}")
    Jinv = np.linalg.inv(J)
    dNdx = np.einsum("qnj,qji->qni", dN, Jinv)
    d2Ndx2 = None
    if nders >= 2:
        d2Ndx2 = np.einsum("qnkl,qki,qlj->qnij", d2N, Jinv, Jinv)
    return param, wts * det, N, dNdx, d2Ndx2, phys


# Boundary facets ------------------------------------------------------


@dataclass
class Facet:
    """One element face on a mesh boundary, possibly clipped to a strip."""

    elem: int
    axis: int
    side: int  # -1 or +1 in parent coordinates
    clips: tuple  # per free axis: (lo, hi) in parent coordinates


def boundary_facets(mesh: Mesh, axis: int, side: int, strip=None):
    """Element faces on the given box face.

    ``strip`` optionally restricts the face in the *local box* coordinates
    of the free axes: a sequence with one ``(lo, hi)`` pair or ``None`` per
    free axis. Facets that do not intersect the strip are dropped; partially
    covered facets carry clipped parent intervals.
    """
    if not 0 <= axis < mesh.dim:
        raise ConfigError(f"facet axis {axis} outside mesh dimension {mesh.dim}")
    if side not in (-1, 1):
        raise ConfigError(f"facet side must be -1 or +1, got {side}")
    free = [k for k in range(mesh.dim) if k != axis]
    if strip is not None and len(strip) != len(free):
        raise ConfigError("strip needs one entry per free axis")
    boundary_e = mesh.dirs[axis].nelem - 1 if side > 0 else 0
    facets = []
    for e in range(mesh.nelem):
        gi = mesh.element_grid_index(e)
        if gi[axis] != boundary_e:
            continue
        clips = []
        keep = True
        for j, k in enumerate(free):
            lo, hi = mesh.dirs[k].local_interval(gi[k])
            want = None if strip is None else strip[j]
            if want is None:
                clips.append((-1.0, 1.0))
                continue
            clo, chi = max(lo, want[0]), min(hi, want[1])
            if chi - clo <= 1e-12 * (hi - lo):
                keep = False
                break
            # local -> parent on this axis (affine)
            clips.append((
                (2 * clo - lo - hi) / (hi - lo),
                (2 * chi - lo - hi) / (hi - lo),
            ))
        if keep:
            facets.append(Facet(e, axis, int(side), tuple(clips)))
    if not facets:
        raise ConfigError("no facets found on requested face")
    return facets


def facet_quadrature(mesh: Mesh, facet: Facet, npts):
    """Gauss rule on a boundary facet.

    ``npts`` is either one count shared by every in-facet direction or a
    sequence with one count per direction.  Returns ``(parent, phys,
    weights, normals)``; weights carry the surface measure, normals are
    unit outward vectors in storage coordinates.
    """
    free = [k for k in range(mesh.dim) if k != facet.axis]
    if isinstance(npts, (int, np.integer)):
        counts = [int(npts)] * len(free)
    else:
        counts = [int(n) for n in npts]
    pts_1d, wts_1d = [], []
    for (lo, hi), n in zip(facet.clips, counts):
        g, w = gauss_1d(n)
        pts_1d.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * g)
        wts_1d.append(0.5 * (hi - lo) * w)
    if free:
        grids = np.meshgrid(*pts_1d, indexing="ij")
        face_pts = np.stack([np.transpose(x).ravel() for x in grids], axis=-1)
        wgrids = np.meshgrid(*wts_1d, indexing="ij")
        wts = np.ones(face_pts.shape[0])
        for x in wgrids:
            wts = wts * np.transpose(x).ravel()
    else:  # 1D mesh: the facet is a point
        face_pts = np.zeros((1, 0))
        wts = np.ones(1)
    nq = face_pts.shape[0]
    parent = np.empty((nq, mesh.dim))
    parent[:, facet.axis] = float(facet.side)
    for j, k in enumerate(free):
        parent[:, k] = face_pts[:, j]
    phys = mesh.map_to_physical(facet.elem, parent)
    J, _ = mesh.jacobian(facet.elem, parent)
    if mesh.dim == 3:
        t1, t2 = J[:, :, free[0]], J[:, :, free[1]]
        nvec = np.cross(t1, t2)
        measure = np.linalg.norm(nvec, axis=1)
    elif mesh.dim == 2:
        t = J[:, :, free[0]]
        measure = np.linalg.norm(t, axis=1)
        nvec = np.stack([t[:, 1], -t[:, 0]], axis=-1)
    else:
        measure = np.ones(nq)
        nvec = np.ones((nq, 1))
    # Orient outward: the parent-axis gradient points towards growing xi_a.
    Jinv = np.linalg.inv(J)
    grad = Jinv[:, facet.axis, :] * facet.side
    sign = np.where(np.einsum("qi,qi->q", nvec, grad) >= 0, 1.0, -1.0)
    normals = nvec * (sign / np.maximum(np.linalg.norm(nvec, axis=1), 1e-300))[:, None]
    return parent, phys, wts * measure, normals
