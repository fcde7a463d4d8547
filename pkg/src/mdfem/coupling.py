"""Nitsche coupling between a continuum body and a reduced model.

The interface is the trace mesh of the solid's boundary face: each solid
facet carries a Gauss rule, and every quadrature point is resolved into
local coordinates of both the solid element and the partner structural
element. From there the module assembles the consistency blocks K^n, the
penalty blocks K^st and the stress-bound matrix H used by the eigenvalue
stabilization estimator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    PairingError,
    RankError,
)
from .mesh import boundary_facets, facet_quadrature, rotation_2d


def normal_matrix(n, reduced=None) -> np.ndarray:
    """Matrix form of the outward normal: (matrix) @ (Voigt stress) = sigma.n.

    ``reduced`` removes the stress columns a plate model cannot carry:
    'kirchhoff' keeps (xx, yy, xy), 'mindlin' keeps (xx, yy, xy, yz, xz).
    """
    n = np.asarray(n, dtype=float)
    full = _normal_matrices(n[None, :], reduced)
    return full[0]


_REDUCED_COLS = {None: None, "kirchhoff": (0, 1, 3), "mindlin": (0, 1, 3, 4, 5)}


def _normal_matrices(normals, reduced=None):
    """Vectorized normal matrices, one per row of ``normals``."""
    normals = np.asarray(normals, dtype=float)
    nq, d = normals.shape
    lengths = np.linalg.norm(normals, axis=1)
    if np.any(np.abs(lengths - 1.0) > 1e-8):
        raise DomainError("normals must have unit length")
    if d == 2:
        out = np.zeros((nq, 2, 3))
        out[:, 0, 0] = normals[:, 0]
        out[:, 0, 2] = normals[:, 1]
        out[:, 1, 1] = normals[:, 1]
        out[:, 1, 2] = normals[:, 0]
        return out
    out = np.zeros((nq, 3, 6))
    nx, ny, nz = normals[:, 0], normals[:, 1], normals[:, 2]
    out[:, 0, 0] = nx
    out[:, 0, 3] = ny
    out[:, 0, 5] = nz
    out[:, 1, 1] = ny
    out[:, 1, 3] = nx
    out[:, 1, 4] = nz
    out[:, 2, 2] = nz
    out[:, 2, 4] = ny
    out[:, 2, 5] = nx
    cols = _REDUCED_COLS.get(reduced, reduced)
    if cols is not None:
        out = out[:, :, cols]
    return out


@dataclass
class Segment:
    """Quadrature points of one solid facet paired with one partner element."""

    s_elem: int
    s_parent: np.ndarray  # (nq, solid dim)
    b_elem: int
    b_parent: np.ndarray  # (nq, struct dim)
    offsets: np.ndarray   # (nq,) section / thickness offsets
    normals: np.ndarray   # (nq, solid dim), outward from the solid
    weights: np.ndarray   # (nq,) physical surface measure
    phys: np.ndarray      # (nq, solid dim)


class CouplingOperator:
    """One coupling interface: paired quadrature plus matrix assembly."""

    def __init__(self, solid, struct, segments):
        self.solid = solid
        self.struct = struct
        self.segments = segments

    @property
    def measure(self):
        return sum(float(seg.weights.sum()) for seg in self.segments)

    def matrices(self):
        """Assemble (K^n, K^st, H) in stacked local DOF numbering.

        All three are sparse over ``[solid DOFs | struct DOFs]``. K^st is
        returned without the alpha factor; the full Nitsche contribution
        is ``K^n + K^n.T + alpha * K^st``.
        """
        ns, nb = self.solid.ndof, self.struct.ndof
        n = ns + nb
        rows_n, cols_n, vals_n = [], [], []
        rows_p, cols_p, vals_p = [], [], []
        rows_h, cols_h, vals_h = [], [], []
        reduced = self.struct.solid_stress_rows

        for seg in self.segments:
            w = seg.weights
            sdofs = self.solid.element_dofs(seg.s_elem)
            bdofs = ns + self.struct.element_dofs(seg.b_elem)
            Ns = self.solid.disp_matrix_at(seg.s_elem, seg.s_parent)
            Ss = self.solid.stress_matrix_at(seg.s_elem, seg.s_parent,
                                             rows=reduced)
            Nb = self.struct.disp_matrix_at(seg.b_elem, seg.b_parent,
                                            seg.offsets)
            Sb = self.struct.stress_matrix_at(seg.b_elem, seg.b_parent,
                                              seg.offsets)
            nmat = _normal_matrices(seg.normals, reduced)
            Ts = np.einsum("qdr,qrj->qdj", nmat, Ss)
            Tb = np.einsum("qdr,qrj->qdj", nmat, Sb)

            def accum(rows, cols, vals, rdofs, cdofs, block):
                rows.append(np.repeat(rdofs, len(cdofs)))
                cols.append(np.tile(cdofs, len(rdofs)))
                vals.append(block.ravel())

            def surf(A, B):
                return np.einsum("q,qdi,qdj->ij", w, A, B)

            # K^n: minus on the solid row, plus on the structure row
            accum(rows_n, cols_n, vals_n, sdofs, sdofs, -0.5 * surf(Ns, Ts))
            accum(rows_n, cols_n, vals_n, sdofs, bdofs, -0.5 * surf(Ns, Tb))
            accum(rows_n, cols_n, vals_n, bdofs, sdofs, +0.5 * surf(Nb, Ts))
            accum(rows_n, cols_n, vals_n, bdofs, bdofs, +0.5 * surf(Nb, Tb))
            # K^st (unscaled): jump penalty
            accum(rows_p, cols_p, vals_p, sdofs, sdofs, surf(Ns, Ns))
            accum(rows_p, cols_p, vals_p, sdofs, bdofs, -surf(Ns, Nb))
            accum(rows_p, cols_p, vals_p, bdofs, sdofs, -surf(Nb, Ns))
            accum(rows_p, cols_p, vals_p, bdofs, bdofs, surf(Nb, Nb))
            # H: bound on the summed interface stress
            accum(rows_h, cols_h, vals_h, sdofs, sdofs, surf(Ts, Ts))
            accum(rows_h, cols_h, vals_h, sdofs, bdofs, surf(Ts, Tb))
            accum(rows_h, cols_h, vals_h, bdofs, sdofs, surf(Tb, Ts))
            accum(rows_h, cols_h, vals_h, bdofs, bdofs, surf(Tb, Tb))

        def build(rows, cols, vals):
            if not rows:
                return sp.csr_matrix((n, n))
            m = sp.coo_matrix(
                (np.concatenate(vals),
                 (np.concatenate(rows), np.concatenate(cols))),
                shape=(n, n),
            )
            return m.tocsr()

        return (build(rows_n, cols_n, vals_n),
                build(rows_p, cols_p, vals_p),
                build(rows_h, cols_h, vals_h))


def _struct_local(struct, phys):
    """Map global interface points into structural local coordinates.

    Returns ``(inplane, offsets)``: the coordinates living on the
    structural mesh and the section / thickness offset per point.
    """
    mesh = struct.mesh
    phys = np.atleast_2d(phys)
    if mesh.model == "beam":
        Rv = rotation_2d(mesh.phi)
        loc = (phys - mesh.origin[None, :]) @ Rv.T
        return loc[:, :1], loc[:, 1]
    if mesh.model == "plate":
        return phys[:, :2], phys[:, 2] - mesh.z_mid
    raise ConfigError(f"unsupported structural mesh {mesh.model!r}")


def _struct_global(struct, inplane, offsets):
    """Inverse of :func:`_struct_local` for the pairing validation."""
    mesh = struct.mesh
    if mesh.model == "beam":
        loc = np.column_stack([inplane[:, 0], offsets])
        return mesh.origin[None, :] + loc @ rotation_2d(mesh.phi)
    return np.column_stack([inplane, mesh.z_mid + offsets])


def build_interface(solid, struct, axis, side, *, strip=None,
                    npts=None) -> CouplingOperator:
    """Pair the solid boundary face with the structural mesh.

    The trace mesh comes from the solid side; every facet quadrature
    point is located in the structural mesh (possibly splitting one
    facet across several partner elements).
    """
    smesh = struct.mesh
    p_struct = max(d.degree for d in smesh.dirs)
    facets = boundary_facets(solid.mesh, axis, side, strip=strip)
    segments = []
    for f in facets:
        if npts is None:
            counts = tuple(
                solid.mesh.dirs[k].degree + p_struct + 1
                for k in range(solid.mesh.dim) if k != axis
            )
        else:
            counts = npts
        parent, phys, w, normals = facet_quadrature(solid.mesh, f, counts)
        inplane, offsets = _struct_local(struct, phys)

        belems = np.empty(len(w), dtype=int)
        for i, pt in enumerate(inplane):
            try:
                belems[i] = smesh.element_containing(pt)
            except DomainError as exc:
                raise PairingError(
                    f"interface point {phys[i]} has no partner element: {exc}"
                ) from exc

        diam = max(np.linalg.norm(phys.max(axis=0) - phys.min(axis=0)), 1e-30)
        for be in np.unique(belems):
            idx = np.nonzero(belems == be)[0]
            b_parent = smesh.local_to_parent(be, inplane[idx])
            back = _struct_global(struct, inplane[idx], offsets[idx])
            err = np.linalg.norm(back - phys[idx], axis=1).max()
            if err > 1e-8 * diam:
                raise PairingError(
                    f"interface point mismatch {err:.3e} on facet of element "
                    f"{f.elem}"
                )
            segments.append(Segment(
                s_elem=f.elem, s_parent=parent[idx], b_elem=int(be),
                b_parent=b_parent, offsets=offsets[idx],
                normals=normals[idx], weights=w[idx], phys=phys[idx],
            ))
    return CouplingOperator(solid, struct, segments)


def estimate_alpha(K_solid, K_struct, H, *, seed=0, tol=1e-8, maxiter=5000):
    """Stabilization parameter alpha = lambda_1 / 2.

    ``lambda_1`` is the largest eigenvalue of the generalized problem
    H v = lambda K~ v on the free DOFs, where K~ = diag(K_solid,
    K_struct) is the uncoupled stiffness. The structural block may carry
    rigid modes (an unconstrained beam hanging off the interface); those
    are deflated through a small dense eigendecomposition, which is
    legitimate because the interface stress vanishes on them.
    """
    H = sp.csr_matrix(H)
    if H.nnz == 0 or np.abs(H.data).max() == 0.0:
        return 0.0
    Hscale = np.abs(H.data).max()

    K_solid = sp.csr_matrix(K_solid)
    K_struct = np.asarray(K_struct)
    ns = K_solid.shape[0]
    nb = K_struct.shape[0]
    if ns + nb != H.shape[0]:
        raise ConfigError("H size does not match the stiffness blocks")

    lu = splu(K_solid.tocsc()) if ns else None

    if nb:
        w, Q = np.linalg.eigh(K_struct)
        wmax = w.max() if w.size else 0.0
        if wmax <= 0:
            raise RankError("structural stiffness block is zero")
        null = w <= 1e-10 * wmax
        Qn, Qp, wp = Q[:, null], Q[:, ~null], w[~null]
        # rigid modes must be invisible to the interface stress
        for k in range(Qn.shape[1]):
            z = np.concatenate([np.zeros(ns), Qn[:, k]])
            if np.abs(H @ z).max() > 1e-8 * Hscale:
                raise RankError(
                    "stiffness kernel carries interface stress; constrain "
                    "the structural model or supply alpha explicitly"
                )
    else:
        Qn = Qp = wp = None

    def ktilde_solve(y):
        out = np.empty_like(y)
        if ns:
            out[:ns] = lu.solve(y[:ns])
        if nb:
            yb = y[ns:]
            out[ns:] = Qp @ ((Qp.T @ yb) / wp)
        return out

    def ktilde_mul(v):
        out = np.empty_like(v)
        if ns:
            out[:ns] = K_solid @ v[:ns]
        if nb:
            out[ns:] = K_struct @ v[ns:]
        return out

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(ns + nb)
    if nb and Qn.shape[1]:
        v[ns:] -= Qn @ (Qn.T @ v[ns:])
    v /= np.linalg.norm(v)

    lam_old = None
    for _ in range(maxiter):
        y = H @ v
        lam = float(v @ y) / float(v @ ktilde_mul(v))
        if lam_old is not None and abs(lam - lam_old) <= tol * max(abs(lam), 1e-300):
            return lam / 2.0
        lam_old = lam
        x = ktilde_solve(y)
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            return 0.0
        v = x / nrm
    raise ConvergenceError(
        f"stabilization eigenvalue stagnant after {maxiter} iterations"
    )
