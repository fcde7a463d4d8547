"""Continuum element kernels: plane-stress 2D and full 3D elasticity.

Voigt order is fixed program-wide: [xx, yy, xy] in 2D and
[xx, yy, zz, xy, yz, xz] in 3D, with engineering shear strains.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .mesh import Mesh, boundary_facets, bulk_points, facet_quadrature


@dataclass
class Material:
    """Isotropic material and section data.

    ``thickness`` (h) and ``width`` (b) feed the reduced models: area
    A = b h, second moment I = b h^3 / 12.
    """

    E: float
    nu: float
    k_shear: float = 5.0 / 6.0
    thickness: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if self.E <= 0:
            raise ConfigError(f"Young's modulus must be positive, got {self.E}")
        if not -1.0 < self.nu < 0.5:
            raise ConfigError(f"Poisson ratio must be in (-1, 0.5), got {self.nu}")
        if self.thickness <= 0 or self.width <= 0:
            raise ConfigError("section dimensions must be positive")
        if self.k_shear <= 0:
            raise ConfigError("shear correction factor must be positive")

    @property
    def G(self):
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def area(self):
        return self.width * self.thickness

    @property
    def inertia(self):
        return self.width * self.thickness**3 / 12.0

    @property
    def plate_rigidity(self):
        return self.E * self.thickness**3 / (12.0 * (1.0 - self.nu**2))


def constitutive_solid(material: Material, dim: int) -> np.ndarray:
    """Hooke matrix in Voigt order (plane stress for 2D)."""
    E, nu = material.E, material.nu
    if dim == 2:
        c = E / (1.0 - nu**2)
        return c * np.array([
            [1.0, nu, 0.0],
            [nu, 1.0, 0.0],
            [0.0, 0.0, 0.5 * (1.0 - nu)],
        ])
    if dim == 3:
        lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
        mu = material.G
        C = np.zeros((6, 6))
        C[:3, :3] = lam
        C[np.arange(3), np.arange(3)] += 2.0 * mu
        C[np.arange(3, 6), np.arange(3, 6)] = mu
        return C
    raise ConfigError(f"solid dimension must be 2 or 3, got {dim}")


def b_matrix_solid(dNdx: np.ndarray) -> np.ndarray:
    """Strain-displacement matrices from shape gradients.

    ``dNdx`` has shape (nq, nen, dim); the result has shape
    (nq, nvoigt, dim * nen) with DOFs node-major.
    """
    nq, nen, dim = dNdx.shape
    if dim == 2:
        B = np.zeros((nq, 3, 2 * nen))
        B[:, 0, 0::2] = dNdx[:, :, 0]
        B[:, 1, 1::2] = dNdx[:, :, 1]
        B[:, 2, 0::2] = dNdx[:, :, 1]
        B[:, 2, 1::2] = dNdx[:, :, 0]
        return B
    B = np.zeros((nq, 6, 3 * nen))
    dx, dy, dz = dNdx[:, :, 0], dNdx[:, :, 1], dNdx[:, :, 2]
    B[:, 0, 0::3] = dx
    B[:, 1, 1::3] = dy
    B[:, 2, 2::3] = dz
    B[:, 3, 0::3] = dy
    B[:, 3, 1::3] = dx
    B[:, 4, 1::3] = dz
    B[:, 4, 2::3] = dy
    B[:, 5, 0::3] = dz
    B[:, 5, 2::3] = dx
    return B


def disp_matrix(N: np.ndarray, ncomp: int) -> np.ndarray:
    """Displacement interpolation matrices (nq, ncomp, ncomp * nen)."""
    nq, nen = N.shape
    out = np.zeros((nq, ncomp, ncomp * nen))
    for c in range(ncomp):
        out[:, c, c::ncomp] = N
    return out


def integrate_btcb(B: np.ndarray, C: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Sum over quadrature points of w * B^T C B (GEMM-shaped)."""
    nq, nr, nd = B.shape
    CB = np.einsum("ab,qbj->qaj", C, B) * w[:, None, None]
    return B.reshape(nq * nr, nd).T @ CB.reshape(nq * nr, nd)


def strain_displacement_solid(mesh: Mesh, e: int, parent) -> np.ndarray:
    """B matrix at parent points of one element (spec-facing wrapper)."""
    parent = np.atleast_2d(np.asarray(parent, dtype=float))
    param = mesh.parent_to_param(e, parent)
    from .mesh import _element_data

    _, _, _, dNdx, _, _ = _element_data(
        mesh, e, param, np.ones(parent.shape[0]), 1
    )
    return b_matrix_solid(dNdx)


def stiffness_solid(mesh: Mesh, e: int, material: Material,
                    quadrature=None) -> np.ndarray:
    """Element stiffness with the full (p+1)-point Gauss rule."""
    C = constitutive_solid(material, mesh.dim)
    if quadrature is None:
        _, w, _, dNdx, _, _ = bulk_points(mesh, e, nders=1)
    else:
        param, w = quadrature
        from .mesh import _element_data

        _, w, _, dNdx, _, _ = _element_data(mesh, e, param, w, 1)
    return integrate_btcb(b_matrix_solid(dNdx), C, w)


class SolidModel:
    """Continuum body: mesh plus material, exposing coupling kernels."""

    def __init__(self, mesh: Mesh, material: Material):
        if mesh.model not in ("solid2d", "solid3d"):
            raise ConfigError(f"SolidModel needs a solid mesh, got {mesh.model}")
        self.mesh = mesh
        self.material = material
        self.ncomp = mesh.dim
        self.C = constitutive_solid(material, mesh.dim)

    @property
    def ncomp_node(self):
        """Unknowns per node, under the name model-generic code expects."""
        return self.ncomp

    @property
    def ndof(self):
        return self.mesh.nnodes * self.ncomp

    def element_dofs(self, e):
        nodes = self.mesh.element_nodes(e)
        return (nodes[:, None] * self.ncomp + np.arange(self.ncomp)).ravel()

    def element_stiffness(self, e, quadrature=None):
        return stiffness_solid(self.mesh, e, self.material, quadrature)

    def disp_matrix_at(self, e, parent, offset=None):
        param = self.mesh.parent_to_param(e, np.atleast_2d(parent))
        N, _, _ = self.mesh.shape_ders(e, param, nders=0)
        return disp_matrix(N, self.ncomp)

    def stress_matrix_at(self, e, parent, offset=None, rows=None):
        """C @ B at parent points; ``rows`` selects stress components."""
        B = strain_displacement_solid(self.mesh, e, parent)
        C = self.C if rows is None else self.C[rows, :]
        return np.einsum("ab,qbj->qaj", C, B)

    def body_force(self, force) -> np.ndarray:
        """Consistent nodal load for a constant body force vector."""
        force = np.asarray(force, dtype=float).reshape(self.ncomp)
        out = np.zeros(self.ndof)
        for e in range(self.mesh.nelem):
            _, w, N, _, _, _ = bulk_points(self.mesh, e, nders=1)
            fe = np.einsum("q,qn,c->nc", w, N, force).ravel()
            out[self.element_dofs(e)] += fe
        return out

    def traction_force(self, axis, side, traction, npts=None,
                       strip=None) -> np.ndarray:
        """Consistent nodal load for a traction on a boundary face.

        ``traction`` is a constant vector or a callable mapping physical
        points (nq, dim) to traction vectors (nq, dim).
        """
        mesh = self.mesh
        if npts is None:
            npts = max(d.degree for d in mesh.dirs) + 1
        out = np.zeros(self.ndof)
        for f in boundary_facets(mesh, axis, side, strip=strip):
            parent, phys, w, _ = facet_quadrature(mesh, f, npts)
            if callable(traction):
                t = np.asarray(traction(phys), dtype=float)
            else:
                t = np.tile(np.asarray(traction, dtype=float), (len(w), 1))
            param = mesh.parent_to_param(f.elem, parent)
            N, _, _ = mesh.shape_ders(f.elem, param, nders=0)
            fe = np.einsum("q,qn,qc->nc", w, N, t).ravel()
            out[self.element_dofs(f.elem)] += fe
        return out

    def recover(self, e, parent, a_model):
        """Displacement and stress at parent points from model DOF values."""
        dofs = self.element_dofs(e)
        ae = a_model[dofs]
        Nmat = self.disp_matrix_at(e, parent)
        S = self.stress_matrix_at(e, parent)
        return Nmat @ ae, S @ ae
