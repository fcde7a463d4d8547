"""Global system: DOF layout over several models, sparse assembly of the
bulk + Nitsche terms, Dirichlet elimination, direct solve and reactions.

DOF layout is block-wise per model in construction order, node-major and
component-minor inside each block. The solve path is a direct symmetric
factorization: reverse Cuthill-McKee reordering plus banded Cholesky,
with a dense fallback for small systems.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .coupling import estimate_alpha
from .errors import ConfigError, DefinitenessError

_DENSE_CUTOFF = 400
_TRIPLET_BUDGET = 5_000_000


@dataclass
class Solution:
    """Solve outcome: solution vector plus bookkeeping for diagnostics."""

    a: np.ndarray
    alphas: list
    K: sp.csr_matrix           # assembled matrix before constraint elimination
    f: np.ndarray
    free: np.ndarray           # boolean mask of unconstrained DOFs
    residual: float
    reactions: np.ndarray = field(default=None)


class System:
    """Coupled models sharing one global DOF space."""

    def __init__(self, models, couplings=()):
        models = list(models)
        for i, m in enumerate(models):
            if any(m is other for other in models[:i]):
                raise ConfigError("each model may appear only once")
        self.models = models
        self.couplings = list(couplings)
        self.offsets = np.concatenate(
            [[0], np.cumsum([m.ndof for m in models])]
        ).astype(int)
        self._constraints: dict[int, float] = {}
        self._f = np.zeros(self.ndof)

    @property
    def ndof(self):
        return int(self.offsets[-1])

    def model_index(self, model):
        for i, m in enumerate(self.models):
            if m is model:
                return i
        raise ConfigError("model is not part of this system")

    def global_dofs(self, idx, local_dofs):
        return self.offsets[idx] + np.asarray(local_dofs, dtype=int)

    def model_part(self, a, idx):
        return a[self.offsets[idx]:self.offsets[idx + 1]]

    def add_coupling(self, op):
        self.couplings.append(op)

    def fix(self, idx, local_dofs, values=0.0):
        """Constrain model DOFs to prescribed values."""
        dofs = self.global_dofs(idx, local_dofs)
        values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape)
        if not np.all(np.isfinite(values)):
            raise ConfigError("Dirichlet values must be finite")
        for d, v in zip(dofs, values):
            old = self._constraints.get(int(d))
            if old is not None and old != v:
                raise ConfigError(f"conflicting constraint on DOF {d}")
            self._constraints[int(d)] = float(v)

    def load(self, idx, f_local):
        f_local = np.asarray(f_local, dtype=float)
        self._f[self.offsets[idx]:self.offsets[idx + 1]] += f_local

    # Assembly ----------------------------------------------------------

    def bulk_matrix(self) -> sp.csr_matrix:
        """K~ = sum of each model's own stiffness, no coupling terms."""
        n = self.ndof
        K = sp.csr_matrix((n, n))
        rows, cols, vals, budget = [], [], [], 0
        for m, off in zip(self.models, self.offsets):
            for e in range(m.mesh.nelem):
                Ke = m.element_stiffness(e)
                if Ke is None:
                    continue  # void element
                d = off + m.element_dofs(e)
                rows.append(np.repeat(d, len(d)))
                cols.append(np.tile(d, len(d)))
                vals.append(Ke.ravel())
                budget += Ke.size
                if budget > _TRIPLET_BUDGET:
                    K = K + self._flush(rows, cols, vals, n)
                    rows, cols, vals, budget = [], [], [], 0
        if rows:
            K = K + self._flush(rows, cols, vals, n)
        return K

    @staticmethod
    def _flush(rows, cols, vals, n):
        return sp.coo_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        ).tocsr()

    def _coupling_matrices(self):
        """Each coupling's (K^n, K^st, H) lifted to global numbering."""
        out = []
        n = self.ndof
        for op in self.couplings:
            i_s = self.model_index(op.solid)
            i_b = self.model_index(op.struct)
            ns = op.solid.ndof
            gmap = np.concatenate([
                self.offsets[i_s] + np.arange(ns),
                self.offsets[i_b] + np.arange(op.struct.ndof),
            ])
            lifted = []
            for m in op.matrices():
                c = m.tocoo()
                lifted.append(sp.coo_matrix(
                    (c.data, (gmap[c.row], gmap[c.col])), shape=(n, n)
                ).tocsr())
            out.append(tuple(lifted))
        return out

    def _collect_inactive(self):
        for idx, m in enumerate(self.models):
            inactive = getattr(m, "inactive_dofs", None)
            if inactive is None:
                continue
            dofs = inactive() if callable(inactive) else inactive
            if len(dofs):
                self.fix(idx, np.asarray(dofs, dtype=int), 0.0)

    def _is_solid(self, m):
        return m.mesh.model in ("solid2d", "solid3d")

    def _resolve_alpha(self, alpha, Kbulk, coupling_mats, free, seed):
        if np.isscalar(alpha) and not isinstance(alpha, str):
            return [float(alpha)] * len(self.couplings)
        if isinstance(alpha, (list, tuple)):
            if len(alpha) != len(self.couplings):
                raise ConfigError("need one alpha per coupling")
            return [float(a) for a in alpha]
        if alpha != "auto":
            raise ConfigError(f"alpha must be 'auto' or numeric, got {alpha!r}")
        if not self.couplings:
            return []

        solid_free, struct_free = [], []
        for idx, m in enumerate(self.models):
            dofs = np.arange(self.offsets[idx], self.offsets[idx + 1])
            dofs = dofs[free[dofs]]
            (solid_free if self._is_solid(m) else struct_free).append(dofs)
        solid_free = np.concatenate(solid_free) if solid_free else np.array([], int)
        struct_free = np.concatenate(struct_free) if struct_free else np.array([], int)

        Ks = Kbulk[solid_free][:, solid_free]
        Kb = Kbulk[struct_free][:, struct_free].toarray()
        H = sum(h for _, _, h in coupling_mats)
        order = np.concatenate([solid_free, struct_free])
        Hff = H[order][:, order]
        a = estimate_alpha(Ks, Kb, Hff, seed=seed)
        return [a] * len(self.couplings)

    # Solve ---------------------------------------------------------------

    def solve(self, alpha="auto", seed=0) -> Solution:
        self._collect_inactive()
        Kbulk = self.bulk_matrix()
        coupling_mats = self._coupling_matrices()

        cons = np.fromiter(self._constraints.keys(), dtype=int,
                           count=len(self._constraints))
        vals = np.fromiter(self._constraints.values(), dtype=float,
                           count=len(self._constraints))
        free = np.ones(self.ndof, dtype=bool)
        free[cons] = False

        alphas = self._resolve_alpha(alpha, Kbulk, coupling_mats, free, seed)
        if self.couplings and min(alphas, default=1.0) <= 0:
            raise ConfigError(
                "stabilization alpha must be positive (degenerate interface?)"
            )

        K = Kbulk
        for (Kn, Kst, _), a_c in zip(coupling_mats, alphas):
            K = K + Kn + Kn.T + a_c * Kst
        K = ((K + K.T) * 0.5).tocsr()

        f = self._f.copy()
        a = np.zeros(self.ndof)
        a[cons] = vals
        b = f[free] - K[free][:, cons] @ vals
        Kff = K[free][:, free].tocsr()
        x = _solve_spd(Kff, b)
        a[free] = x

        resid_ref = max(float(np.linalg.norm(b)), 1e-300)
        residual = float(np.linalg.norm(Kff @ x - b)) / resid_ref
        sol = Solution(a=a, alphas=alphas, K=K, f=f, free=free,
                       residual=residual)
        r = K @ a - f
        r[free] = 0.0
        sol.reactions = r
        return sol


def _solve_spd(K: sp.csr_matrix, b: np.ndarray) -> np.ndarray:
    """Direct symmetric positive definite solve.

    Raises DefinitenessError when the factorization breaks down, which is
    the observable symptom of an under-stabilized interface.
    """
    n = K.shape[0]
    if n == 0:
        return np.zeros(0)
    try:
        if n <= _DENSE_CUTOFF:
            c = sla.cho_factor(K.toarray(), lower=False)
            return sla.cho_solve(c, b)
        perm = reverse_cuthill_mckee(K, symmetric_mode=True)
        Kp = K[perm][:, perm]
        upper = sp.triu(Kp).tocoo()
        u = int((upper.col - upper.row).max()) if upper.nnz else 0
        if (u + 1) * n > 3e8:
            c = sla.cho_factor(K.toarray(), lower=False)
            return sla.cho_solve(c, b)
        ab = np.zeros((u + 1, n))
        ab[u + upper.row - upper.col, upper.col] = upper.data
        cb = sla.cholesky_banded(ab, lower=False)
        xp = sla.cho_solve_banded((cb, False), b[perm])
        x = np.empty_like(xp)
        x[perm] = xp
        return x
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError(
            "stiffness matrix is not positive definite; if this system is "
            "Nitsche-coupled the stabilization alpha is likely too small"
        ) from exc
