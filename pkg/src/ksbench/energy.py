"""The mean-field energy functional and its first two derivatives.

All fields are zero-mean P1 functions.  Nonlinear integrals of e^u use a
3-point (edge-midpoint) Gauss rule per triangle, evaluated with a log-sum-exp
shift so that nothing overflows.  Gradient and Hessian actions are returned
as mass representers (Riesz vectors in the discrete L2 inner product).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import factorized

from . import spectrum

ZERO_MEAN_TOL = 1e-10


@dataclass(frozen=True)
class Parameters:
    beta: float
    rho: float


@dataclass(eq=False)
class Field:
    """Zero-mean scalar P1 function given by its vertex values."""
    mesh: object
    values: np.ndarray

    def copy(self):
        return Field(self.mesh, self.values.copy())


class EnergyFunctional:
    """Discretization of J(u) = 1/2 int(|grad u|^2 + beta u^2) - rho log int e^u."""

    _cache: dict = {}

    def __init__(self, mesh):
        self.mesh = mesh
        self.stiffness, self.mass = spectrum.assemble(mesh)
        self.area = mesh.area
        self.lumped = np.asarray(self.mass.sum(axis=1)).ravel()  # int of hats
        self._mass_solve = factorized(self.mass.tocsc())
        t = mesh.triangles
        # Quadrature nodes are the three edge midpoints of each triangle.
        self._qa = t[:, [0, 1, 2]].ravel()
        self._qb = t[:, [1, 2, 0]].ravel()
        self._qw = np.repeat(mesh.triangle_areas / 3.0, 3)

    @classmethod
    def for_mesh(cls, mesh):
        model = cls._cache.get(mesh)
        if model is None:
            model = cls(mesh)
            cls._cache[mesh] = model
        return model

    # -- fields -----------------------------------------------------------

    def project_zero_mean(self, values):
        values = np.asarray(values, dtype=float)
        return values - (self.lumped @ values) / self.area

    def field(self, values):
        return Field(self.mesh, self.project_zero_mean(values))

    def zero_field(self):
        return Field(self.mesh, np.zeros(self.mesh.num_vertices))

    def integral(self, values):
        return float(self.lumped @ values)

    def mass_norm(self, values):
        return float(np.sqrt(max(values @ (self.mass @ values), 0.0)))

    def h1_norm(self, values):
        q = values @ (self.stiffness @ values) + values @ (self.mass @ values)
        return float(np.sqrt(max(q, 0.0)))

    # -- exponential quadrature --------------------------------------------

    def _exp_quad(self, u):
        """Shift s, shifted quad values, shifted vertex vector w, shifted total W.

        w_i = exp(-s) * int e^u phi_i and W = exp(-s) * int e^u under the
        3-point rule, so any ratio of them is shift-free.
        """
        s = float(u.max(initial=0.0))
        vals = np.exp(0.5 * (u[self._qa] + u[self._qb]) - s) * self._qw
        w = np.zeros(len(u))
        np.add.at(w, self._qa, 0.5 * vals)
        np.add.at(w, self._qb, 0.5 * vals)
        return s, vals, w, float(vals.sum())

    def log_int_exp(self, u):
        u = u.values if isinstance(u, Field) else u
        s, _, _, total = self._exp_quad(u)
        return s + float(np.log(total))

    def exp_density(self, u):
        """Vertex values of e^u / int e^u (shift-free)."""
        u = u.values if isinstance(u, Field) else u
        s, _, _, total = self._exp_quad(u)
        return np.exp(u - s) / total

    def _exp_mass_matrix(self, u, quad_vals):
        """Shifted matrix E with E_ab = exp(-s) int e^u phi_a phi_b (3-pt rule)."""
        n = len(u)
        q = 0.25 * quad_vals
        rows = np.concatenate([self._qa, self._qa, self._qb, self._qb])
        cols = np.concatenate([self._qa, self._qb, self._qa, self._qb])
        data = np.concatenate([q, q, q, q])
        return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()

    # -- functional, gradient, Hessian --------------------------------------

    def energy(self, u, p):
        u = u.values if isinstance(u, Field) else u
        quad = 0.5 * (u @ (self.stiffness @ u) + p.beta * (u @ (self.mass @ u)))
        return float(quad - p.rho * self.log_int_exp(u))

    def residual(self, u, p):
        """Dual-space gradient r with r . v = J'(u)[v] for all v."""
        u = u.values if isinstance(u, Field) else u
        if not np.all(np.isfinite(u)):
            return np.full_like(u, np.nan)
        _, _, w, total = self._exp_quad(u)
        if total <= 0.0:            # quadrature underflow on extreme fields
            return np.full_like(u, np.nan)
        return (self.stiffness @ u + p.beta * (self.mass @ u)
                - p.rho * (w / total - self.lumped / self.area))

    def gradient(self, u, p):
        g = self._mass_solve(self.residual(u, p))
        return Field(self.mesh, self.project_zero_mean(g))

    def gradient_norm(self, u, p):
        r = self.residual(u, p)
        return float(np.sqrt(max(r @ self._mass_solve(r), 0.0)))

    def hessian_operator(self, u, p):
        """Sparse part A0 and rank-one data (c, w) with J''(u) = A0 + c w w^T."""
        u = u.values if isinstance(u, Field) else u
        _, quad_vals, w, total = self._exp_quad(u)
        E = self._exp_mass_matrix(u, quad_vals)
        A0 = self.stiffness + p.beta * self.mass - (p.rho / total) * E
        return A0.tocsr(), p.rho / total ** 2, w

    def hessian_apply(self, u, p, v):
        A0, c, w = self.hessian_operator(u, p)
        v = v.values if isinstance(v, Field) else v
        r = A0 @ v + c * w * (w @ v)
        h = self._mass_solve(r)
        return Field(self.mesh, self.project_zero_mean(h))


def project_pi(u, basis, I):
    """First I mass inner products of u with the eigenbasis."""
    if I > len(basis):
        raise ValueError("projection order exceeds available eigenpairs")
    if I == 0:
        return np.zeros(0)
    values = u.values if isinstance(u, Field) else u
    return basis.eigenvectors[:, :I].T @ (basis.mass @ values)
