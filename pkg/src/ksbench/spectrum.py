"""P1 finite-element matrices and the nonconstant Neumann eigenbasis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh

from .errors import ConvergenceError, MeshError, ResonanceError

DENSE_LIMIT = 2000


@dataclass(eq=False)
class SpectralBasis:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    eigenvalues: np.ndarray      # nondecreasing, strictly positive
    eigenvectors: np.ndarray     # (V, M) columns, mass-orthonormal, zero-mean

    def __len__(self):
        return len(self.eigenvalues)


def assemble(mesh):
    """Stiffness (Dirichlet form) and consistent mass matrix for P1 elements."""
    v = mesh.vertices
    t = mesh.triangles
    areas = mesh.triangle_areas
    if np.any(areas <= 0):
        raise MeshError("degenerate triangle")

    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    # Gradients of the three hat functions on each triangle.
    g = np.empty((len(t), 3, 2))
    g[:, 0] = (p1 - p2)[:, ::-1]
    g[:, 1] = (p2 - p0)[:, ::-1]
    g[:, 2] = (p0 - p1)[:, ::-1]
    g[:, :, 0] *= -1.0
    g /= (2.0 * areas)[:, None, None]

    ke = np.einsum("tif,tjf->tij", g, g) * areas[:, None, None]
    me = (areas[:, None, None] / 12.0) * (np.ones((3, 3)) + np.eye(3))

    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.num_vertices
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def _fix_signs(vecs):
    for j in range(vecs.shape[1]):
        c = vecs[:, j]
        nz = np.flatnonzero(np.abs(c) > 1e-8 * np.abs(c).max())
        if len(nz) and c[nz[0]] < 0:
            vecs[:, j] = -c
    return vecs


def eigenpairs(mesh, count):
    """Lowest `count` nonconstant Neumann eigenpairs, mass-orthonormal.

    Dense solve below DENSE_LIMIT degrees of freedom, shift-invert Lanczos
    above.  The constant mode is removed by projection against the
    mass-weighted constant, not by pinning a vertex.
    """
    K, M = assemble(mesh)
    n = mesh.num_vertices
    if count >= n - 1:
        raise MeshError("count must be below the number of interior degrees of freedom")

    if n <= DENSE_LIMIT:
        vals, vecs = eigh(K.toarray(), M.toarray(),
                          subset_by_index=[0, count])
    else:
        try:
            vals, vecs = spla.eigsh(K, k=count + 1, M=M, sigma=-1.0, which="LM")
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError("eigensolver failed to converge") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    if abs(vals[0]) > 1e-6 * (1.0 + abs(vals[1])):
        raise ConvergenceError("constant mode not resolved by eigensolver")
    vals, vecs = vals[1:], vecs[:, 1:]

    # Deflate the constant and re-orthonormalize in the mass inner product
    # (modified Gram-Schmidt keeps degenerate clusters clean).
    m = np.asarray(M.sum(axis=1)).ravel()
    vecs = vecs - np.outer(np.ones(n), (m @ vecs) / mesh.area)
    for j in range(vecs.shape[1]):
        w = M @ vecs[:, j]
        for i in range(j):
            vecs[:, j] -= (vecs[:, i] @ w) * vecs[:, i]
            w = M @ vecs[:, j]
        vecs[:, j] /= np.sqrt(vecs[:, j] @ w)
    _fix_signs(vecs)
    return SpectralBasis(stiffness=K, mass=M, eigenvalues=np.asarray(vals),
                         eigenvectors=vecs)


def resonance_tolerance(threshold):
    return 1e-6 * (1.0 + abs(threshold))


def bracket_index(eigenvalues, threshold, resonance_tol=None):
    """Number of eigenvalues strictly below -threshold.

    With the convention lambda_0 = 0 this is the unique n with
    -lambda_{n+1} < threshold < -lambda_n; thresholds at or above -lambda_1
    give 0.  Raises ResonanceError when threshold is within tolerance of
    some -lambda_i.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    tol = resonance_tolerance(threshold) if resonance_tol is None else resonance_tol
    if np.any(np.abs(threshold + lam) < tol):
        raise ResonanceError(
            f"threshold {threshold} resonates with an eigenvalue", which="beta")
    return int(np.sum(lam < -threshold))
