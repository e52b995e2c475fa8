"""Weighted barycenter measures, the bounded-Lipschitz metric and projections.

A barycenter measure is a finitely supported probability measure whose
interior atoms count twice and boundary atoms once toward the weight budget
K.  Densities on a mesh are identified with atom sets at the vertices via
the lumped mass quadrature.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.spatial import cKDTree

from . import mesh as meshmod
from .energy import EnergyFunctional, project_pi
from .errors import NotConcentratedError, NotInLowSublevelError

TAG_INTERIOR = "interior"
TAG_BOUNDARY = "boundary"


@dataclass(eq=False)
class BarycenterMeasure:
    points: np.ndarray       # (n, 2)
    weights: np.ndarray      # (n,) positive, sums to 1
    interior: np.ndarray     # (n,) bool

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        self.interior = np.asarray(self.interior, dtype=bool)

    @property
    def weighted_count(self):
        """2 * (#interior atoms) + (#boundary atoms)."""
        return int(2 * self.interior.sum() + (~self.interior).sum())

    def to_json(self):
        atoms = [{"x": float(p[0]), "y": float(p[1]), "w": float(w),
                  "tag": TAG_INTERIOR if i else TAG_BOUNDARY}
                 for p, w, i in zip(self.points, self.weights, self.interior)]
        return json.dumps({"atoms": atoms}, indent=2)

    @classmethod
    def from_json(cls, text):
        atoms = json.loads(text)["atoms"]
        return cls(points=np.array([[a["x"], a["y"]] for a in atoms]),
                   weights=np.array([a["w"] for a in atoms]),
                   interior=np.array([a["tag"] == TAG_INTERIOR for a in atoms]))

    @classmethod
    def single(cls, point, interior):
        return cls(points=np.array([point]), weights=np.array([1.0]),
                   interior=np.array([bool(interior)]))


@dataclass(eq=False)
class JoinPoint:
    """Point of the join: measure at t = 0, pure sphere direction at t = 1."""
    measure: BarycenterMeasure | None
    sphere: np.ndarray | None
    t: float


@dataclass(eq=False)
class MeshDensity:
    """Nonnegative density given by vertex values on a mesh."""
    mesh: object
    values: np.ndarray


@dataclass(eq=False)
class Spread:
    points: np.ndarray
    interior: np.ndarray
    mass_floor: float        # each point holds at least this mass in its ball
    radius: float            # the ball radius (eps / 6)

    @property
    def weighted_count(self):
        return int(2 * self.interior.sum() + (~self.interior).sum())


@dataclass(eq=False)
class Concentrated:
    points: np.ndarray       # witnessing family, boundary members on the boundary
    interior: np.ndarray

    @property
    def weighted_count(self):
        return int(2 * self.interior.sum() + (~self.interior).sum())


def density_atoms(mesh, values):
    """Vertex atoms representing a mesh density (lumped quadrature), normalized."""
    w = mesh.lumped_masses() * np.asarray(values, dtype=float)
    if np.any(w < -1e-12 * max(w.max(initial=0.0), 1.0)):
        raise ValueError("density must be nonnegative")
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0:
        raise ValueError("density has no mass")
    return mesh.vertices, w / total


def as_weighted_points(obj):
    if isinstance(obj, BarycenterMeasure):
        return obj.points, obj.weights
    if isinstance(obj, MeshDensity):
        return density_atoms(obj.mesh, obj.values)
    points, weights = obj
    return np.atleast_2d(np.asarray(points, float)), np.asarray(weights, float)


def aggregate_atoms(points, weights, spacing):
    """Merge atoms into grid cells of the given spacing.

    Each output atom sits at the weighted centroid of its cell, so every
    unit of mass moves by at most spacing * sqrt(2); the bounded-Lipschitz
    distance to the original cloud is bounded by the same amount.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    key = np.floor(points / spacing).astype(np.int64)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    n = inv.max() + 1
    w = np.bincount(inv, weights=weights, minlength=n)
    cx = np.bincount(inv, weights=weights * points[:, 0], minlength=n)
    cy = np.bincount(inv, weights=weights * points[:, 1], minlength=n)
    keep = w > 0
    centers = np.column_stack([cx[keep] / w[keep], cy[keep] / w[keep]])
    return centers, w[keep]


def bl_distance(mu, nu, prune=1e-10):
    """Bounded-Lipschitz distance via its exact linear program.

    Maximizes sum h_a d_a over node values with |h_a| <= 1 and
    |h_a - h_b| <= |p_a - p_b| (Euclidean) for every support pair; d is the
    signed weight difference on the union support.  Atoms carrying less than
    `prune` of the total variation are dropped (affects the value by at most
    twice the dropped mass).
    """
    pm, wm = as_weighted_points(mu)
    pn, wn = as_weighted_points(nu)
    if len(pm) == 0 or len(pn) == 0:
        raise ValueError("empty support")
    points = np.vstack([pm, pn])
    d = np.concatenate([wm, -wn])

    # Merge coincident support points.
    key = np.round(points / 1e-12).astype(np.int64)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    n_unique = inv.max() + 1
    dd = np.bincount(inv, weights=d, minlength=n_unique)
    rep = np.zeros(n_unique, dtype=np.int64)
    rep[inv] = np.arange(len(points))
    points = points[rep]
    d = dd

    scale = np.abs(d).sum()
    if scale <= 0:
        return 0.0
    keep = np.abs(d) > prune * scale
    points, d = points[keep], d[keep]
    n = len(points)
    if n == 1:
        return float(abs(d[0]))

    ii, jj = np.triu_indices(n, k=1)
    dist = np.linalg.norm(points[ii] - points[jj], axis=1)
    m = len(ii)
    rows = np.repeat(np.arange(2 * m), 2)
    cols = np.concatenate([np.column_stack([ii, jj]).ravel(),
                           np.column_stack([jj, ii]).ravel()])
    data = np.tile([1.0, -1.0], 2 * m)
    A = sp.coo_matrix((data, (rows, cols)), shape=(2 * m, n))
    b = np.concatenate([dist, dist])
    res = linprog(-d, A_ub=A.tocsr(), b_ub=b, bounds=(-1.0, 1.0),
                  method="highs")
    if not res.success:
        raise RuntimeError(f"bounded-Lipschitz LP failed: {res.message}")
    return float(-res.fun)


def _hex_net(mesh, spacing):
    """Hexagonal lattice of the given spacing covering the closed domain."""
    lo = mesh.vertices.min(axis=0) - spacing
    hi = mesh.vertices.max(axis=0) + spacing
    dy = spacing * np.sqrt(3.0) / 2.0
    rows = []
    j = 0
    y = lo[1]
    while y <= hi[1]:
        xs = np.arange(lo[0] + 0.5 * spacing * (j % 2), hi[0] + spacing, spacing)
        rows.append(np.column_stack([xs, np.full(len(xs), y)]))
        y += dy
        j += 1
    net = np.concatenate(rows)
    # Keep points within one spacing of the domain so the balls cover it.
    tree = meshmod.vertex_tree(mesh)
    near, _ = tree.query(net, distance_upper_bound=spacing * 1.001)
    keep = np.isfinite(near)
    inside = meshmod.contains(mesh, net[~keep]) if (~keep).any() else None
    mask = keep.copy()
    if inside is not None:
        mask[np.flatnonzero(~keep)[inside]] = True
    return net[mask]


def _greedy_capture(mesh, points, weights, net, eps, K):
    """Best-effort admissible family capturing mass within eps-balls.

    Interior atoms cost 2 of the budget K, boundary atoms 1 (and sit on the
    boundary).  Greedy marginal-gain selection; returns (family, interior
    flags, captured mass fraction).
    """
    bdist = meshmod.boundary_distances(mesh, net)
    candidates = [(p.copy(), True) for p, d in zip(net, bdist) if d > 0.0]
    candidates += [(meshmod.nearest_boundary_point(mesh, p), False)
                   for p, d in zip(net, bdist) if d < eps / 2.0]
    tree = cKDTree(points)
    balls = tree.query_ball_point(np.array([c[0] for c in candidates]), eps)

    family, flags = [], []
    covered = np.zeros(len(points), bool)
    budget = K
    while budget > 0:
        best_gain, best = 0.0, None
        for idx, (point, is_interior) in enumerate(candidates):
            cost = 2 if is_interior else 1
            if cost > budget:
                continue
            sel = np.asarray(balls[idx], dtype=int)
            gain = weights[sel[~covered[sel]]].sum() if len(sel) else 0.0
            # Prefer the cheaper boundary option on (near-)equal gain.
            if gain > best_gain * (1.0 + 1e-12) or (
                    best is not None and gain >= best_gain * (1.0 - 1e-12)
                    and cost < (2 if candidates[best][1] else 1)):
                best_gain, best = gain, idx
        if best is None or best_gain <= 0.0:
            break
        point, is_interior = candidates[best]
        sel = np.asarray(balls[best], dtype=int)
        covered[sel] = True
        family.append(point)
        flags.append(is_interior)
        budget -= 2 if is_interior else 1
    captured = weights[covered].sum()
    return family, flags, captured


def spread_points(mesh, f_values, eps, K):
    """Covering alternative for a normalized density.

    Returns Concentrated (with a witnessing family) when an admissible
    family of weighted count at most K captures 1 - eps of the mass within
    eps-balls, and Spread (points far apart, each holding definite mass,
    with weighted count at least K + 1) otherwise.
    """
    points, weights = density_atoms(mesh, f_values)
    radius = eps / 6.0
    net = _hex_net(mesh, radius)
    mass_floor = eps / len(net)

    if K > 0:
        family, flags, captured = _greedy_capture(mesh, points, weights,
                                                  net, eps, K)
        if captured >= 1.0 - eps:
            return Concentrated(points=np.array(family),
                                interior=np.array(flags, bool))

    tree = cKDTree(points)
    ball_mass = np.array([weights[idx].sum()
                          for idx in tree.query_ball_point(net, radius)])
    heavy = ball_mass >= mass_floor
    cand = net[heavy]
    cand_mass = ball_mass[heavy]

    order = np.lexsort((cand[:, 1], cand[:, 0], -cand_mass))
    chosen = []
    for idx in order:
        p = cand[idx]
        if all(np.linalg.norm(p - q) >= 4.0 * radius for q in chosen):
            chosen.append(p)
    chosen = np.array(chosen) if chosen else np.zeros((0, 2))
    bdist = (meshmod.boundary_distances(mesh, chosen)
             if len(chosen) else np.zeros(0))
    interior = bdist >= radius
    weighted = int(2 * interior.sum() + (~interior).sum())

    if weighted >= K + 1:
        return Spread(points=chosen, interior=interior,
                      mass_floor=mass_floor, radius=radius)
    # The far-apart construction itself stayed within budget, so its balls
    # capture the mass; boundary-tagged members move onto the boundary.
    witness = chosen.copy()
    for i in np.flatnonzero(~interior):
        witness[i] = meshmod.nearest_boundary_point(mesh, witness[i])
    return Concentrated(points=witness, interior=interior)


def project_to_barycenters(mesh, f_values, eps, K):
    """Project a concentrated density onto an admissible atom measure.

    Atoms sit at the capturing family (refined to local centers of mass),
    weighted by disjointified ball masses of radius eps/3 plus equal shares
    of the residual; the result is within eps of the density in the
    bounded-Lipschitz metric.
    """
    outcome = spread_points(mesh, f_values, eps / 3.0, K)
    if isinstance(outcome, Spread):
        raise NotConcentratedError(
            "density is not captured by an admissible atom family")
    family, interior = outcome.points, outcome.interior
    if len(family) == 0:
        raise NotConcentratedError("no capturing atoms found")

    points, weights = density_atoms(mesh, f_values)
    ball = eps / 3.0
    assigned = np.full(len(points), -1)
    for k, p in enumerate(family):          # first ball wins: disjointified
        hit = (np.linalg.norm(points - p, axis=1) <= ball) & (assigned < 0)
        assigned[hit] = k
    t = np.bincount(np.where(assigned < 0, 0, assigned),
                    weights=np.where(assigned < 0, 0.0, weights),
                    minlength=len(family))
    residual = weights[assigned < 0].sum()
    t = t + residual / len(family)
    t /= t.sum()

    # Refine atom positions to the local center of mass of their ball.
    atoms = family.copy()
    for k in range(len(family)):
        sel = assigned == k
        mass = weights[sel].sum()
        if mass > 0:
            atoms[k] = (weights[sel] @ points[sel]) / mass
            if not interior[k]:
                atoms[k] = meshmod.nearest_boundary_point(mesh, atoms[k])
    return BarycenterMeasure(points=atoms, weights=t, interior=interior)


def psi_map(u, basis, I, K, eps):
    """Decompose a low-energy field into (measure, sphere direction, t).

    t = min(1, |Pi_I u|); the sphere entry exists for t > 0 and the measure
    entry for t < 1 (via the barycenter projection of e^u / int e^u).
    """
    model = EnergyFunctional.for_mesh(u.mesh)
    pi = project_pi(u, basis, I)
    norm = float(np.linalg.norm(pi))
    t = min(1.0, norm)
    sphere = pi / norm if t > 0.0 else None
    measure = None
    if t < 1.0:
        density = model.exp_density(u)
        try:
            measure = project_to_barycenters(model.mesh, density, eps, K)
        except NotConcentratedError as exc:
            raise NotInLowSublevelError("u not in a low sublevel") from exc
    return JoinPoint(measure=measure, sphere=sphere, t=t)
