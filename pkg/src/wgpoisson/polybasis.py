"""Scaled polynomial bases on cells and edges, and quadrature on both.

Cell bases are centroid-centred monomials scaled by the cell diameter, which
keeps local Gram matrices well conditioned independently of mesh size. Cell
quadrature fan-triangulates from the centroid and places a conical-product
Gauss rule on each triangle (all weights positive at every exactness degree).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import Mesh, MeshError, cell_geometry


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (n, 2) physical coordinates
    weights: np.ndarray  # (n,), positive, summing to |D| or |e|


class CellBasis:
    """Monomials ((x-cx)/h)^a ((y-cy)/h)^b, a+b <= degree, graded order."""

    def __init__(self, degree: int, center, scale: float):
        if degree < 0:
            raise ValueError("degree must be >= 0")
        self.degree = degree
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.terms = [(d - b, b) for d in range(degree + 1) for b in range(d + 1)]

    @property
    def dim(self) -> int:
        return (self.degree + 1) * (self.degree + 2) // 2

    def _local(self, pts: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(pts) - self.center) / self.scale

    def eval(self, pts) -> np.ndarray:
        loc = self._local(np.asarray(pts, dtype=float))
        out = np.empty((len(loc), len(self.terms)))
        for i, (a, b) in enumerate(self.terms):
            out[:, i] = loc[:, 0] ** a * loc[:, 1] ** b
        return out

    def grad(self, pts) -> np.ndarray:
        """Gradients, shape (npts, dim, 2)."""
        loc = self._local(np.asarray(pts, dtype=float))
        out = np.zeros((len(loc), len(self.terms), 2))
        for i, (a, b) in enumerate(self.terms):
            if a > 0:
                out[:, i, 0] = a / self.scale * loc[:, 0] ** (a - 1) * loc[:, 1] ** b
            if b > 0:
                out[:, i, 1] = b / self.scale * loc[:, 0] ** a * loc[:, 1] ** (b - 1)
        return out


class VectorCellBasis:
    """[P_deg(D)]^2 as two stacked copies of a scalar CellBasis.

    Basis j < m is (phi_j, 0); basis j >= m is (0, phi_{j-m}).
    """

    def __init__(self, scalar: CellBasis):
        self.scalar = scalar

    @property
    def dim(self) -> int:
        return 2 * self.scalar.dim

    def eval(self, pts) -> np.ndarray:
        """Values, shape (npts, 2m, 2)."""
        phi = self.scalar.eval(pts)
        n, m = phi.shape
        out = np.zeros((n, 2 * m, 2))
        out[:, :m, 0] = phi
        out[:, m:, 1] = phi
        return out

    def div(self, pts) -> np.ndarray:
        """Divergences, shape (npts, 2m)."""
        g = self.scalar.grad(pts)
        return np.concatenate([g[:, :, 0], g[:, :, 1]], axis=1)

    def normal_trace(self, pts, normal) -> np.ndarray:
        """q . n at points, shape (npts, 2m), for a constant unit normal."""
        phi = self.scalar.eval(pts)
        return np.concatenate([phi * normal[0], phi * normal[1]], axis=1)


class EdgeBasis:
    """Monomials t^i in the arc-length parameter t in [-1, 1]; t=-1 -> p0."""

    def __init__(self, degree: int, p0, p1):
        if degree < 0:
            raise ValueError("degree must be >= 0")
        self.degree = degree
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.mid = 0.5 * (self.p0 + self.p1)
        self.half = 0.5 * (self.p1 - self.p0)
        self.length = 2.0 * float(np.hypot(*self.half))
        if self.length == 0.0:
            raise QuadratureError("zero-length edge")

    @property
    def dim(self) -> int:
        return self.degree + 1

    def param(self, pts) -> np.ndarray:
        rel = np.atleast_2d(pts) - self.mid
        return rel @ self.half / float(self.half @ self.half)

    def point(self, t) -> np.ndarray:
        return self.mid + np.outer(np.atleast_1d(t), self.half).reshape(-1, 2)

    def eval(self, pts) -> np.ndarray:
        t = self.param(np.asarray(pts, dtype=float))
        return np.vander(t, self.degree + 1, increasing=True)


@lru_cache(maxsize=64)
def _reference_triangle_rule(degree: int):
    """Conical-product Gauss rule on the triangle (0,0),(1,0),(0,1)."""
    nu = (degree + 3) // 2   # Jacobi factor raises the u-degree by one
    nv = (degree + 2) // 2
    xu, wu = np.polynomial.legendre.leggauss(nu)
    xv, wv = np.polynomial.legendre.leggauss(nv)
    u = 0.5 * (xu + 1.0)
    v = 0.5 * (xv + 1.0)
    wu = 0.5 * wu
    wv = 0.5 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv) * (1.0 - U)
    xi = U.ravel()
    eta = (V * (1.0 - U)).ravel()
    return np.column_stack([xi, eta]), W.ravel()


def triangle_quadrature(a, b, c, degree: int) -> QuadratureRule:
    ref_pts, ref_w = _reference_triangle_rule(degree)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    J = np.column_stack([b - a, c - a])
    area2 = abs(np.linalg.det(J))
    pts = a + ref_pts @ J.T
    return QuadratureRule(points=pts, weights=ref_w * area2)


def cell_quadrature(mesh: Mesh, cell: int, exactness_degree: int) -> QuadratureRule:
    """Quadrature on a polygonal cell by fan triangulation from the centroid."""
    geom = cell_geometry(mesh, cell)
    if geom.rho_proxy <= 0.0:
        raise QuadratureError(f"cell {cell}: not star-shaped about its centroid")
    pts = mesh.cell_points(cell)
    c = np.array(geom.centroid)
    chunks = [
        triangle_quadrature(c, pts[i], pts[(i + 1) % len(pts)], exactness_degree)
        for i in range(len(pts))
    ]
    return QuadratureRule(
        points=np.concatenate([q.points for q in chunks]),
        weights=np.concatenate([q.weights for q in chunks]),
    )


def edge_quadrature(p0, p1, exactness_degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on the segment p0-p1."""
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    length = float(np.hypot(*(p1 - p0)))
    if length == 0.0:
        raise QuadratureError("zero-length edge")
    n = max(1, (exactness_degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    mid = 0.5 * (p0 + p1)
    half = 0.5 * (p1 - p0)
    pts = mid + np.outer(x, half)
    return QuadratureRule(points=pts, weights=w * length / 2.0)


def mass_matrix(basis, rule: QuadratureRule) -> np.ndarray:
    """Gram matrix of a basis under a quadrature rule; must come out SPD."""
    V = basis.eval(rule.points)
    M = V.T @ (rule.weights[:, None] * V)
    M = 0.5 * (M + M.T)
    if np.linalg.eigvalsh(M)[0] <= 0.0:
        raise QuadratureError(
            "mass matrix not positive definite (under-integration or degenerate geometry)"
        )
    return M
