"""Per-cell weak Galerkin operators: L2 projections, the discrete weak
gradient, stiffness and stabilization matrices.

Local DOF ordering: the interior polynomial block first, then one block of
k+1 edge coefficients per edge in the cell's CCW traversal order. Edge
coefficients live on the *global* edge parameterization (lexicographically
smaller vertex index first), so the two cells sharing an edge address
identical coefficients with no flip bookkeeping.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .mesh import Mesh, cell_geometry
from .polybasis import (
    CellBasis,
    EdgeBasis,
    VectorCellBasis,
    cell_quadrature,
    edge_quadrature,
    mass_matrix,
)


class LocalOperatorError(RuntimeError):
    pass


def default_quad_degree(k: int) -> int:
    return 2 * k + 2


@dataclass(frozen=True)
class LocalDofLayout:
    cell: int
    k: int
    n0: int                   # dim P_k(D)
    edge_ids: tuple[int, ...]  # global edge ids, CCW traversal order
    n_loc: int

    def edge_block(self, local_edge: int) -> slice:
        start = self.n0 + local_edge * (self.k + 1)
        return slice(start, start + self.k + 1)


@dataclass(frozen=True)
class LocalOperators:
    layout: LocalDofLayout
    G: np.ndarray       # weak-gradient matrix, (2m, n_loc)
    A: np.ndarray       # stiffness G^T M_vec G
    S: np.ndarray       # stabilization
    M_vec: np.ndarray   # vector mass matrix of [P_{k-1}(D)]^2, (2m, 2m)


def local_dof_layout(mesh: Mesh, cell: int, k: int) -> LocalDofLayout:
    if k < 1:
        raise ValueError("k must be >= 1")
    n0 = (k + 1) * (k + 2) // 2
    edge_ids = tuple(mesh.cell_edges(cell))
    return LocalDofLayout(
        cell=cell, k=k, n0=n0, edge_ids=edge_ids,
        n_loc=n0 + len(edge_ids) * (k + 1),
    )


def _cell_bases(mesh: Mesh, cell: int, k: int):
    geom = cell_geometry(mesh, cell)
    phi = CellBasis(k, geom.centroid, geom.h)
    q = VectorCellBasis(CellBasis(k - 1, geom.centroid, geom.h))
    return geom, phi, q


def _edge_basis(mesh: Mesh, edge_id: int, k: int) -> EdgeBasis:
    p = mesh.edge_points(edge_id)
    return EdgeBasis(k, p[0], p[1])


def _cell_boundary(mesh: Mesh, cell: int, quad_degree: int):
    """Per cell edge: (edge_id, rule, outward unit normal)."""
    loop = mesh.cells[cell]
    out = []
    for le, eid in enumerate(mesh.cell_edges(cell)):
        a = mesh.vertices[loop[le]]
        b = mesh.vertices[loop[(le + 1) % len(loop)]]
        tangent = b - a
        length = float(np.hypot(*tangent))
        normal = np.array([tangent[1], -tangent[0]]) / length  # CCW -> outward
        rule = edge_quadrature(a, b, quad_degree)
        out.append((eid, rule, normal))
    return out


def weak_gradient_matrix(mesh: Mesh, cell: int, k: int,
                         quad_degree: int | None = None) -> np.ndarray:
    """Matrix of v = (v0, vb) -> coefficients of its discrete weak gradient.

    Solves (grad_w v, q)_D = -(v0, div q)_D + <vb, q.n>_{dD} against the
    vector monomial basis of [P_{k-1}(D)]^2.
    """
    G, _, _ = _weak_gradient_parts(mesh, cell, k, quad_degree)
    return G


def _weak_gradient_parts(mesh: Mesh, cell: int, k: int,
                         quad_degree: int | None = None):
    if quad_degree is None:
        quad_degree = default_quad_degree(k)
    layout = local_dof_layout(mesh, cell, k)
    _, phi, q = _cell_bases(mesh, cell, k)
    rule = cell_quadrature(mesh, cell, quad_degree)

    Mq = mass_matrix(q.scalar, rule)
    M_vec = np.kron(np.eye(2), Mq)

    B = np.zeros((q.dim, layout.n_loc))
    # interior columns: -int_D phi_i div(q_j)
    div = q.div(rule.points)                     # (npts, 2m)
    vals = phi.eval(rule.points)                 # (npts, n0)
    B[:, : layout.n0] = -(div * rule.weights[:, None]).T @ vals
    # edge columns: +int_e psi_i q_j.n
    for le, (eid, erule, normal) in enumerate(_cell_boundary(mesh, cell, quad_degree)):
        psi = _edge_basis(mesh, eid, k).eval(erule.points)   # (nq, k+1)
        qn = q.normal_trace(erule.points, normal)            # (nq, 2m)
        B[:, layout.edge_block(le)] += (qn * erule.weights[:, None]).T @ psi

    try:
        cho = cho_factor(Mq)
    except np.linalg.LinAlgError as exc:
        raise LocalOperatorError(f"cell {cell}: mass matrix Cholesky failed") from exc
    m = q.scalar.dim
    G = np.vstack([cho_solve(cho, B[:m]), cho_solve(cho, B[m:])])
    return G, M_vec, layout


def local_stabilization(mesh: Mesh, cell: int, k: int,
                        quad_degree: int | None = None) -> np.ndarray:
    """h_D^{-1} <v0 - vb, u0 - ub>_{dD}; v0 traces are evaluated directly."""
    if quad_degree is None:
        quad_degree = default_quad_degree(k)
    layout = local_dof_layout(mesh, cell, k)
    geom, phi, _ = _cell_bases(mesh, cell, k)
    S = np.zeros((layout.n_loc, layout.n_loc))
    for le, (eid, erule, _normal) in enumerate(_cell_boundary(mesh, cell, quad_degree)):
        E = np.zeros((len(erule.weights), layout.n_loc))
        E[:, : layout.n0] = phi.eval(erule.points)
        E[:, layout.edge_block(le)] = -_edge_basis(mesh, eid, k).eval(erule.points)
        S += E.T @ (erule.weights[:, None] * E)
    S /= geom.h
    return 0.5 * (S + S.T)


def local_operators(mesh: Mesh, cell: int, k: int,
                    quad_degree: int | None = None) -> LocalOperators:
    G, M_vec, layout = _weak_gradient_parts(mesh, cell, k, quad_degree)
    A = G.T @ M_vec @ G
    A = 0.5 * (A + A.T)
    S = local_stabilization(mesh, cell, k, quad_degree)
    return LocalOperators(layout=layout, G=G, A=A, S=S, M_vec=M_vec)


def local_stiffness(mesh: Mesh, cell: int, k: int,
                    quad_degree: int | None = None) -> np.ndarray:
    return local_operators(mesh, cell, k, quad_degree).A


def project_interior(f, mesh: Mesh, cell: int, k: int,
                     quad_degree: int | None = None) -> np.ndarray:
    """L2 projection of a scalar field onto P_k(D), as basis coefficients."""
    if quad_degree is None:
        quad_degree = default_quad_degree(k)
    _, phi, _ = _cell_bases(mesh, cell, k)
    rule = cell_quadrature(mesh, cell, quad_degree)
    M = mass_matrix(phi, rule)
    fv = np.asarray(f(rule.points[:, 0], rule.points[:, 1]), dtype=float)
    rhs = phi.eval(rule.points).T @ (rule.weights * fv)
    return cho_solve(cho_factor(M), rhs)


def project_edge(g, mesh: Mesh, edge_id: int, k: int,
                 quad_degree: int | None = None) -> np.ndarray:
    """L2 projection of a scalar field onto P_k(e), in the global edge basis."""
    if quad_degree is None:
        quad_degree = default_quad_degree(k)
    p = mesh.edge_points(edge_id)
    basis = EdgeBasis(k, p[0], p[1])
    rule = edge_quadrature(p[0], p[1], quad_degree)
    M = mass_matrix(basis, rule)
    gv = np.asarray(g(rule.points[:, 0], rule.points[:, 1]), dtype=float)
    rhs = basis.eval(rule.points).T @ (rule.weights * gv)
    return cho_solve(cho_factor(M), rhs)


def project_gradient(grad, mesh: Mesh, cell: int, degree: int,
                     quad_degree: int | None = None) -> np.ndarray:
    """Componentwise L2 projection of a vector field onto [P_degree(D)]^2.

    Returns stacked coefficients matching VectorCellBasis ordering.
    """
    if quad_degree is None:
        quad_degree = default_quad_degree(degree + 1)
    geom = cell_geometry(mesh, cell)
    scalar = CellBasis(degree, geom.centroid, geom.h)
    rule = cell_quadrature(mesh, cell, quad_degree)
    M = mass_matrix(scalar, rule)
    gx, gy = grad(rule.points[:, 0], rule.points[:, 1])
    V = scalar.eval(rule.points)
    cho = cho_factor(M)
    cx = cho_solve(cho, V.T @ (rule.weights * np.asarray(gx, dtype=float)))
    cy = cho_solve(cho, V.T @ (rule.weights * np.asarray(gy, dtype=float)))
    return np.concatenate([cx, cy])
