"""Error norms of the discretization and convergence-rate fitting.

Four error measures are reported for a discrete field against an exact
solution: the broken L2 error of the weak gradient, the broken L2 error of
the interior-polynomial gradient, the L2 error of the interior polynomial,
and the h_e-weighted edge error of the edge unknown. The broken norm is the
square root of the sum of squared cell-wise L2 norms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import WeakField, cached_local_operators, interpolate
from .mesh import Mesh, cell_geometry
from .polybasis import CellBasis, VectorCellBasis, cell_quadrature, edge_quadrature
from .wgcore import _edge_basis

# errors are integrated more accurately than the scheme assembles, so the
# smooth exact solution cannot pollute measured rates
ERROR_QUAD_EXTRA = 4


def _error_quad_degree(k: int) -> int:
    return 2 * k + ERROR_QUAD_EXTRA


@dataclass(frozen=True)
class ErrorReport:
    h: float
    err_wgrad: float      # ||grad u - grad_w u_h||_h
    err_grad0: float      # ||grad u - grad u_0||_h
    err_l2: float         # ||u - u_0||_{L2}
    err_edge: float       # h_e-weighted edge error of u_b
    weak_norm_eh: float   # |Q_h u - u_h|_{k-1,w}


def weak_norm(field: WeakField) -> float:
    """|v|_{k-1,w}: square root of sum_D v^T (A + S) v."""
    total = 0.0
    for cell in range(field.mesh.n_cells):
        ops = cached_local_operators(field.mesh, cell, field.k)
        v = field.local_dofs(cell)
        total += float(v @ (ops.A + ops.S) @ v)
    return math.sqrt(max(total, 0.0))


def weak_norm_by_quadrature(field: WeakField) -> float:
    """|v|_{k-1,w} by direct quadrature of the defining integrals.

    Independent of the matrix-energy path in weak_norm: the weak-gradient
    field and the boundary jump are evaluated pointwise and integrated.
    """
    mesh, k = field.mesh, field.k
    total = 0.0
    for cell in range(mesh.n_cells):
        ops = cached_local_operators(mesh, cell, k)
        v = field.local_dofs(cell)
        geom = cell_geometry(mesh, cell)
        qb = VectorCellBasis(CellBasis(k - 1, geom.centroid, geom.h))
        gw = ops.G @ v
        rule = cell_quadrature(mesh, cell, _error_quad_degree(k))
        vals = np.einsum("pjd,j->pd", qb.eval(rule.points), gw)   # (npts, 2)
        total += float(rule.weights @ (vals ** 2).sum(axis=1))
        phi = CellBasis(k, geom.centroid, geom.h)
        loop = mesh.cells[cell]
        for le, eid in enumerate(mesh.cell_edges(cell)):
            a = mesh.vertices[loop[le]]
            b = mesh.vertices[loop[(le + 1) % len(loop)]]
            erule = edge_quadrature(a, b, _error_quad_degree(k))
            v0 = phi.eval(erule.points) @ field.interior_coeffs(cell)
            vb = _edge_basis(mesh, eid, k).eval(erule.points) @ field.edge_coeffs(eid)
            total += float(erule.weights @ (v0 - vb) ** 2) / geom.h
    return math.sqrt(max(total, 0.0))


def gradient_errors(exact_grad, field: WeakField) -> tuple[float, float]:
    """(||grad u - grad_w u_h||_h, ||grad u - grad u_0||_h)."""
    mesh, k = field.mesh, field.k
    sq_w = 0.0
    sq_0 = 0.0
    for cell in range(mesh.n_cells):
        ops = cached_local_operators(mesh, cell, k)
        geom = cell_geometry(mesh, cell)
        rule = cell_quadrature(mesh, cell, _error_quad_degree(k))
        gx, gy = exact_grad(rule.points[:, 0], rule.points[:, 1])
        exact = np.column_stack([
            np.broadcast_to(gx, rule.points[:, 0].shape),
            np.broadcast_to(gy, rule.points[:, 0].shape),
        ]).astype(float)
        qb = VectorCellBasis(CellBasis(k - 1, geom.centroid, geom.h))
        gw = np.einsum("pjd,j->pd", qb.eval(rule.points),
                       ops.G @ field.local_dofs(cell))
        sq_w += float(rule.weights @ ((exact - gw) ** 2).sum(axis=1))
        phi = CellBasis(k, geom.centroid, geom.h)
        g0 = np.einsum("pid,i->pd", phi.grad(rule.points), field.interior_coeffs(cell))
        sq_0 += float(rule.weights @ ((exact - g0) ** 2).sum(axis=1))
    return math.sqrt(sq_w), math.sqrt(sq_0)


def l2_error(exact, field: WeakField) -> float:
    """||u - u_0||_{L2(Omega)} by cell quadrature."""
    mesh, k = field.mesh, field.k
    total = 0.0
    for cell in range(mesh.n_cells):
        geom = cell_geometry(mesh, cell)
        phi = CellBasis(k, geom.centroid, geom.h)
        rule = cell_quadrature(mesh, cell, _error_quad_degree(k))
        u0 = phi.eval(rule.points) @ field.interior_coeffs(cell)
        ue = np.asarray(exact(rule.points[:, 0], rule.points[:, 1]), dtype=float)
        total += float(rule.weights @ (ue - u0) ** 2)
    return math.sqrt(total)


def edge_error(exact, field: WeakField) -> float:
    """sqrt(sum_e h_e int_e |u - u_b|^2); h_e is the edge length."""
    mesh, k = field.mesh, field.k
    total = 0.0
    for eid in range(mesh.n_edges):
        p = mesh.edge_points(eid)
        h_e = float(np.hypot(*(p[1] - p[0])))
        erule = edge_quadrature(p[0], p[1], _error_quad_degree(k))
        ub = _edge_basis(mesh, eid, k).eval(erule.points) @ field.edge_coeffs(eid)
        ue = np.asarray(exact(erule.points[:, 0], erule.points[:, 1]), dtype=float)
        total += h_e * float(erule.weights @ (ue - ub) ** 2)
    return math.sqrt(total)


def error_report(problem, field: WeakField) -> ErrorReport:
    """All four error norms plus the weak norm of e_h = u_h - Q_h u."""
    ew, e0 = gradient_errors(problem.grad_u, field)
    qh = interpolate(problem.u, field.mesh, field.k,
                     quad_degree=_error_quad_degree(field.k))
    eh = WeakField(coeffs=field.coeffs - qh.coeffs, k=field.k,
                   mesh=field.mesh, dofmap=field.dofmap)
    return ErrorReport(
        h=field.mesh.max_diameter(),
        err_wgrad=ew,
        err_grad0=e0,
        err_l2=l2_error(problem.u, field),
        err_edge=edge_error(problem.u, field),
        weak_norm_eh=weak_norm(eh),
    )


def fit_rates(levels: list[tuple[float, float]]):
    """Least-squares slope of log(error) vs log(h), plus pairwise rates.

    Returns (slope, pairwise) where slope is None (reported "exact") if any
    error vanishes. Requires >= 2 levels with strictly decreasing h.
    """
    if len(levels) < 2:
        raise ValueError("need at least 2 refinement levels")
    hs = [h for h, _ in levels]
    if any(hs[i + 1] >= hs[i] for i in range(len(hs) - 1)):
        raise ValueError("h must be strictly decreasing")
    errs = [e for _, e in levels]
    if any(e == 0.0 for e in errs):
        return None, []
    logs_h = np.log(hs)
    logs_e = np.log(errs)
    slope = float(np.polyfit(logs_h, logs_e, 1)[0])
    pairwise = [
        float((logs_e[i + 1] - logs_e[i]) / (logs_h[i + 1] - logs_h[i]))
        for i in range(len(levels) - 1)
    ]
    return slope, pairwise
