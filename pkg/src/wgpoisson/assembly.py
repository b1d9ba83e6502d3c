"""Global DOF map, sparse assembly of the stabilized bilinear form, Dirichlet
elimination, and the SPD solve.

Numbering is deterministic: all interior blocks in cell order, then all edge
blocks in global edge order. Interior edges are shared by their two cells, so
edge coefficients are single-valued by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import cho_factor, cho_solve

from .mesh import Mesh
from .wgcore import (
    LocalOperators,
    local_dof_layout,
    local_operators,
    project_edge,
    project_interior,
    default_quad_degree,
)
from .polybasis import cell_quadrature, CellBasis
from .mesh import cell_geometry

DENSE_SOLVE_CUTOFF = 2000
CG_RTOL = 1e-11


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class DofMap:
    k: int
    cell_ranges: tuple[tuple[int, int], ...]
    edge_ranges: tuple[tuple[int, int], ...]
    total_dofs: int
    boundary_edge_dofs: np.ndarray  # sorted

    def cell_dofs(self, mesh: Mesh, cell: int) -> np.ndarray:
        """Global indices in LocalDofLayout order for one cell."""
        s, e = self.cell_ranges[cell]
        idx = list(range(s, e))
        for eid in mesh.cell_edges(cell):
            es, ee = self.edge_ranges[eid]
            idx.extend(range(es, ee))
        return np.array(idx, dtype=int)


def build_dof_map(mesh: Mesh, k: int) -> DofMap:
    if k < 1:
        raise ValueError("k must be >= 1")
    n0 = (k + 1) * (k + 2) // 2
    cell_ranges = tuple((c * n0, (c + 1) * n0) for c in range(mesh.n_cells))
    base = mesh.n_cells * n0
    edge_ranges = tuple(
        (base + e * (k + 1), base + (e + 1) * (k + 1)) for e in range(mesh.n_edges)
    )
    bnd = np.concatenate(
        [np.arange(*edge_ranges[e]) for e in mesh.boundary_edge_ids]
    ) if mesh.boundary_edge_ids else np.array([], dtype=int)
    return DofMap(
        k=k,
        cell_ranges=cell_ranges,
        edge_ranges=edge_ranges,
        total_dofs=base + mesh.n_edges * (k + 1),
        boundary_edge_dofs=np.sort(bnd),
    )


@dataclass
class WeakField:
    """Coefficient vector over a DofMap representing (v0, vb) in V_h."""

    coeffs: np.ndarray
    k: int
    mesh: Mesh
    dofmap: DofMap

    def __post_init__(self):
        if len(self.coeffs) != self.dofmap.total_dofs:
            raise ValueError("coefficient length does not match the DofMap")

    def local_dofs(self, cell: int) -> np.ndarray:
        return self.coeffs[self.dofmap.cell_dofs(self.mesh, cell)]

    def interior_coeffs(self, cell: int) -> np.ndarray:
        s, e = self.dofmap.cell_ranges[cell]
        return self.coeffs[s:e]

    def edge_coeffs(self, edge: int) -> np.ndarray:
        s, e = self.dofmap.edge_ranges[edge]
        return self.coeffs[s:e]


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    mesh: Mesh
    k: int
    dofmap: DofMap


@dataclass
class ReducedSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray            # indices of retained DOFs
    boundary_values: np.ndarray  # values at dofmap.boundary_edge_dofs
    full: LinearSystem


# Local operators are pure functions of (mesh, cell, k); meshes are immutable
# and hashed by identity, so a cache lets assembly and error evaluation share.
@lru_cache(maxsize=16384)
def cached_local_operators(mesh: Mesh, cell: int, k: int) -> LocalOperators:
    return local_operators(mesh, cell, k)


def assemble(mesh: Mesh, k: int, f, dofmap: DofMap | None = None) -> LinearSystem:
    """Assemble a_s(u, v) = a_h + s_h and the load (f, v0) over V_h."""
    if dofmap is None:
        dofmap = build_dof_map(mesh, k)
    rows, cols, vals = [], [], []
    rhs = np.zeros(dofmap.total_dofs)
    qdeg = default_quad_degree(k)
    for cell in range(mesh.n_cells):
        try:
            ops = cached_local_operators(mesh, cell, k)
        except Exception as exc:
            raise SolverError(f"local operators failed on cell {cell}: {exc}") from exc
        gdofs = dofmap.cell_dofs(mesh, cell)
        K = ops.A + ops.S
        rr, cc = np.meshgrid(gdofs, gdofs, indexing="ij")
        rows.append(rr.ravel())
        cols.append(cc.ravel())
        vals.append(K.ravel())
        # load hits interior DOFs only: the right side is (f, v0)
        geom = cell_geometry(mesh, cell)
        phi = CellBasis(k, geom.centroid, geom.h)
        rule = cell_quadrature(mesh, cell, qdeg)
        fv = np.asarray(f(rule.points[:, 0], rule.points[:, 1]), dtype=float)
        s, e = dofmap.cell_ranges[cell]
        rhs[s:e] += phi.eval(rule.points).T @ (rule.weights * fv)
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dofmap.total_dofs, dofmap.total_dofs),
    ).tocsr()
    return LinearSystem(matrix=matrix, rhs=rhs, mesh=mesh, k=k, dofmap=dofmap)


def apply_dirichlet(system: LinearSystem, g) -> ReducedSystem:
    """Impose u_b = Q^b_k g on boundary edges and eliminate those DOFs."""
    dofmap = system.dofmap
    mesh = system.mesh
    values = np.zeros(dofmap.total_dofs)
    for eid in mesh.boundary_edge_ids:
        s, e = dofmap.edge_ranges[eid]
        values[s:e] = project_edge(g, mesh, eid, system.k)
    bnd = dofmap.boundary_edge_dofs
    mask = np.ones(dofmap.total_dofs, dtype=bool)
    mask[bnd] = False
    free = np.flatnonzero(mask)
    K = system.matrix
    rhs = system.rhs[free] - K[free][:, bnd] @ values[bnd]
    return ReducedSystem(
        matrix=K[free][:, free].tocsr(),
        rhs=rhs,
        free=free,
        boundary_values=values[bnd],
        full=system,
    )


def solve(reduced: ReducedSystem) -> tuple[WeakField, int]:
    """Solve the reduced SPD system; returns the field and CG iteration count.

    Dense Cholesky below DENSE_SOLVE_CUTOFF DOFs (iteration count 0),
    Jacobi-preconditioned conjugate gradients above.
    """
    K = reduced.matrix
    b = reduced.rhs
    n = K.shape[0]
    iters = 0
    if n == 0:
        x = np.zeros(0)
    elif n < DENSE_SOLVE_CUTOFF:
        try:
            x = cho_solve(cho_factor(K.toarray()), b)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"dense Cholesky failed: {exc}") from exc
    else:
        diag = K.diagonal()
        if np.any(diag <= 0):
            raise SolverError("non-positive diagonal entry; system not SPD")
        M = sp.diags(1.0 / diag)
        count = [0]

        def cb(_xk):
            count[0] += 1

        maxiter = int(20 * math.sqrt(n))
        x, info = spla.cg(K, b, rtol=CG_RTOL, atol=0.0, maxiter=maxiter, M=M,
                          callback=cb)
        iters = count[0]
        if info != 0:
            res = float(np.linalg.norm(b - K @ x) / np.linalg.norm(b))
            raise SolverError(
                f"CG failed to converge in {maxiter} iterations "
                f"(relative residual {res:.3e})"
            )
    full = reduced.full
    coeffs = np.zeros(full.dofmap.total_dofs)
    coeffs[reduced.free] = x
    coeffs[full.dofmap.boundary_edge_dofs] = reduced.boundary_values
    return WeakField(coeffs=coeffs, k=full.k, mesh=full.mesh, dofmap=full.dofmap), iters


def solve_poisson(mesh: Mesh, k: int, f, g) -> tuple[WeakField, int]:
    """Assemble, impose Dirichlet data and solve in one call."""
    system = assemble(mesh, k, f)
    return solve(apply_dirichlet(system, g))


def interpolate(u, mesh: Mesh, k: int, quad_degree: int | None = None) -> WeakField:
    """The projection Q_h u = (Q^0_k u per cell, Q^b_k u per edge) as a field."""
    dofmap = build_dof_map(mesh, k)
    coeffs = np.zeros(dofmap.total_dofs)
    for cell in range(mesh.n_cells):
        s, e = dofmap.cell_ranges[cell]
        coeffs[s:e] = project_interior(u, mesh, cell, k, quad_degree)
    for eid in range(mesh.n_edges):
        s, e = dofmap.edge_ranges[eid]
        coeffs[s:e] = project_edge(u, mesh, eid, k, quad_degree)
    return WeakField(coeffs=coeffs, k=k, mesh=mesh, dofmap=dofmap)


def write_solution(field: WeakField) -> str:
    """Serialize a WeakField: header line, then one coefficient per line."""
    lines = [f"wgfield k={field.k} dofs={field.dofmap.total_dofs}"]
    lines.extend(repr(float(c)) for c in field.coeffs)
    return "\n".join(lines) + "\n"


def read_solution(text: str, mesh: Mesh) -> WeakField:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "wgfield":
        raise ValueError("not a wgfield solution file")
    k = int(head[1].split("=")[1])
    n = int(head[2].split("=")[1])
    coeffs = np.array([float(ln) for ln in lines[1:]])
    if len(coeffs) != n:
        raise ValueError(f"expected {n} coefficients, found {len(coeffs)}")
    return WeakField(coeffs=coeffs, k=k, mesh=mesh, dofmap=build_dof_map(mesh, k))
