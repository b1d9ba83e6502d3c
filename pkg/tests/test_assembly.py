import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import cho_factor

from wgpoisson.assembly import (
    LinearSystem,
    ReducedSystem,
    apply_dirichlet,
    assemble,
    build_dof_map,
    interpolate,
    read_solution,
    solve,
    solve_poisson,
    write_solution,
    WeakField,
)
from wgpoisson.errors import error_report, l2_error
from wgpoisson.mesh import Mesh, cell_geometry, gen_small_edge_family, gen_uniform_squares
from wgpoisson.polybasis import CellBasis
from wgpoisson.problems import get_problem


def zero(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def one(x, y):
    return np.ones_like(np.asarray(x, dtype=float))


def constant_global_field(mesh, k, value=1.0):
    dm = build_dof_map(mesh, k)
    coeffs = np.zeros(dm.total_dofs)
    for c in range(mesh.n_cells):
        coeffs[dm.cell_ranges[c][0]] = value
    for e in range(mesh.n_edges):
        coeffs[dm.edge_ranges[e][0]] = value
    return WeakField(coeffs=coeffs, k=k, mesh=mesh, dofmap=dm)


def test_dof_counts():
    assert build_dof_map(gen_uniform_squares(1), 1).total_dofs == 11
    assert build_dof_map(gen_uniform_squares(2), 1).total_dofs == 36


def test_boundary_dof_count():
    for mesh in (gen_uniform_squares(3), gen_small_edge_family(2, 0.2)):
        dm = build_dof_map(mesh, 1)
        assert len(dm.boundary_edge_dofs) == 2 * len(mesh.boundary_edge_ids)


def test_zero_load_gives_zero_rhs():
    sys_ = assemble(gen_uniform_squares(2), 1, zero)
    assert np.abs(sys_.rhs).max() == 0.0


def test_assembled_matrix_symmetric():
    sys_ = assemble(gen_small_edge_family(4, 1e-6), 2, one)
    K = sys_.matrix
    asym = sp.coo_matrix(abs(K - K.T)).max() if (K - K.T).nnz else 0.0
    assert asym <= 1e-12 * abs(K).max()


def test_constants_in_kernel_before_elimination():
    mesh = gen_small_edge_family(3, 0.25)
    sys_ = assemble(mesh, 2, zero)
    field = constant_global_field(mesh, 2)
    assert np.abs(sys_.matrix @ field.coeffs).max() < 1e-10


def test_homogeneous_g_leaves_rhs():
    mesh = gen_uniform_squares(2)
    sys_ = assemble(mesh, 1, one)
    red = apply_dirichlet(sys_, zero)
    np.testing.assert_array_equal(red.rhs, sys_.rhs[red.free])


def test_constant_boundary_constant_solution():
    mesh = gen_uniform_squares(3)
    field, _ = solve_poisson(mesh, 1, zero, one)
    # v0 at centroids and vb means must all be 1
    for c in range(mesh.n_cells):
        geom = cell_geometry(mesh, c)
        phi = CellBasis(1, geom.centroid, geom.h)
        val = phi.eval(np.array([geom.centroid])) @ field.interior_coeffs(c)
        assert val[0] == pytest.approx(1.0, abs=1e-10)
    for e in range(mesh.n_edges):
        assert field.edge_coeffs(e)[0] == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("mesh", [
    gen_uniform_squares(4),
    gen_small_edge_family(4, 0.25),
    gen_small_edge_family(4, 1e-6),
])
def test_reduced_matrix_is_spd(mesh):
    sys_ = assemble(mesh, 1, one)
    red = apply_dirichlet(sys_, zero)
    cho_factor(red.matrix.toarray())  # raises if not positive definite


@pytest.mark.parametrize("k,problem", [(1, "poly1"), (2, "poly2"), (3, "poly3")])
def test_patch_test_exactness(k, problem):
    p = get_problem(problem)
    mesh = gen_small_edge_family(4, 1e-6)
    field, _ = solve_poisson(mesh, k, p.f, p.g)
    qh = interpolate(p.u, mesh, k)
    assert np.abs(field.coeffs - qh.coeffs).max() < 1e-9


def test_identity_system_returns_rhs():
    mesh = gen_uniform_squares(1)
    dm = build_dof_map(mesh, 1)
    full = LinearSystem(matrix=sp.identity(dm.total_dofs, format="csr"),
                        rhs=np.zeros(dm.total_dofs), mesh=mesh, k=1, dofmap=dm)
    mask = np.ones(dm.total_dofs, dtype=bool)
    mask[dm.boundary_edge_dofs] = False
    free = np.flatnonzero(mask)
    rhs = np.arange(1.0, len(free) + 1.0)
    red = ReducedSystem(matrix=sp.identity(len(free), format="csr"), rhs=rhs,
                        free=free, boundary_values=np.zeros(len(dm.boundary_edge_dofs)),
                        full=full)
    field, iters = solve(red)
    np.testing.assert_allclose(field.coeffs[free], rhs, atol=1e-14)
    assert iters == 0


def test_residual_small_at_solution():
    p = get_problem("sinsin")
    mesh = gen_small_edge_family(16, 0.25)  # large enough for the CG path
    sys_ = assemble(mesh, 1, p.f)
    red = apply_dirichlet(sys_, p.g)
    field, iters = solve(red)
    r = red.rhs - red.matrix @ field.coeffs[red.free]
    assert np.abs(r).max() <= 1e-10
    assert iters > 0


def test_monotone_refinement():
    p = get_problem("sinsin")
    f4, _ = solve_poisson(gen_uniform_squares(4), 1, p.f, p.g)
    f8, _ = solve_poisson(gen_uniform_squares(8), 1, p.f, p.g)
    assert l2_error(p.u, f8) < l2_error(p.u, f4)


def test_small_edge_iterations_comparable():
    p = get_problem("sinsin")
    _, it_base = solve_poisson(gen_small_edge_family(16, 0.25), 1, p.f, p.g)
    _, it_tiny = solve_poisson(gen_small_edge_family(16, 1e-8), 1, p.f, p.g)
    assert it_tiny <= 2 * max(it_base, 1)


def test_cell_permutation_equivariance():
    p = get_problem("sinsin")
    mesh = gen_uniform_squares(4)
    perm_mesh = Mesh(mesh.vertices, list(reversed(mesh.cells)))
    fa, _ = solve_poisson(mesh, 1, p.f, p.g)
    fb, _ = solve_poisson(perm_mesh, 1, p.f, p.g)
    n = mesh.n_cells
    for c in range(n):
        np.testing.assert_allclose(
            fa.interior_coeffs(c), fb.interior_coeffs(n - 1 - c), atol=1e-11)
    # edges are keyed by vertex pairs, identical in both meshes
    for e in range(mesh.n_edges):
        assert (mesh.edges[e].v0, mesh.edges[e].v1) == (
            perm_mesh.edges[e].v0, perm_mesh.edges[e].v1)
        np.testing.assert_allclose(fa.edge_coeffs(e), fb.edge_coeffs(e), atol=1e-11)


def test_solution_file_roundtrip():
    p = get_problem("poly2")
    mesh = gen_uniform_squares(2)
    field, _ = solve_poisson(mesh, 2, p.f, p.g)
    text = write_solution(field)
    assert text.splitlines()[0] == f"wgfield k=2 dofs={field.dofmap.total_dofs}"
    back = read_solution(text, mesh)
    np.testing.assert_array_equal(back.coeffs, field.coeffs)
