import math

import numpy as np
import pytest

from wgpoisson.assembly import WeakField, build_dof_map, interpolate, solve_poisson
from wgpoisson.errors import (
    edge_error,
    error_report,
    fit_rates,
    gradient_errors,
    l2_error,
    weak_norm,
    weak_norm_by_quadrature,
)
from wgpoisson.mesh import gen_small_edge_family, gen_uniform_squares
from wgpoisson.problems import get_problem


def make_field(mesh, k, coeffs):
    dm = build_dof_map(mesh, k)
    assert len(coeffs) == dm.total_dofs
    return WeakField(coeffs=np.asarray(coeffs, dtype=float), k=k,
                     mesh=mesh, dofmap=dm)


def test_weak_norm_of_constant_is_zero():
    mesh = gen_uniform_squares(2)
    dm = build_dof_map(mesh, 1)
    coeffs = np.zeros(dm.total_dofs)
    for c in range(mesh.n_cells):
        coeffs[dm.cell_ranges[c][0]] = 3.0
    for e in range(mesh.n_edges):
        coeffs[dm.edge_ranges[e][0]] = 3.0
    f = make_field(mesh, 1, coeffs)
    # the norm is the square root of a quadratic form, so round-off in the
    # energy (~1e-15) surfaces as ~1e-7 in the norm itself
    assert weak_norm(f) ** 2 < 1e-13
    assert weak_norm_by_quadrature(f) ** 2 < 1e-13


def test_weak_norm_pure_jump_energy():
    # unit square, k=1: v0 = 1 on the cell, vb = 0 on all edges.
    # The weak gradient of this v is zero, so the energy is pure
    # stabilization: h_D^{-1} * perimeter = 4 / sqrt(2) = 2 sqrt(2),
    # hence the norm itself is sqrt(2 sqrt(2)).
    mesh = gen_uniform_squares(1)
    dm = build_dof_map(mesh, 1)
    coeffs = np.zeros(dm.total_dofs)
    coeffs[dm.cell_ranges[0][0]] = 1.0
    f = make_field(mesh, 1, coeffs)
    assert weak_norm(f) ** 2 == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_weak_norm_two_routes_agree(k):
    mesh = gen_small_edge_family(2, 0.25)
    dm = build_dof_map(mesh, k)
    rng = np.random.default_rng(42)
    f = make_field(mesh, k, rng.standard_normal(dm.total_dofs))
    a = weak_norm(f)
    b = weak_norm_by_quadrature(f)
    assert a == pytest.approx(b, rel=1e-10)


def test_gradient_errors_of_interpolant_poly():
    # u in P_k: Q_h u has exact gradients, both errors vanish
    p = get_problem("poly2")
    mesh = gen_small_edge_family(3, 0.25)
    qh = interpolate(p.u, mesh, 2)
    ew, e0 = gradient_errors(p.grad_u, qh)
    assert ew < 1e-12 and e0 < 1e-12
    assert l2_error(p.u, qh) < 1e-13
    assert edge_error(p.u, qh) < 1e-13


def test_error_report_patch_solution_exact():
    p = get_problem("poly1")
    mesh = gen_small_edge_family(4, 1e-6)
    field, _ = solve_poisson(mesh, 1, p.f, p.g)
    rep = error_report(p, field)
    assert rep.h == pytest.approx(math.sqrt(2.0) / 4, rel=1e-13)
    for v in (rep.err_wgrad, rep.err_grad0, rep.err_l2, rep.err_edge,
              rep.weak_norm_eh):
        assert v < 1e-11


def test_wgrad_triangle_inequality():
    # ||grad u - grad_w u_h|| <= ||grad u - Q grad u||_proj-route + |e_h|_w
    # with the projection part measured through the interpolant
    p = get_problem("sinsin")
    mesh = gen_uniform_squares(8)
    field, _ = solve_poisson(mesh, 1, p.f, p.g)
    rep = error_report(p, field)
    qh = interpolate(p.u, mesh, 1)
    proj_w, _ = gradient_errors(p.grad_u, qh)
    assert rep.err_wgrad <= proj_w + rep.weak_norm_eh + 1e-12


def test_wgrad_lower_bound_near_projection():
    # the solver cannot beat the best approximation by much, and should be
    # within a modest factor of it
    p = get_problem("sinsin")
    mesh = gen_uniform_squares(8)
    field, _ = solve_poisson(mesh, 1, p.f, p.g)
    rep = error_report(p, field)
    qh = interpolate(p.u, mesh, 1)
    proj_w, _ = gradient_errors(p.grad_u, qh)
    assert rep.err_wgrad <= 10.0 * proj_w
    assert rep.err_wgrad >= 0.1 * proj_w


def test_tiny_edges_contribute_negligibly_to_edge_error():
    p = get_problem("sinsin")
    mesh = gen_small_edge_family(4, 1e-8)
    field, _ = solve_poisson(mesh, 1, p.f, p.g)
    full = edge_error(p.u, field)

    # recompute while skipping edges shorter than 1e-6
    mesh_, k = field.mesh, field.k
    from wgpoisson.polybasis import edge_quadrature
    from wgpoisson.wgcore import _edge_basis
    total = 0.0
    for eid in range(mesh_.n_edges):
        pts = mesh_.edge_points(eid)
        h_e = float(np.hypot(*(pts[1] - pts[0])))
        if h_e < 1e-6:
            continue
        er = edge_quadrature(pts[0], pts[1], 2 * k + 4)
        ub = _edge_basis(mesh_, eid, k).eval(er.points) @ field.edge_coeffs(eid)
        ue = np.asarray(p.u(er.points[:, 0], er.points[:, 1]), dtype=float)
        total += h_e * float(er.weights @ (ue - ub) ** 2)
    trimmed = math.sqrt(total)
    assert abs(full - trimmed) < 1e-12 * full


def test_refinement_halves_errors_at_expected_rates():
    p = get_problem("sinsin")
    f8, _ = solve_poisson(gen_uniform_squares(8), 1, p.f, p.g)
    f16, _ = solve_poisson(gen_uniform_squares(16), 1, p.f, p.g)
    r8, r16 = error_report(p, f8), error_report(p, f16)
    assert 1.7 < r8.err_wgrad / r16.err_wgrad < 2.3       # order 1
    assert 3.4 < r8.err_l2 / r16.err_l2 < 4.6             # order 2


def test_fit_rates_two_levels():
    slope, pairwise = fit_rates([(1.0, 1.0), (0.5, 0.5)])
    assert slope == pytest.approx(1.0, abs=1e-12)
    assert pairwise == [pytest.approx(1.0, abs=1e-12)]


def test_fit_rates_exact_slope_two():
    levels = [(2.0 ** -i, 3.0 * 4.0 ** -i) for i in range(5)]
    slope, pairwise = fit_rates(levels)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert all(r == pytest.approx(2.0, abs=1e-12) for r in pairwise)


def test_fit_rates_zero_error_reported_exact():
    slope, pairwise = fit_rates([(1.0, 1e-15), (0.5, 0.0)])
    assert slope is None and pairwise == []


def test_fit_rates_input_validation():
    with pytest.raises(ValueError):
        fit_rates([(1.0, 1.0)])
    with pytest.raises(ValueError):
        fit_rates([(0.5, 1.0), (1.0, 0.5)])
