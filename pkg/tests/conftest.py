import numpy as np
import pytest

from wgpoisson.mesh import Mesh, gen_uniform_squares
from wgpoisson.wgcore import local_dof_layout, project_edge, project_interior


@pytest.fixture
def unit_square_mesh():
    return gen_uniform_squares(1)


def scaled_mesh(mesh: Mesh, s: float) -> Mesh:
    return Mesh(mesh.vertices * s, mesh.cells)


def constant_local_field(mesh, cell, k, value=1.0):
    """Local DOF vector of the constant weak function (v0 = vb = value)."""
    lay = local_dof_layout(mesh, cell, k)
    v = np.zeros(lay.n_loc)
    v[0] = value
    for le in range(len(lay.edge_ids)):
        v[lay.edge_block(le).start] = value
    return v


def interpolate_local(f, mesh, cell, k, quad_degree=None):
    """Local DOF vector of (Q^0_k f, Q^b_k f per edge) on one cell."""
    lay = local_dof_layout(mesh, cell, k)
    v = np.zeros(lay.n_loc)
    v[: lay.n0] = project_interior(f, mesh, cell, k, quad_degree)
    for le, eid in enumerate(lay.edge_ids):
        v[lay.edge_block(le)] = project_edge(f, mesh, eid, k, quad_degree)
    return v
