"""Polygonal meshes: data structure, file I/O, generators, shape diagnostics.

Cells are stored as counter-clockwise vertex-index loops. The edge set is
derived (and deduplicated) at construction time, so conformity is guaranteed
by shared vertex indices; hanging nodes must already be part of both incident
cell loops.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

# marker for the "no cell on this side" slot of a boundary edge
BOUNDARY = -1

# polygons with area below DEGENERATE_REL * h_D^2 are rejected: shoelace
# arithmetic is pure noise below that
DEGENERATE_REL = 1e-14


class MeshError(ValueError):
    pass


class MeshParseError(MeshError):
    pass


class MeshValidationError(MeshError):
    pass


@dataclass(frozen=True)
class Edge:
    """Undirected mesh edge; v0 < v1 fixes the global orientation."""

    v0: int
    v1: int
    left: int          # cell traversing (v0, v1)
    right: int         # cell traversing (v1, v0), or BOUNDARY

    @property
    def is_boundary(self) -> bool:
        return self.left == BOUNDARY or self.right == BOUNDARY

    @property
    def cells(self) -> tuple[int, ...]:
        return tuple(c for c in (self.left, self.right) if c != BOUNDARY)


@dataclass(frozen=True)
class CellGeometry:
    h: float            # diameter (max pairwise vertex distance)
    area: float
    perimeter: float
    centroid: tuple[float, float]
    rho_proxy: float    # inscribed-disc radius about the centroid / h


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper intersection test for open segments (shared endpoints allowed)."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


class Mesh:
    """Immutable conforming polygonal mesh of an axis-aligned box domain."""

    def __init__(self, vertices, cells):
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshValidationError("vertices must be an (n, 2) array")
        self.cells = [list(map(int, loop)) for loop in cells]
        self._validate_cells()
        self.edges = self._derive_edges()
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        self.domain = (tuple(lo), tuple(hi))
        self._validate_tiling()

    # identity-based hashing: meshes are immutable, caches key on the object
    __hash__ = object.__hash__

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def interior_edge_ids(self) -> list[int]:
        return [i for i, e in enumerate(self.edges) if not e.is_boundary]

    @property
    def boundary_edge_ids(self) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.is_boundary]

    def cell_points(self, cell: int) -> np.ndarray:
        return self.vertices[self.cells[cell]]

    def cell_edges(self, cell: int) -> list[int]:
        """Edge ids of a cell in CCW traversal order from its first vertex."""
        return self._cell_edges[cell]

    def edge_points(self, edge: int) -> np.ndarray:
        e = self.edges[edge]
        return self.vertices[[e.v0, e.v1]]

    def edge_length(self, edge: int) -> float:
        p = self.edge_points(edge)
        return float(np.hypot(*(p[1] - p[0])))

    def min_edge_length(self) -> float:
        return min(self.edge_length(i) for i in range(self.n_edges))

    def max_diameter(self) -> float:
        return max(cell_geometry(self, i).h for i in range(self.n_cells))

    def _validate_cells(self):
        nv = len(self.vertices)
        for ci, loop in enumerate(self.cells):
            if len(loop) < 3:
                raise MeshValidationError(f"cell {ci}: fewer than 3 vertices")
            if any(v < 0 or v >= nv for v in loop):
                raise MeshValidationError(f"cell {ci}: vertex index out of range")
            if len(set(loop)) != len(loop):
                raise MeshValidationError(f"cell {ci}: repeated vertex in loop")
            pts = self.vertices[loop]
            area = _signed_area(pts)
            h = _diameter(pts)
            if area <= DEGENERATE_REL * h * h:
                raise MeshValidationError(
                    f"cell {ci}: non-positive or degenerate area {area:g} "
                    "(clockwise orientation?)"
                )
            m = len(loop)
            for i in range(m):
                for j in range(i + 1, m):
                    if j == i or (i + 1) % m == j or (j + 1) % m == i:
                        continue
                    if _segments_intersect(
                        pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m]
                    ):
                        raise MeshValidationError(f"cell {ci}: self-intersecting polygon")

    def _derive_edges(self) -> list[Edge]:
        # key (min, max) -> [cell traversing (min,max), cell traversing (max,min)]
        sides: dict[tuple[int, int], list[int]] = {}
        for ci, loop in enumerate(self.cells):
            m = len(loop)
            for i in range(m):
                a, b = loop[i], loop[(i + 1) % m]
                key = (min(a, b), max(a, b))
                slot = sides.setdefault(key, [BOUNDARY, BOUNDARY])
                side = 0 if a < b else 1
                if slot[side] != BOUNDARY:
                    raise MeshValidationError(
                        f"edge {key} traversed twice in the same direction "
                        f"(cells {slot[side]} and {ci}): inconsistent orientation"
                    )
                slot[side] = ci
        edges = [Edge(k[0], k[1], s[0], s[1]) for k, s in sorted(sides.items())]
        index = {(e.v0, e.v1): i for i, e in enumerate(edges)}
        self._cell_edges = []
        for loop in self.cells:
            m = len(loop)
            self._cell_edges.append(
                [index[(min(loop[i], loop[(i + 1) % m]), max(loop[i], loop[(i + 1) % m]))]
                 for i in range(m)]
            )
        return edges

    def _validate_tiling(self):
        # cells cannot exceed the bounding box, and the edge complex must be a
        # topological disc; together with the shared-edge orientation check
        # this rules out overlaps and holes
        (x0, y0), (x1, y1) = self.domain
        box = (x1 - x0) * (y1 - y0)
        total = sum(_signed_area(self.cell_points(c)) for c in range(self.n_cells))
        if box <= 0 or total > box * (1.0 + 1e-12):
            raise MeshValidationError(
                f"cells overlap: sum |D| = {total!r} exceeds the bounding box {box!r}"
            )
        if self.n_vertices - self.n_edges + self.n_cells != 1:
            raise MeshValidationError(
                "mesh is not a topological disc (Euler characteristic != 1)"
            )


def _diameter(pts: np.ndarray) -> float:
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d * d).sum(axis=2).max()))


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    t = float(np.dot(p - a, ab) / np.dot(ab, ab))
    t = min(1.0, max(0.0, t))
    return float(np.hypot(*(a + t * ab - p)))


def cell_geometry(mesh: Mesh, cell: int) -> CellGeometry:
    """Diameter, area, perimeter, centroid and star-shapedness proxy of a cell.

    rho_proxy is the radius of the largest centroid-centred disc inside the
    cell divided by the diameter; a lower bound on the optimal star-shapedness
    ratio for cells star-shaped about their centroid.
    """
    pts = mesh.cell_points(cell)
    h = _diameter(pts)
    area = _signed_area(pts)
    if area <= DEGENERATE_REL * h * h:
        raise MeshValidationError(f"cell {cell}: degenerate polygon (area {area:g})")
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    cx = float(((x + xn) * cross).sum() / (6.0 * area))
    cy = float(((y + yn) * cross).sum() / (6.0 * area))
    per = float(np.hypot(xn - x, yn - y).sum())
    c = np.array([cx, cy])
    rho = min(
        _point_segment_distance(c, pts[i], pts[(i + 1) % len(pts)])
        for i in range(len(pts))
    ) / h
    return CellGeometry(h=h, area=float(area), perimeter=per, centroid=(cx, cy),
                        rho_proxy=float(rho))


def gen_uniform_squares(n: int) -> Mesh:
    """n x n uniform square mesh of the unit square."""
    if n < 1:
        raise MeshValidationError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = np.array([(x, y) for y in xs for x in xs])

    def vid(i, j):  # i: x index, j: y index
        return j * (n + 1) + i

    cells = [
        [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
        for j in range(n)
        for i in range(n)
    ]
    return Mesh(verts, cells)


def gen_small_edge_family(n: int, eps: float) -> Mesh:
    """Uniform squares with every interior vertical edge split near its base.

    Each interior vertical edge gains a vertex at distance eps/n above its
    lower endpoint, creating an edge of length eps/n while leaving cell
    shapes (hence h_D and rho) untouched. min|e|/h_D -> 0 as eps -> 0.
    """
    if n < 1:
        raise MeshValidationError("n must be >= 1")
    if not (0.0 < eps < 0.5):
        raise MeshValidationError("eps must lie in (0, 1/2)")
    xs = np.linspace(0.0, 1.0, n + 1)
    verts = [(x, y) for y in xs for x in xs]

    def vid(i, j):
        return j * (n + 1) + i

    # split vertex on the interior vertical edge x = i/n, y in [j/n, (j+1)/n]
    split: dict[tuple[int, int], int] = {}
    for i in range(1, n):
        for j in range(n):
            split[(i, j)] = len(verts)
            verts.append((xs[i], xs[j] + eps / n))

    cells = []
    for j in range(n):
        for i in range(n):
            loop = [vid(i, j), vid(i + 1, j)]
            if i + 1 < n:
                loop.append(split[(i + 1, j)])
            loop += [vid(i + 1, j + 1), vid(i, j + 1)]
            if i > 0:
                loop.append(split[(i, j)])
            cells.append(loop)
    return Mesh(np.array(verts), cells)


def load_mesh(text: str) -> Mesh:
    """Parse the line-oriented mesh format: `v x y` / `c i0 i1 ...` lines."""
    verts: list[tuple[float, float]] = []
    cells: list[list[int]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "v":
                if len(tok) != 3:
                    raise ValueError("expected `v x y`")
                verts.append((float(tok[1]), float(tok[2])))
            elif tok[0] == "c":
                if len(tok) < 4:
                    raise ValueError("cell needs at least 3 vertices")
                cells.append([int(t) for t in tok[1:]])
            else:
                raise ValueError(f"unknown record {tok[0]!r}")
        except (ValueError, IndexError) as exc:
            raise MeshParseError(f"line {ln}: {exc}") from None
    if not cells:
        raise MeshParseError("no cells in mesh file")
    return Mesh(np.array(verts), cells)


def dump_mesh(mesh: Mesh) -> str:
    """Serialize to the mesh file format, vertices first, full precision."""
    out = io.StringIO()
    for x, y in mesh.vertices:
        out.write(f"v {float(x)!r} {float(y)!r}\n")
    for loop in mesh.cells:
        out.write("c " + " ".join(str(v) for v in loop) + "\n")
    return out.getvalue()
