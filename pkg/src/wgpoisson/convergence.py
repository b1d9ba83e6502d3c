"""Convergence studies: run a refinement ladder, fit rates, emit CSV/SVG.

The SVG is hand-emitted (axes, per-norm polylines, reference slope triangles
for orders k and k+1) so outputs are deterministic and dependency-free.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, asdict

from .assembly import solve_poisson
from .errors import error_report, fit_rates
from .mesh import Mesh, gen_small_edge_family, gen_uniform_squares
from .problems import ProblemSpec

NORMS = ("err_wgrad", "err_grad0", "err_l2", "err_edge")
CSV_HEADER = "level,h,dofs,err_wgrad,err_grad0,err_l2,err_edge,cg_iters"

FAMILIES = ("squares", "small-edge")


@dataclass(frozen=True)
class LevelRow:
    level: int
    n: int
    h: float
    dofs: int
    err_wgrad: float
    err_grad0: float
    err_l2: float
    err_edge: float
    cg_iters: int


@dataclass
class ConvergenceReport:
    problem: str
    k: int
    family: str
    eps: float | None
    rows: list[LevelRow]
    slopes: dict  # norm -> slope (float) or "exact"

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "k": self.k,
            "family": self.family,
            "eps": self.eps,
            "rows": [asdict(r) for r in self.rows],
            "slopes": self.slopes,
        }


class LevelFailure(RuntimeError):
    """A refinement level failed; carries the partial report."""

    def __init__(self, message: str, partial: ConvergenceReport):
        super().__init__(message)
        self.partial = partial


def make_mesh(family: str, n: int, eps: float | None) -> Mesh:
    if family == "squares":
        return gen_uniform_squares(n)
    if family == "small-edge":
        if eps is None:
            raise ValueError("the small-edge family requires eps")
        return gen_small_edge_family(n, eps)
    raise ValueError(f"unknown mesh family {family!r}; expected one of {FAMILIES}")


def run_level(problem: ProblemSpec, mesh: Mesh, k: int) -> tuple:
    field, iters = solve_poisson(mesh, k, problem.f, problem.g)
    return error_report(problem, field), iters


def run_convergence(problem: ProblemSpec, k: int, levels: int,
                    family: str = "squares", eps: float | None = None,
                    base_n: int = 4) -> ConvergenceReport:
    """Solve on n = base_n * 2^level for level = 0..levels-1 and fit rates."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    report = ConvergenceReport(problem=problem.name, k=k, family=family,
                               eps=eps, rows=[], slopes={})
    for level in range(levels):
        n = base_n * 2 ** level
        try:
            mesh = make_mesh(family, n, eps)
            err, iters = run_level(problem, mesh, k)
        except Exception as exc:
            _fit_slopes(report)
            raise LevelFailure(f"level {level} (n={n}) failed: {exc}", report) from exc
        report.rows.append(LevelRow(
            level=level, n=n, h=err.h, dofs=mesh.n_cells * ((k + 1) * (k + 2) // 2)
            + mesh.n_edges * (k + 1),
            err_wgrad=err.err_wgrad, err_grad0=err.err_grad0,
            err_l2=err.err_l2, err_edge=err.err_edge, cg_iters=iters,
        ))
    _fit_slopes(report)
    return report


def _fit_slopes(report: ConvergenceReport):
    if len(report.rows) < 2:
        return
    for norm in NORMS:
        pts = [(r.h, getattr(r, norm)) for r in report.rows]
        slope, _ = fit_rates(pts)
        report.slopes[norm] = "exact" if slope is None else slope


def to_csv(report: ConvergenceReport) -> str:
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    for r in report.rows:
        out.write(
            f"{r.level},{r.h!r},{r.dofs},{r.err_wgrad!r},{r.err_grad0!r},"
            f"{r.err_l2!r},{r.err_edge!r},{r.cg_iters}\n"
        )
    return out.getvalue()


# --- SVG emission ---------------------------------------------------------

_SVG_W, _SVG_H = 800, 600
_MARGIN = 70
_COLORS = {
    "err_wgrad": "#d62728",
    "err_grad0": "#ff7f0e",
    "err_l2": "#1f77b4",
    "err_edge": "#2ca02c",
}


def to_svg(report: ConvergenceReport) -> str:
    """Log-log rate plot: one polyline per norm plus slope triangles."""
    rows = report.rows
    pts = {n: [(r.h, getattr(r, n)) for r in rows if getattr(r, n) > 0.0]
           for n in NORMS}
    all_h = [h for ps in pts.values() for h, _ in ps]
    all_e = [e for ps in pts.values() for _, e in ps]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
    ]
    if not all_e:
        parts.append('<text x="400" y="300" text-anchor="middle">no data</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    lx0, lx1 = math.log10(min(all_h)), math.log10(max(all_h))
    ly0, ly1 = math.log10(min(all_e)), math.log10(max(all_e))
    lx0, lx1 = lx0 - 0.1, lx1 + 0.1
    ly0, ly1 = ly0 - 0.3, ly1 + 0.3

    def sx(h):
        return _MARGIN + (math.log10(h) - lx0) / (lx1 - lx0) * (_SVG_W - 2 * _MARGIN)

    def sy(e):
        return _SVG_H - _MARGIN - (math.log10(e) - ly0) / (ly1 - ly0) * (_SVG_H - 2 * _MARGIN)

    # axes
    parts.append(
        f'<line x1="{_MARGIN}" y1="{_SVG_H - _MARGIN}" x2="{_SVG_W - _MARGIN}" '
        f'y2="{_SVG_H - _MARGIN}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_SVG_H - _MARGIN}" stroke="black"/>'
    )
    parts.append(
        f'<text x="{_SVG_W // 2}" y="{_SVG_H - 20}" text-anchor="middle" '
        f'font-size="14">h (log)</text>'
    )
    parts.append(
        f'<text x="20" y="{_SVG_H // 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {_SVG_H // 2})">error (log)</text>'
    )
    title = f"{report.problem}, k={report.k}, {report.family}"
    if report.eps is not None:
        title += f", eps={report.eps:g}"
    parts.append(
        f'<text x="{_SVG_W // 2}" y="30" text-anchor="middle" font-size="16">'
        f"{title}</text>"
    )

    for i, norm in enumerate(NORMS):
        ps = pts[norm]
        if not ps:
            continue
        poly = " ".join(f"{sx(h):.2f},{sy(e):.2f}" for h, e in ps)
        color = _COLORS[norm]
        parts.append(
            f'<polyline points="{poly}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        for h, e in ps:
            parts.append(f'<circle cx="{sx(h):.2f}" cy="{sy(e):.2f}" r="3" fill="{color}"/>')
        slope = report.slopes.get(norm)
        label = norm if slope is None else (
            f"{norm} (exact)" if slope == "exact" else f"{norm} (rate {slope:.2f})"
        )
        parts.append(
            f'<text x="{_SVG_W - _MARGIN - 200}" y="{_MARGIN + 18 * i}" '
            f'font-size="13" fill="{color}">{label}</text>'
        )

    # reference slope triangles for orders k and k+1, anchored bottom-left
    h_lo, h_hi = min(all_h), min(all_h) * 2.0
    base = min(all_e)
    for j, order in enumerate((report.k, report.k + 1)):
        e_lo = base * (2.0 ** j)
        e_hi = e_lo * (h_hi / h_lo) ** order
        x0, x1 = sx(h_lo), sx(h_hi)
        y0, y1 = sy(e_lo), sy(e_hi)
        parts.append(
            f'<polygon points="{x0:.2f},{y0:.2f} {x1:.2f},{y0:.2f} {x1:.2f},{y1:.2f}" '
            f'fill="none" stroke="gray" stroke-dasharray="4 3"/>'
        )
        parts.append(
            f'<text x="{x1 + 5:.2f}" y="{(y0 + y1) / 2:.2f}" font-size="12" '
            f'fill="gray">{order}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
