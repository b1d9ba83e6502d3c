"""FastAPI service exposing mesh generation, single solves and convergence
studies over the core solver package."""
from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .assembly import SolverError, solve_poisson, write_solution
from .convergence import (
    ConvergenceReport,
    LevelFailure,
    make_mesh,
    run_convergence,
    to_csv,
    to_svg,
)
from .errors import error_report
from .mesh import MeshError, dump_mesh, load_mesh
from .problems import PROBLEMS, get_problem

app = FastAPI(title="wgpoisson", version=__version__)


class MeshRequest(BaseModel):
    family: Literal["squares", "small-edge"]
    n: int = Field(ge=1)
    eps: Optional[float] = None


class MeshResponse(BaseModel):
    mesh_text: str
    n_cells: int
    n_edges: int
    n_interior_edges: int
    n_boundary_edges: int
    min_edge: float
    max_h: float
    min_edge_over_h: float


class ErrorReportModel(BaseModel):
    h: float
    dofs: int
    err_wgrad: float
    err_grad0: float
    err_l2: float
    err_edge: float
    weak_norm_eh: float
    cg_iters: int


class SolveRequest(BaseModel):
    mesh_text: str
    k: int = Field(ge=1, le=4)
    problem: str


class SolveResponse(BaseModel):
    solution_text: str
    report: ErrorReportModel


class ConvergenceRequest(BaseModel):
    family: Literal["squares", "small-edge"]
    levels: int = Field(ge=1, le=8)
    k: int = Field(ge=1, le=4)
    eps: Optional[float] = None
    problem: str
    base_n: int = Field(default=4, ge=1)


class LevelRowModel(BaseModel):
    level: int
    n: int
    h: float
    dofs: int
    err_wgrad: float
    err_grad0: float
    err_l2: float
    err_edge: float
    cg_iters: int


class ConvergenceResponse(BaseModel):
    problem: str
    k: int
    family: str
    eps: Optional[float]
    rows: list[LevelRowModel]
    slopes: dict[str, float | str]
    csv: str
    svg: str
    completed: bool
    error: Optional[str] = None


def _problem_or_400(name: str):
    try:
        return get_problem(name)
    except KeyError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/problems")
def problems() -> dict:
    return {
        name: spec.description for name, spec in sorted(PROBLEMS.items())
    }


@app.post("/mesh/generate", response_model=MeshResponse)
def mesh_generate(req: MeshRequest) -> MeshResponse:
    try:
        mesh = make_mesh(req.family, req.n, req.eps)
    except (MeshError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None
    min_edge = mesh.min_edge_length()
    max_h = mesh.max_diameter()
    return MeshResponse(
        mesh_text=dump_mesh(mesh),
        n_cells=mesh.n_cells,
        n_edges=mesh.n_edges,
        n_interior_edges=len(mesh.interior_edge_ids),
        n_boundary_edges=len(mesh.boundary_edge_ids),
        min_edge=min_edge,
        max_h=max_h,
        min_edge_over_h=min_edge / max_h,
    )


@app.post("/solve", response_model=SolveResponse)
def solve_endpoint(req: SolveRequest) -> SolveResponse:
    problem = _problem_or_400(req.problem)
    try:
        mesh = load_mesh(req.mesh_text)
    except MeshError as exc:
        raise HTTPException(status_code=400, detail=f"mesh: {exc}") from None
    try:
        field, iters = solve_poisson(mesh, req.k, problem.f, problem.g)
    except SolverError as exc:
        raise HTTPException(status_code=500, detail=f"solver: {exc}") from None
    err = error_report(problem, field)
    return SolveResponse(
        solution_text=write_solution(field),
        report=ErrorReportModel(
            h=err.h, dofs=field.dofmap.total_dofs,
            err_wgrad=err.err_wgrad, err_grad0=err.err_grad0,
            err_l2=err.err_l2, err_edge=err.err_edge,
            weak_norm_eh=err.weak_norm_eh, cg_iters=iters,
        ),
    )


def _convergence_response(report: ConvergenceReport, completed: bool,
                          error: str | None) -> ConvergenceResponse:
    d = report.to_dict()
    return ConvergenceResponse(
        problem=d["problem"], k=d["k"], family=d["family"], eps=d["eps"],
        rows=[LevelRowModel(**r) for r in d["rows"]],
        slopes=d["slopes"],
        csv=to_csv(report), svg=to_svg(report),
        completed=completed, error=error,
    )


@app.post("/convergence", response_model=ConvergenceResponse)
def convergence_endpoint(req: ConvergenceRequest) -> ConvergenceResponse:
    problem = _problem_or_400(req.problem)
    if req.family == "small-edge" and req.eps is None:
        raise HTTPException(status_code=400,
                            detail="the small-edge family requires eps")
    try:
        report = run_convergence(problem, req.k, req.levels, family=req.family,
                                 eps=req.eps, base_n=req.base_n)
    except LevelFailure as exc:
        return _convergence_response(exc.partial, completed=False, error=str(exc))
    except (MeshError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None
    return _convergence_response(report, completed=True, error=None)
