"""Command-line front end: a thin client over the HTTP service.

By default requests are dispatched to the FastAPI app in-process; pass
--server URL to talk to a running instance instead. All file writes are
atomic (temp file + rename).

Exit codes: 0 success, 2 usage, 3 validation, 4 solver failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4


class _Client:
    """POST/GET against either a live server or the in-process app."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict):
        return self._client.post(path, json=payload)

    def get(self, path: str):
        return self._client.get(path)


def atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".wgpoisson-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fail(resp) -> int:
    try:
        detail = resp.json().get("detail", resp.text)
    except Exception:
        detail = resp.text
    print(f"error: {detail}", file=sys.stderr)
    if resp.status_code >= 500:
        return EXIT_SOLVER
    return EXIT_VALIDATION


def cmd_mesh(args) -> int:
    client = _Client(args.server)
    resp = client.post("/mesh/generate", {
        "family": args.family, "n": args.n, "eps": args.eps,
    })
    if resp.status_code != 200:
        return _fail(resp)
    data = resp.json()
    atomic_write(args.out, data["mesh_text"])
    print(f"cells: {data['n_cells']}")
    print(f"edges: {data['n_edges']} "
          f"({data['n_interior_edges']} interior, {data['n_boundary_edges']} boundary)")
    print(f"min edge: {data['min_edge']:.6g}")
    print(f"min-edge/h: {data['min_edge_over_h']:.6g}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        with open(args.mesh) as fh:
            mesh_text = fh.read()
    except OSError as exc:
        print(f"error: cannot read mesh file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    client = _Client(args.server)
    resp = client.post("/solve", {
        "mesh_text": mesh_text, "k": args.k, "problem": args.problem,
    })
    if resp.status_code != 200:
        return _fail(resp)
    data = resp.json()
    atomic_write(args.out + ".sol", data["solution_text"])
    atomic_write(args.out + ".json",
                 json.dumps(data["report"], indent=2, sort_keys=True) + "\n")
    r = data["report"]
    print(f"dofs: {r['dofs']}  h: {r['h']:.6g}  cg_iters: {r['cg_iters']}")
    for key in ("err_wgrad", "err_grad0", "err_l2", "err_edge"):
        print(f"{key}: {r[key]:.6e}")
    print(f"wrote {args.out}.sol and {args.out}.json")
    return EXIT_OK


def cmd_convergence(args) -> int:
    client = _Client(args.server)
    resp = client.post("/convergence", {
        "family": args.family, "levels": args.levels, "k": args.k,
        "eps": args.eps, "problem": args.problem,
    })
    if resp.status_code != 200:
        return _fail(resp)
    data = resp.json()
    atomic_write(args.out + ".csv", data["csv"])
    atomic_write(args.out + ".svg", data["svg"])
    report = {k: data[k] for k in ("problem", "k", "family", "eps", "rows", "slopes")}
    atomic_write(args.out + ".json",
                 json.dumps(report, indent=2, sort_keys=True) + "\n")
    for row in data["rows"]:
        print(f"level {row['level']}: n={row['n']} h={row['h']:.5g} "
              f"dofs={row['dofs']} err_l2={row['err_l2']:.4e} "
              f"cg_iters={row['cg_iters']}")
    for norm, slope in data["slopes"].items():
        shown = slope if isinstance(slope, str) else f"{slope:.3f}"
        print(f"rate {norm}: {shown}")
    print(f"wrote {args.out}.csv, {args.out}.svg, {args.out}.json")
    if not data["completed"]:
        print(f"error: {data['error']} (partial results written)", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("wgpoisson.service:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wgpoisson",
        description="Weak Galerkin Poisson solver on polygonal meshes",
    )
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="mesh utilities")
    mesh_sub = mesh.add_subparsers(dest="mesh_command", required=True)
    gen = mesh_sub.add_parser("gen", help="generate a mesh file")
    gen.add_argument("--family", required=True, choices=["squares", "small-edge"])
    gen.add_argument("--n", type=int, required=True, help="subdivisions per side")
    gen.add_argument("--eps", type=float, default=None,
                     help="small-edge fraction in (0, 1/2)")
    gen.add_argument("--out", required=True, help="output mesh file")
    gen.set_defaults(func=cmd_mesh)

    slv = sub.add_parser("solve", help="solve one problem on a mesh file")
    slv.add_argument("--mesh", required=True)
    slv.add_argument("--k", type=int, required=True)
    slv.add_argument("--problem", required=True)
    slv.add_argument("--out", required=True, help="output prefix")
    slv.set_defaults(func=cmd_solve)

    conv = sub.add_parser("convergence", help="run a refinement study")
    conv.add_argument("--family", required=True, choices=["squares", "small-edge"])
    conv.add_argument("--levels", type=int, required=True)
    conv.add_argument("--k", type=int, required=True)
    conv.add_argument("--eps", type=float, default=None)
    conv.add_argument("--problem", required=True)
    conv.add_argument("--out", required=True, help="output prefix")
    conv.set_defaults(func=cmd_convergence)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
