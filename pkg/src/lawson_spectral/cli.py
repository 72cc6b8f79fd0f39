"""Command line: theta-check, au-table, solve, reconstruct, dress, area.

Exit codes: 0 ok, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import export
from .config import ConfigError, RunConfig
from .loops import IwasawaError
from .spectral_solver import (
    FORBIDDEN_MARGIN,
    ForbiddenLocusError,
    SpectralConvergenceError,
    SpectralData,
    SymConfig,
    area_complex,
    c_minus1,
    circle_samples,
    default_guess,
    forbidden_distance,
    project_admissible,
    solve_spectral,
)
from .surface_reconstruction import MeshResolution, ReconstructionError, build_mesh
from .theta_engine import ThetaFn, invariant_suite
from .unitarizer import AU_CSV_COLUMNS, AuCache, ConvergenceError, grid_points, solve_au_grid

log = logging.getLogger("lawson_spectral")

OK, NUMERICAL, USAGE = 0, 1, 2

# converged N=32 data shipped with the package (configs/lawson_n32.ini)
REFERENCE_DATA = resources.files(__package__) / "data" / "lawson_n32.json"


class UsageError(Exception):
    pass


def _write(path: Path, content):
    if isinstance(content, bytes):
        path.write_bytes(content)
    else:
        path.write_text(content, encoding="utf-8", newline="")
    log.info("wrote %s", path)
    return path


# -- spectral data files -------------------------------------------------------------

def spectral_record(d: SpectralData, reports=(), status="ok") -> dict:
    A = area_complex(d)
    return {
        "status": status,
        "truncation": d.N,
        "x_coeffs": [[c.real, c.imag] for c in d.x_coeffs],
        "a_coeffs": [[c.real, c.imag] for c in d.a_coeffs],
        "area": A.real,
        "area_imag": A.imag,
        "c_minus1": [c_minus1(d).real, c_minus1(d).imag],
        "stages": list(reports),
    }


def load_spectral(path=None) -> SpectralData:
    p = Path(str(REFERENCE_DATA if path is None else path))
    if not p.is_file():
        raise UsageError(f"spectral data file not found: {p}")
    try:
        rec = json.loads(p.read_text(encoding="utf-8"))
        return SpectralData(tuple(complex(*c) for c in rec["x_coeffs"]), tuple(complex(*c) for c in rec["a_coeffs"]))
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"{p} is not a spectral data record") from e


# -- commands ----------------------------------------------------------------------------

def cmd_theta_check(args, cfg: RunConfig) -> int:
    terms = args.terms if args.terms is not None else cfg.int("theta", "terms")
    points = args.grid if args.grid is not None else cfg.int("theta", "points")
    if terms < 1 or points < 1:
        raise UsageError("--terms and --grid must be positive")
    results = invariant_suite(ThetaFn(terms), points, seed=cfg.int("run", "seed"))
    failed = [k for k, (_, ok) in results.items() if not ok]
    for k, (v, ok) in results.items():
        print(f"{k:20s} {v:.3e} {'ok' if ok else 'FAIL'}")
    if failed:
        print("failing checks: " + ", ".join(failed), file=sys.stderr)
        return NUMERICAL
    return OK


def au_rows(n, exclusion, tol):
    xs = grid_points(n, exclusion)
    # every shifted point is solved from scratch, not read back through the shift equations
    base = solve_au_grid(xs, tol=tol)
    shifted = {
        "half": solve_au_grid(xs + 0.5, tol=tol),
        "half_i": solve_au_grid(xs + 0.5j, tol=tol),
        "neg": solve_au_grid(-xs, tol=tol),
    }
    rows, worst = [], 0.0
    for k, s in enumerate(base):
        fe = max(abs(shifted["half"][k].a_u - s.a_u - 0.5), abs(shifted["half_i"][k].a_u - s.a_u + 0.5j),
                 abs(shifted["neg"][k].a_u + s.a_u))
        ok = s.su2_ok and s.defect_norm < 1e-7
        worst = max(worst, fe)
        rows.append([f"{s.x.real:.17g}", f"{s.x.imag:.17g}", f"{s.a_u.real:.17g}", f"{s.a_u.imag:.17g}",
                     f"{s.defect_norm:.3e}", str(s.su2_ok).lower(), f"{fe:.3e}", "ok" if ok else "failed"])
    return rows, worst


def cmd_au_table(args, cfg: RunConfig) -> int:
    n = args.grid if args.grid is not None else cfg.int("au", "grid")
    if n < 1:
        raise UsageError("--grid must be positive")
    rows, worst = au_rows(n, cfg.float("au", "exclusion"), cfg.float("au", "tol"))
    cols = list(AU_CSV_COLUMNS) + ["functional_residual", "status"]
    out = Path(args.out) if args.out else cfg.out_dir() / "au_table.csv"
    _write(out, export.csv_text(cols, rows, cfg.stamp()))
    failed = sum(r[-1] != "ok" for r in rows)
    print(f"rows {len(rows)}  failed {failed}  max functional-equation residual {worst:.2e}")
    return NUMERICAL if failed else OK


def cmd_solve(args, cfg: RunConfig) -> int:
    N = cfg.int("solve", "truncation")
    xs = cfg.complex_list("solve", "x_coeffs")
    as_ = cfg.complex_list("solve", "a_coeffs")
    if xs:
        guess = SpectralData(xs, as_ or (0j,)).resized(N, max(N + 1, len(as_)))
    else:
        guess = default_guess(N)
    if abs(guess.x1) < 1e-12:
        raise ForbiddenLocusError("initial x_1 = 0: the line bundle family is constant to first order")
    projected = forbidden_distance(guess) < FORBIDDEN_MARGIN
    if projected:
        guess = project_admissible(guess)
    cache = AuCache()
    stages = [(N, cfg.int("solve", "quad_nodes"))] + list(cfg.refine_stages())
    reports, d, status = [], guess, "ok"
    out = cfg.out_dir()
    for n_trunc, quad in stages:
        try:
            d, rep = solve_spectral(d.resized(n_trunc), cfg.int("solve", "n_points"), cfg.float("solve", "tol"),
                                    cfg.int("solve", "max_iter"), cache, cfg.float("solve", "closing_weight"),
                                    strict=True, quad_nodes=quad)
        except SpectralConvergenceError as e:
            rep = e.report
            reports.append({"truncation": n_trunc, **rep.as_dict()})
            status = "failed"
            break
        reports.append({"truncation": n_trunc, **rep.as_dict()})
        log.info("N=%d quad=%d residual %.2e reality %.2e area %.6f", n_trunc, quad, rep.residual_history[-1],
                 rep.reality_max, area_complex(d).real)
    record = {**spectral_record(d, reports, status), "guess_projected": projected}
    _write(out / "spectral.json", export.json_text(record, cfg.stamp()))
    if status == "ok":
        t, x, a, au = circle_samples(d, 64, cache)
        rows = [[f"{v:.17g}" for z in r for v in (z.real, z.imag)] for r in zip(t, x, a, au)]
        cols = ["re_t", "im_t", "re_x", "im_x", "re_a", "im_a", "re_au", "im_au"]
        _write(out / "circle_samples.csv", export.csv_text(cols, rows, cfg.stamp()))
        A = area_complex(d)
        print(f"converged  N={d.N}  area {A.real:.10f}  (imag {A.imag:.1e})  reality {reports[-1]['reality_max']:.2e}")
        return OK
    print("spectral solve did not converge; residual history in spectral.json", file=sys.stderr)
    return NUMERICAL


def _sym(cfg):
    return SymConfig(cfg.complex("sym", "lambda_1"), cfg.complex("sym", "lambda_2"))


def _resolution(cfg):
    return MeshResolution(cfg.int("mesh", "side"), cfg.int("mesh", "levels"), cfg.int("mesh", "nodes"))


def _pole(cfg):
    p = cfg.get("mesh", "pole").strip()
    if p == "auto":
        return None
    try:
        v = np.array([float(c) for c in p.split(",")])
    except ValueError as e:
        raise UsageError("[mesh] pole is 'auto' or four comma-separated numbers") from e
    if v.shape != (4,) or np.linalg.norm(v) == 0:
        raise UsageError("[mesh] pole needs four numbers, not all zero")
    return v / np.linalg.norm(v)


def _emit_mesh(mesh, stem, cfg):
    out = cfg.out_dir()
    _write(out / f"{stem}.obj", export.obj_text(mesh, cfg.stamp(), _pole(cfg)))
    _write(out / f"{stem}.ply", export.ply_bytes(mesh, cfg.stamp()))


def _mesh_or_failure(d, cfg, stem, dressing_lambda=None):
    try:
        return build_mesh(d, _sym(cfg), _resolution(cfg), dressing_lambda=dressing_lambda,
                          workers=cfg.int("mesh", "workers"), seam_tol=cfg.float("mesh", "seam_tol")), None
    except ReconstructionError as e:
        return e.mesh, str(e)
    except IwasawaError as e:
        return None, str(e)


def cmd_reconstruct(args, cfg: RunConfig) -> int:
    d = load_spectral(args.data)
    lam0 = None if args.dress is None else _parse_complex(args.dress)
    mesh, err = _mesh_or_failure(d, cfg, "mesh")
    record = {"data": str(args.data or "reference"), "area_formula": area_complex(d).real}
    if mesh is not None:
        record.update(mesh.report)
        record["area_relative_error"] = mesh.report["area_mesh"] / record["area_formula"] - 1
        record["phi3_defect"] = mesh.phi3_defect()
    if err is None and lam0 is not None:
        dressed, derr = _mesh_or_failure(d, cfg, "dressed", lam0)
        if dressed is not None:
            _emit_mesh(dressed, "dressed", cfg)
            k = len(dressed.vertices)
            record["dressed"] = dressed.report
            record["dressed_max_vertex_distance"] = float(np.abs(dressed.vertices - mesh.vertices[:k]).max())
        err = derr
    record["status"] = "ok" if err is None else "failed"
    if err is not None:
        record["error"] = err
    _write(cfg.out_dir() / "reconstruct.json", export.json_text(record, cfg.stamp()))
    if err is not None:
        print(f"reconstruction failed: {err}", file=sys.stderr)
        return NUMERICAL
    _emit_mesh(mesh, "mesh", cfg)
    print(f"mesh {len(mesh.vertices)} vertices  area {record['area_mesh']:.6f}  formula {record['area_formula']:.6f}"
          f"  rel {record['area_relative_error']:+.2e}  seams {mesh.report['seam_max']:.1e}")
    return OK


def cmd_dress(args, cfg: RunConfig) -> int:
    d = load_spectral(args.data)
    lam0 = _parse_complex(args.lambda0) if args.lambda0 is not None else cfg.complex("dress", "lambda_0")
    if abs(lam0) >= 1:
        raise UsageError("lambda_0 must lie inside the unit disc")
    mesh, err = _mesh_or_failure(d, cfg, "dressed", lam0)
    record = {"data": str(args.data or "reference"), "lambda_0": lam0, "status": "ok" if err is None else "failed"}
    if mesh is not None:
        record.update(mesh.report)
    if err is not None:
        record["error"] = err
    _write(cfg.out_dir() / "dress.json", export.json_text(record, cfg.stamp()))
    if err is not None:
        print(f"dressing failed: {err}", file=sys.stderr)
        return NUMERICAL
    _emit_mesh(mesh, "dressed", cfg)
    print(f"dressed mesh {len(mesh.vertices)} vertices  seam mismatch {mesh.report['seam_max']:.2e}")
    return OK


def cmd_area(args, cfg: RunConfig) -> int:
    d = load_spectral(args.data)
    A = area_complex(d)
    print(export.json_text({"area": A.real, "area_imag": A.imag, "truncation": d.N}, cfg.stamp()), end="")
    return OK


def _parse_complex(s):
    try:
        return complex(s.replace(" ", "").replace("i", "j"))
    except ValueError as e:
        raise UsageError(f"not a complex number: {s!r}") from e


# -- entry point ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="lawson", description="Spectral data and reconstruction of the genus-2 Lawson surface")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("theta-check", help="run the theta invariant suite")
    s.add_argument("--config")
    s.add_argument("--terms", type=int)
    s.add_argument("--grid", type=int, help="number of random test points")
    s.set_defaults(func=cmd_theta_check)

    s = sub.add_parser("au-table", help="tabulate a^u on a grid of the fundamental cell")
    s.add_argument("--config")
    s.add_argument("--grid", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_au_table)

    s = sub.add_parser("solve", help="solve for spectral data")
    s.add_argument("config")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("reconstruct", help="mesh the surface from spectral data")
    s.add_argument("data", nargs="?", help="spectral data JSON (default: shipped N=32 data)")
    s.add_argument("--config")
    s.add_argument("--dress", metavar="LAMBDA0", help="also write a mesh dressed at LAMBDA0")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("dress", help="mesh a simple factor dressing of the surface")
    s.add_argument("data", nargs="?", help="spectral data JSON (default: shipped N=32 data)")
    s.add_argument("--config")
    s.add_argument("--lambda0")
    s.set_defaults(func=cmd_dress)

    s = sub.add_parser("area", help="evaluate the area formula on spectral data")
    s.add_argument("data", nargs="?", help="spectral data JSON (default: shipped N=32 data)")
    s.add_argument("--config")
    s.set_defaults(func=cmd_area)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        return args.func(args, cfg)
    except (UsageError, ConfigError, FileNotFoundError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE
    except (ConvergenceError, ForbiddenLocusError, IwasawaError, ReconstructionError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
