"""Command-line interface: ``mpk <subcommand> [options]``.

Every subcommand prints one JSON document on stdout and writes its artifacts
to ``--output-dir``.  Errors go to stderr as ``{"error", "message"}``.  Exit
codes are 0 on success, 1 on validation failure and 2 when a numerical guard
trips (``AliasRisk`` counts as a guard under ``--strict``).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import demos, symplectic
from .errors import AliasRisk, MPKError
from .flow import flow, hamiltonian_from_json, propagate, write_trajectory
from .grid import GridFunction, read_grid, write_grid, write_grid_csv
from .hardy import TAU_EIG, DecayCertificate, classify
from .metaplectic import apply_metaplectic, plan_route
from .symplectic import (
    TAU_SYMP,
    SymplecticMatrix,
    make_generator,
    mu_S,
    parse_matrix,
    symplectic_residual,
    verify_block_relations,
)
from .wigner import check_covariance, wigner

GRID_MIN, GRID_MAX = 16, 4096


class ValidationError(MPKError):
    """Invalid command-line arguments or configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Options shared by all subcommands."""

    command: str
    input: str | None = None
    output_dir: str = "."
    n: int = 256
    L: float = 8.0
    tol_rank: float = symplectic.RANK_RTOL
    tau_eig: float = TAU_EIG
    tau_symp: float = TAU_SYMP
    seed: int = 0
    strict: bool = False
    format: str = "json"

    def validate(self) -> "RunConfig":
        if not (GRID_MIN <= self.n <= GRID_MAX) or self.n & (self.n - 1):
            raise ValidationError(f"--n must be a power of two in [{GRID_MIN}, {GRID_MAX}], got {self.n}")
        for name in ("L", "tol_rank", "tau_eig", "tau_symp"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"--{name.replace('_', '-')} must be positive, got {v}")
        if self.format not in ("json", "csv", "bin"):
            raise ValidationError(f"unknown format {self.format!r}")
        return self


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", help="input file (matrix, grid, Hamiltonian or certificate)")
    p.add_argument("--output-dir", default=".", help="directory for artifacts")
    p.add_argument("--n", type=int, default=256, help="grid points per axis (power of two)")
    p.add_argument("--L", type=float, default=8.0, help="grid half-width")
    p.add_argument("--tol-rank", type=float, default=symplectic.RANK_RTOL, help="relative rank tolerance")
    p.add_argument("--tau-eig", type=float, default=TAU_EIG, help="eigenvalue tolerance for verdicts")
    p.add_argument("--tau-symp", type=float, default=TAU_SYMP, help="symplectic defect tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="treat AliasRisk warnings as errors (exit 2)")
    p.add_argument("--format", choices=("json", "csv", "bin"), default="json", help="artifact format")
    p.add_argument("--timing", action="store_true", help="add wall-clock timings to the output")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="mpk", description="Metaplectic operators and Hardy-type uncertainty checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("sympcheck", parents=[common], help="validate a symplectic matrix and its block relations")

    p = sub.add_parser("apply", parents=[common], help="apply the metaplectic operator of a matrix to a grid")
    p.add_argument("--matrix", required=True, help="matrix file (.json or .csv)")
    p.add_argument("--method", choices=("auto", "fiber", "free"), default="auto")

    p = sub.add_parser("wigner", parents=[common], help="Wigner distribution or covariance defect")
    p.add_argument("--matrix", help="if given, report the covariance defect for this matrix")
    p.add_argument("--x-stride", type=int, default=1)
    p.add_argument("--samples", type=int, default=None, help="phase-space sample size for the covariance check")

    p = sub.add_parser("hardy", parents=[common], help="classify a decay certificate")
    p.add_argument("--matrix", help="matrix file; with --a/--b uses M = a P, N = b Q")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)

    p = sub.add_parser("evolve", parents=[common], help="flow of a quadratic Hamiltonian")
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--steps", type=int, default=100, help="trajectory samples on [0, t1]")
    p.add_argument("--grid", help="initial datum (MPGF grid file) to propagate to t1")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)

    p = sub.add_parser("demo", parents=[common], help="named reproductions")
    p.add_argument("name", choices=sorted(demos.DEMOS))
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--t1", type=float)
    p.add_argument("--theta", type=_floats)
    p.add_argument("--omega", type=_floats)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--m", type=float)
    p.add_argument("--hbar", type=float)
    p.add_argument("--halfwidth", type=float)
    p.add_argument("--reference", choices=sorted(demos.REFERENCE_CONSTANTS))

    p = sub.add_parser("sweep", parents=[common], help="verdicts over a parameter grid")
    p.add_argument("family", choices=("frft", "oscillator"))
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=float(np.pi))
    p.add_argument("--count", type=int, default=101)
    return parser


def _config(ns) -> RunConfig:
    return RunConfig(
        ns.command, ns.input, ns.output_dir, ns.n, ns.L, ns.tol_rank, ns.tau_eig, ns.tau_symp,
        ns.seed, ns.strict, ns.format,
    ).validate()


# ---------------------------------------------------------------- inputs


def load_matrix(path, tol: float = TAU_SYMP) -> SymplecticMatrix:
    """Matrix from CSV/JSON rows, or JSON ``{"generator": kind, ...}`` / ``{"product": [...]}``.

    A product is read left to right as a matrix product.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() != ".json":
        return parse_matrix(text, "csv", tol)
    obj = json.loads(text)
    if "rows" in obj:
        return parse_matrix(text, "json", tol)

    def one(spec):
        spec = dict(spec)
        kind = spec.pop("generator")
        return make_generator(kind, **spec)

    if "generator" in obj:
        return one(obj)
    if "product" in obj:
        M = np.eye(2 * one(obj["product"][0]).dim)
        for spec in obj["product"]:
            M = M @ one(spec).matrix
        return SymplecticMatrix(M, tol)
    raise ValidationError("matrix JSON needs 'rows', 'generator' or 'product'")


def _require(path, what):
    if not path:
        raise ValidationError(f"{what} requires --input")
    if not Path(path).exists():
        raise ValidationError(f"input file {path} does not exist")
    return path


def _load_grid(cfg: RunConfig, d: int) -> GridFunction:
    """Grid from ``--input``, or the standard Gaussian on the configured grid."""
    if cfg.input:
        return read_grid(_require(cfg.input, "grid"))
    return GridFunction.from_function(lambda x: np.exp(-np.pi * np.sum(x * x, -1)), d, cfg.n, cfg.L)


def _save_grid(cfg: RunConfig, f: GridFunction, stem: str) -> str:
    out = Path(cfg.output_dir)
    if cfg.format == "csv":
        return str(write_grid_csv(f, out / f"{stem}.csv"))
    return str(write_grid(f, out / f"{stem}.mpgf"))


def _cert_from_ab(S: SymplecticMatrix, a: float, b: float) -> DecayCertificate:
    sub = S.subspaces()
    return DecayCertificate(a * sub.ker_perp.projector(), b * sub.range.projector())


# ---------------------------------------------------------------- subcommands


def cmd_sympcheck(cfg: RunConfig, ns) -> tuple[dict, int]:
    S = load_matrix(_require(cfg.input, "sympcheck"), cfg.tau_symp)
    reports = verify_block_relations(S, cfg.tau_symp)
    ok = all(r.satisfied for r in reports)
    return {
        "d": S.dim,
        "symplectic_residual": symplectic_residual(S.matrix),
        "rank_B": S.rank_B,
        "mu_S": mu_S(S) if S.rank_B else None,
        "relations": [
            {"matrix": r.matrix, "relation": r.relation_id, "residual": r.residual, "satisfied": r.satisfied}
            for r in reports
        ],
        "all_satisfied": ok,
    }, 0 if ok else 1


def cmd_apply(cfg: RunConfig, ns) -> tuple[dict, int]:
    S = load_matrix(ns.matrix, cfg.tau_symp)
    f = _load_grid(cfg, S.dim)
    t0 = time.perf_counter()
    g = apply_metaplectic(S, f, ns.method)
    secs = time.perf_counter() - t0
    route = plan_route(S, f).kind if S.rank_B else "rescaling"
    out = {
        "d": S.dim, "n": f.n, "L": f.L, "rank_B": S.rank_B, "route": route,
        "norm_in": f.norm(), "norm_out": g.norm(), "output": _save_grid(cfg, g, "Sf"),
    }
    if ns.timing:
        out["seconds"] = secs
    return out, 0


def cmd_wigner(cfg: RunConfig, ns) -> tuple[dict, int]:
    if ns.matrix:
        S = load_matrix(ns.matrix, cfg.tau_symp)
        f = _load_grid(cfg, S.dim)
        defect = check_covariance(S, f, size=ns.samples, seed=cfg.seed)
        return {"d": S.dim, "n": f.n, "L": f.L, "covariance_defect": defect, "seed": cfg.seed}, 0
    f = _load_grid(cfg, 1)
    if f.dim != 1:
        raise ValidationError("the full Wigner grid is only exported for d = 1; pass --matrix for a covariance check")
    W = wigner(f, x_stride=ns.x_stride)
    path = Path(cfg.output_dir) / "wigner.csv"
    X, XI = np.meshgrid(W.x_axis, W.xi_axis, indexing="ij")
    table = np.column_stack([X.ravel(), XI.ravel(), W.values.real.ravel(), W.values.imag.ravel()])
    np.savetxt(path, table, delimiter=",", header="x,xi,re,im", comments="", fmt="%.17g")
    return {"d": 1, "n": f.n, "L": f.L, "rows": int(table.shape[0]), "output": str(path)}, 0


def cmd_hardy(cfg: RunConfig, ns) -> tuple[dict, int]:
    if ns.matrix:
        if ns.a is None or ns.b is None:
            raise ValidationError("--matrix needs --a and --b")
        S = load_matrix(ns.matrix, cfg.tau_symp)
        cert = _cert_from_ab(S, ns.a, ns.b)
    else:
        obj = json.loads(Path(_require(cfg.input, "hardy")).read_text())
        if "S" not in obj or "M" not in obj or "N" not in obj:
            raise ValidationError("certificate JSON needs 'S', 'M' and 'N'")
        S = SymplecticMatrix(obj["S"], cfg.tau_symp)
        cert = DecayCertificate(obj["M"], obj["N"], obj.get("alpha_bound", 1.0), obj.get("beta_bound", 1.0))
    v = classify(cert, S, cfg.tau_eig)
    return v.to_json(), 0


def cmd_evolve(cfg: RunConfig, ns) -> tuple[dict, int]:
    H = hamiltonian_from_json(_require(cfg.input, "evolve"))
    S = flow(H, ns.t1).S
    cert = _cert_from_ab(S, ns.a, ns.b) if ns.a is not None and ns.b is not None and S.rank_B else None
    times = np.linspace(0.0, ns.t1, max(ns.steps, 1) + 1)
    traj = write_trajectory(Path(cfg.output_dir) / "trajectory.csv", H, times, cert)
    out = {"d": H.dim, "t1": ns.t1, "S": S.matrix.tolist(), "rank_B": S.rank_B, "trajectory": str(traj)}
    if cert is not None:
        out["verdict"] = classify(cert, S, cfg.tau_eig).to_json()
    if ns.grid:
        u0 = read_grid(_require(ns.grid, "--grid"))
        out["propagated"] = _save_grid(cfg, propagate(u0, H, ns.t1), "u_t1")
    return out, 0


DEMO_OPTIONS = ("a", "b", "d", "t1", "theta", "omega", "alpha", "beta", "m", "hbar", "halfwidth", "reference")


def cmd_demo(cfg: RunConfig, ns) -> tuple[dict, int]:
    fn = demos.DEMOS[ns.name]
    kwargs = {k: getattr(ns, k) for k in DEMO_OPTIONS if getattr(ns, k) is not None}
    params = fn.__code__.co_varnames[: fn.__code__.co_argcount]
    extra = sorted(set(kwargs) - set(params))
    if extra:
        raise ValidationError(f"demo {ns.name} does not take {', '.join('--' + k for k in extra)}")
    for key, val in (("n", cfg.n), ("L", cfg.L), ("tau_eig", cfg.tau_eig), ("output_dir", cfg.output_dir)):
        if key in params:
            kwargs[key] = val
    res, timing = fn(**kwargs)
    if ns.timing:
        res["timing"] = timing
    return res, 0 if res["pass"] else 1


def cmd_sweep(cfg: RunConfig, ns) -> tuple[dict, int]:
    if ns.count < 0:
        raise ValidationError("--count must be non-negative")
    values = np.linspace(ns.start, ns.stop, ns.count)
    fn = demos.frft_sweep if ns.family == "frft" else demos.oscillator_sweep
    header, rows = fn(ns.a, ns.b, values, cfg.tau_eig)
    out = Path(cfg.output_dir)
    if cfg.format == "json":
        path = out / f"sweep_{ns.family}.json"
        path.write_text(_dumps([dict(zip(header, r)) for r in rows]))
    else:
        path = out / f"sweep_{ns.family}.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for r in rows:
                wr.writerow([repr(v) if isinstance(v, float) else v for v in r])
    counts = {}
    for r in rows:
        counts[r[3]] = counts.get(r[3], 0) + 1
    return {"family": ns.family, "a": ns.a, "b": ns.b, "points": len(rows), "status_counts": counts,
            "output": str(path)}, 0


COMMANDS = {
    "sympcheck": cmd_sympcheck,
    "apply": cmd_apply,
    "wigner": cmd_wigner,
    "hardy": cmd_hardy,
    "evolve": cmd_evolve,
    "demo": cmd_demo,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------- entry point


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _fail(exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def run(argv=None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code."""
    try:
        ns = build_parser().parse_args(argv)
        cfg = _config(ns)
        symplectic.RANK_RTOL = cfg.tol_rank
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            if cfg.strict:
                warnings.simplefilter("error", AliasRisk)
            out, code = COMMANDS[cfg.command](cfg, ns)
    except AliasRisk as exc:
        return _fail(exc, 2)
    except MPKError as exc:
        return _fail(exc, exc.exit_code)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        return _fail(exc, 1)
    finally:
        symplectic.RANK_RTOL = RunConfig.tol_rank
    sys.stdout.write(_dumps(out))
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
