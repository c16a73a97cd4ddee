"""Command-line front end: ``trunclap {eigen,solve,classify,verify,sweep}``.

Artifacts go to ``--out`` (a directory). Payload JSON is deterministic (sorted
keys, shortest round-trip floats, no timestamps); run metadata lives in a
``run_meta.json`` sidecar. Exit status: 2 for configuration errors, 1 when a
verification fails, 0 otherwise.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import itertools
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from . import __version__
from .closed_forms import (
    NoExtensionError,
    eval_closed_form,
    pkm_closed_form,
    pkm_limit_constant,
    pkm_solution_from_data,
    sample_closed_form,
)
from .eigen import (
    EigenConvergenceError,
    ShootingBracketError,
    closed_form_eigen_gamma2,
    picard_solve,
    pkm_supersolution,
    solve_eigen_fem,
    solve_eigen_shooting,
)
from .mesh import RadialProfile, build_mesh
from .operator import ProblemParams
from .superlinear import classify_asymptotics, data_recipe, integrate_pkp_superlinear
from .verify import run_suite

log = logging.getLogger("trunclap")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
THREADS_ENV = "TRUNCLAP_THREADS"


class ConfigError(ValueError):
    """Invalid command-line configuration."""


@dataclass
class RunConfig:
    """A validated command with its problem parameters and options."""

    command: str
    params: Optional[ProblemParams] = None
    r_min: float = 1e-8
    n_elems: int = 4000
    grading: float = 0.87
    method: str = "fem"
    out: Optional[Path] = None
    fmt: str = "json"
    options: dict = field(default_factory=dict)

    def mesh(self):
        return build_mesh(self.r_min, self.n_elems, self.grading)


# -- output helpers -----------------------------------------------------------


def dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write(cfg: RunConfig, name: str, text: str):
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / name).write_text(text)


def _emit(cfg: RunConfig, name: str, payload: dict):
    """Write ``payload`` under ``--out`` or print it."""
    if cfg.out is None:
        sys.stdout.write(dumps(payload))
    else:
        _write(cfg, name, dumps(payload))


def _write_profile(cfg: RunConfig, profile: RadialProfile, stem: str = "profile") -> Optional[str]:
    if cfg.out is None:
        return None
    if cfg.fmt == "csv":
        name = stem + ".csv"
        _write(cfg, name, profile.to_csv())
    else:
        name = stem + ".json"
        _write(cfg, name, dumps(profile.to_dict()))
    return name


def _write_meta(cfg: RunConfig, argv: List[str]):
    if cfg.out is None:
        return
    meta = {
        "argv": list(argv),
        "version": __version__,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    _write(cfg, "run_meta.json", dumps(meta))


def _clean(obj):
    """Make payloads JSON-safe: drop non-serialisable meta entries."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items() if not hasattr(v, "__dataclass_fields__")}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


# -- parser -------------------------------------------------------------------


def _add_params(p: argparse.ArgumentParser, mu=False, power=False):
    p.add_argument("--k", type=int, help="truncation index")
    p.add_argument("--N", type=int, default=None, help="dimension (default k+1)")
    p.add_argument("--gamma", type=float, default=0.0, help="weight exponent")
    if mu:
        p.add_argument("--mu", type=float, default=None)
    if power:
        p.add_argument("--p", type=float, default=None, help="superlinear power")


def _add_mesh(p: argparse.ArgumentParser):
    p.add_argument("--r-min", type=float, default=1e-8)
    p.add_argument("--n", type=int, default=4000, help="number of elements")
    p.add_argument("--grading", type=float, default=0.87)


def _add_output(p: argparse.ArgumentParser, default_fmt="csv"):
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=default_fmt,
                   help="profile file format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trunclap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", help="principal eigenvalue of P_k^+ with weight r^-gamma")
    _add_params(p)
    _add_mesh(p)
    p.add_argument("--method", choices=("fem", "shooting", "closed-form"), default="fem")
    p.add_argument("--bracket", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--allow-degenerate", action="store_true",
                   help="allow gamma >= 2 (truncated problem)")
    _add_output(p)

    p = sub.add_parser("solve", help="closed-form or integrated singular solutions")
    p.add_argument("--op", required=True, choices=("pkm", "pkp", "pkm-super", "picard"))
    _add_params(p, mu=True, power=True)
    _add_mesh(p)
    p.add_argument("--c", type=float, default=None, help="family constant")
    p.add_argument("--r0", type=float, default=None)
    p.add_argument("--u0", default=None, help="value at r0, or 'auto-c0'")
    p.add_argument("--du0", type=float, default=None)
    p.add_argument("--recipe", choices=("scaling", "tau_minus", "tau_plus"), default=None)
    p.add_argument("--r-end", type=float, default=1e-4)
    p.add_argument("--r-lo", type=float, default=1e-6, help="smallest sampled radius")
    p.add_argument("--per-decade", type=int, default=50)
    p.add_argument("--f", type=float, default=-1.0, help="constant forcing (picard)")
    p.add_argument("--b", type=float, default=0.0, help="boundary value (picard)")
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-8)
    _add_output(p)

    p = sub.add_parser("classify", help="classify the behaviour of a profile at r -> 0")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    _add_params(p, mu=True, power=True)
    p.add_argument("--sign", choices=("plus", "minus"), default=None)
    p.add_argument("--snap-tol", type=float, default=0.02)
    _add_output(p)

    p = sub.add_parser("verify", help="run the checker suite on a profile")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    _add_params(p, mu=True, power=True)
    p.add_argument("--sign", choices=("plus", "minus"), default=None)
    p.add_argument("--checks", default=None,
                   help="comma list from consistency,convexity,sign (default convexity[,sign])")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--consistency-tol", type=float, default=1e-6)
    _add_output(p)

    p = sub.add_parser("sweep", help="run eigen solves or P_k^+ classifications over a grid")
    p.add_argument("--kind", choices=("eigen", "pkp"), default="eigen")
    p.add_argument("--k", required=True, help="comma-separated values")
    p.add_argument("--gamma", default="0")
    p.add_argument("--mu", default=None)
    p.add_argument("--p", default=None)
    p.add_argument("--method", choices=("fem", "shooting"), default="fem")
    p.add_argument("--recipe", choices=("scaling", "tau_minus", "tau_plus"), default="tau_minus")
    p.add_argument("--r0", type=float, default=0.5)
    p.add_argument("--r-end", type=float, default=1e-4)
    _add_mesh(p)
    p.add_argument("--workers", type=int, default=None)
    _add_output(p)
    return parser


# -- config -------------------------------------------------------------------


def _params_from(args, need=()) -> ProblemParams:
    if getattr(args, "k", None) is None:
        raise ConfigError("--k is required")
    params = ProblemParams(
        k=args.k,
        N=args.N,
        gamma=args.gamma,
        mu=getattr(args, "mu", None),
        p=getattr(args, "p", None),
    )
    for name in need:
        if getattr(params, name) is None:
            raise ConfigError(f"--{name} is required for this command")
    return params


def _floats(text: Optional[str]):
    if text is None:
        return [None]
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}") from exc


def _sidecar_params(path: Path) -> Optional[ProblemParams]:
    sidecar = path.parent / "solution.json"
    if not sidecar.exists():
        return None
    data = json.loads(sidecar.read_text())
    if "params" not in data:
        return None
    return ProblemParams(**data["params"])


def config_from_args(args) -> RunConfig:
    """Validate arguments against the library preconditions."""
    try:
        cfg = RunConfig(args.command)
        for name in ("out", "fmt"):
            setattr(cfg, name, getattr(args, name, getattr(cfg, name)))
        if hasattr(args, "r_min"):
            cfg.r_min, cfg.n_elems, cfg.grading = args.r_min, args.n, args.grading
            build_mesh(cfg.r_min, cfg.n_elems, cfg.grading)
        opts = cfg.options

        if cfg.command == "eigen":
            cfg.params = _params_from(args)
            cfg.params.require_degenerate()
            cfg.method = args.method
            opts.update(bracket=args.bracket, allow_degenerate=args.allow_degenerate)
            if args.method == "closed-form" and cfg.params.gamma != 2.0:
                raise ConfigError("the closed-form eigenpair is for --gamma 2")

        elif cfg.command == "solve":
            opts.update({key: getattr(args, key) for key in (
                "op", "c", "r0", "u0", "du0", "recipe", "r_end", "r_lo", "per_decade",
                "f", "b", "max_iter", "tol")})
            op = args.op
            need = {"pkm": ("mu", "p"), "pkp": ("mu", "p"), "pkm-super": ("mu",), "picard": ("mu",)}
            cfg.params = _params_from(args, need[op])
            cfg.params.require_degenerate()
            if op == "pkm":
                if (args.c is None) == (args.r0 is None):
                    raise ConfigError("give exactly one of --c or --r0/--u0")
                if args.r0 is not None and args.u0 is None:
                    raise ConfigError("--r0 needs --u0 (a value or 'auto-c0')")
            if op == "pkp":
                if args.r0 is None:
                    raise ConfigError("--r0 is required for --op pkp")
                if args.recipe is None and (args.u0 is None or args.du0 is None):
                    raise ConfigError("give --recipe or both --u0 and --du0")
            if args.u0 not in (None, "auto-c0"):
                opts["u0"] = float(args.u0)

        elif cfg.command in ("classify", "verify"):
            if not args.inp.exists():
                raise ConfigError(f"no such profile: {args.inp}")
            if args.k is not None:
                cfg.params = _params_from(args)
            else:
                cfg.params = _sidecar_params(args.inp)
            opts.update(inp=args.inp, sign=args.sign)
            if cfg.command == "classify":
                if cfg.params is None:
                    raise ConfigError("classify needs --k/--mu/--p or a sibling solution.json")
                opts["snap_tol"] = args.snap_tol
            else:
                checks = args.checks.split(",") if args.checks else None
                if checks and "sign" in checks and (cfg.params is None or args.sign is None):
                    raise ConfigError("the sign check needs --k and --sign")
                opts.update(checks=checks, tol=args.tol, consistency_tol=args.consistency_tol)

        elif cfg.command == "sweep":
            grid = {
                "k": [int(v) for v in _floats(args.k)],
                "gamma": _floats(args.gamma),
                "mu": _floats(args.mu),
                "p": _floats(args.p),
            }
            if args.kind == "pkp" and (grid["mu"] == [None] or grid["p"] == [None]):
                raise ConfigError("a pkp sweep needs --mu and --p")
            points = []
            for values in itertools.product(*grid.values()):
                point = dict(zip(grid.keys(), values))
                ProblemParams(**point)  # validate every grid point up front
                points.append(point)
            cfg.method = args.method
            opts.update(kind=args.kind, points=points, recipe=args.recipe, r0=args.r0,
                        r_end=args.r_end, workers=args.workers)
        return cfg
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


# -- commands -----------------------------------------------------------------


def _run_eigen(cfg: RunConfig) -> int:
    opts = cfg.options
    if cfg.method == "fem":
        res = solve_eigen_fem(cfg.params, cfg.mesh(), allow_degenerate=opts["allow_degenerate"])
    elif cfg.method == "shooting":
        bracket = tuple(opts["bracket"]) if opts["bracket"] else None
        res = solve_eigen_shooting(cfg.params, bracket)
    else:
        res = closed_form_eigen_gamma2(cfg.params.k)
    uri = _write_profile(cfg, res.eigenfunction)
    payload = _clean(res.to_dict(inline_profile=False, profile_uri=uri))
    _emit(cfg, "eigen.json", payload)
    return EXIT_OK


def _limit_payload(sol):
    exponent, log_power, constant = pkm_limit_constant(sol)
    return {"exponent": exponent, "log_power": log_power, "constant": constant}


def _run_solve(cfg: RunConfig) -> int:
    opts, params = cfg.options, cfg.params
    op = opts["op"]
    events: list = []
    if op == "pkm":
        if opts["c"] is not None:
            sol = pkm_closed_form(params, opts["c"])
        else:
            r0 = opts["r0"]
            u0 = opts["u0"]
            if u0 == "auto-c0":
                u0 = float(eval_closed_form(pkm_closed_form(params, 0.0), r0).u)
            sol = pkm_solution_from_data(params, r0, float(u0))
        profile = sample_closed_form(sol, opts["r_lo"], per_decade=opts["per_decade"])
        payload = {"op": op, "params": params.to_dict(), "solution": sol.to_dict(),
                   "limit": _limit_payload(sol)}
    elif op == "pkm-super":
        sol = pkm_supersolution(params, params.mu)
        profile = sample_closed_form(sol, opts["r_lo"], per_decade=opts["per_decade"])
        payload = {"op": op, "params": params.to_dict(), "solution": sol.to_dict()}
    elif op == "pkp":
        r0 = opts["r0"]
        if opts["recipe"] is not None:
            u0, du0 = data_recipe(params, opts["recipe"], r0,
                                  u0=opts["u0"] if isinstance(opts["u0"], float) else None,
                                  r_end=opts["r_end"])
        else:
            u0, du0 = opts["u0"], opts["du0"]
        profile = integrate_pkp_superlinear(params, r0, u0, du0, opts["r_end"],
                                            per_decade=opts["per_decade"])
        events = profile.meta["events"]
        payload = {"op": op, "params": params.to_dict(), "recipe": opts["recipe"],
                   "r0": r0, "u0": u0, "du0": du0, "r_end": opts["r_end"],
                   "status": profile.meta["status"]}
    else:
        res = picard_solve(params, params.mu, opts["f"], opts["b"], cfg.mesh(),
                           max_iter=opts["max_iter"], tol=opts["tol"])
        profile = res.profile
        payload = {"op": op, "params": params.to_dict(),
                   **res.to_dict(inline_profile=False)}
    uri = _write_profile(cfg, profile)
    payload["profile"] = uri
    _emit(cfg, "solution.json", _clean(payload))
    if cfg.out is not None:
        _write(cfg, "events.json", dumps(events))
    return EXIT_OK


def _read_profile(path: Path) -> RadialProfile:
    if path.suffix == ".json":
        return RadialProfile.from_json(path.read_text())
    return RadialProfile.from_csv(path)


def _run_classify(cfg: RunConfig) -> int:
    profile = _read_profile(cfg.options["inp"])
    cls = classify_asymptotics(profile, cfg.params, cfg.options["sign"],
                               snap_tol=cfg.options["snap_tol"])
    _emit(cfg, "classification.json", cls.to_dict())
    return EXIT_OK


def _run_verify(cfg: RunConfig) -> int:
    opts = cfg.options
    profile = _read_profile(opts["inp"])
    checks = opts["checks"]
    if checks is None:
        checks = ["convexity"] + (["sign"] if cfg.params is not None and opts["sign"] else [])
    reports = run_suite(profile, cfg.params, opts["sign"], checks, opts["tol"],
                        opts["consistency_tol"])
    header = f"{'check':<34} {'status':<8} {'worst':>12} {'at r':>12} {'tol':>9}"
    lines = [header, "-" * len(header)]
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        if not rep.applicable:
            status = "N/A"
        lines.append(f"{rep.name:<34} {status:<8} {rep.worst_violation:>12.3e} "
                     f"{rep.location_r:>12.4g} {rep.tolerance:>9.1e}")
        if rep.note:
            lines.append(f"    note: {rep.note}")
    print("\n".join(lines))
    if cfg.out is not None:
        _write(cfg, "verify.json", dumps([rep.to_dict() for rep in reports]))
    return EXIT_OK if all(rep.passed for rep in reports) else EXIT_FAILED


def _sweep_point(task):
    kind, point, method, mesh_args, recipe, r0, r_end = task
    row = dict(point)
    try:
        params = ProblemParams(**point)
        if kind == "eigen":
            if method == "fem":
                res = solve_eigen_fem(params, build_mesh(*mesh_args))
            else:
                res = solve_eigen_shooting(params)
            row.update(lam=res.lam, residual_sup=res.residual_sup, error="")
        else:
            u0, du0 = data_recipe(params, recipe, r0, r_end=r_end)
            profile = integrate_pkp_superlinear(params, r0, u0, du0, r_end)
            cls = classify_asymptotics(profile, params, "plus")
            row.update(tag=cls.tag, exponent=cls.exponent, log_power=cls.log_power,
                       leading_constant=cls.leading_constant, fit_r2=cls.fit_r2,
                       status=profile.meta["status"], error="")
    except (ValueError, RuntimeError) as exc:
        row["error"] = str(exc)
    return row


def _pool_size(requested: Optional[int]) -> int:
    cap = os.environ.get(THREADS_ENV)
    size = requested or os.cpu_count() or 1
    if cap:
        size = min(size, max(1, int(cap)))
    return max(1, size)


def _run_sweep(cfg: RunConfig) -> int:
    opts = cfg.options
    tasks = [(opts["kind"], point, cfg.method, (cfg.r_min, cfg.n_elems, cfg.grading),
              opts["recipe"], opts["r0"], opts["r_end"]) for point in opts["points"]]
    workers = min(_pool_size(opts["workers"]), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, tasks))  # map keeps grid order
    else:
        rows = [_sweep_point(t) for t in tasks]
    if cfg.fmt == "csv" and cfg.out is not None:
        import csv
        import io

        keys = list(rows[0].keys()) if rows else []
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        _write(cfg, "sweep.csv", buf.getvalue())
    else:
        _emit(cfg, "sweep.json", {"rows": rows})
    return EXIT_OK


COMMANDS = {
    "eigen": _run_eigen,
    "solve": _run_solve,
    "classify": _run_classify,
    "verify": _run_verify,
    "sweep": _run_sweep,
}


def run(cfg: RunConfig, argv: Optional[List[str]] = None) -> int:
    """Execute a validated configuration and return the exit status."""
    try:
        status = COMMANDS[cfg.command](cfg)
    except (ShootingBracketError, NoExtensionError, ValueError) as exc:
        print(f"trunclap: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EigenConvergenceError as exc:
        print(f"trunclap: solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILED
    _write_meta(cfg, argv or [])
    return status


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses status 2 for usage errors
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"trunclap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, argv)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
