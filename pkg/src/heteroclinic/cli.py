"""Command-line driver: ``heteroclinic <subcommand> --config run.json``.

Subcommands
-----------
solve           write ``solution.csv`` (field) and ``report.json`` (SolveReport)
verify          write ``verify.json`` (VerifyReport); solves first if no --solution
sweep-beta      write ``sweep_beta.csv`` and ``sweep_beta.json``
sweep-eps       write ``sweep_eps.csv`` and ``sweep_eps.json``
export-profile  write ``profile.csv`` with columns ``x,u`` at y = profile.y0

Exit status: 0 when every requested pass flag holds, 1 on a verification
failure, 2 on an invalid configuration (the message names the offending field
path, e.g. ``potential.beta``), 3 when the solver fails to converge.

JSON layouts are fixed by the schemas shipped in ``heteroclinic/schemas``:
``config.schema.json`` for the run configuration, ``solve_report.schema.json``,
``verify_report.schema.json`` and ``sweep.schema.json`` for the outputs.
Floats are written with 17 significant digits; non-finite numbers become null.

Example configuration::

    {"domain": {"T": 20, "nx": 400, "ny": 16},
     "operator": {"kind": "truncated-mean-curvature", "L": 1},
     "potential": {"family": "ginzburg-landau", "alpha": -0.1, "beta": 0.1},
     "coefficient": {"class": 1, "name": "constant"},
     "solver": {"tolGrad": 1e-8}}
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .coefficients import CoefficientField, build_coefficient
from .orlicz import NFunction, build_power, build_truncated
from .potentials import Potential, build_potential
from .solver import SolveReport, SolverConfig, minimize, odd_project
from .strip import Field, Grid, initial_ramp, read_field, write_field
from .verify import (SweepTable, SweepTemplate, beta_sweep, check_solution,
                     epsilon_energy_comparison, oracle_1d_compare)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def load_schema(name: str) -> dict:
    text = resources.files("heteroclinic").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


@dataclass
class RunConfig:
    raw: dict
    grid: Grid
    nf: NFunction
    V: Potential
    A: CoefficientField
    solver: SolverConfig
    tol: float
    tprime_fraction: float
    oracle: bool
    oracle_tol: float
    out_dir: Path
    formats: tuple

    def start(self) -> Field:
        u0 = initial_ramp(self.grid, self.V.alpha, self.V.beta)
        return odd_project(u0, self.V.beta) if self.solver.odd_constraint else u0


def _path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        if missing:
            parts.append(missing[0])
    elif err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = err.schema.get("properties", {})
        extra = [k for k in err.instance if k not in allowed]
        if extra:
            parts.append(extra[0])
    return ".".join(parts)


def parse_config(raw: dict, deterministic: bool = False, out: Optional[str] = None) -> RunConfig:
    """Validate against the schema, then re-check cross-field preconditions."""
    validator = jsonschema.Draft202012Validator(load_schema("config"))
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(_path(e), e.message)

    dom = raw.get("domain", {})
    T, nx, ny = float(dom.get("T", 20.0)), int(dom.get("nx", 400)), int(dom.get("ny", 16))
    if nx % 2:
        raise ConfigError("domain.nx", "must be even")

    op = raw["operator"]
    if op["kind"] == "truncated-mean-curvature":
        if "L" not in op:
            raise ConfigError("operator.L", "required for truncated-mean-curvature")
        nf = build_truncated(op["L"])
    else:
        if "p" not in op:
            raise ConfigError("operator.p", "required for power-p")
        nf = build_power(op["p"])

    pot = raw["potential"]
    alpha, beta = float(pot["alpha"]), float(pot["beta"])
    if not alpha < beta:
        raise ConfigError("potential.beta", f"alpha < beta required, got {alpha} >= {beta}")
    if pot["family"] == "sine-gordon" and alpha != -beta:
        raise ConfigError("potential.alpha", "sine-gordon requires alpha = -beta")
    if not T > max(abs(alpha), abs(beta)):
        raise ConfigError("domain.T", f"T must exceed max(|alpha|, |beta|) = {max(abs(alpha), abs(beta))}")
    V = build_potential(pot["family"], alpha, beta,
                        coupled_nf=nf if pot["family"] == "phi-coupled" else None)

    co = raw.get("coefficient", {})
    try:
        A = build_coefficient(co.get("class", 1), co.get("name", "constant"),
                              co.get("params"), co.get("eps", 1.0))
    except ValueError as exc:
        raise ConfigError("coefficient", str(exc)) from None

    s = raw.get("solver", {})
    ls = s.get("lineSearch", {})
    odd = bool(s.get("oddConstraint", False))
    if odd and alpha != -beta:
        raise ConfigError("solver.oddConstraint", "odd mode requires alpha = -beta")
    try:
        solver = SolverConfig(
            max_iter=s.get("maxIter", 500), tol_grad=s.get("tolGrad", 1e-8),
            tol_energy=s.get("tolEnergy", 1e-15), shrink=ls.get("shrink", 0.5),
            armijo=ls.get("armijo", 1e-4), min_step=ls.get("minStep", 1e-12),
            symmetrize_every=s.get("symmetrizeEvery", 0), odd_constraint=odd,
            projection=s.get("projection", True), method=s.get("method", "newton"),
            ordered=deterministic)
    except ValueError as exc:
        raise ConfigError("solver", str(exc)) from None

    ver = raw.get("verify", {})
    o = raw.get("output", {})
    out_dir = Path(out if out is not None else o.get("directory", "."))
    return RunConfig(raw, Grid(T, nx, ny, alpha, beta), nf, V, A, solver,
                     float(ver.get("tol", 1e-3)), float(ver.get("TprimeFraction", 0.9)),
                     bool(ver.get("oracle", False)), float(ver.get("oracleTol", 1e-4)),
                     out_dir, tuple(o.get("formats", ("csv", "json"))))


# ----------------------------------------------------------------------------
# serialization

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_json(path: Path, obj) -> None:
    # json writes floats by repr, the shortest form that round-trips (<= 17 digits)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def solve_report_dict(rep: SolveReport) -> dict:
    e = rep.energy
    g = rep.field.grid
    return {
        "label": "upper estimate of the minimal heteroclinic energy",
        "energy": {"total": e.total, "gradientPart": e.gradient_part,
                   "potentialPart": e.potential_part,
                   "perCell": {str(k): v for k, v in e.per_cell.items()},
                   "outside": e.outside},
        "iterations": rep.iterations,
        "termination": rep.termination,
        "converged": rep.converged,
        "gradNorm": rep.grad_norm,
        "gradNormTrail": list(rep.grad_trail),
        "energyTrail": list(rep.energy_trail),
        "anchorCell": rep.anchor_cell,
        "grid": {"T": g.T, "nx": g.nx, "ny": g.ny, "alpha": g.left, "beta": g.right},
    }


def verify_dict(cfg: RunConfig, field: Field) -> dict:
    vr = check_solution(field, cfg.nf, cfg.A, cfg.V, cfg.tol, cfg.tprime_fraction,
                        odd=cfg.solver.odd_constraint)
    d = vr.to_dict()
    d["oracle"] = None
    if cfg.oracle:
        try:
            orc = oracle_1d_compare(field, cfg.nf, cfg.A, cfg.V, cfg.oracle_tol)
            d["oracle"] = {"mismatch": orc.mismatch, "converged": orc.converged,
                           "tol": orc.tol, "pass": orc.passed, "message": orc.message}
        except ValueError as exc:
            d["oracle"] = {"mismatch": None, "converged": False, "tol": cfg.oracle_tol,
                           "pass": False, "message": str(exc)}
        d["passed"] = d["passed"] and d["oracle"]["pass"]
    return d


def write_sweep(cfg: RunConfig, table: SweepTable, stem: str) -> None:
    if "csv" in cfg.formats:
        (cfg.out_dir / f"{stem}.csv").write_text(table.to_csv())
    if "json" in cfg.formats:
        dump_json(cfg.out_dir / f"{stem}.json", table.to_dict())


def profile_rows(field: Field, y0: float):
    """(x, u(x, y0)) including the clamps, linear and periodic in y."""
    g = field.grid
    s = y0 / g.hy - 0.5
    j0 = math.floor(s)
    w = s - j0
    a, b = j0 % g.ny, (j0 + 1) % g.ny
    col = (1.0 - w) * field.values[:, a] + w * field.values[:, b]
    xs = np.concatenate([[-g.T], g.x, [g.T]])
    us = np.concatenate([[g.left], col, [g.right]])
    return xs, us


# ----------------------------------------------------------------------------
# commands

def _solve(cfg: RunConfig) -> SolveReport:
    return minimize(cfg.start(), cfg.nf, cfg.A, cfg.V, cfg.solver)


def _field_for(cfg: RunConfig, solution: Optional[str]):
    """Read --solution, or solve in memory.  Returns (field, failed_solve)."""
    if solution:
        return read_field(solution), False
    rep = _solve(cfg)
    return rep.field, not rep.converged


def cmd_solve(cfg: RunConfig, args) -> int:
    rep = _solve(cfg)
    write_field(cfg.out_dir / "solution.csv", rep.field)
    dump_json(cfg.out_dir / "report.json", solve_report_dict(rep))
    if not rep.converged:
        print(f"solver did not converge: {rep.termination}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    field, failed = _field_for(cfg, args.solution)
    if failed:
        print("solver did not converge", file=sys.stderr)
        return EXIT_SOLVER
    d = verify_dict(cfg, field)
    dump_json(cfg.out_dir / "verify.json", d)
    return EXIT_OK if d["passed"] else EXIT_VERIFY


def cmd_sweep_beta(cfg: RunConfig, args) -> int:
    if cfg.nf.family != "truncated-mean-curvature":
        raise ConfigError("operator.kind", "sweep-beta needs the truncated-mean-curvature operator")
    sw = cfg.raw.get("sweep", {})
    if "betas" not in sw:
        raise ConfigError("sweep.betas", "required for sweep-beta")
    betas = sw["betas"]
    if not all(b1 < b0 for b0, b1 in zip(betas, betas[1:])):
        raise ConfigError("sweep.betas", "must be strictly decreasing")
    tpl = SweepTemplate(cfg.grid.T, cfg.grid.nx, cfg.grid.ny, cfg.A, cfg.solver,
                        cfg.V.family, cfg.tol, cfg.tprime_fraction)
    table = beta_sweep(betas, cfg.nf.L, tpl, refine=int(sw.get("refine", 0)))
    write_sweep(cfg, table, "sweep_beta")
    ok = table.summary["smallest_passes"] and table.summary["max_grad_nonincreasing"]
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_sweep_eps(cfg: RunConfig, args) -> int:
    sw = cfg.raw.get("sweep", {})
    if "eps" not in sw:
        raise ConfigError("sweep.eps", "required for sweep-eps")
    if cfg.A.class_tag != 3:
        raise ConfigError("coefficient.class", "sweep-eps needs a Class 3 coefficient")
    eps = sw["eps"]
    if not all(e1 < e0 for e0, e1 in zip(eps, eps[1:])):
        raise ConfigError("sweep.eps", "must be strictly decreasing")
    tpl = SweepTemplate(cfg.grid.T, cfg.grid.nx, cfg.grid.ny, None, cfg.solver,
                        cfg.V.family, cfg.tol, cfg.tprime_fraction)
    table = epsilon_energy_comparison(eps, cfg.A, cfg.V, cfg.nf, tpl)
    write_sweep(cfg, table, "sweep_eps")
    return EXIT_OK if table.summary["pass"] else EXIT_VERIFY


def cmd_export_profile(cfg: RunConfig, args) -> int:
    field, failed = _field_for(cfg, args.solution)
    if failed:
        return EXIT_SOLVER
    y0 = float(cfg.raw.get("profile", {}).get("y0", 0.5))
    xs, us = profile_rows(field, y0)
    with open(cfg.out_dir / "profile.csv", "w", newline="\n") as fh:
        fh.write(f"# y0={y0!r}\n")
        fh.write("x,u\n")
        for x, u in zip(xs, us):
            fh.write(f"{x:.17g},{u:.17g}\n")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep-beta": cmd_sweep_beta,
    "sweep-eps": cmd_sweep_eps,
    "export-profile": cmd_export_profile,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heteroclinic",
                                description="Heteroclinic layers on the periodic strip.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--solution", help="field CSV to verify or export instead of solving")
    p.add_argument("--out", help="output directory (overrides output.directory)")
    p.add_argument("--deterministic", action="store_true",
                   help="ordered reductions for bitwise-reproducible output")
    return p


def run_command(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(raw, args.deterministic, args.out)
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> None:
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
