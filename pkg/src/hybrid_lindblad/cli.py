"""Command-line driver: run a scenario, compare trajectories, inspect presets.

Every ``run`` flag can also be set through an environment variable named
``HYBRID_LINDBLAD_<FLAG>`` (upper case, dashes as underscores), e.g.
``HYBRID_LINDBLAD_DT=5e-4``. Precedence: command line, environment, the
``run`` section of a config file, built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import models
from .estimator import Estimator, Exact, Shots
from .oracle import IntegrationError, propagate
from .tdvp import DEFAULT_REL_CUTOFF, INTEGRATORS, evolve, expectation

log = logging.getLogger("hybrid_lindblad")

ENV_PREFIX = "HYBRID_LINDBLAD_"

COLUMNS = (
    "t",
    "observable_tdvp",
    "observable_oracle",
    "abs_deviation",
    "trace",
    "min_eigenvalue",
    "residual",
    "im_zdot",
)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    scenario: str = "dephasing"
    config: str | None = None
    t_final: float = 1.0
    dt: float = 1e-3
    output_every: int = 1
    estimator: str = "exact"
    shots: int = 10_000
    seed: int = 0
    integrator: str = "rk4"
    rel_cutoff: float = DEFAULT_REL_CUTOFF
    oracle: bool = False
    oracle_dt: float = 1e-4
    output: str | None = None
    params: dict | None = None

    def validate(self) -> None:
        if not (self.t_final > 0 and math.isfinite(self.t_final)):
            raise UsageError(f"t_final must be positive, got {self.t_final}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise UsageError(f"dt must be positive, got {self.dt}")
        if self.dt > self.t_final:
            raise UsageError("dt exceeds t_final")
        if self.output_every < 1:
            raise UsageError("output_every must be at least 1")
        if self.estimator not in ("exact", "shots"):
            raise UsageError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "shots" and self.shots < 1:
            raise UsageError("shots must be at least 1")
        if self.integrator not in INTEGRATORS:
            raise UsageError(f"unknown integrator {self.integrator!r}")
        if self.rel_cutoff < 0:
            raise UsageError("rel_cutoff must be nonnegative")
        if self.oracle and not self.oracle_dt > 0:
            raise UsageError("oracle_dt must be positive")

    def mode(self):
        return Shots(self.shots, self.seed) if self.estimator == "shots" else Exact()

    def oracle_substeps(self) -> int:
        interval = self.dt * self.output_every
        n = round(interval / self.oracle_dt)
        if n < 1 or abs(n * self.oracle_dt - interval) > 1e-9 * interval:
            raise UsageError(
                f"oracle dt {self.oracle_dt} does not divide the output interval {interval}"
            )
        return n


def _parse_bool(text: str) -> bool:
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


_CASTS = {
    "t_final": float, "dt": float, "output_every": int, "shots": int, "seed": int,
    "rel_cutoff": float, "oracle": _parse_bool, "oracle_dt": float,
}


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    cfg = RunConfig()
    file_run = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
        file_run = data.get("run", {})
        cfg.scenario = args.config
    for name in RunConfig.__dataclass_fields__:
        if name in ("config", "params"):
            continue
        cast = _CASTS.get(name, str)
        value = getattr(args, name, None)
        env = environ.get(ENV_PREFIX + name.upper())
        if value is not None:
            setattr(cfg, name, value)
        elif env is not None:
            try:
                setattr(cfg, name, cast(env))
            except ValueError as exc:
                raise UsageError(f"bad value for {ENV_PREFIX + name.upper()}: {env!r}") from exc
        elif name in file_run:
            setattr(cfg, name, cast(file_run[name]))
    cfg.config = args.config
    cfg.params = _parse_params(getattr(args, "param", None))
    cfg.validate()
    return cfg


def load_scenario(cfg: RunConfig) -> models.Scenario:
    if cfg.config:
        if cfg.params:
            raise UsageError("--param applies to presets only")
        return models.scenario_from_dict(json.loads(Path(cfg.config).read_text()))
    try:
        return models.preset(cfg.scenario, **(cfg.params or {}))
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    except (TypeError, ValueError) as exc:
        raise UsageError(f"cannot build scenario {cfg.scenario!r}: {exc}") from exc


def output_paths(cfg: RunConfig, scenario_name: str) -> tuple[Path, Path]:
    out = Path(cfg.output or f"{scenario_name}.csv")
    if out.suffix != ".csv":
        out = out.with_name(out.name + ".csv")
    return out, out.with_name(out.stem + ".summary.json")


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return repr(float(x))


def run(cfg: RunConfig) -> dict:
    """Integrate, optionally compare with the oracle, write trajectory + summary files."""
    scenario = load_scenario(cfg)
    report = models.validate(scenario)
    if not report.ok:
        raise UsageError(f"scenario failed validation:\n{report}")
    substeps = cfg.oracle_substeps() if cfg.oracle else None
    traj_path, summary_path = output_paths(cfg, scenario.name)

    estimator = Estimator(cfg.mode())
    start = time.perf_counter()
    records = evolve(
        scenario.ansatz, scenario.model, cfg.t_final, cfg.dt, estimator,
        integrator=cfg.integrator, rel_cutoff=cfg.rel_cutoff, output_every=cfg.output_every,
    )
    tdvp_values = np.array([expectation(r.state, scenario.observable) for r in records])
    oracle_values = np.full(len(records), np.nan)
    if substeps is not None:
        n_out = len(records) - 1
        if n_out > 0:
            traj = propagate(scenario.rho0(), scenario.model, n_out * substeps * cfg.oracle_dt,
                             cfg.oracle_dt, output_every=substeps)
            oracle_values = traj.expectation(scenario.observable)
        else:
            oracle_values = np.array([expectation(scenario.ansatz, scenario.observable)])
    wall = time.perf_counter() - start
    deviation = np.abs(tdvp_values - oracle_values)

    traj_path.parent.mkdir(parents=True, exist_ok=True)
    echo = {k: v for k, v in asdict(cfg).items()}
    echo["scenario_name"] = scenario.name
    lines = [f"# config: {json.dumps(echo, sort_keys=True)}", "# " + ",".join(COLUMNS)]
    for r, tv, ov, dev in zip(records, tdvp_values, oracle_values, deviation):
        d = r.diagnostics
        row = (r.t, tv, ov, dev, d["trace"], d["min_eigenvalue"], d.get("residual", math.nan), d["im_zdot"])
        lines.append(",".join(_fmt(x) for x in row))
    traj_path.write_text("\n".join(lines) + "\n")

    has_oracle = substeps is not None
    summary = {
        "scenario": scenario.name,
        "trajectory": str(traj_path),
        "rows": len(records),
        "steps": records[-1].step if records else 0,
        "wall_time_s": wall,
        "max_deviation": float(np.max(deviation)) if has_oracle else None,
        "final_deviation": float(deviation[-1]) if has_oracle else None,
        "max_residual": max((r.diagnostics.get("residual", 0.0) for r in records), default=0.0)
        if estimator.exact else None,
        "max_im_zdot": max(r.diagnostics["im_zdot"] for r in records),
        "s_discarded_total": int(sum(r.diagnostics["s_discarded"] for r in records)),
        "c_discarded_total": int(sum(r.diagnostics["c_discarded"] for r in records)),
        "c_residual_flags": int(sum(r.diagnostics["c_residual_flag"] for r in records)),
        "estimates": estimator.estimates,
        "validation": {"r": report.r, "s": report.s, "m": report.m},
    }
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    log.info("wrote %s and %s", traj_path, summary_path)
    return summary


def read_trajectory(path: str | Path) -> tuple[list[str], np.ndarray]:
    columns = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if not body.startswith("config:"):
                columns = [c.strip() for c in body.split(",")]
            continue
        if line.strip():
            rows.append([float(x) for x in line.split(",")])
    if columns is None:
        raise UsageError(f"{path}: missing column header")
    data = np.array(rows, dtype=float).reshape(-1, len(columns))
    return columns, data


def compare(path_a: str | Path, path_b: str | Path, grid_tol: float = 1e-12) -> dict:
    cols_a, a = read_trajectory(path_a)
    cols_b, b = read_trajectory(path_b)
    if a.shape[0] != b.shape[0] or "t" not in cols_a or "t" not in cols_b:
        raise UsageError("trajectories have different time grids")
    if np.max(np.abs(a[:, cols_a.index("t")] - b[:, cols_b.index("t")]), initial=0.0) > grid_tol:
        raise UsageError("trajectories have different time grids")
    report = {"rows": int(a.shape[0]), "columns": {}}
    for name in cols_a:
        if name == "t" or name not in cols_b:
            continue
        diff = np.abs(a[:, cols_a.index(name)] - b[:, cols_b.index(name)])
        both_nan = np.isnan(a[:, cols_a.index(name)]) & np.isnan(b[:, cols_b.index(name)])
        diff = diff[~both_nan]
        report["columns"][name] = {
            "max_abs_deviation": float(diff.max()) if diff.size else 0.0,
            "mean_abs_deviation": float(diff.mean()) if diff.size else 0.0,
        }
    return report


def _env_default_help(name: str) -> str:
    return f"(env {ENV_PREFIX}{name.upper()})"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybrid-lindblad",
        description="Variational outer-product simulation of Lindblad dynamics.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a scenario and write trajectory + summary")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", help=f"preset name: {', '.join(models.PRESETS)}")
    src.add_argument("--config", help="scenario config file (JSON with model/ansatz/run sections)")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="preset builder argument, e.g. --param gamma=2.0")
    p.add_argument("--t-final", type=float, help=_env_default_help("t_final"))
    p.add_argument("--dt", type=float, help=_env_default_help("dt"))
    p.add_argument("--output-every", type=int, help="write every n-th step")
    p.add_argument("--integrator", choices=INTEGRATORS)
    p.add_argument("--estimator", choices=("exact", "shots"))
    p.add_argument("--shots", type=int, help="shots per estimated real quantity")
    p.add_argument("--seed", type=int)
    p.add_argument("--rel-cutoff", type=float, help="relative singular-value cutoff for S and C")
    p.add_argument("--oracle", action="store_const", const=True, default=None,
                   help="also integrate the exact master equation and report deviations")
    p.add_argument("--oracle-dt", type=float)
    p.add_argument("--output", help="trajectory CSV path; the summary goes next to it")

    c = sub.add_parser("compare", help="per-column deviations between two trajectory files")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--output", help="write the JSON report here as well")

    v = sub.add_parser("validate", help="check a scenario against the ansatz/operator caps")
    vs = v.add_mutually_exclusive_group(required=True)
    vs.add_argument("--scenario")
    vs.add_argument("--config")
    v.add_argument("--param", action="append", metavar="KEY=VALUE")

    e = sub.add_parser("export", help="write a preset as an editable config file")
    e.add_argument("--scenario", required=True)
    e.add_argument("--param", action="append", metavar="KEY=VALUE")
    e.add_argument("--output", required=True)

    sub.add_parser("presets", help="list built-in scenarios")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            summary = run(resolve_config(args))
            print(json.dumps(summary, indent=2))
        elif args.command == "compare":
            report = compare(args.a, args.b)
            text = json.dumps(report, indent=2)
            if args.output:
                Path(args.output).write_text(text + "\n")
            print(text)
        elif args.command == "validate":
            cfg = RunConfig(scenario=args.scenario or "", config=args.config,
                            params=_parse_params(args.param))
            report = models.validate(load_scenario(cfg))
            print(report)
            return 0 if report.ok else 1
        elif args.command == "export":
            sc = load_scenario(RunConfig(scenario=args.scenario, params=_parse_params(args.param)))
            models.save_scenario(sc, args.output)
        elif args.command == "presets":
            for name, builder in models.PRESETS.items():
                print(f"{name:16s} {(builder.__doc__ or '').strip().splitlines()[0]}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
