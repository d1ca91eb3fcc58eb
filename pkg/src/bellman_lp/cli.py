"""Command-line driver.

Exit codes: 0 every check passed, 1 a mathematical check failed, 2 bad
configuration, 3 inconclusive (resolution or tail estimate).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .exponent import DomainError, as_exponent
from .verify import SCHEMA_VERSION, STANDARD_P_LIST, TOLERANCE_PROFILES, GridSpec, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3
COMMANDS = ("verify", "simulate", "foliation", "semigroup", "all")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str = "verify"
    p_list: list = field(default_factory=lambda: list(STANDARD_P_LIST))
    x_range: list = field(default_factory=lambda: [1e-3, 1e3])
    z_range: list = field(default_factory=lambda: [1e-3, 1e3])
    points_per_axis: int = 64
    spacing: str = "log"
    seed: int = 0
    tolerance_profile: str = "standard"
    hk_samples: int = 8
    jump_samples: int = 100_000
    jump_dim: int = 3
    hessian_samples: int = 10_000
    hessian_dim: int = 2
    paths: int = 10_000
    steps: int = 50
    dims: list = field(default_factory=lambda: [1, 2, 3])
    u_samples: int = 100_000
    n_leaves: int = 20
    n_d: int = 20
    semigroup_L: float = 12.0
    semigroup_n: int = 2048
    battery: list | None = None
    out: str | None = None
    format: str = "json"
    figures: str | None = None

    def validate(self):
        if self.subcommand not in COMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if self.subcommand == "all" and self.format != "json":
            raise ConfigError("'all' writes a single json document")
        if self.tolerance_profile not in TOLERANCE_PROFILES:
            raise ConfigError(f"tolerance profile must be one of {sorted(TOLERANCE_PROFILES)}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not self.p_list:
            raise ConfigError("p list is empty")
        for name in ("hk_samples", "jump_samples", "jump_dim", "hessian_samples", "hessian_dim",
                     "paths", "steps", "u_samples", "n_leaves", "n_d", "semigroup_n",
                     "points_per_axis"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if any(not isinstance(d, int) or d < 1 or d > 8 for d in self.dims):
            raise ConfigError("dims must be integers in 1..8")
        try:
            self.p_list = [as_exponent(float(p)).p for p in self.p_list]
            self.grid()
        except (DomainError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def grid(self) -> GridSpec:
        return GridSpec(tuple(float(v) for v in self.x_range), tuple(float(v) for v in self.z_range),
                        int(self.points_per_axis), self.spacing)

    def public(self) -> dict:
        d = asdict(self)
        for key in ("out", "figures", "format"):
            d.pop(key)
        return d


def parse_grid(text: str) -> dict:
    """'LO:HI:N[:log|linear]' for both axes."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"grid must look like LO:HI:N[:log|linear], got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc
    out = {"x_range": [lo, hi], "z_range": [lo, hi], "points_per_axis": n}
    if len(parts) == 4:
        out["spacing"] = parts[3]
    return out


def parse_p(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad p list {text!r}") from exc


def load_config_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config fields: {unknown}")
    return data


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bellman-lp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--p", help="comma-separated exponents, e.g. 1.5,3")
        sp.add_argument("--grid", help="LO:HI:N[:log|linear], applied to both axes")
        sp.add_argument("--seed", help="nonnegative integer root seed")
        sp.add_argument("--out", help="output file (stdout if omitted)")
        sp.add_argument("--format", choices=("json", "csv"))
        sp.add_argument("--tolerance-profile", choices=sorted(TOLERANCE_PROFILES))
        sp.add_argument("--config", help="JSON file with RunConfig fields")
        sp.add_argument("--figures", help="directory for PNG figures")
        if name in ("simulate", "all"):
            sp.add_argument("--paths", type=int)
            sp.add_argument("--steps", type=int)
        if name in ("semigroup", "all"):
            sp.add_argument("--semigroup-n", type=int, dest="semigroup_n")
    return ap


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    values["subcommand"] = args.subcommand
    if args.p:
        values["p_list"] = parse_p(args.p)
    elif args.subcommand in ("simulate",) and "p_list" not in values:
        values["p_list"] = [1.5, 2.0, 3.0]
    elif args.subcommand == "foliation" and "p_list" not in values:
        values["p_list"] = [1.5, 3.0]
    if args.grid:
        values.update(parse_grid(args.grid))
    if args.seed is not None:
        try:
            values["seed"] = int(args.seed)
        except ValueError as exc:
            raise ConfigError(f"seed must be an integer, got {args.seed!r}") from exc
    for key in ("out", "format", "tolerance_profile", "figures", "paths", "steps", "semigroup_n"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(**values).validate()


# --- subcommands ------------------------------------------------------------

def _status(verdicts) -> int:
    verdicts = list(verdicts)
    if "fail" in verdicts:
        return EXIT_FAIL
    if "inconclusive" in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _csv(rows, columns) -> str:
    import csv
    import io
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def cmd_verify(cfg: RunConfig):
    policy = TOLERANCE_PROFILES[cfg.tolerance_profile]
    grid = cfg.grid()
    reports = []
    for p in cfg.p_list:
        reports += run_suite(p, grid, cfg.seed, policy, cfg.hk_samples, cfg.jump_samples,
                             cfg.jump_dim, cfg.hessian_samples, cfg.hessian_dim)
    if cfg.figures:
        from .plotting import majorization_figure
        for p in cfg.p_list:
            majorization_figure(p, Path(cfg.figures) / f"majorization_p{p:g}.png")
    doc = {"reports": [r.to_dict() for r in reports]}
    rows = [{k: r.to_dict()[k] for k in ("condition", "p", "worst_violation", "verdict",
                                          "samples", "seed", "tolerance", "indeterminate")}
            for r in reports]
    csv_text = _csv(rows, ("condition", "p", "worst_violation", "verdict", "samples", "seed",
                           "tolerance", "indeterminate"))
    return _status(r.verdict for r in reports), doc, csv_text


def cmd_simulate(cfg: RunConfig):
    from .martingale import BATCH_COLUMNS, rows_to_csv, run_martingale_suite
    summary = run_martingale_suite(cfg.seed, cfg.paths, cfg.steps, tuple(cfg.dims),
                                   tuple(cfg.p_list), u_samples=cfg.u_samples)
    if cfg.figures:
        from .plotting import simulation_figure
        simulation_figure(summary.checks, Path(cfg.figures) / "simulation_bounds.png")
    return (EXIT_OK if summary.passed else EXIT_FAIL), summary.to_dict(), rows_to_csv(summary.rows, BATCH_COLUMNS)


def cmd_foliation(cfg: RunConfig):
    from .foliation import LEAF_COLUMNS, leaf_table, rows_to_csv, run_foliation
    policy = TOLERANCE_PROFILES[cfg.tolerance_profile]
    reports, rows = [], []
    for p in cfg.p_list:
        reports.append(run_foliation(p, cfg.n_leaves, cfg.n_d, policy=policy))
        rows += leaf_table(p, cfg.n_leaves, cfg.n_d)
    if cfg.figures:
        from .plotting import foliation_figure
        for p in cfg.p_list:
            foliation_figure(p, Path(cfg.figures) / f"foliation_p{p:g}.png")
    doc = {"reports": [r.to_dict() for r in reports]}
    return _status(r.verdict for r in reports), doc, rows_to_csv(rows, LEAF_COLUMNS)


def cmd_semigroup(cfg: RunConfig):
    from .semigroup import (DEFAULT_BATTERY, ResolutionError, load_battery, profile_csv,
                            run_case)
    cases = DEFAULT_BATTERY
    if cfg.battery is not None:
        try:
            cases = load_battery(json.dumps({"cases": cfg.battery}))
        except (DomainError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad battery: {exc}") from exc
    results = []
    try:
        for case in cases:
            results.append(run_case(case, cfg.semigroup_L, cfg.semigroup_n))
    except ResolutionError as exc:
        return EXIT_INCONCLUSIVE, {"error": str(exc), "results": [r.to_dict() for r in results]}, ""
    if cfg.figures:
        from .plotting import semigroup_figure
        semigroup_figure(results, Path(cfg.figures) / "semigroup_profiles.png")
    doc = {"results": [r.to_dict() for r in results]}
    return _status(r.verdict for r in results), doc, profile_csv(results)


def cmd_all(cfg: RunConfig):
    parts, codes = {}, []
    for name, fn in (("verify", cmd_verify), ("simulate", cmd_simulate),
                     ("foliation", cmd_foliation), ("semigroup", cmd_semigroup)):
        sub = RunConfig(**{**asdict(cfg), "subcommand": name})
        if name == "simulate":
            sub.p_list = [p for p in cfg.p_list if p in (1.5, 2.0, 3.0)] or cfg.p_list
        code, doc, _ = fn(sub)
        parts[name] = {"exit_code": code, **doc}
        codes.append(code)
    if EXIT_FAIL in codes:
        code = EXIT_FAIL
    elif EXIT_INCONCLUSIVE in codes:
        code = EXIT_INCONCLUSIVE
    else:
        code = EXIT_OK
    return code, parts, ""


HANDLERS = {"verify": cmd_verify, "simulate": cmd_simulate, "foliation": cmd_foliation,
            "semigroup": cmd_semigroup, "all": cmd_all}


def render_json(cfg: RunConfig, code: int, doc: dict) -> str:
    from .verify import _jsonable
    payload = {"schema_version": SCHEMA_VERSION, "version": __version__,
               "command": cfg.subcommand, "config": cfg.public(), "exit_code": code, **doc}
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve_config(args)
        code, doc, csv_text = HANDLERS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render_json(cfg, code, doc) if cfg.format == "json" else csv_text
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def entry() -> None:
    sys.exit(main())
