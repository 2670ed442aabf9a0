"""Command-line entry point ``qwork``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import ScenarioConfig, canonical_json, config_hash, load_config, schema
from .errors import ConfigError, DomainError, QworkError
from .oscillator import OscillatorParams, figure1_grid
from .scenario import run_classical, run_classicality, run_quench, run_sweep
from .validation import run_suites

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
log = logging.getLogger("qwork")

RESULT1_COLUMNS = ["epsilon1", "l1_tpm_obs", "ratio"]
RESULT2_COLUMNS = ["hbar_eff", "epsilon_a", "epsilon_b", "epsilon_max", "l1_obs_cl", "mean_gap"]
OSCILLATOR_COLUMNS = ["x0", "p0", "w_cl", "w_tpm", "rel_diff", "flag"]


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[Sequence], chash: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config_hash={chash} tool_version={__version__}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def _out_dir(args) -> Path:
    return Path(args.out or ".")


def _config(args) -> ScenarioConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.model_copy(update={"analysis": cfg.analysis.model_copy(update={"seed": args.seed})})
    return cfg


def cmd_validate(args) -> int:
    summary = run_suites(args.seed or 0, args.count, args.max_dim, args.inject_nonunitary)
    text = dumps(summary)
    sys.stdout.write(text)
    if args.out:
        write_json(Path(args.out), summary)
    for name in summary["failed"]:
        log.error("invariant failed: %s", name)
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def cmd_quench(args) -> int:
    cfg = _config(args)
    rep = run_quench(cfg)
    out = _out_dir(args)
    chash = config_hash(cfg)
    for name, dist in rep.distributions.items():
        write_csv(out / f"work_{name.lower()}.csv", ["w", "p"], list(zip(dist.values, dist.probs)), chash)
    write_json(out / "report.json", rep.to_dict())
    return EXIT_OK


def cmd_classical(args) -> int:
    cfg = _config(args)
    rep = run_classical(cfg)
    out = _out_dir(args)
    dist = rep.distributions["Classical"]
    write_csv(out / "work_classical.csv", ["w", "p"], list(zip(dist.values, dist.probs)), config_hash(cfg))
    write_json(out / "report.json", rep.to_dict())
    return EXIT_OK


def cmd_classicality(args) -> int:
    cfg = _config(args)
    rep = run_classicality(cfg)
    write_json(_out_dir(args) / "classicality.json", rep.to_dict())
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    rows = run_sweep(args.kind, cfg, args.threads)
    cols = RESULT1_COLUMNS if args.kind == "result1" else RESULT2_COLUMNS
    write_csv(_out_dir(args) / f"sweep_{args.kind}.csv", cols, [[r[c] for c in cols] for r in rows], config_hash(cfg))
    return EXIT_OK


def cmd_oscillator(args) -> int:
    params = OscillatorParams(args.mass, args.omega0, args.omega1, args.tau)
    t2 = params.tau if args.t2 is None else args.t2
    if args.nx < 1 or args.np < 1:
        raise DomainError("--nx and --np must be >= 1")
    xs = np.linspace(args.x_min, args.x_max, args.nx)
    ps = np.linspace(args.p_min, args.p_max, args.np)
    rows = figure1_grid(params, xs, ps, args.t1, t2)
    settings = {
        "mass": args.mass, "omega0": args.omega0, "omega1": args.omega1, "tau": args.tau,
        "t1": args.t1, "t2": t2, "x": [args.x_min, args.x_max, args.nx], "p": [args.p_min, args.p_max, args.np],
    }
    chash = config_hash(json.loads(canonical_json(settings)))
    out = Path(args.out or "oscillator_grid.csv")
    write_csv(out, OSCILLATOR_COLUMNS, [[r.x0, r.p0, r.w_cl, r.w_tpm, r.rel_diff, r.flag] for r in rows], chash)
    return EXIT_OK


def cmd_schema(args) -> int:
    text = dumps(schema())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file")
    common.add_argument("--out", help="output directory (or file for validate/oscillator/schema)")
    common.add_argument("--seed", type=int, default=None, help="override the configured seed")
    common.add_argument("--threads", type=int, default=1, help="cap on worker threads for sweeps")

    p = argparse.ArgumentParser(prog="qwork", description="Quantum and classical work statistics.")
    p.add_argument("--version", action="version", version=f"qwork {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="run the randomized invariant suites")
    v.add_argument("--count", type=int, default=20, help="random cases per suite")
    v.add_argument("--max-dim", type=int, default=8, help="largest random Hilbert-space dimension")
    v.add_argument("--inject-nonunitary", action="store_true", help="corrupt propagators (test hook)")
    v.set_defaults(func=cmd_validate)

    sub.add_parser("quench", parents=[common], help="TPM/OBS work statistics of a scenario").set_defaults(func=cmd_quench)
    sub.add_parser("classical", parents=[common], help="classical Monte Carlo work distribution").set_defaults(
        func=cmd_classical
    )
    sub.add_parser("classicality", parents=[common], help="epsilon_A / epsilon_B report").set_defaults(
        func=cmd_classicality
    )

    s = sub.add_parser("sweep", parents=[common], help="result1 (drive amplitude) or result2 (hbar) sweep")
    s.add_argument("kind", choices=["result1", "result2"])
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("oscillator", parents=[common], help="closed-form ramped-oscillator grid")
    o.add_argument("--mass", type=float, default=1.0)
    o.add_argument("--omega0", type=float, default=1.0)
    o.add_argument("--omega1", type=float, default=3.0)
    o.add_argument("--tau", type=float, default=1.0)
    o.add_argument("--t1", type=float, default=0.0)
    o.add_argument("--t2", type=float, default=None)
    o.add_argument("--x-min", type=float, default=1.0)
    o.add_argument("--x-max", type=float, default=2.0)
    o.add_argument("--p-min", type=float, default=1.0)
    o.add_argument("--p-max", type=float, default=2.0)
    o.add_argument("--nx", type=int, default=11)
    o.add_argument("--np", type=int, default=11)
    o.set_defaults(func=cmd_oscillator)

    sc = sub.add_parser("schema", parents=[common], help="print the scenario JSON schema")
    sc.set_defaults(func=cmd_schema)
    return p


def _setup_logging() -> None:
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("QWORK_LOG", "quiet").lower(), logging.WARNING
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QworkError as exc:
        print(f"numerical validity failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
