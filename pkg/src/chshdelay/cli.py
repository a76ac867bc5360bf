"""Command line front end: simulate / exact sweeps over p, static enumeration, table search, obstruction proof.

Exit codes: 0 success, 1 configuration error, 2 internal consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from chshdelay.core import DelayPolicy, FixedDelay, NoDelay, SwitchModel, WaitUntilTarget, parse_policy
from chshdelay.engine import run_experiment
from chshdelay.oracle import brute_force_tables, exact_tally, parity_obstruction_check
from chshdelay.stats import (
    QUANTUM_LABEL,
    EmptyCellError,
    SReport,
    analytic_s,
    analytic_s_wait,
    chsh_s,
    quantum_reference,
    s_from_fractions,
)
from chshdelay.strategies import DelayStrategy, StaticTable, enumerate_static, parse_strategy, static_s

MODES = ("simulate", "exact", "enumerate-static", "brute-force-tables", "obstruction")
CONVENTIONS = ("paper", "standard", "both")
FORMATS = ("csv", "json")

SWEEP_COLUMNS = ("p", "e11", "e12", "e21", "e22", "s_paper", "s_std", "s_analytic", "ci_halfwidth", "trials", "seed")
STATIC_COLUMNS = ("table", "e11", "e12", "e21", "e22", "s_paper", "s_std")
BRUTE_COLUMNS = ("p", "steps", "s_max", "s_analytic", "best_assignment", "n_maximizers", "derived_attains")
OBSTRUCTION_COLUMNS = ("targets", "max_satisfied", "derived_wrong_cells", "double_miss_cell", "desired_xor")


class ConfigError(Exception):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass
class RunConfig:
    mode: str = "simulate"
    strategy: object = field(default_factory=DelayStrategy)
    policy: DelayPolicy = field(default_factory=FixedDelay)
    p_values: list[float] = field(default_factory=list)
    trials: int = 100_000
    seed: int = 0
    convention: str = "both"
    format: str = "csv"
    workers: int = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError([message])


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="chsh-delay",
        description="Classical CHSH apparatus with setting-dependent delay.",
        epilog="CSV columns (sweep modes): " + ",".join(SWEEP_COLUMNS),
    )
    # Everything is read as text and validated afterwards so all violations are reported together.
    ap.add_argument("--mode", default="simulate", help="|".join(MODES))
    ap.add_argument("--strategy", default="delay", help="delay | static:<A1A2B1B2>, e.g. static:1000")
    ap.add_argument("--policy", default=None, help="none | fixed:<D> | wait:<max> (default fixed:1, none for static)")
    ap.add_argument(
        "--p", action="append", default=[], metavar="P",
        help="switch probability; repeatable; start:stop:count for an inclusive linear sweep",
    )
    ap.add_argument("--trials", default="100000")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--convention", default="both", help="|".join(CONVENTIONS))
    ap.add_argument("--format", default="csv", help="|".join(FORMATS))
    ap.add_argument("--workers", default="1", help="threads for simulate mode; output does not depend on it")
    return ap


def _parse_p(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"sweep must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError(f"sweep count must be >= 1, got {count}")
        values = [start] if count == 1 else [float(v) for v in np.linspace(start, stop, count)]
    else:
        values = [float(text)]
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {v}")
    return values


def parse_config(argv: list[str] | None = None) -> RunConfig:
    ap = build_parser()
    ns, unknown = ap.parse_known_args(argv)
    errors = [f"unrecognized argument: {u}" for u in unknown]
    cfg = RunConfig()

    if ns.mode not in MODES:
        errors.append(f"--mode must be one of {', '.join(MODES)}, got {ns.mode!r}")
    else:
        cfg.mode = ns.mode
    try:
        cfg.strategy = parse_strategy(ns.strategy)
    except ValueError as e:
        errors.append(f"--strategy: {e}")
    if ns.policy is None:
        cfg.policy = NoDelay() if isinstance(cfg.strategy, StaticTable) else FixedDelay(1)
    else:
        try:
            cfg.policy = parse_policy(ns.policy)
        except ValueError as e:
            errors.append(f"--policy: {e}")
    for text in ns.p:
        try:
            cfg.p_values.extend(_parse_p(text))
        except ValueError as e:
            errors.append(f"--p: {e}")
    for name in ("trials", "seed", "workers"):
        try:
            setattr(cfg, name, int(getattr(ns, name)))
        except ValueError:
            errors.append(f"--{name} must be an integer, got {getattr(ns, name)!r}")
    if ns.convention not in CONVENTIONS:
        errors.append(f"--convention must be one of {', '.join(CONVENTIONS)}, got {ns.convention!r}")
    else:
        cfg.convention = ns.convention
    if ns.format not in FORMATS:
        errors.append(f"--format must be one of {', '.join(FORMATS)}, got {ns.format!r}")
    else:
        cfg.format = ns.format

    if cfg.mode in ("simulate", "exact", "brute-force-tables") and not ns.p:
        errors.append(f"--p is required for mode {cfg.mode}")
    if cfg.mode == "simulate" and cfg.trials < 1:
        errors.append(f"--trials must be >= 1, got {cfg.trials}")
    if cfg.workers < 1:
        errors.append(f"--workers must be >= 1, got {cfg.workers}")
    if cfg.mode == "brute-force-tables" and not isinstance(cfg.policy, FixedDelay):
        errors.append("brute-force-tables searches under a fixed delay; use --policy fixed:<D>")
    if errors:
        raise ConfigError(errors)
    return cfg


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, float):
        return float(f"{v:.12g}")
    return v


def predicted_s(strategy, policy: DelayPolicy, p: float) -> float:
    """Closed-form S for the delay strategy under each policy, or the static table's fixed S."""
    if isinstance(strategy, StaticTable):
        return static_s(strategy)
    if isinstance(policy, NoDelay):
        return 2.0
    if isinstance(policy, FixedDelay):
        return analytic_s(p, policy.steps)
    if isinstance(policy, WaitUntilTarget):
        return analytic_s_wait(p, policy.max_steps)
    raise TypeError(f"unknown delay policy {policy!r}")


def _e_columns(rep: SReport, convention: str) -> dict:
    e = rep.e_std if convention == "standard" else rep.e_frac
    row = dict(zip(("e11", "e12", "e21", "e22"), e))
    row["s_paper"] = rep.s_paper if convention != "standard" else None
    row["s_std"] = rep.s_std if convention != "paper" else None
    return row


def sweep_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    for p in cfg.p_values:
        if cfg.mode == "simulate":
            tally = run_experiment(cfg.strategy, cfg.policy, SwitchModel(p), cfg.trials, cfg.seed, workers=cfg.workers)
            rep = chsh_s(tally)
        else:
            rep = exact_tally(cfg.strategy, cfg.policy, p).report()
        row = {"p": p}
        row.update(_e_columns(rep, cfg.convention))
        row["s_analytic"] = predicted_s(cfg.strategy, cfg.policy, p)
        row["ci_halfwidth"] = rep.ci_halfwidth
        row["trials"] = cfg.trials if cfg.mode == "simulate" else None
        row["seed"] = cfg.seed if cfg.mode == "simulate" else None
        rows.append(row)
    return rows


def static_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    for table, s in enumerate_static():
        a = (table.a1, table.a2)
        b = (table.b1, table.b2)
        fracs = [float(a[i] ^ b[j]) for i in range(2) for j in range(2)]
        e_std = [1.0 - 2.0 * f for f in fracs]
        e = e_std if cfg.convention == "standard" else fracs
        row = {"table": str(table)}
        row.update(zip(("e11", "e12", "e21", "e22"), e))
        row["s_paper"] = s if cfg.convention != "standard" else None
        row["s_std"] = s_from_fractions(e_std) if cfg.convention != "paper" else None
        rows.append(row)
    return rows


def brute_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    for p in cfg.p_values:
        res = brute_force_tables(p, cfg.policy.steps)
        rows.append(
            {
                "p": p,
                "steps": cfg.policy.steps,
                "s_max": res.s_max,
                "s_analytic": analytic_s(p, cfg.policy.steps),
                "best_assignment": str(res.best),
                "n_maximizers": len(res.maximizers),
                "derived_attains": res.derived_attains,
            }
        )
    return rows


def emit(rows: list[dict], columns: tuple[str, ...], fmt: str, out, err) -> None:
    if fmt == "csv":
        w = csv.writer(out)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
        print(f"# {QUANTUM_LABEL}: {quantum_reference():.12g}", file=err)
    else:
        records = []
        for row in rows:
            rec = {c: _jsonable(row[c]) for c in columns}
            rec["s_quantum_reference"] = _jsonable(quantum_reference())
            records.append(rec)
        json.dump(records, out, indent=2)
        out.write("\n")


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    try:
        if cfg.mode in ("simulate", "exact"):
            rows, columns = sweep_rows(cfg), SWEEP_COLUMNS
        elif cfg.mode == "enumerate-static":
            rows, columns = static_rows(cfg), STATIC_COLUMNS
        elif cfg.mode == "brute-force-tables":
            rows, columns = brute_rows(cfg), BRUTE_COLUMNS
        else:
            report = parity_obstruction_check()
            if not report.holds:
                print("error: parity obstruction check failed", file=err)
                return 2
            rows, columns = report.rows(), OBSTRUCTION_COLUMNS
    except EmptyCellError as e:
        print(f"error: {e}", file=err)
        return 2
    emit(rows, columns, cfg.format, out, err)
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as e:
        print(build_parser().format_usage().rstrip(), file=sys.stderr)
        for v in e.violations:
            print(f"error: {v}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
