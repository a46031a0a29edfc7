"""Command-line front end: ``monodec list | solve | bench``.

Exit status is 0 whenever a run finishes, including runs that stop before
reaching a known degree; that shortfall shows up as ``"complete": false``
in the report. Configuration errors exit with 2 and I/O errors with 3.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .monodromy import StoppingCriterion, decomposable_monodromy, standard_monodromy
from .problems import CATALOG, ProblemInstance, make_problem
from .serialize import CSV_COLUMNS, ProblemFileError, SolutionReport, parse_problem_file, write_stats_csv
from .tracking import TrackerConfig
from .witness import DEFAULT_POINT_TOL, NonUniformPartitionError, decomposition_degrees, partition_by_alpha

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
SEED_ENV = "MONODEC_SEED"
MODES = ("standard", "decomposable")


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    problem: str | None = None
    input: Path | None = None
    n: int | None = None
    k: int | None = None
    mode: str = "standard"
    seed: int = 0
    max_loops: int | None = None
    stabilization: int | None = None
    target_count: int | None = None
    tol: float = DEFAULT_POINT_TOL
    tracker_tol: float | None = None
    threads: int = 1
    out: Path | None = None
    stats_csv: Path | None = None

    def __post_init__(self):
        if (self.problem is None) == (self.input is None):
            raise ConfigError("give exactly one of --problem or --input")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.tracker_tol is not None and not self.tracker_tol > 0:
            raise ConfigError("tracker-tol must be positive")

    def name(self) -> str:
        return self.problem if self.problem else Path(self.input).stem


def load_instance(cfg: RunConfig, rng: np.random.Generator) -> ProblemInstance:
    if cfg.input is not None:
        return parse_problem_file(cfg.input, rng)
    try:
        return make_problem(cfg.problem, rng, n=cfg.n, k=cfg.k)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _stopping(cfg: RunConfig, known: int | None) -> StoppingCriterion:
    """User flags win; with none given, run to a known count or stabilize after 10 idle loops."""
    if cfg.max_loops is None and cfg.stabilization is None and cfg.target_count is None:
        if known is not None:
            return StoppingCriterion(max_loops=200, target_count=known, stabilization=None)
        return StoppingCriterion()
    try:
        return StoppingCriterion(
            max_loops=cfg.max_loops if cfg.max_loops is not None else 200,
            target_count=cfg.target_count,
            stabilization=cfg.stabilization,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def solve(cfg: RunConfig) -> SolutionReport:
    rng = np.random.default_rng(cfg.seed)
    inst = load_instance(cfg, rng)
    tracker = TrackerConfig() if cfg.tracker_tol is None else TrackerConfig(corrector_tol=cfg.tracker_tol)
    if cfg.mode == "decomposable" and inst.alpha is None:
        raise ConfigError("decomposable mode needs an alpha map")

    common = dict(radius=inst.loop_radius, accept=inst.accept, point_tol=cfg.tol, threads=cfg.threads)
    seed = [inst.seed_x]
    if cfg.mode == "standard":
        stop = _stopping(cfg, inst.known_degree)
        W, stats = standard_monodromy(inst.curve, inst.base, seed, stop, tracker, rng, alpha=inst.alpha, **common)
        points = list(W.points)
    else:
        stop = _stopping(cfg, inst.known_classes)
        # A starts empty: only one representative per alpha-class is tracked
        _, B, stats = decomposable_monodromy(inst.curve, inst.base, [], seed, inst.alpha, stop, tracker, rng, **common)
        points = list(B.points)

    if inst.alpha is not None and points:
        classes = partition_by_alpha(np.array(points), inst.alpha, cfg.tol)
    else:
        classes = [list(range(len(points)))] if points else []

    if cfg.mode == "standard":
        complete = len(points) == inst.known_degree if inst.known_degree is not None else None
    else:
        complete = len(points) == inst.known_classes if inst.known_classes is not None else None

    degrees = None
    if complete is not False:
        if cfg.mode == "standard" and inst.alpha is not None:
            try:
                degrees = decomposition_degrees(np.array(points), inst.alpha, cfg.tol)
            except NonUniformPartitionError:
                degrees = None
        elif cfg.mode == "decomposable" and complete and inst.known_degree is not None:
            # the alpha-degree follows from a * b = d once every class is found
            b = len(points)
            if inst.known_degree % b == 0:
                degrees = (inst.known_degree // b, b)

    return SolutionReport(
        problem=inst.name,
        mode=cfg.mode,
        seed=cfg.seed,
        line_base=inst.line_base,
        line_direction=inst.line_direction,
        base=inst.base,
        points=points,
        classes=classes,
        stats=stats.as_row(),
        degrees=degrees,
        complete=complete,
        known_degree=inst.known_degree,
        known_classes=inst.known_classes,
    )


def _stats_row(report: SolutionReport, name: str, seed) -> dict:
    row = dict(report.stats)
    row.update(problem=name, mode=report.mode, seed=seed)
    return row


def summary_rows(rows: Sequence[dict]) -> list[dict]:
    """Best / average / median / worst rows per (problem, mode) group."""
    out = []
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["problem"], r["mode"]), []).append(r)
    numeric = CSV_COLUMNS[3:]
    for (problem, mode), rs in groups.items():
        for label, fn in (("best", min), ("average", statistics.fmean), ("median", statistics.median), ("worst", max)):
            row = {"problem": problem, "mode": mode, "seed": label}
            for col in numeric:
                v = fn([r[col] for r in rs])
                row[col] = round(v, 3) if isinstance(v, float) and not float(v).is_integer() else int(v)
            out.append(row)
    return out


def bench(cfg: RunConfig, modes: Sequence[str], repeat: int) -> tuple[list[dict], list[dict]]:
    """Run ``repeat`` seeds per mode; run i uses seed ``cfg.seed + i``."""
    if repeat < 1:
        raise ConfigError("repeat must be >= 1")
    rows = []
    for mode in modes:
        for i in range(repeat):
            run = replace(cfg, mode=mode, seed=cfg.seed + i)
            rows.append(_stats_row(solve(run), cfg.name(), run.seed))
    return rows, summary_rows(rows)


def cmd_list(out=None) -> None:
    out = out or sys.stdout
    header = f"{'name':<12} {'vars':>5} {'params':>7} {'degree':>7} {'classes':>8}  notes"
    print(header, file=out)
    for e in CATALOG:
        print(f"{e.name:<12} {e.variables:>5} {e.parameters:>7} {e.degree:>7} {e.classes:>8}  {e.source}", file=out)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monodec", description="Monodromy solver with decomposable projections.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="print the built-in problem catalog")

    def run_flags(p, modes):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--problem", help="built-in problem, e.g. cyclic5, power, gaussian2, mixedvol")
        src.add_argument("--input", type=Path, help="JSON problem file")
        p.add_argument("--n", type=int, help="size for power / cyclic")
        p.add_argument("--k", type=int, help="mixture components for gaussian")
        p.add_argument("--mode", choices=modes, default=modes[0])
        p.add_argument("--rng-seed", type=int, default=None, help=f"defaults to ${SEED_ENV} or 0")
        p.add_argument("--max-loops", type=int)
        p.add_argument("--stabilization", type=int, help="stop after this many loops without new points")
        p.add_argument("--target-count", type=int)
        p.add_argument("--tol", type=float, default=DEFAULT_POINT_TOL, help="point equality tolerance")
        p.add_argument("--tracker-tol", type=float, help="Newton corrector tolerance")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--stats-csv", type=Path)

    solve_p = sub.add_parser("solve", help="run one solver and emit a JSON report")
    run_flags(solve_p, list(MODES))
    solve_p.add_argument("--out", type=Path, help="report path (default: standard output)")

    bench_p = sub.add_parser("bench", help="repeat runs over consecutive seeds and emit CSV")
    run_flags(bench_p, ["both", *MODES])
    bench_p.add_argument("--repeat", type=int, default=10)
    bench_p.add_argument("--out", type=Path, help="CSV path (default: standard output)")
    return parser


def _config(args) -> RunConfig:
    seed = args.rng_seed if args.rng_seed is not None else _default_seed()
    return RunConfig(
        problem=args.problem,
        input=args.input,
        n=args.n,
        k=args.k,
        mode="standard" if args.mode == "both" else args.mode,
        seed=seed,
        max_loops=args.max_loops,
        stabilization=args.stabilization,
        target_count=args.target_count,
        tol=args.tol,
        tracker_tol=args.tracker_tol,
        threads=args.threads,
        out=args.out,
        stats_csv=args.stats_csv,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            cmd_list()
            return EXIT_OK
        cfg = _config(args)
        if args.command == "solve":
            report = solve(cfg)
            text = report.dumps()
            if cfg.out:
                cfg.out.write_text(text)
            else:
                print(text)
            if cfg.stats_csv:
                write_stats_csv([_stats_row(report, cfg.name(), cfg.seed)], cfg.stats_csv)
            return EXIT_OK
        modes = MODES if args.mode == "both" else (args.mode,)
        rows, summary = bench(cfg, modes, args.repeat)
        target = cfg.out or cfg.stats_csv
        write_stats_csv(rows + summary, target if target else sys.stdout)
        if cfg.out and cfg.stats_csv:
            write_stats_csv(rows + summary, cfg.stats_csv)
        return EXIT_OK
    except (ConfigError, ProblemFileError) as exc:
        print(f"monodec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"monodec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
