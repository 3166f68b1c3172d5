"""Command-line interface: ``simulate``, ``estimate`` and ``report``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical
failure that aborted the run.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .config import ConfigError, load_config
from .countsio import DataError, read_counts
from .indices import shannon, simpson
from .model import EtaSolverOptions, eb_proportions, estimate_eta, mle_proportions
from .report import TABLES, ReportError, base_metadata, build_simulation_report, dump_report, load_report, render_table
from .simulation import SimulationError
from .study import NumericalFailure, run_grid

log = logging.getLogger("ebdiversity")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
THREADS_ENV = "EBDIVERSITY_THREADS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def cmd_simulate(config_path, output_path, seed_override: int | None = None, threads: int | None = None) -> dict[str, Any]:
    cfg = load_config(config_path)
    if seed_override is not None:
        if not 0 <= seed_override < 2**64:
            raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {seed_override}")
        cfg = dataclasses.replace(cfg, seed=seed_override)
    scenarios = cfg.scenarios()
    n_threads = resolve_threads(threads)
    log.info("running %d scenarios (k=%d, m=%d) on %d worker(s)", len(scenarios), cfg.k, cfg.m, n_threads)
    results = run_grid(scenarios, cfg.solver, n_threads)
    report = build_simulation_report(cfg, results)
    dump_report(report, output_path)
    excluded = sum(r.excluded for r in results)
    if excluded:
        log.warning("%d replicate(s) excluded; see 'replicates' in the report", excluded)
    return report


def cmd_estimate(counts_csv, method: str, output_path, opts: EtaSolverOptions | None = None) -> dict[str, Any]:
    if method not in ("ml", "eb", "both"):
        raise ConfigError(f"method must be ml, eb or both, got {method!r}")
    opts = opts or EtaSolverOptions()
    matrix = read_counts(counts_csv)
    estimates, warnings = [], []
    for sid, x in matrix.rows:
        if x.n == 0:
            warnings.append({"sample_id": sid, "message": "all counts are zero; sample skipped"})
            log.warning("sample %s has no individuals; skipped", sid)
            continue
        rec: dict[str, Any] = {"sample_id": sid, "n": x.n}
        if method in ("ml", "both"):
            p = mle_proportions(x).proportions
            rec["ML"] = {"proportions": p.tolist(), "shannon": shannon(p), "simpson": simpson(p)}
        if method in ("eb", "both"):
            sol = estimate_eta(x, opts)
            p = eb_proportions(x, sol.eta).proportions
            rec["EB"] = {
                "eta": sol.eta,
                "status": sol.status.value,
                "converged": sol.converged,
                "iterations": sol.iterations,
                "proportions": p.tolist(),
                "shannon": shannon(p),
                "simpson": simpson(p),
            }
        estimates.append(rec)
    report = {
        "kind": "estimate",
        "metadata": base_metadata(
            source=str(counts_csv),
            method=method,
            k=matrix.k,
            taxa=list(matrix.taxa),
            solver=dataclasses.asdict(opts),
        ),
        "estimates": estimates,
        "warnings": warnings,
    }
    dump_report(report, output_path)
    return report


def cmd_report(report_path, table: str, as_csv: bool = False) -> str:
    if table not in TABLES:
        raise ConfigError(f"unknown table {table!r}; valid tables: {', '.join(TABLES)}")
    return render_table(load_report(report_path), table, as_csv)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ebdiversity", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a scenario grid and write a JSON report")
    s.add_argument("--config", required=True, help="YAML grid config (or a previous report)")
    s.add_argument("--out", required=True, help="report path (JSON)")
    s.add_argument("--seed", type=int, default=None, help="override the config seed")
    s.add_argument("--threads", type=int, default=None, help=f"worker processes (default ${THREADS_ENV} or 1)")

    e = sub.add_parser("estimate", help="estimate compositions for each sample of a count CSV")
    e.add_argument("--counts", required=True, help="CSV: header of taxa, first column sample id")
    e.add_argument("--method", default="both", help="ml, eb or both")
    e.add_argument("--out", required=True, help="report path (JSON)")

    r = sub.add_parser("report", help="render a table from a report")
    r.add_argument("--in", dest="inp", required=True, help="report path (JSON)")
    r.add_argument("--table", required=True, help=f"one of: {', '.join(TABLES)}")
    r.add_argument("--csv", action="store_true", help="emit CSV instead of aligned text")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "simulate":
            cmd_simulate(Path(args.config), Path(args.out), args.seed, args.threads)
        elif args.command == "estimate":
            cmd_estimate(Path(args.counts), args.method, Path(args.out))
        else:
            sys.stdout.write(cmd_report(Path(args.inp), args.table, args.csv))
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ReportError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalFailure, SimulationError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
