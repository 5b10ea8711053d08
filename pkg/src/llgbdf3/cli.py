"""Command-line front end.

Exit codes: 0 success, 1 probe found a singular system, 2 solver diverged,
3 degenerate magnitude in the projection, 4 configuration error. Failures
also print one JSON object on standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from .config import RunConfig, emit_reproduction_suite, parse_config
from .errors import ConfigError, DegenerateMagnitude, SolverDiverged
from .grid import Grid
from .solvability import solvability_probe
from .stability import max_stable_step
from .study import StudyConfig, convergence_study, format_table, write_report

EXIT_OK, EXIT_SINGULAR, EXIT_DIVERGED, EXIT_DEGENERATE, EXIT_CONFIG = 0, 1, 2, 3, 4

ALPHA_THRESHOLD = math.sqrt(2) / 2

FLAG_KEYS = {
    "mode": "run.mode", "dim": "run.dim", "solution": "run.solution", "alpha": "run.alpha",
    "T": "run.T", "n": "grid.n", "nt": "grid.nt", "tol": "solver.tol", "maxit": "solver.maxit",
    "trials": "probe.trials", "threads": "output.threads", "seed": "output.seed", "out": "output.dir",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="llg-bdf3",
        description="Semi-implicit BDF3 projection solver for the Landau-Lifshitz-Gilbert "
                    "equation, with manufactured-solution convergence studies.")
    p.add_argument("--config", metavar="PATH", help="sectioned key-value config file")
    p.add_argument("--mode", choices=["single", "study-spatial", "study-temporal",
                                      "study-coupled", "probe"])
    p.add_argument("--dim", help="spatial dimension (1 or 3)")
    p.add_argument("--solution", help="manufactured solution id (mms1d, mms3d)")
    p.add_argument("--n", help="cells per axis, comma list")
    p.add_argument("--nt", help="time steps to reach T, comma list")
    p.add_argument("--alpha", help="damping parameter")
    p.add_argument("--T", dest="T", help="final time")
    p.add_argument("--tol", help="relative residual tolerance of the linear solve")
    p.add_argument("--maxit", help="iteration cap of the linear solve")
    p.add_argument("--trials", help="random trials per probe setting")
    p.add_argument("--threads", help="worker processes for studies (default $LLG_THREADS or 1)")
    p.add_argument("--seed", help="random seed (probe mode)")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--emit-suite", metavar="DIR",
                   help="write table1.cfg ... table4.cfg into DIR and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _error_line(kind: str, exc: Exception, **extra) -> None:
    payload = {"error": kind, "message": str(exc)}
    payload.update({k: v for k, v in extra.items() if v is not None})
    print(json.dumps(payload), file=sys.stderr)


def run_probe(cfg: RunConfig) -> int:
    grid = Grid(cfg.dim, cfg.n[0])
    rows = []
    for k in cfg.probe_k:
        for alpha in cfg.probe_alpha:
            rep = solvability_probe(grid, k, alpha, cfg.trials, cfg.seed)
            rows.append(rep)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dim", "n", "k", "alpha", "trials", "min_singular_value"])
    for r in rows:
        w.writerow([r.dim, r.n, repr(r.k), repr(r.alpha), r.trials, repr(r.min_sigma)])
    lines = [f"{'k':>10} | {'alpha':>8} | {'trials':>6} | {'min singular value':>18}"]
    for r in rows:
        lines.append(f"{r.k:>10.3g} | {r.alpha:>8.3g} | {r.trials:>6d} | {r.min_sigma:>18.6e}")
    ok = all(r.all_positive for r in rows)
    lines.append(f"{'min singular value > 0' if ok else 'SINGULAR SYSTEM FOUND'} "
                 f"({cfg.dim}D, n = {cfg.n[0]})")
    text = "\n".join(lines) + "\n"
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "probe.csv").write_text(buf.getvalue())
    (out / "probe.txt").write_text(text)
    print(text, end="")
    return EXIT_OK if ok else EXIT_SINGULAR


def run_study(cfg: RunConfig) -> int:
    if cfg.alpha <= ALPHA_THRESHOLD:
        print(f"note: alpha = {cfg.alpha:g} <= sqrt(2)/2; the convergence estimate for this "
              "scheme assumes alpha > sqrt(2)/2. Proceeding.", file=sys.stderr)
    for n, nt in cfg.cases():
        bound = max_stable_step(Grid(cfg.dim, n), cfg.alpha)
        if cfg.T / nt > bound:
            print(f"warning: n={n}, N_t={nt}: k = {cfg.T / nt:.3g} exceeds the BDF3 stability "
                  f"bound {bound:.3g} for alpha = {cfg.alpha:g}; high-frequency error will grow "
                  f"(N_t >= {math.ceil(cfg.T / bound)} avoids this)", file=sys.stderr)
    study = StudyConfig(cfg.solution, cfg.alpha, cfg.T, cfg.cases(), cfg.study_kind,
                        tol=cfg.tol, maxit=cfg.maxit, precondition=cfg.precondition)
    report = convergence_study(study, workers=cfg.threads)
    write_report(report, Path(cfg.out), timing=cfg.timing)
    print(format_table(report), end="")
    return EXIT_OK


def dispatch(cfg: RunConfig) -> int:
    """Run the configured mode and map failures to exit codes."""
    try:
        if cfg.mode == "probe":
            return run_probe(cfg)
        return run_study(cfg)
    except SolverDiverged as exc:
        _error_line("SolverDiverged", exc, case=getattr(exc, "case_id", None),
                    step=exc.step_index)
        return EXIT_DIVERGED
    except DegenerateMagnitude as exc:
        _error_line("DegenerateMagnitude", exc, case=getattr(exc, "case_id", None),
                    step=exc.step_index)
        return EXIT_DEGENERATE
    except ConfigError as exc:
        _error_line(type(exc).__name__, exc)
        return EXIT_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.emit_suite:
        try:
            paths = emit_reproduction_suite(args.emit_suite)
        except OSError as exc:
            _error_line("OutputError", exc)
            return EXIT_CONFIG
        for p in paths:
            print(p)
        return EXIT_OK
    overrides = {key: getattr(args, attr) for attr, key in FLAG_KEYS.items()
                 if getattr(args, attr) is not None}
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        _error_line(type(exc).__name__, exc)
        return EXIT_CONFIG
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
