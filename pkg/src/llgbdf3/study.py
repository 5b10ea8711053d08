"""Convergence studies against the manufactured solutions."""

from __future__ import annotations

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import LLGError, NonPositiveError
from .grid import Grid, norms
from .mms import ManufacturedSolution, forcing, get_solution
from .scheme import SchemeParams, SchemeState, run

log = logging.getLogger(__name__)

NORMS = ("linf", "l2", "h1")
CSV_COLUMNS = ("case_id", "h", "k", "err_linf", "err_l2", "err_h1", "seconds")


@dataclass
class CaseResult:
    case_id: int
    n: int
    nt: int
    h: float
    k: float
    linf: float
    l2: float
    h1: float
    seconds: float
    unit_deviation: float  # max over steps and cells of ||m| - 1|
    max_iterations: int = 0

    def error(self, which: str) -> float:
        return getattr(self, which)


@dataclass
class StudyConfig:
    solution: str
    alpha: float
    T: float
    cases: Sequence[tuple]  # (n, nt) pairs
    kind: str = "spatial"  # spatial | temporal | coupled | single
    tol: float = 1e-12
    maxit: int = 500
    precondition: bool = True

    @property
    def fit_variable(self) -> str:
        return "h" if self.kind == "spatial" else "k"


@dataclass
class ErrorReport:
    config: StudyConfig
    rows: list
    orders: dict = field(default_factory=dict)

    @property
    def unit_deviation(self) -> float:
        return max(r.unit_deviation for r in self.rows)


def initial_history(sol: ManufacturedSolution, grid: Grid, k: float):
    """Exact samples at ``t = 0, k, 2k`` on the cell centers."""
    x = grid.mesh()
    return [sol.eval(x, j * k) for j in range(3)]


def run_case(sol: ManufacturedSolution | str, alpha: float, n: int, nt: int, T: float,
             tol: float = 1e-12, maxit: int = 500, precondition: bool = True,
             case_id: int = 0) -> CaseResult:
    """Run one manufactured-solution case and measure the error at ``t = T``."""
    if isinstance(sol, str):
        sol = get_solution(sol)
    if nt < 3:
        raise ValueError(f"N_t must be at least 3, got {nt}")
    grid = Grid(sol.dim, n)
    k = T / nt
    params = SchemeParams(alpha=alpha, k=k, solver_tol=tol, solver_maxit=maxit,
                          forcing=forcing(sol, alpha), precondition=precondition)
    levels = initial_history(sol, grid, k)
    worst = [max(_unit_deviation(m) for m in levels), 0]

    def observe(state: SchemeState, t: float):
        worst[0] = max(worst[0], _unit_deviation(state.current))
        worst[1] = max(worst[1], state.last_stats.iterations)

    start = time.perf_counter()
    final = run(grid, levels, params, nt * k, observer=observe)
    seconds = time.perf_counter() - start
    err = norms(final.current - sol.eval(grid.mesh(), nt * k), grid)
    log.info("case %d: n=%d nt=%d linf=%.3e (%.1fs)", case_id, n, nt, err.linf, seconds)
    return CaseResult(case_id, n, nt, grid.h, k, err.linf, float(err.l2), float(err.h1),
                      seconds, worst[0], worst[1])


def _unit_deviation(m) -> float:
    return float(np.max(np.abs(np.sqrt(np.einsum("...c,...c->...", m, m)) - 1.0)))


def estimate_order(steps, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(step)`` over all rows."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if steps.size < 2 or steps.size != errors.size:
        raise ValueError("need at least two (step, error) pairs of equal length")
    if np.any(errors <= 0):
        raise NonPositiveError(f"errors must be positive, got {errors.tolist()}")
    if np.any(np.diff(steps) >= 0):
        raise ValueError("step sizes must be strictly decreasing")
    return float(np.polyfit(np.log(steps), np.log(errors), 1)[0])


def _run_indexed(args):
    config, case_id, (n, nt) = args
    return run_case(config.solution, config.alpha, n, nt, config.T, config.tol,
                    config.maxit, config.precondition, case_id)


def convergence_study(config: StudyConfig, workers: int = 1) -> ErrorReport:
    """Run every case and fit orders (against ``h`` for spatial studies, else ``k``).

    Cases run in a process pool when ``workers > 1``. A failing case does not
    stop the others; after all cases finish, the first failure is re-raised
    with every failed case id in its message.
    """
    jobs = [(config, i, case) for i, case in enumerate(config.cases)]
    results, failures = [], []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_indexed, job) for job in jobs]
            outcomes = []
            for fut in futures:
                try:
                    outcomes.append(fut.result())
                except LLGError as exc:
                    outcomes.append(exc)
    else:
        outcomes = []
        for job in jobs:
            try:
                outcomes.append(_run_indexed(job))
            except LLGError as exc:
                outcomes.append(exc)
    for i, out in enumerate(outcomes):
        (failures if isinstance(out, Exception) else results).append((i, out))
    if failures:
        case_id, exc = failures[0]
        ids = ", ".join(str(i) for i, _ in failures)
        exc.case_id = case_id
        exc.args = (f"case {case_id} (n={config.cases[case_id][0]}, nt={config.cases[case_id][1]}) "
                    f"failed: {exc.args[0]} [failed cases: {ids}]",)
        raise exc

    rows = [r for _, r in results]
    report = ErrorReport(config, rows)
    if config.kind != "single" and len(rows) >= 2:
        steps = [getattr(r, config.fit_variable) for r in rows]
        report.orders = {w: estimate_order(steps, [r.error(w) for r in rows]) for w in NORMS}
    return report


def _fmt(x: float) -> str:
    return repr(float(x))


def report_csv(report: ErrorReport, timing: bool = True) -> str:
    """CSV text with columns ``case_id,h,k,err_linf,err_l2,err_h1,seconds``.

    With ``timing=False`` the seconds column is written as ``0`` so that
    repeated runs produce byte-identical files.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([r.case_id, _fmt(r.h), _fmt(r.k), _fmt(r.linf), _fmt(r.l2), _fmt(r.h1),
                    f"{r.seconds:.3f}" if timing else "0"])
    return buf.getvalue()


def _step_label(x: float) -> str:
    inv = 1.0 / x
    return f"1/{round(inv)}" if abs(inv - round(inv)) < 1e-9 * inv else f"{x:.6g}"


def format_table(report: ErrorReport) -> str:
    """Plain-text table: step column(s), three error norms, and an order row."""
    kind = report.config.kind
    if kind == "coupled":
        heads = ["h", "k"]
        keys = [lambda r: _step_label(r.h), lambda r: _step_label(r.k)]
    elif kind == "temporal":
        heads = ["k"]
        keys = [lambda r: _step_label(r.k)]
    else:
        heads = ["h"]
        keys = [lambda r: _step_label(r.h)]
    heads = heads + ["|e|_inf", "|e|_2", "|e|_H1"]
    body = [[key(r) for key in keys] + [f"{r.linf:.6e}", f"{r.l2:.6e}", f"{r.h1:.6e}"]
            for r in report.rows]
    if report.orders:
        lead = ["order"] + ["--"] * (len(keys) - 1)
        body.append(lead + [f"{report.orders[w]:.2f}" for w in NORMS])
    widths = [max(len(row[i]) for row in [heads] + body) for i in range(len(heads))]
    sep = "-+-".join("-" * w for w in widths)
    lines = [" | ".join(h.rjust(w) for h, w in zip(heads, widths)), sep]
    for row in body:
        if row[0] == "order":
            lines.append(sep)
        lines.append(" | ".join(c.rjust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def write_report(report: ErrorReport, outdir: Path, timing: bool = True) -> list:
    """Write ``report.csv``, ``report.txt`` and ``loglog_<norm>.dat``; return the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    p = outdir / "report.csv"
    p.write_text(report_csv(report, timing))
    paths.append(p)
    p = outdir / "report.txt"
    p.write_text(format_table(report))
    paths.append(p)
    var = report.config.fit_variable
    for w in NORMS:
        p = outdir / f"loglog_{w}.dat"
        lines = [f"# {var} err_{w}"]
        lines += [f"{_fmt(getattr(r, var))} {_fmt(r.error(w))}" for r in report.rows]
        p.write_text("\n".join(lines) + "\n")
        paths.append(p)
    return paths


def study_from_cases(solution: str, alpha: float, T: float, ns: Sequence[int],
                     nts: Sequence[int], kind: str, **kw) -> StudyConfig:
    """Pair up grid and step lists, broadcasting a single entry on either side."""
    ns, nts = list(ns), list(nts)
    if len(ns) == 1 and len(nts) > 1:
        ns = ns * len(nts)
    if len(nts) == 1 and len(ns) > 1:
        nts = nts * len(ns)
    if len(ns) != len(nts):
        raise ValueError(f"cannot pair {len(ns)} grids with {len(nts)} step counts")
    return StudyConfig(solution, alpha, T, list(zip(ns, nts)), kind, **kw)

