"""Convergence studies and the ``wg-biharm`` command line.

``wg-biharm study`` solves one manufactured case on a sequence of uniform
meshes and prints the four error measures with observed orders;
``wg-biharm verify`` runs the structural property suite of
:mod:`wg_biharm.checks`.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import assemble_system, dump_system
from .cases import get_case
from .mesh import Mesh, generate_uniform_mesh, load_mesh
from .norms import ErrorReport, error_report, estimate_rate, fit_rate
from .solver import SOLVERS, SolveReport, solve_spd
from .weak_laplacian import STABILIZER_WEIGHTS

log = logging.getLogger("wg_biharm")

COLUMNS = ("n", "h", "e_h1", "rate_h1", "e_tb", "rate_tb", "e_l2", "rate_l2", "e_edge", "rate_edge")
ERROR_KEYS = ("h1", "tb", "l2", "edge")
DEFAULT_NS = (4, 8, 16, 32)


class StudyError(RuntimeError):
    """A mesh of the study could not be solved."""


@dataclass(frozen=True)
class StudyConfig:
    """What to run.

    ``mesh_files`` replaces the uniform sequence ``ns`` when given.
    """

    case: str = "ex1"
    k: int = 0
    ns: tuple[int, ...] = DEFAULT_NS
    tol: float = 1e-12
    solver: str = "direct"
    fmt: str = "csv"
    out: Path | None = None
    mesh_files: tuple[Path, ...] = ()
    dump_dir: Path | None = None
    stabilizer: str = "edge"
    threads: int | None = None

    def __post_init__(self):
        get_case(self.case)
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.fmt not in ("csv", "md"):
            raise ValueError(f"unknown format {self.fmt!r}; choose csv or md")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.stabilizer not in STABILIZER_WEIGHTS:
            raise ValueError(f"unknown stabilizer weight {self.stabilizer!r}")
        if not 0 < self.tol <= 1e-6:
            raise ValueError("tol must lie in (0, 1e-6]")
        if not self.mesh_files:
            validate_ns(self.ns)


def validate_ns(ns) -> None:
    """Mesh sizes must be positive; with two or more they must be increasing powers of 2."""
    if len(ns) == 0:
        raise ValueError("need at least one mesh size")
    if any(n < 1 for n in ns):
        raise ValueError("mesh sizes must be positive")
    if len(ns) >= 2:
        if any(n & (n - 1) for n in ns):
            raise ValueError("mesh sizes must be powers of 2 when rates are computed")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("mesh sizes must be strictly increasing")


@dataclass(frozen=True)
class StudyRow:
    label: str  # n for uniform meshes, file name otherwise
    errors: ErrorReport
    n_dofs: int
    n_free: int
    solve: SolveReport
    seconds: float = 0.0


@dataclass(frozen=True)
class ConvergenceReport:
    case: str
    k: int
    rows: tuple[StudyRow, ...] = field(default_factory=tuple)

    def errors(self, key: str) -> np.ndarray:
        return np.array([getattr(r.errors, f"e_{key}") for r in self.rows])

    @property
    def hs(self) -> np.ndarray:
        return np.array([r.errors.h for r in self.rows])

    def row_rates(self, key: str) -> list[float]:
        """Observed order between each row and the previous one (NaN for the first)."""
        e, h = self.errors(key), self.hs
        return [math.nan] + [estimate_rate(e[i - 1], e[i], h[i - 1] / h[i]) for i in range(1, len(e))]

    def rates(self) -> dict[str, float]:
        """Last-pair orders; empty with fewer than two rows."""
        if len(self.rows) < 2:
            return {}
        return {key: self.row_rates(key)[-1] for key in ERROR_KEYS}

    def fit_rates(self) -> dict[str, float]:
        """Least-squares orders over all rows; empty with fewer than two rows."""
        if len(self.rows) < 2:
            return {}
        return {key: fit_rate(self.hs, self.errors(key)) for key in ERROR_KEYS}


def _threads(requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("WG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"WG_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _solve_one(config: StudyConfig, label: str, mesh: Mesh, case) -> StudyRow:
    start = time.perf_counter()
    system = assemble_system(mesh, config.k, case.f, case.g, case.phi, weight=config.stabilizer)
    if config.dump_dir is not None:
        dump_system(system, config.dump_dir, f"{config.case}_k{config.k}_{label}")
    try:
        u_h, report = solve_spd(system, config.tol, config.solver)
    except Exception as exc:
        raise StudyError(f"solve failed on mesh {label} ({system.dofmap.n_total} dofs, "
                         f"{system.n_free} free): {exc}") from exc
    errors = error_report(mesh, config.k, case, u_h, ops=system.operators)
    row = StudyRow(label, errors, system.dofmap.n_total, system.n_free, report,
                   time.perf_counter() - start)
    log.info("%s k=%d mesh %s: %d dofs, residual %.1e, %.2fs", config.case, config.k, label,
             row.n_dofs, report.residual, row.seconds)
    return row


def run_study(config: StudyConfig) -> ConvergenceReport:
    """Generate each mesh, assemble, solve and measure the errors."""
    case = get_case(config.case)
    if config.mesh_files:
        jobs = [(Path(p).name, lambda p=p: load_mesh(p)) for p in config.mesh_files]
    else:
        jobs = [(str(n), lambda n=n: generate_uniform_mesh(n)) for n in config.ns]
    workers = min(_threads(config.threads), len(jobs))

    def work(job):
        label, make = job
        return _solve_one(config, label, make(), case)

    if workers <= 1:
        rows = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(work, jobs))  # results come back in submission order
    return ConvergenceReport(config.case, config.k, tuple(rows))


def _fmt_err(x: float) -> str:
    return f"{x:.4e}"


def _fmt_rate(x: float) -> str:
    return "" if not np.isfinite(x) else f"{x:.4f}"


def table_rows(report: ConvergenceReport) -> list[list[str]]:
    """Cells of the table body: one row per mesh, then a least-squares ``fit`` row."""
    rates = {key: report.row_rates(key) for key in ERROR_KEYS}
    body = []
    for i, r in enumerate(report.rows):
        cells = [r.label, _fmt_err(r.errors.h)]
        for key in ERROR_KEYS:
            cells += [_fmt_err(getattr(r.errors, f"e_{key}")), _fmt_rate(rates[key][i])]
        body.append(cells)
    fit = report.fit_rates()
    if fit:
        cells = ["fit", ""]
        for key in ERROR_KEYS:
            cells += ["", _fmt_rate(fit[key])]
        body.append(cells)
    return body


def emit_table(report: ConvergenceReport, fmt: str = "csv") -> str:
    """Render the report as CSV or a markdown table.

    Errors carry five significant digits, rates four decimals; the rate
    cells of the first row are empty.
    """
    body = table_rows(report)
    if fmt == "csv":
        lines = [",".join(COLUMNS)] + [",".join(r) for r in body]
    elif fmt == "md":
        lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
        lines += ["| " + " | ".join(r) + " |" for r in body]
    else:
        raise ValueError(f"unknown format {fmt!r}; choose csv or md")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# command line


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wg-biharm",
                                     description="C0 weak Galerkin solver for the biharmonic equation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-mesh progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("study", help="run a convergence study on uniform meshes")
    st.add_argument("--case", default="ex1", choices=("ex1", "ex2", "ex3", "ex4", "zero"))
    st.add_argument("--k", type=int, default=0, help="polynomial index k >= 0 (P_{k+2} / P_{k+1})")
    st.add_argument("--n", type=_int_list, default=DEFAULT_NS,
                    help="comma-separated mesh sizes, increasing powers of 2 (default 4,8,16,32)")
    st.add_argument("--format", dest="fmt", default="csv", choices=("csv", "md"))
    st.add_argument("--out", type=Path, help="write the table here instead of stdout")
    st.add_argument("--mesh", type=Path, action="append", default=[],
                    help="mesh file to use instead of the uniform sequence (repeatable)")
    st.add_argument("--solver", default="direct", choices=SOLVERS)
    st.add_argument("--tol", type=float, default=1e-12, help="relative residual tolerance")
    st.add_argument("--stabilizer", default="edge", choices=STABILIZER_WEIGHTS,
                    help="local mesh size in the stabilizer weight (default: edge length)")
    st.add_argument("--dump-system", type=Path, metavar="DIR",
                    help="write every assembled system to DIR in Matrix Market format")

    vf = sub.add_parser("verify", help="run the structural property suite")
    vf.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_study(args) -> int:
    try:
        config = StudyConfig(case=args.case, k=args.k, ns=args.n, tol=args.tol, solver=args.solver,
                             fmt=args.fmt, out=args.out, mesh_files=tuple(args.mesh),
                             dump_dir=args.dump_system, stabilizer=args.stabilizer)
    except ValueError as exc:
        print(f"wg-biharm study: error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_study(config)
    except (StudyError, OSError, ValueError) as exc:
        print(f"wg-biharm study: error: {exc}", file=sys.stderr)
        return 1
    text = emit_table(report, config.fmt)
    if config.out is None:
        sys.stdout.write(text)
    else:
        config.out.parent.mkdir(parents=True, exist_ok=True)
        config.out.write_text(text)
    return 0


def _cmd_verify(args) -> int:
    from .checks import run_all

    results = run_all(args.seed)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    if args.command == "study":
        return _cmd_study(args)
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
