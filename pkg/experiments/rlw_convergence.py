"""
RLW Manufactured Convergence Pipeline

Runs the forced RLW problem with exact solution u = e^t sin(2 pi (x - 2t)) on
[0, 1] up to T = 1 with classical RK4 (relaxation off) and tabulates the rates
of ||u - u_h||, ||u_x - w_h|| and ||u_x - (u_h)_x|| at T.

The time step is dt = min(0.2 h^((k+1)/4), h/8), rounded down so an integer
number of steps lands exactly on T; (dt)^4 stays below h^(k+1).

Usage:
    python experiments/rlw_convergence.py                    # desk-scale grids, k = 1..6
    python experiments/rlw_convergence.py --k 3 --N 16,32,64
    python experiments/rlw_convergence.py --paper-scale
"""

import datetime
import math
import sys
from pathlib import Path
from typing import Optional

sys.path.append(str(Path(__file__).parent.parent))

from utils import log
from utils.settings import load_presets
from experiments.output import CsvReport
from experiments.rates import format_rate, least_squares_rate, rate_rows, rows_to_frame, theory_rate
from experiments.sweep import run_sweep
from fem.basis import FeSpace, PeriodicMesh
from fem.errors import StepPolicyError
from fem.rlw import (
    assemble_rlw,
    initial_state,
    manufactured_derivative,
    manufactured_errors,
    manufactured_forcing,
    manufactured_solution,
)
from fem.structured_linalg import SolverChoice
from fem.time_integration import RK4, TABLEAUX, ButcherTableau, evolve
from models import ErrorKind, InitialW, RunConfig

logger = log.setup_verbose_logging("rlw_convergence")

MIN_STEPS = 8
ERROR_KINDS = (ErrorKind.U, ErrorKind.W, ErrorKind.UX)


def convergence_dt(k: int, h: float, factor: float = 0.2, cell_fraction: float = 0.125) -> float:
    """dt = min(factor * h^((k+1)/4), cell_fraction * h)."""
    return min(factor * h ** ((k + 1) / 4.0), cell_fraction * h)


def uniform_steps(t_end: float, dt: float, min_steps: int = MIN_STEPS) -> tuple[int, float]:
    """Number of steps and the step that lands exactly on t_end without exceeding dt."""
    n_steps = max(1, math.ceil(t_end / dt - 1e-9))
    if n_steps < min_steps:
        raise StepPolicyError(f"Time step {dt} gives {n_steps} steps to T={t_end}, need at least {min_steps}")
    return n_steps, t_end / n_steps


def manufactured_run(
    k: int,
    n_cells: int,
    dt: Optional[float] = None,
    t_end: float = 1.0,
    tableau: ButcherTableau = RK4,
    initial_w: InitialW = InitialW.PROJECTED,
    solver: SolverChoice = SolverChoice.AUTO,
    min_steps: int = MIN_STEPS,
) -> tuple[tuple[float, float, float], float]:
    """
    Errors (u, w, u_x) at t_end of the forced run on [0, 1], and the step used.
    """
    space = FeSpace(PeriodicMesh(0.0, 1.0, n_cells), k)
    n_steps, step = uniform_steps(t_end, dt if dt is not None else convergence_dt(k, space.h), min_steps)
    sys_ = assemble_rlw(space, forcing=manufactured_forcing, solver=solver)
    y0 = initial_state(
        sys_,
        lambda x: manufactured_solution(x, 0.0),
        initial_w=initial_w,
        u0_deriv=lambda x: manufactured_derivative(x, 0.0),
    )
    _, y = evolve(sys_, tableau, y0, step, t_end, relaxation=False, record_every=n_steps)
    logger.debug(f"k={k} N={n_cells}: {n_steps} steps of {step:.3e}, final t={y.t:.15g}")
    return manufactured_errors(y), step


class RlwConvergencePipeline:
    """Rates of the three manufactured-solution errors per degree."""

    def __init__(self, config: RunConfig, presets: dict = None, save: bool = True):
        self.start = datetime.datetime.now()
        self.config = config
        presets = presets or load_presets()
        section = presets["rlw_convergence"]
        scale = "full" if config.paper_scale else "desk"

        log.header("RLW CONVERGENCE: Manufactured Solution")

        if config.relaxation:
            log.warn("Convergence runs use the plain Runge-Kutta step; relaxation is ignored")
        self.t_end = config.t_end or section["t_end"]
        self.min_steps = section.get("min_steps", MIN_STEPS)
        self.grids = {k: config.n_cells or section[scale][str(k)] for k in config.degrees}
        cells = [(k, n) for k, grid in self.grids.items() for n in grid]
        log.step(f"Processing {len(cells)} cells ({scale} scale), T={self.t_end}")

        def _cell(k: int, n: int):
            dt = config.dt or convergence_dt(
                k, 1.0 / n, section.get("dt_factor", 0.2), section.get("dt_cell_fraction", 0.125)
            )
            return manufactured_run(
                k, n, dt=dt, t_end=self.t_end, initial_w=config.initial_w,
                solver=config.solver, tableau=TABLEAUX[config.tableau.value], min_steps=self.min_steps,
            )

        results = run_sweep(
            cells, _cell, workers=config.workers,
            describe=lambda r: f"u {r[0][0]:.3e}, w {r[0][1]:.3e}, ux {r[0][2]:.3e}, dt {r[1]:.2e}",
        )
        by_cell = dict(zip(sorted(cells), results))

        self.rows = []
        summary = []
        for k in config.degrees:
            grid = sorted(self.grids[k])
            hs = [1.0 / n for n in grid]
            parts = []
            for idx, kind in enumerate(ERROR_KINDS):
                errs = [by_cell[(k, n)][0][idx] for n in grid]
                rows = rate_rows(k, grid, hs, errs, kind)
                self.rows.extend(rows)
                parts.append(
                    f"{kind.value} {log.rate_verdict(rows[-1].rate, theory_rate(kind, k))}"
                    f"/{format_rate(least_squares_rate(grid, errs))} (theory {theory_rate(kind, k)})"
                )
            summary.append((f"k={k}", ", ".join(parts)))

        self.frame = rows_to_frame(self.rows)
        self.output_path = None
        if save:
            log.step("Writing report...")
            report = CsvReport(config)
            report.add_header("dt_policy", "min(0.2*h^((k+1)/4), h/8)" if config.dt is None else f"fixed {config.dt}")
            report.add_header("t_end_used", self.t_end)
            report.set_frame(self.frame)
            self.output_path = report.save(config.output or "rlw_convergence.csv")
            log.info(f"Saved {self.output_path}")

        elapsed = datetime.datetime.now() - self.start
        summary.append(("Rates", "finest pair / least squares"))
        summary.append(("Elapsed", str(elapsed)))
        log.summary_table("RLW Convergence Summary", summary)
        log.ok("RLW convergence complete")


def main():
    from experiments.cli import main as cli_main
    sys.exit(cli_main(["rlw-converge"] + sys.argv[1:]))


if __name__ == "__main__":
    main()
