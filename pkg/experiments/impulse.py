"""
Impulse Rates Pipeline

Runs the relaxed, unforced RLW scheme from a Gaussian on [-50, 50] for each
(k, N) cell and measures the worst impulse error max_n |I(t_n) - I(0)| over
every recorded step. The relaxation keeps energy exact; impulse is only
approximated, with rates 2k for odd k and 2k - 2 for even k.

Usage:
    python experiments/impulse.py                       # desk scale, T = 5, k = 1..4
    python experiments/impulse.py --k 1 --N 100,200,400
    python experiments/impulse.py --paper-scale         # T = 10 on the full grids
"""

import datetime
import sys
from pathlib import Path
from typing import Optional

sys.path.append(str(Path(__file__).parent.parent))

from utils import log
from utils.settings import load_presets
from experiments.conservation import conservation_run
from experiments.output import CsvReport
from experiments.rates import format_rate, least_squares_rate, rate_rows, rows_to_frame, theory_rate
from experiments.sweep import run_sweep
from fem.structured_linalg import SolverChoice
from fem.time_integration import RK4, TABLEAUX, ButcherTableau
from models import ErrorKind, InitialCondition, InitialW, RunConfig, StepRecord

logger = log.setup_verbose_logging("impulse")


def max_impulse_error(records: list[StepRecord]) -> float:
    first = records[0].invariants.impulse
    return max(abs(r.invariants.impulse - first) for r in records)


def impulse_error(
    k: int,
    n_cells: int,
    domain: tuple[float, float] = (-50.0, 50.0),
    dt: float = 0.01,
    t_end: float = 5.0,
    ic: InitialCondition = InitialCondition.GAUSSIAN,
    initial_w: InitialW = InitialW.PROJECTED,
    solver: SolverChoice = SolverChoice.AUTO,
    tableau: ButcherTableau = RK4,
) -> float:
    """Worst impulse drift of a relaxed run recording every step."""
    records = conservation_run(
        k, domain, n_cells, dt, t_end,
        relaxation=True, ic=ic, record_every=1, tableau=tableau, initial_w=initial_w, solver=solver,
    )
    return max_impulse_error(records)


def step_for_cell(k: int, n_cells: int, grid: list[int], preset: dict, fixed: Optional[float] = None) -> float:
    """Fixed --dt, else the finest-grid override, else the per-degree preset."""
    if fixed is not None:
        return fixed
    finest = preset.get("finest_dt", {})
    if n_cells == max(grid) and str(k) in finest:
        return finest[str(k)]
    return preset["dt"][str(k)]


class ImpulsePipeline:
    """Impulse error and rate table for a set of degrees."""

    def __init__(self, config: RunConfig, presets: dict = None, save: bool = True):
        self.start = datetime.datetime.now()
        self.config = config
        presets = presets or load_presets()
        section = presets["impulse"]
        scale = "full" if config.paper_scale else "desk"
        preset = section[scale]

        log.header("IMPULSE RATES: max |I(t) - I(0)|")

        if not config.relaxation:
            log.warn("Impulse rates are measured on relaxed runs; --no-relax is ignored")
        self.domain = config.domain
        self.t_end = config.t_end or preset["t_end"]
        self.grids = {k: sorted(config.n_cells or preset["grids"][str(k)]) for k in config.degrees}
        self.steps = {
            (k, n): step_for_cell(k, n, grid, preset, config.dt)
            for k, grid in self.grids.items() for n in grid
        }
        cells = list(self.steps)
        log.step(f"Processing {len(cells)} cells ({scale} scale) on {self.domain}, T={self.t_end}")

        errors = run_sweep(
            cells,
            lambda k, n: impulse_error(
                k, n, self.domain, self.steps[(k, n)], self.t_end,
                ic=config.ic, initial_w=config.initial_w, solver=config.solver,
                tableau=TABLEAUX[config.tableau.value],
            ),
            workers=config.workers,
            describe=lambda e: f"impulse error {e:.3e}",
        )
        by_cell = dict(zip(sorted(cells), errors))

        self.rows = []
        summary = []
        length = self.domain[1] - self.domain[0]
        for k in config.degrees:
            grid = self.grids[k]
            errs = [by_cell[(k, n)] for n in grid]
            rows = rate_rows(k, grid, [length / n for n in grid], errs, ErrorKind.IMPULSE)
            expected = theory_rate(ErrorKind.IMPULSE, k)
            self.rows.extend(rows)
            summary.append((
                f"k={k}",
                f"finest {log.rate_verdict(rows[-1].rate, expected)}, "
                f"fitted {format_rate(least_squares_rate(grid, errs))}, theory {expected}",
            ))

        self.frame = rows_to_frame(self.rows)
        self.output_path = None
        if save:
            log.step("Writing report...")
            report = CsvReport(config)
            report.add_header("domain_used", f"{self.domain[0]},{self.domain[1]}")
            report.add_header("t_end_used", self.t_end)
            report.add_header("dt_used", ";".join(f"k{k}N{n}={dt}" for (k, n), dt in sorted(self.steps.items())))
            report.set_frame(self.frame)
            self.output_path = report.save(config.output or "impulse_rates.csv")
            log.info(f"Saved {self.output_path}")

        elapsed = datetime.datetime.now() - self.start
        summary.append(("Elapsed", str(elapsed)))
        log.summary_table("Impulse Rates Summary", summary)
        log.ok("Impulse rates complete")


def main():
    from experiments.cli import main as cli_main
    sys.exit(cli_main(["impulse-rates"] + sys.argv[1:]))


if __name__ == "__main__":
    main()
