"""
Dichotomy Rates Pipeline

Measures ||P[(Pu - u)_x]|| for u = sin(2 pi x) on [0, 1] over the h-grids of
each degree and writes the pairwise convergence rates. Odd degrees gain an
order (rate 4 for k = 1, k + 1 otherwise); even degrees stay at rate k.

Usage:
    python experiments/dichotomy.py                      # k = 1..6 on the preset grids
    python experiments/dichotomy.py --k 1,2 --N 10,20,40
    python experiments/dichotomy.py --k 7                # preasymptotic, report only
"""

import datetime
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

sys.path.append(str(Path(__file__).parent.parent))

from utils import log
from utils.settings import load_presets
from experiments.output import CsvReport
from experiments.rates import format_rate, least_squares_rate, rate_rows, rows_to_frame, theory_rate
from experiments.sweep import run_sweep
from fem.basis import FeSpace, PeriodicMesh, ScalarFunction
from fem.projection import GramOperator, dichotomy_norm
from models import ErrorKind, RunConfig

logger = log.setup_verbose_logging("dichotomy")

# k = 7 reaches rounding level on the coarse grids
GATING_MAX_DEGREE = 6


def periodic_sine(a: float, b: float) -> ScalarFunction:
    return lambda x: np.sin(2.0 * math.pi * (np.asarray(x) - a) / (b - a))


def dichotomy_error(k: int, n_cells: int, domain: tuple[float, float] = (0.0, 1.0),
                    u: Optional[ScalarFunction] = None) -> float:
    """||P[(Pu - u)_x]|| on a uniform periodic mesh."""
    a, b = domain
    space = FeSpace(PeriodicMesh(a, b, n_cells), k)
    gram = GramOperator.build(space)
    return dichotomy_norm(gram, u if u is not None else periodic_sine(a, b))


class DichotomyPipeline:
    """
    Table of dichotomy errors and rates for a set of degrees.

    Grids come from --N when given, else from the per-degree presets.
    """

    def __init__(self, config: RunConfig, presets: dict = None, save: bool = True):
        self.start = datetime.datetime.now()
        self.config = config
        presets = presets or load_presets()
        section = presets["dichotomy"]

        log.header("DICHOTOMY RATES: ||P[(Pu - u)_x]||")

        self.domain = config.domain
        self.grids = {k: config.n_cells or section["grids"][str(k)] for k in config.degrees}
        cells = [(k, n) for k, grid in self.grids.items() for n in grid]
        log.step(f"Processing {len(cells)} cells for k = {', '.join(map(str, config.degrees))}")

        errors = run_sweep(
            cells,
            lambda k, n: dichotomy_error(k, n, self.domain),
            workers=config.workers,
            describe=lambda e: f"error {e:.6e}",
        )
        by_cell = dict(zip(sorted(cells), errors))

        self.rows = []
        summary = []
        for k in config.degrees:
            grid = sorted(self.grids[k])
            errs = [by_cell[(k, n)] for n in grid]
            hs = [(self.domain[1] - self.domain[0]) / n for n in grid]
            rows = rate_rows(k, grid, hs, errs, ErrorKind.DICHOTOMY)
            self.rows.extend(rows)
            finest = rows[-1].rate
            fitted = least_squares_rate(grid, errs)
            expected = theory_rate(ErrorKind.DICHOTOMY, k)
            summary.append((
                f"k={k}",
                f"finest {log.rate_verdict(finest, expected)}, fitted {format_rate(fitted)}, theory {expected}",
            ))
            if k > GATING_MAX_DEGREE:
                log.warn(f"k={k} rates are preasymptotic and limited by rounding; reported only")

        self.frame = rows_to_frame(self.rows)
        self.output_path = None
        if save:
            log.step("Writing report...")
            report = CsvReport(config)
            report.set_frame(self.frame)
            self.output_path = report.save(config.output or "dichotomy_rates.csv")
            log.info(f"Saved {self.output_path}")

        elapsed = datetime.datetime.now() - self.start
        summary.append(("Elapsed", str(elapsed)))
        log.summary_table("Dichotomy Rates Summary", summary)
        log.ok("Dichotomy rates complete")


def main():
    from experiments.cli import main as cli_main
    sys.exit(cli_main(["dichotomy-rates"] + sys.argv[1:]))


if __name__ == "__main__":
    main()
