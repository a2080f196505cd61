"""
RLW Conservation Pipeline

Runs the unforced RLW equation from a Gaussian (or one-period sine) initial
condition and records the drift of mass, impulse and energy together with
the relaxation parameter. With relaxation on, mass and energy stay at
rounding level; --no-relax gives the plain RK4 contrast run.

Usage:
    python experiments/conservation.py                          # desk scale: [-50, 50], T = 20
    python experiments/conservation.py --paper-scale            # [-100, 100], T = 100
    python experiments/conservation.py --no-relax --t-end 5
    python experiments/conservation.py --k 3 --ic sine --domain 0,10
"""

import datetime
import sys
from pathlib import Path
from typing import Optional

import pandas as pd

sys.path.append(str(Path(__file__).parent.parent))

from utils import log
from utils.settings import ConfigError, load_presets
from experiments.output import CsvReport
from fem.basis import FeSpace, PeriodicMesh
from fem.rlw import assemble_rlw, gaussian, gaussian_derivative, initial_state, sine_wave
from fem.structured_linalg import SolverChoice
from fem.time_integration import RK4, TABLEAUX, ButcherTableau, evolve
from models import InitialCondition, InitialW, RunConfig, StepRecord

logger = log.setup_verbose_logging("conservation")

DRIFT_COLUMNS = ["t", "mass_drift", "impulse_drift", "energy_drift", "gamma_minus_one", "newton_iters"]


def cells_for_spacing(domain: tuple[float, float], h: float) -> int:
    n_cells = round((domain[1] - domain[0]) / h)
    if n_cells < 1:
        raise ConfigError(f"Spacing {h} is larger than the domain {domain}")
    return n_cells


def initial_condition(ic: InitialCondition, domain: tuple[float, float]):
    """(U0, U0') for a named initial condition."""
    if InitialCondition(ic) is InitialCondition.GAUSSIAN:
        return gaussian, gaussian_derivative
    return sine_wave(*domain)


def conservation_run(
    k: int,
    domain: tuple[float, float],
    n_cells: int,
    dt: float,
    t_end: float,
    relaxation: bool = True,
    ic: InitialCondition = InitialCondition.GAUSSIAN,
    record_every: int = 1,
    tableau: ButcherTableau = RK4,
    initial_w: InitialW = InitialW.PROJECTED,
    solver: SolverChoice = SolverChoice.AUTO,
) -> list[StepRecord]:
    """Step records of an unforced run, the initial state first."""
    space = FeSpace(PeriodicMesh(domain[0], domain[1], n_cells), k)
    sys_ = assemble_rlw(space, solver=solver)
    u0, u0_deriv = initial_condition(ic, domain)
    y0 = initial_state(sys_, u0, initial_w=initial_w, u0_deriv=u0_deriv)
    records, _ = evolve(sys_, tableau, y0, dt, t_end, relaxation=relaxation, record_every=record_every)
    return records


def drift_frame(records: list[StepRecord]) -> pd.DataFrame:
    """Absolute drift of each invariant from the first record."""
    first = records[0].invariants
    return pd.DataFrame.from_records(
        [
            {
                "t": r.t,
                "mass_drift": abs(r.invariants.mass - first.mass),
                "impulse_drift": abs(r.invariants.impulse - first.impulse),
                "energy_drift": abs(r.invariants.energy - first.energy),
                "gamma_minus_one": r.gamma - 1.0,
                "newton_iters": r.newton_iters,
            }
            for r in records
        ],
        columns=DRIFT_COLUMNS,
    )


def relative_drift(frame: pd.DataFrame, records: list[StepRecord], column: str, field: str) -> float:
    scale = abs(getattr(records[0].invariants, field))
    worst = float(frame[column].max())
    return worst / scale if scale > 0.0 else worst


class ConservationPipeline:
    """Time series of invariant drift for one degree."""

    def __init__(self, config: RunConfig, presets: dict = None, save: bool = True):
        self.start = datetime.datetime.now()
        self.config = config
        presets = presets or load_presets()
        preset = presets["conservation"]["full" if config.paper_scale else "desk"]

        log.header("RLW CONSERVATION: Mass, Impulse, Energy")

        self.k = config.degrees[0]
        self.domain = config.domain
        self.n_cells = config.n_cells[0] if config.n_cells else cells_for_spacing(self.domain, preset["h"])
        self.dt = config.dt or preset["dt"]
        self.t_end = config.t_end or preset["t_end"]
        log.step(
            f"k={self.k}, domain={self.domain}, N={self.n_cells}, dt={self.dt}, T={self.t_end}, "
            f"ic={config.ic.value}, tableau={config.tableau.value}, relaxation={'on' if config.relaxation else 'off'}"
        )

        self.records = conservation_run(
            self.k, self.domain, self.n_cells, self.dt, self.t_end,
            relaxation=config.relaxation, ic=config.ic, record_every=config.record_every,
            initial_w=config.initial_w, solver=config.solver, tableau=TABLEAUX[config.tableau.value],
        )
        self.frame = drift_frame(self.records)

        self.mass_drift = relative_drift(self.frame, self.records, "mass_drift", "mass")
        self.energy_drift = relative_drift(self.frame, self.records, "energy_drift", "energy")
        self.impulse_error = float(self.frame["impulse_drift"].max())
        self.gamma_deviation = float(self.frame["gamma_minus_one"].abs().max())

        self.output_path: Optional[Path] = None
        if save:
            log.step("Writing report...")
            report = CsvReport(config)
            report.add_header("n_cells_used", self.n_cells)
            report.add_header("domain_used", f"{self.domain[0]},{self.domain[1]}")
            report.add_header("dt_used", self.dt)
            report.add_header("t_end_used", self.t_end)
            report.set_frame(self.frame)
            self.output_path = report.save(config.output or "conservation.csv")
            log.info(f"Saved {self.output_path}")

        elapsed = datetime.datetime.now() - self.start
        log.summary_table("Conservation Summary", [
            ("Records", str(len(self.records))),
            ("Final time", f"{self.records[-1].t:.12g}"),
            ("Relative mass drift", f"{self.mass_drift:.3e}"),
            ("Relative energy drift", f"{self.energy_drift:.3e}"),
            ("Max impulse error", f"{self.impulse_error:.3e}"),
            ("Max |gamma - 1|", f"{self.gamma_deviation:.3e}"),
            ("Elapsed", str(elapsed)),
        ])
        log.ok("Conservation run complete")


def main():
    from experiments.cli import main as cli_main
    sys.exit(cli_main(["conserve"] + sys.argv[1:]))


if __name__ == "__main__":
    main()
