"""
Command-line entry point for the experiment pipelines.

Usage:
    python -m experiments.cli dichotomy-rates --k 1,2,3
    python -m experiments.cli rlw-converge --k 3 --N 16,32,64
    python -m experiments.cli conserve --no-relax --t-end 5
    python -m experiments.cli conserve --tableau ssprk3 --dt 0.005
    python -m experiments.cli impulse-rates --paper-scale --workers 4
    python -m experiments.cli theory-check

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

sys.path.append(str(Path(__file__).parent.parent))

from utils import log
from utils.settings import ConfigError, Settings, configure_logging, load_presets
from fem.errors import FemError, StepPolicyError
from models import Command, InitialCondition, InitialW, RunConfig, TableauName

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# Per-command defaults when --k or --relax are not given
DEFAULT_DEGREES = {
    Command.DICHOTOMY_RATES: [1, 2, 3, 4, 5, 6],
    Command.RLW_CONVERGE: [1, 2, 3, 4, 5, 6],
    Command.CONSERVE: [1],
    Command.IMPULSE_RATES: [1, 2, 3, 4],
    Command.THEORY_CHECK: [1, 2, 3, 4, 5, 6, 7],
}
DEFAULT_RELAXATION = {
    Command.DICHOTOMY_RATES: False,
    Command.RLW_CONVERGE: False,
    Command.CONSERVE: True,
    Command.IMPULSE_RATES: True,
    Command.THEORY_CHECK: False,
}
DESCRIPTIONS = {
    Command.DICHOTOMY_RATES: "Convergence rates of ||P[(Pu - u)_x]|| per degree",
    Command.RLW_CONVERGE: "Manufactured-solution convergence of the mixed RLW scheme",
    Command.CONSERVE: "Mass, impulse and energy drift of an unforced RLW run",
    Command.IMPULSE_RATES: "Convergence rates of the impulse error of relaxed runs",
    Command.THEORY_CHECK: "psi identities and node-value Gram eigenvalues",
}


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _domain(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected a,b, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two numbers a,b, got {text!r}")


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=_int_list, help="Polynomial degrees, comma separated (e.g. 1,2,3)")
    parser.add_argument("--N", dest="n_cells", type=_int_list, help="Cell counts, comma separated (e.g. 10,20,40)")
    parser.add_argument("--domain", type=_domain, help="Periodic interval a,b")
    parser.add_argument("--dt", type=float, help="Fixed time step")
    parser.add_argument("--t-end", type=float, help="Final time")
    parser.add_argument("--relax", action=argparse.BooleanOptionalAction, default=None,
                        help="Relaxation Runge-Kutta on/off (default depends on the command)")
    parser.add_argument("--out", dest="output", help="Output CSV file (default: output/<command>.csv)")
    parser.add_argument("--paper-scale", action="store_true", help="Use the full-size presets")
    parser.add_argument("--record-every", type=int, default=1, help="Record invariants every n steps")
    parser.add_argument("--workers", type=int, default=Settings.WORKERS, help="Concurrent (k, N) cells")
    parser.add_argument("--solver", choices=["auto", "fft", "banded"], default="auto", help="Block solver")
    parser.add_argument("--tableau", choices=[t.value for t in TableauName], default=TableauName.RK4.value,
                        help="Explicit Runge-Kutta method of the time-stepping commands")
    parser.add_argument("--seed", type=int, help="Recorded in the report header")
    parser.add_argument("--ic", choices=[c.value for c in InitialCondition], default=InitialCondition.GAUSSIAN.value,
                        help="Initial condition of unforced runs")
    parser.add_argument("--initial-w", choices=[w.value for w in InitialW], default=InitialW.PROJECTED.value,
                        help="w(0) = P[(PU0)_x] (projected) or P[U0'] (analytic)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Finite element experiments for the periodic L2 projection and the RLW equation")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in Command:
        _add_common_arguments(subparsers.add_parser(command.value, help=DESCRIPTIONS[command]))
    return parser


def config_from_args(args: argparse.Namespace, presets: dict) -> RunConfig:
    """Fill per-command defaults and validate."""
    command = Command(args.command)
    domain = args.domain
    if domain is None and command is Command.CONSERVE:
        domain = tuple(presets["conservation"]["full" if args.paper_scale else "desk"]["domain"])
    elif domain is None and command is Command.IMPULSE_RATES:
        domain = tuple(presets["impulse"]["domain"])

    values = dict(
        command=command,
        degrees=args.k or DEFAULT_DEGREES[command],
        n_cells=args.n_cells or [],
        dt=args.dt,
        t_end=args.t_end,
        relaxation=DEFAULT_RELAXATION[command] if args.relax is None else args.relax,
        record_every=args.record_every,
        output=args.output,
        seed=args.seed,
        ic=args.ic,
        initial_w=args.initial_w,
        solver=args.solver,
        tableau=args.tableau,
        workers=args.workers,
        paper_scale=args.paper_scale,
    )
    if domain is not None:
        values["domain"] = domain
    return RunConfig(**values)


def _pipelines() -> dict:
    from experiments.conservation import ConservationPipeline
    from experiments.dichotomy import DichotomyPipeline
    from experiments.impulse import ImpulsePipeline
    from experiments.rlw_convergence import RlwConvergencePipeline
    from experiments.theory_check import TheoryCheckPipeline

    return {
        Command.DICHOTOMY_RATES: DichotomyPipeline,
        Command.RLW_CONVERGE: RlwConvergencePipeline,
        Command.CONSERVE: ConservationPipeline,
        Command.IMPULSE_RATES: ImpulsePipeline,
        Command.THEORY_CHECK: TheoryCheckPipeline,
    }


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()

    try:
        presets = load_presets()
        config = config_from_args(args, presets)
    except (ValidationError, ConfigError) as e:
        log.err(f"Invalid configuration: {e}")
        return EXIT_CONFIG

    try:
        _pipelines()[config.command](config, presets=presets)
    except (ConfigError, StepPolicyError) as e:
        log.err(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except FemError as e:
        log.err(f"{config.command.value} failed: {e}")
        logger.exception(f"Numerical failure in {config.command.value}")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
