"""
Pydantic data models for the finite element experiments.

These models validate run configuration coming from the command line and
carry the records that flow from the time integrator and the rate sweeps
into the CSV writer.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fem.structured_linalg import SolverChoice

MAX_DEGREE = 7


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------

class Command(str, Enum):
    DICHOTOMY_RATES = "dichotomy-rates"
    RLW_CONVERGE = "rlw-converge"
    CONSERVE = "conserve"
    IMPULSE_RATES = "impulse-rates"
    THEORY_CHECK = "theory-check"


class InitialCondition(str, Enum):
    GAUSSIAN = "gaussian"
    SINE = "sine"


class InitialW(str, Enum):
    """How w(0) is formed: P[(PU0)_x] (consistent) or P[U0'] (analytic)."""
    PROJECTED = "projected"
    ANALYTIC = "analytic"


class TableauName(str, Enum):
    """Explicit Runge-Kutta methods shipped with the time integrator."""
    RK4 = "rk4"
    HEUN = "heun"
    SSPRK3 = "ssprk3"
    KUTTA38 = "kutta38"


class ErrorKind(str, Enum):
    U = "u"            # ||u - u_h||
    W = "w"            # ||u_x - w_h||
    UX = "ux"          # ||u_x - (u_h)_x||
    DICHOTOMY = "dichotomy"
    IMPULSE = "impulse"


# ---------------------------------------------------------------------------
# Simulation records
# ---------------------------------------------------------------------------

class Invariants(BaseModel):
    """Mass, impulse and energy of one state."""
    model_config = ConfigDict(frozen=True)

    mass: float
    impulse: float
    energy: float


class StepRecord(BaseModel):
    """One recorded step of a time integration."""
    model_config = ConfigDict(frozen=True)

    t: float
    gamma: float = Field(gt=0.0)
    invariants: Invariants
    newton_iters: int = 0


class RateRow(BaseModel):
    """One row of a convergence table; rate is empty on the first row of a sweep."""
    k: int
    n_cells: int
    h: float
    error: float
    rate: Optional[float] = None
    kind: ErrorKind = ErrorKind.DICHOTOMY


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

class RunConfig(BaseModel):
    """
    Validated configuration of one CLI command. Every field is echoed into the
    header of the CSV the command writes.
    """
    command: Command
    degrees: list[int] = Field(default_factory=lambda: [1])
    n_cells: list[int] = Field(default_factory=list)
    domain: tuple[float, float] = (0.0, 1.0)
    dt: Optional[float] = None
    t_end: Optional[float] = None
    relaxation: bool = True
    record_every: int = Field(default=1, ge=1)
    output: Optional[str] = None
    seed: Optional[int] = None
    ic: InitialCondition = InitialCondition.GAUSSIAN
    initial_w: InitialW = InitialW.PROJECTED
    solver: SolverChoice = SolverChoice.AUTO
    tableau: TableauName = TableauName.RK4
    workers: int = Field(default=1, ge=1)
    paper_scale: bool = False

    @field_validator("degrees")
    @classmethod
    def _check_degrees(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("at least one degree is required")
        bad = [k for k in value if not 1 <= k <= MAX_DEGREE]
        if bad:
            raise ValueError(f"degrees must lie in 1..{MAX_DEGREE}, got {bad}")
        return value

    @field_validator("n_cells")
    @classmethod
    def _check_cells(cls, value: list[int]) -> list[int]:
        bad = [n for n in value if n < 1]
        if bad:
            raise ValueError(f"cell counts must be positive, got {bad}")
        return value

    @field_validator("domain")
    @classmethod
    def _check_domain(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not value[0] < value[1]:
            raise ValueError(f"domain needs a < b, got {value}")
        return value

    @field_validator("dt", "t_end")
    @classmethod
    def _check_positive(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not value > 0.0:
            raise ValueError(f"must be positive, got {value}")
        return value

    @model_validator(mode="after")
    def _check_single_degree(self) -> "RunConfig":
        if self.command is Command.CONSERVE and len(self.degrees) != 1:
            raise ValueError("conserve runs one degree at a time")
        return self

    def header_items(self) -> list[tuple[str, str]]:
        """(key, value) pairs for the CSV provenance header."""
        items = []
        for key, value in self.model_dump(mode="json").items():
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            items.append((key, "" if value is None else str(value)))
        return items
