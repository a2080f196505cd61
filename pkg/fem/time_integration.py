"""
Explicit Runge-Kutta time stepping with optional relaxation.

A relaxation step rescales the Runge-Kutta update, y_{n+1} = y_n + gamma dt d,
choosing gamma so the energy of the RLW state is exactly the energy of y_n.
The energy is cubic in u, so E(u + eps du) - E(u) = a1 eps + a2 eps^2 + a3 eps^3
and, after removing the trivial root eps = 0, gamma solves a quadratic.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from fem.errors import DomainError, NoRealRootError, RootRejectedError, StructureError
from fem.rlw import RlwState, RlwSystem, assemble_rlw, functionals, ode_rhs
from fem.structured_linalg import SolverChoice
from models import StepRecord

logger = logging.getLogger(__name__)

GAMMA_WARN = 1e-6
MAX_GAMMA_DEVIATION = 0.5
MAX_NEWTON_ITERS = 10


# ---------------------------------------------------------------------------
# Butcher tableaux
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ButcherTableau:
    """Explicit Runge-Kutta method: strictly lower triangular a, weights b, nodes c."""
    name: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = a.sum(axis=1) if self.c is None else np.asarray(self.c, dtype=float)
        s = b.size
        if a.shape != (s, s) or c.shape != (s,):
            raise StructureError(f"Tableau {self.name}: inconsistent shapes {a.shape}, {b.shape}, {c.shape}")
        if np.any(np.triu(a) != 0.0):
            raise StructureError(f"Tableau {self.name} is not explicit")
        if abs(b.sum() - 1.0) > 1e-14:
            raise StructureError(f"Tableau {self.name}: weights sum to {b.sum()}")
        if np.max(np.abs(c - a.sum(axis=1))) > 1e-14:
            raise StructureError(f"Tableau {self.name}: nodes are not the row sums of a")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return self.b.size


RK4 = ButcherTableau(
    "rk4",
    a=[[0, 0, 0, 0], [0.5, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 1, 0]],
    b=[1 / 6, 1 / 3, 1 / 3, 1 / 6],
)
HEUN = ButcherTableau("heun", a=[[0, 0], [1, 0]], b=[0.5, 0.5])
SSPRK3 = ButcherTableau(
    "ssprk3",
    a=[[0, 0, 0], [1, 0, 0], [0.25, 0.25, 0]],
    b=[1 / 6, 1 / 6, 2 / 3],
)
KUTTA38 = ButcherTableau(
    "kutta38",
    a=[[0, 0, 0, 0], [1 / 3, 0, 0, 0], [-1 / 3, 1, 0, 0], [1, -1, 1, 0]],
    b=[1 / 8, 3 / 8, 3 / 8, 1 / 8],
)

TABLEAUX = {tab.name: tab for tab in (RK4, HEUN, SSPRK3, KUTTA38)}


# ---------------------------------------------------------------------------
# Runge-Kutta step
# ---------------------------------------------------------------------------

def rk_direction(
    f: Callable[[float, np.ndarray], np.ndarray],
    tab: ButcherTableau,
    y: np.ndarray,
    t: float,
    dt: float,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """
    Update direction d = sum_i b_i f_i of one explicit step for y' = f(t, y).

    Returns:
        (d, stage derivatives f_i)
    """
    if not dt > 0.0:
        raise DomainError(f"Time step must be positive, got {dt}")
    slopes: list[np.ndarray] = []
    for i in range(tab.stages):
        stage = y.copy()
        for j in range(i):
            if tab.a[i, j] != 0.0:
                stage += dt * tab.a[i, j] * slopes[j]
        slopes.append(f(t + tab.c[i] * dt, stage))
    d = np.zeros_like(y)
    for b_i, slope in zip(tab.b, slopes):
        d += b_i * slope
    return d, slopes


def rk_step(sys: RlwSystem, tab: ButcherTableau, y: RlwState, dt: float) -> tuple[np.ndarray, list[np.ndarray]]:
    """Stacked (u, w) update direction of one step of the RLW block ODE."""
    space = sys.space

    def rhs(t: float, stage: np.ndarray) -> np.ndarray:
        du, dw = ode_rhs(sys, RlwState.from_stacked(space, stage, t))
        return np.concatenate([du, dw])

    return rk_direction(rhs, tab, y.stacked(), y.t, dt)


# ---------------------------------------------------------------------------
# Relaxation parameter
# ---------------------------------------------------------------------------

def energy_expansion(sys: RlwSystem, y: RlwState, d: np.ndarray) -> tuple[float, float, float]:
    """(a1, a2, a3) with E(u + eps du) - E(u) = a1 eps + a2 eps^2 + a3 eps^3."""
    space = sys.space
    rule = space.nonlinear_quad
    u, _ = y.u.cell_values(rule)
    du, _ = space.coefficients_at(d[:space.n_dof], rule)
    a1 = space.integrate((u + 0.5 * u ** 2) * du, rule)
    a2 = space.integrate(0.5 * du ** 2 + 0.5 * u * du ** 2, rule)
    a3 = space.integrate(du ** 3 / 6.0, rule)
    return a1, a2, a3


def _quadratic_roots(a1: float, a2: float, a3: float) -> list[float]:
    """Real roots of a1 + a2 eps + a3 eps^2."""
    if a3 == 0.0:
        if a2 == 0.0:
            if a1 == 0.0:
                return []
            raise NoRealRootError("Energy increment is a nonzero constant")
        return [-a1 / a2]
    disc = a2 * a2 - 4.0 * a3 * a1
    if disc < 0.0:
        raise NoRealRootError(f"Negative discriminant {disc:.3e} in the relaxation equation")
    q = -0.5 * (a2 + math.copysign(math.sqrt(disc), a2))
    if q == 0.0:
        return [0.0]
    return [q / a3, a1 / q]


def solve_gamma_with_iterations(sys: RlwSystem, y: RlwState, d: np.ndarray, dt: float) -> tuple[float, int]:
    """Relaxation parameter and the number of Newton polishing iterations spent."""
    if not sys.is_autonomous:
        raise DomainError("Relaxation needs an unforced system")
    a1, a2, a3 = energy_expansion(sys, y, d)
    roots = _quadratic_roots(a1, a2, a3)
    if not roots:
        # energy is flat along d
        return 1.0, 0

    candidates = [eps / dt for eps in roots if eps / dt > 0.0]
    if not candidates:
        raise RootRejectedError(f"No positive relaxation root among {[eps / dt for eps in roots]}")
    gamma = min(candidates, key=lambda g: abs(g - 1.0))

    energy = functionals(y).energy
    tol = 1e-14 * max(1.0, abs(energy))
    iters = 0
    for _ in range(MAX_NEWTON_ITERS):
        eps = gamma * dt
        g = eps * (a1 + a2 * eps + a3 * eps ** 2)
        if abs(g) <= tol:
            break
        slope = dt * (a1 + 2.0 * a2 * eps + 3.0 * a3 * eps ** 2)
        if slope == 0.0:
            break
        gamma -= g / slope
        iters += 1

    if gamma <= 0.0 or abs(gamma - 1.0) > MAX_GAMMA_DEVIATION:
        raise RootRejectedError(f"Relaxation root gamma={gamma:.6g} rejected; reduce the time step")
    return gamma, iters


def solve_gamma(sys: RlwSystem, y: RlwState, d: np.ndarray, dt: float) -> float:
    """gamma with E(y + gamma dt d) = E(y)."""
    return solve_gamma_with_iterations(sys, y, d, dt)[0]


# ---------------------------------------------------------------------------
# Time loop
# ---------------------------------------------------------------------------

def evolve(
    sys: RlwSystem,
    tab: ButcherTableau,
    y0: RlwState,
    dt: float,
    t_end: float,
    relaxation: bool = True,
    record_every: int = 1,
    solver: Optional[SolverChoice] = None,
) -> tuple[list[StepRecord], RlwState]:
    """
    Integrate from y0.t to t_end.

    The initial state is always recorded, then every record_every accepted
    steps and the final step. The last step is shortened to reach t_end. With
    relaxation every step advances time by gamma * dt, so the final time
    misses t_end by the last step's |gamma - 1| * dt.

    Args:
        solver: Reassemble with another block solver before running
    """
    if not t_end > y0.t:
        raise DomainError(f"t_end={t_end} must exceed the initial time {y0.t}")
    if not dt > 0.0:
        raise DomainError(f"Time step must be positive, got {dt}")
    if record_every < 1:
        raise DomainError(f"record_every must be at least 1, got {record_every}")
    if solver is not None and SolverChoice(solver) is not sys.block.solver:
        sys = assemble_rlw(sys.space, sys.forcing, SolverChoice(solver))

    y = y0
    records = [StepRecord(t=y.t, gamma=1.0, invariants=functionals(y), newton_iters=0)]
    worst_gamma = 0.0
    n_steps = 0
    stop = t_end - 1e-9 * dt
    while y.t < stop:
        step = min(dt, t_end - y.t)
        d, _ = rk_step(sys, tab, y, step)
        gamma, iters = 1.0, 0
        if relaxation and np.any(d != 0.0):
            gamma, iters = solve_gamma_with_iterations(sys, y, d, step)
        y = y.advanced(d, gamma * step, gamma * step)
        n_steps += 1
        worst_gamma = max(worst_gamma, abs(gamma - 1.0))

        if n_steps % record_every == 0 or y.t >= stop:
            records.append(StepRecord(t=y.t, gamma=gamma, invariants=functionals(y), newton_iters=iters))

    if relaxation and worst_gamma > GAMMA_WARN:
        logger.warning(f"Relaxation parameter drifted by {worst_gamma:.3e}; consider a smaller time step")
    logger.debug(f"Integrated {n_steps} steps with {tab.name}, final t={y.t:.12g}")
    return records, y
