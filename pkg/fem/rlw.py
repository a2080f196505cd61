"""
Mass- and energy-conserving mixed Galerkin semi-discretization of the
regularized long wave equation

    u_t + u_x + u u_x - u_xxt = f.

The unknowns are u_h and w_h = P[(u_h)_x]; z_h = P[u_h + u_h^2/2] is
eliminated by an inner Gram solve. Testing with the nodal basis gives

    A u' + B^T w' = B^T z + (f, phi)
    B^T u' + A w' = 0

with A the mass matrix and B_ij = (phi_i, phi_j').
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from fem.basis import FeFunction, FeSpace, ScalarFunction, sample
from fem.errors import DomainError
from fem.projection import GramOperator, l2_project, project_fe_derivative
from fem.structured_linalg import BlockSystem, SolverChoice
from models import InitialW, Invariants

logger = logging.getLogger(__name__)

Forcing = Callable[[np.ndarray, float], np.ndarray]

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# State and system
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class RlwState:
    """The pair (u_h, w_h) at time t."""
    u: FeFunction
    w: FeFunction
    t: float = 0.0

    @property
    def space(self) -> FeSpace:
        return self.u.space

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.u.coeffs, self.w.coeffs])

    @classmethod
    def from_stacked(cls, space: FeSpace, y: np.ndarray, t: float) -> "RlwState":
        n = space.n_dof
        return cls(FeFunction(space, y[:n].copy()), FeFunction(space, y[n:].copy()), t)

    def advanced(self, direction: np.ndarray, scale: float, elapsed: float) -> "RlwState":
        """State y + scale * direction at time t + elapsed."""
        return RlwState.from_stacked(self.space, self.stacked() + scale * direction, self.t + elapsed)


class RlwSystem:
    """
    Assembled and factorized RLW operator on one FeSpace.

    Args:
        space: Finite element space
        forcing: Optional right-hand side f(x, t)
        solver: Block solver selection (auto, fft, banded)
    """

    def __init__(self, space: FeSpace, forcing: Optional[Forcing] = None,
                 solver: SolverChoice = SolverChoice.AUTO):
        self.space = space
        self.forcing = forcing
        self.gram = GramOperator.build(space)
        self.block = BlockSystem(
            space.mass_matrix, space.convection_matrix, bandwidth=space.degree, solver=solver
        )
        logger.debug(
            f"RLW system: k={space.degree}, N={space.mesh.n_cells}, "
            f"solver={self.block.kind.value}, forced={forcing is not None}"
        )

    @property
    def is_autonomous(self) -> bool:
        return self.forcing is None


def assemble_rlw(space: FeSpace, forcing: Optional[Forcing] = None,
                 solver: SolverChoice = SolverChoice.AUTO) -> RlwSystem:
    return RlwSystem(space, forcing=forcing, solver=SolverChoice(solver))


# ---------------------------------------------------------------------------
# Right-hand side and functionals
# ---------------------------------------------------------------------------

def auxiliary_z(sys: RlwSystem, u: FeFunction) -> np.ndarray:
    """Coefficients of z_h = P[u + u^2/2], integrated exactly."""
    space = sys.space
    rule = space.nonlinear_quad
    values, _ = u.cell_values(rule)
    return sys.gram.solve(space.load_vector(values + 0.5 * values ** 2, rule))


def ode_rhs(sys: RlwSystem, y: RlwState) -> tuple[np.ndarray, np.ndarray]:
    """(du/dt, dw/dt) of the block system at state y."""
    space = sys.space
    rhs = sys.block.coupling @ auxiliary_z(sys, y.u)
    if sys.forcing is not None:
        rule = space.error_quad
        x = space.quad_points(rule)
        rhs = rhs + space.load_vector(np.asarray(sys.forcing(x, y.t), dtype=float), rule)
    return sys.block.solve(np.concatenate([rhs, np.zeros(space.n_dof)]))


def functionals(state: RlwState) -> Invariants:
    """Mass, impulse (broken derivative) and energy by the degree-3k exact rule."""
    space = state.space
    rule = space.nonlinear_quad
    values, derivs = state.u.cell_values(rule)
    return Invariants(
        mass=space.integrate(values, rule),
        impulse=0.5 * space.integrate(values ** 2 + derivs ** 2, rule),
        energy=0.5 * space.integrate(values ** 2 + values ** 3 / 3.0, rule),
    )


def w_defect(sys: RlwSystem, state: RlwState) -> float:
    """||w_h - P[(u_h)_x]||."""
    target = project_fe_derivative(sys.gram, state.u)
    return sys.gram.norm(state.w.coeffs - target.coeffs)


def initial_state(
    sys: RlwSystem,
    u0: ScalarFunction,
    initial_w: InitialW = InitialW.PROJECTED,
    u0_deriv: Optional[ScalarFunction] = None,
    t0: float = 0.0,
) -> RlwState:
    """
    u_h(0) = P U0. w_h(0) = P[(P U0)_x] by default, or P[U0'] when requested,
    which needs the analytic derivative.
    """
    u = l2_project(sys.gram, u0)
    if InitialW(initial_w) is InitialW.PROJECTED:
        w = project_fe_derivative(sys.gram, u)
    else:
        if u0_deriv is None:
            raise DomainError("Analytic initial w needs the derivative of U0")
        w = l2_project(sys.gram, u0_deriv)
    return RlwState(u, w, t0)


# ---------------------------------------------------------------------------
# Manufactured solution and initial data
# ---------------------------------------------------------------------------

def manufactured_solution(x, t: float):
    """u(x, t) = e^t sin(2 pi (x - 2t))."""
    return np.exp(t) * np.sin(TWO_PI * (np.asarray(x) - 2.0 * t))


def manufactured_derivative(x, t: float):
    return TWO_PI * np.exp(t) * np.cos(TWO_PI * (np.asarray(x) - 2.0 * t))


def manufactured_forcing(x, t: float):
    """f = u_t + u_x + u u_x - u_xxt for the manufactured solution."""
    phase = TWO_PI * (np.asarray(x) - 2.0 * t)
    s, c = np.sin(phase), np.cos(phase)
    et = np.exp(t)
    u_t = et * (s - 2.0 * TWO_PI * c)
    u_x = TWO_PI * et * c
    u_ux = TWO_PI * et * et * s * c
    u_xxt = -(TWO_PI ** 2) * u_t
    return u_t + u_x + u_ux - u_xxt


def gaussian(x):
    """U0(x) = exp(-x^2 / 10)."""
    return np.exp(-np.asarray(x) ** 2 / 10.0)


def gaussian_derivative(x):
    x = np.asarray(x)
    return -0.2 * x * np.exp(-x ** 2 / 10.0)


def sine_wave(a: float, b: float) -> tuple[ScalarFunction, ScalarFunction]:
    """One period of sin over [a, b] and its derivative."""
    k = TWO_PI / (b - a)
    return (lambda x: np.sin(k * (np.asarray(x) - a)),
            lambda x: k * np.cos(k * (np.asarray(x) - a)))


def manufactured_errors(state: RlwState) -> tuple[float, float, float]:
    """(||u - u_h||, ||u_x - w_h||, ||u_x - (u_h)_x||) at state.t."""
    space = state.space
    rule = space.error_quad
    x = space.quad_points(rule)
    exact = sample(lambda p: manufactured_solution(p, state.t), x)
    exact_x = sample(lambda p: manufactured_derivative(p, state.t), x)
    u_vals, u_ders = state.u.cell_values(rule)
    w_vals, _ = state.w.cell_values(rule)
    return (
        math.sqrt(space.integrate((u_vals - exact) ** 2, rule)),
        math.sqrt(space.integrate((w_vals - exact_x) ** 2, rule)),
        math.sqrt(space.integrate((u_ders - exact_x) ** 2, rule)),
    )
