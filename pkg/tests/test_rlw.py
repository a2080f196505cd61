"""Tests for the mixed RLW semi-discretization."""

import math

import numpy as np
import pytest

from fem.basis import FeFunction, FeSpace, PeriodicMesh
from fem.errors import DomainError
from fem.projection import l2_project
from fem.rlw import (
    RlwState,
    assemble_rlw,
    auxiliary_z,
    functionals,
    gaussian,
    gaussian_derivative,
    initial_state,
    manufactured_derivative,
    manufactured_errors,
    manufactured_forcing,
    manufactured_solution,
    ode_rhs,
    sine_wave,
    w_defect,
)
from fem.structured_linalg import MatrixKind
from models import InitialW


# ---------------------------------------------------------------------------
# Manufactured solution
# ---------------------------------------------------------------------------

class TestManufacturedSolution:
    def test_forcing_at_origin(self):
        expected = -2.0 * math.pi - 16.0 * math.pi ** 3
        assert manufactured_forcing(0.0, 0.0) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("x,t", [(0.1, 0.0), (0.37, 0.4), (0.8, 0.9)])
    def test_forcing_matches_finite_differences(self, x, t):
        eps = 1e-5
        u = manufactured_solution(x, t)
        u_t = (manufactured_solution(x, t + eps) - manufactured_solution(x, t - eps)) / (2 * eps)
        u_x = (manufactured_solution(x + eps, t) - manufactured_solution(x - eps, t)) / (2 * eps)
        # u_xx = -(2 pi)^2 u for this solution
        u_xxt = -(2 * math.pi) ** 2 * u_t
        residual = u_t + u_x + u * u_x - u_xxt
        assert manufactured_forcing(x, t) == pytest.approx(residual, rel=1e-6)

    def test_derivative_matches_finite_difference(self):
        eps = 1e-6
        fd = (manufactured_solution(0.3 + eps, 0.2) - manufactured_solution(0.3 - eps, 0.2)) / (2 * eps)
        assert manufactured_derivative(0.3, 0.2) == pytest.approx(fd, rel=1e-7)

    def test_periodic_in_space(self):
        x = np.array([0.05, 0.5])
        np.testing.assert_allclose(manufactured_solution(x + 1.0, 0.3), manufactured_solution(x, 0.3), atol=1e-12)


class TestInitialData:
    def test_gaussian_derivative(self):
        eps = 1e-6
        fd = (gaussian(1.2 + eps) - gaussian(1.2 - eps)) / (2 * eps)
        assert gaussian_derivative(1.2) == pytest.approx(fd, rel=1e-7)

    def test_sine_wave_is_one_period(self):
        f, df = sine_wave(-2.0, 2.0)
        assert f(-2.0) == pytest.approx(0.0, abs=1e-15)
        assert f(-1.0) == pytest.approx(1.0)
        assert df(-2.0) == pytest.approx(2.0 * math.pi / 4.0)


# ---------------------------------------------------------------------------
# System assembly and state
# ---------------------------------------------------------------------------

class TestRlwSystem:
    def test_linear_uses_fft(self, small_rlw):
        sys_, _ = small_rlw(k=1)
        assert sys_.block.kind is MatrixKind.CIRCULANT
        assert sys_.is_autonomous

    def test_banded_for_quadratic(self, small_rlw):
        sys_, _ = small_rlw(k=2, n_cells=20)
        assert sys_.block.kind is MatrixKind.PERIODIC_BANDED

    def test_forced_system_not_autonomous(self):
        space = FeSpace(PeriodicMesh(0.0, 1.0, 8), 2)
        assert not assemble_rlw(space, forcing=manufactured_forcing).is_autonomous

    def test_stacked_state(self, small_rlw):
        _, y = small_rlw(k=2, n_cells=10)
        stacked = y.stacked()
        assert stacked.shape == (2 * y.space.n_dof,)
        again = RlwState.from_stacked(y.space, stacked, 1.5)
        np.testing.assert_array_equal(again.u.coeffs, y.u.coeffs)
        assert again.t == 1.5

    def test_advanced_moves_time(self, small_rlw):
        _, y = small_rlw(k=1, n_cells=10)
        moved = y.advanced(np.ones(2 * y.space.n_dof), 0.5, 0.25)
        np.testing.assert_allclose(moved.u.coeffs, y.u.coeffs + 0.5)
        assert moved.t == 0.25


class TestInitialState:
    def test_projected_w_is_consistent(self, small_rlw):
        sys_, y = small_rlw(k=3, n_cells=12)
        assert w_defect(sys_, y) < 1e-12

    def test_analytic_w_differs_by_dichotomy_quantity(self, small_rlw):
        sys_, _ = small_rlw(k=2, n_cells=40)
        y = initial_state(sys_, gaussian, initial_w=InitialW.ANALYTIC, u0_deriv=gaussian_derivative)
        assert 0.0 < w_defect(sys_, y) < 5e-2

    def test_analytic_w_needs_derivative(self, small_rlw):
        sys_, _ = small_rlw(k=1)
        with pytest.raises(DomainError):
            initial_state(sys_, gaussian, initial_w=InitialW.ANALYTIC)

    def test_start_time(self, small_rlw):
        sys_, _ = small_rlw(k=1)
        assert initial_state(sys_, gaussian, t0=2.0).t == 2.0


# ---------------------------------------------------------------------------
# Right-hand side and functionals
# ---------------------------------------------------------------------------

class TestOdeRhs:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_mass_rate_vanishes(self, small_rlw, k):
        sys_, y = small_rlw(k=k, n_cells=16)
        du, _ = ode_rhs(sys_, y)
        rule = y.space.nonlinear_quad
        values, _ = y.space.coefficients_at(du, rule)
        assert abs(y.space.integrate(values, rule)) < 1e-12

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_energy_rate_vanishes(self, small_rlw, k):
        sys_, y = small_rlw(k=k, n_cells=16)
        du, _ = ode_rhs(sys_, y)
        space = y.space
        rule = space.nonlinear_quad
        u, _ = y.u.cell_values(rule)
        du_vals, _ = space.coefficients_at(du, rule)
        assert abs(space.integrate((u + 0.5 * u ** 2) * du_vals, rule)) < 1e-12

    def test_w_rate_is_projected_derivative_of_u_rate(self, small_rlw):
        sys_, y = small_rlw(k=2, n_cells=16)
        du, dw = ode_rhs(sys_, y)
        expected = sys_.gram.solve(y.space.convection_matrix @ du)
        np.testing.assert_allclose(dw, expected, atol=1e-12)

    def test_rhs_solves_block_system(self, small_rlw):
        sys_, y = small_rlw(k=2, n_cells=10)
        du, dw = ode_rhs(sys_, y)
        rhs = sys_.block.coupling @ auxiliary_z(sys_, y.u)
        lhs = sys_.block.matvec(np.concatenate([du, dw]))
        np.testing.assert_allclose(lhs, np.concatenate([rhs, np.zeros(y.space.n_dof)]), atol=1e-12)

    def test_fft_and_banded_agree(self, small_rlw):
        fft_sys, y = small_rlw(k=1, n_cells=32, solver="fft")
        banded_sys, _ = small_rlw(k=1, n_cells=32, solver="banded")
        for a, b in zip(ode_rhs(fft_sys, y), ode_rhs(banded_sys, y)):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_forcing_enters_first_equation(self):
        space = FeSpace(PeriodicMesh(0.0, 1.0, 8), 1)
        free = assemble_rlw(space)
        forced = assemble_rlw(space, forcing=lambda x, t: np.ones_like(x))
        y = initial_state(free, lambda x: 0.0 * np.asarray(x))
        du_free, _ = ode_rhs(free, y)
        du_forced, _ = ode_rhs(forced, y)
        np.testing.assert_allclose(du_free, 0.0, atol=1e-14)
        # constant forcing raises u uniformly
        np.testing.assert_allclose(du_forced, 1.0, atol=1e-12)


class TestFunctionals:
    def test_gaussian_invariants(self):
        space = FeSpace(PeriodicMesh(-30.0, 30.0, 300), 2)
        y = initial_state(assemble_rlw(space), gaussian)
        inv = functionals(y)
        assert inv.mass == pytest.approx(math.sqrt(10.0 * math.pi), rel=1e-6)
        expected_impulse = 0.5 * (math.sqrt(5.0 * math.pi) + 0.04 * 0.5 * math.sqrt(math.pi) * 5.0 ** 1.5)
        assert inv.impulse == pytest.approx(expected_impulse, rel=1e-4)
        expected_energy = 0.5 * (math.sqrt(5.0 * math.pi) + math.sqrt(10.0 * math.pi / 3.0) / 3.0)
        assert inv.energy == pytest.approx(expected_energy, rel=1e-5)

    def test_constant_state(self):
        space = FeSpace(PeriodicMesh(0.0, 1.0, 6), 2)
        u = FeFunction(space, np.full(space.n_dof, 2.0))
        inv = functionals(RlwState(u, space.zero()))
        assert inv.mass == pytest.approx(2.0, rel=1e-14)
        assert inv.impulse == pytest.approx(2.0, rel=1e-14)
        assert inv.energy == pytest.approx(10.0 / 3.0, rel=1e-14)

    def test_impulse_of_projected_sine(self, make_gram, sine):
        gram = make_gram(3, 64)
        state = RlwState(l2_project(gram, sine[0]), gram.space.zero())
        assert functionals(state).impulse == pytest.approx(0.5 * (0.5 + 2.0 * math.pi ** 2), abs=1e-6)

    def test_recomputation_is_deterministic(self, small_rlw):
        _, y = small_rlw(k=3, n_cells=10)
        assert functionals(y) == functionals(y)

    def test_manufactured_errors_small_at_start(self):
        space = FeSpace(PeriodicMesh(0.0, 1.0, 32), 3)
        sys_ = assemble_rlw(space, forcing=manufactured_forcing)
        y = initial_state(sys_, lambda x: manufactured_solution(x, 0.0))
        eu, ew, eux = manufactured_errors(y)
        assert eu < 1e-5
        assert ew < 1e-3
        assert eux < 1e-2
