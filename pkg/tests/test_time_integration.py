"""Tests for Butcher tableaux, Runge-Kutta steps, the relaxation parameter and the time loop."""

import math

import numpy as np
import pytest

from fem.basis import FeSpace, PeriodicMesh
from fem.errors import DomainError, NoRealRootError, RootRejectedError, StructureError
from fem.rlw import assemble_rlw, functionals, gaussian, initial_state, manufactured_forcing
from fem.time_integration import (
    HEUN,
    KUTTA38,
    RK4,
    SSPRK3,
    TABLEAUX,
    ButcherTableau,
    _quadratic_roots,
    energy_expansion,
    evolve,
    rk_direction,
    rk_step,
    solve_gamma,
    solve_gamma_with_iterations,
)


# ---------------------------------------------------------------------------
# Butcher tableaux
# ---------------------------------------------------------------------------

class TestButcherTableau:
    def test_shipped_tableaux(self):
        assert set(TABLEAUX) == {"rk4", "heun", "ssprk3", "kutta38"}
        assert RK4.stages == 4
        np.testing.assert_allclose(RK4.c, [0.0, 0.5, 0.5, 1.0])
        np.testing.assert_allclose(SSPRK3.c, [0.0, 1.0, 0.5])

    def test_implicit_rejected(self):
        with pytest.raises(StructureError):
            ButcherTableau("bad", a=[[0.5, 0.0], [0.5, 0.0]], b=[0.5, 0.5])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(StructureError):
            ButcherTableau("bad", a=[[0.0, 0.0], [1.0, 0.0]], b=[0.5, 0.6])

    def test_inconsistent_nodes_rejected(self):
        with pytest.raises(StructureError):
            ButcherTableau("bad", a=[[0.0, 0.0], [1.0, 0.0]], b=[0.5, 0.5], c=[0.0, 0.5])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(StructureError):
            ButcherTableau("bad", a=[[0.0, 0.0], [1.0, 0.0]], b=[1.0])


class TestRkDirection:
    @pytest.mark.parametrize("tab", [RK4, KUTTA38])
    def test_one_step_matches_taylor_polynomial(self, tab):
        lam, dt = -0.7, 0.3
        y = np.array([2.0])
        d, slopes = rk_direction(lambda t, v: lam * v, tab, y, 0.0, dt)
        z = lam * dt
        expected = y * (z + z ** 2 / 2 + z ** 3 / 6 + z ** 4 / 24) / dt
        np.testing.assert_allclose(d, expected, rtol=1e-14)
        assert len(slopes) == 4

    @pytest.mark.parametrize("tab,order", [(HEUN, 2), (SSPRK3, 3), (RK4, 4), (KUTTA38, 4)])
    def test_global_order(self, tab, order):
        def solve(n_steps):
            y, t, dt = np.array([1.0]), 0.0, 1.0 / n_steps
            for _ in range(n_steps):
                d, _ = rk_direction(lambda s, v: np.cos(s) * v, tab, y, t, dt)
                y, t = y + dt * d, t + dt
            return abs(y[0] - math.exp(math.sin(1.0)))

        assert math.log2(solve(20) / solve(40)) == pytest.approx(order, abs=0.2)

    def test_time_dependent_stages(self):
        d, _ = rk_direction(lambda t, v: np.array([t]), RK4, np.zeros(1), 1.0, 0.5)
        # integral of t over [1, 1.5] divided by the step
        assert d[0] == pytest.approx(1.25)

    def test_non_positive_step_rejected(self):
        with pytest.raises(DomainError):
            rk_direction(lambda t, v: v, RK4, np.ones(1), 0.0, 0.0)


# ---------------------------------------------------------------------------
# Relaxation parameter
# ---------------------------------------------------------------------------

class TestQuadraticRoots:
    def test_zero_constant_term_gives_zero_root(self):
        roots = sorted(_quadratic_roots(0.0, 2.0, 1.0))
        assert roots == pytest.approx([-2.0, 0.0])

    def test_linear_case(self):
        assert _quadratic_roots(3.0, -2.0, 0.0) == pytest.approx([1.5])

    def test_flat_energy(self):
        assert _quadratic_roots(0.0, 0.0, 0.0) == []

    def test_negative_discriminant(self):
        with pytest.raises(NoRealRootError):
            _quadratic_roots(1.0, 0.0, 1.0)

    def test_nonzero_constant(self):
        with pytest.raises(NoRealRootError):
            _quadratic_roots(1.0, 0.0, 0.0)

    def test_stable_form_keeps_small_root_accurate(self):
        roots = sorted(_quadratic_roots(1e-12, -1.0, 1e-8))
        assert roots[0] == pytest.approx(1e-12, rel=1e-10)


class TestSolveGamma:
    def test_restores_energy(self, small_rlw):
        sys_, y = small_rlw(k=2, n_cells=40)
        dt = 0.1
        d, _ = rk_step(sys_, RK4, y, dt)
        gamma, iters = solve_gamma_with_iterations(sys_, y, d, dt)
        assert abs(gamma - 1.0) < 1e-3
        assert iters <= 10
        new = y.advanced(d, gamma * dt, gamma * dt)
        before, after = functionals(y).energy, functionals(new).energy
        assert abs(after - before) <= 1e-13 * abs(before)

    def test_energy_expansion_is_exact_cubic(self, small_rlw):
        sys_, y = small_rlw(k=1, n_cells=30)
        d, _ = rk_step(sys_, RK4, y, 0.1)
        a1, a2, a3 = energy_expansion(sys_, y, d)
        eps = 0.37
        change = functionals(y.advanced(d, eps, 0.0)).energy - functionals(y).energy
        assert change == pytest.approx(a1 * eps + a2 * eps ** 2 + a3 * eps ** 3, abs=1e-13)

    def test_gamma_one_for_zero_direction(self, small_rlw):
        sys_, y = small_rlw(k=1, n_cells=20)
        assert solve_gamma(sys_, y, np.zeros(2 * y.space.n_dof), 0.1) == 1.0

    def test_forced_system_rejected(self):
        space = FeSpace(PeriodicMesh(0.0, 1.0, 8), 1)
        sys_ = assemble_rlw(space, forcing=manufactured_forcing)
        y = initial_state(sys_, lambda x: np.sin(2 * np.pi * np.asarray(x)))
        d, _ = rk_step(sys_, RK4, y, 0.01)
        with pytest.raises(DomainError):
            solve_gamma(sys_, y, d, 0.01)

    def test_far_root_rejected(self, small_rlw):
        sys_, y = small_rlw(k=1, n_cells=20)
        # energy of a positive profile grows monotonically along u itself
        d = np.concatenate([y.u.coeffs, np.zeros(y.space.n_dof)])
        with pytest.raises((RootRejectedError, NoRealRootError)):
            solve_gamma(sys_, y, d, 0.1)


# ---------------------------------------------------------------------------
# Time loop
# ---------------------------------------------------------------------------

class TestEvolve:
    def test_records_and_final_time(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=40)
        records, y = evolve(sys_, RK4, y0, 0.05, 0.5, relaxation=False)
        assert records[0].t == 0.0
        assert len(records) == 11
        assert y.t == pytest.approx(0.5, abs=1e-12)
        assert all(r.gamma == 1.0 for r in records)

    def test_record_every_keeps_final_step(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=40)
        records, _ = evolve(sys_, RK4, y0, 0.05, 0.5, relaxation=False, record_every=4)
        assert [round(r.t, 10) for r in records] == [0.0, 0.2, 0.4, 0.5]

    def test_last_step_shortened(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=40)
        records, y = evolve(sys_, RK4, y0, 0.2, 0.5, relaxation=False)
        assert y.t == pytest.approx(0.5, abs=1e-12)
        assert len(records) == 4

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_relaxation_conserves_mass_and_energy(self, small_rlw, k):
        sys_, y0 = small_rlw(k=k, n_cells=30)
        records, _ = evolve(sys_, RK4, y0, 0.05, 1.0, relaxation=True)
        first = records[0].invariants
        for r in records:
            assert abs(r.invariants.mass - first.mass) <= 1e-12 * abs(first.mass)
            assert abs(r.invariants.energy - first.energy) <= 1e-12 * abs(first.energy)
            assert abs(r.gamma - 1.0) < 1e-3

    def test_plain_rk_drifts_more_than_relaxed(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=30)
        relaxed, _ = evolve(sys_, RK4, y0, 0.2, 2.0, relaxation=True)
        plain, _ = evolve(sys_, RK4, y0, 0.2, 2.0, relaxation=False)

        def drift(records):
            return max(abs(r.invariants.energy - records[0].invariants.energy) for r in records)

        assert drift(plain) > 10.0 * max(drift(relaxed), 1e-16)

    def test_solver_override_matches(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=32, solver="fft")
        _, fft = evolve(sys_, RK4, y0, 0.1, 0.5)
        _, banded = evolve(sys_, RK4, y0, 0.1, 0.5, solver="banded")
        np.testing.assert_allclose(fft.u.coeffs, banded.u.coeffs, atol=1e-10)

    def test_gamma_approaches_one_at_third_order(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=80)
        steps = np.array([0.2, 0.1, 0.05])
        worst = []
        for dt in steps:
            records, _ = evolve(sys_, RK4, y0, dt, 0.4, relaxation=True)
            worst.append(max(abs(r.gamma - 1.0) for r in records[1:]))
        slope = np.polyfit(np.log(steps), np.log(worst), 1)[0]
        assert slope >= 2.7

    def test_plain_rk_energy_drift_is_fourth_order(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=80)
        drifts = []
        for dt in (0.4, 0.2, 0.1):
            records, _ = evolve(sys_, RK4, y0, dt, 2.4, relaxation=False)
            e0 = records[0].invariants.energy
            drifts.append(max(abs(r.invariants.energy - e0) for r in records))
        assert math.log2(drifts[0] / drifts[1]) >= 3.5
        assert math.log2(drifts[1] / drifts[2]) >= 3.5

    def test_repeated_runs_are_bit_identical(self, small_rlw):
        sys_, y0 = small_rlw(k=2, n_cells=30)
        records_a, a = evolve(sys_, RK4, y0, 0.1, 1.0)
        records_b, b = evolve(sys_, RK4, y0, 0.1, 1.0)
        assert np.array_equal(a.u.coeffs, b.u.coeffs)
        assert np.array_equal(a.w.coeffs, b.w.coeffs)
        assert records_a == records_b

    def test_fft_and_banded_gamma_trajectories_agree(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=40, solver="fft")
        fft, _ = evolve(sys_, RK4, y0, 0.1, 1.0, relaxation=True)
        banded, _ = evolve(sys_, RK4, y0, 0.1, 1.0, relaxation=True, solver="banded")
        np.testing.assert_allclose([r.gamma for r in fft], [r.gamma for r in banded], rtol=0.0, atol=1e-9)
        np.testing.assert_allclose([r.t for r in fft], [r.t for r in banded], rtol=0.0, atol=1e-9)

    def test_end_before_start_rejected(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=10)
        with pytest.raises(DomainError):
            evolve(sys_, RK4, y0, 0.1, 0.0)

    def test_non_positive_step_rejected(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=10)
        with pytest.raises(DomainError):
            evolve(sys_, RK4, y0, -0.1, 1.0)

    def test_record_every_must_be_positive(self, small_rlw):
        sys_, y0 = small_rlw(k=1, n_cells=10)
        with pytest.raises(DomainError):
            evolve(sys_, RK4, y0, 0.1, 1.0, record_every=0)


@pytest.mark.slow
class TestConservationRun:
    def test_desk_scale_gaussian(self):
        space = FeSpace(PeriodicMesh(-50.0, 50.0, 1000), 1)
        sys_ = assemble_rlw(space)
        records, _ = evolve(sys_, RK4, initial_state(sys_, gaussian), 0.01, 20.0)
        first = records[0].invariants
        assert max(abs(r.invariants.mass - first.mass) for r in records) <= 1e-12 * abs(first.mass)
        assert max(abs(r.invariants.energy - first.energy) for r in records) <= 1e-12 * abs(first.energy)
        assert max(abs(r.invariants.impulse - first.impulse) for r in records) <= 1e-4
        assert max(abs(r.gamma - 1.0) for r in records) <= 1e-8

    def test_desk_scale_plain_rk_drifts_tenfold(self):
        space = FeSpace(PeriodicMesh(-50.0, 50.0, 1000), 1)
        sys_ = assemble_rlw(space)
        y0 = initial_state(sys_, gaussian)

        def drift(relaxation):
            records, _ = evolve(sys_, RK4, y0, 0.01, 20.0, relaxation=relaxation)
            e0 = records[0].invariants.energy
            return max(abs(r.invariants.energy - e0) for r in records)

        assert drift(False) >= 10.0 * drift(True)
