"""Tests for Pydantic data models (RunConfig, Invariants, StepRecord, RateRow)."""

import pytest
from pydantic import ValidationError

from fem.structured_linalg import SolverChoice
from models import Command, ErrorKind, InitialCondition, Invariants, RateRow, RunConfig, StepRecord, TableauName


# ---------------------------------------------------------------------------
# RunConfig
# ---------------------------------------------------------------------------

class TestRunConfig:
    def test_defaults(self):
        c = RunConfig(command="dichotomy-rates")
        assert c.command is Command.DICHOTOMY_RATES
        assert c.degrees == [1]
        assert c.n_cells == []
        assert c.domain == (0.0, 1.0)
        assert c.relaxation is True
        assert c.record_every == 1
        assert c.ic is InitialCondition.GAUSSIAN
        assert c.solver is SolverChoice.AUTO
        assert c.tableau is TableauName.RK4

    def test_degree_out_of_range_raises(self):
        with pytest.raises(ValidationError):
            RunConfig(command="dichotomy-rates", degrees=[0])
        with pytest.raises(ValidationError):
            RunConfig(command="dichotomy-rates", degrees=[8])

    def test_empty_degrees_raises(self):
        with pytest.raises(ValidationError):
            RunConfig(command="rlw-converge", degrees=[])

    def test_non_positive_cells_raises(self):
        with pytest.raises(ValidationError):
            RunConfig(command="dichotomy-rates", n_cells=[10, 0])

    def test_reversed_domain_raises(self):
        with pytest.raises(ValidationError):
            RunConfig(command="conserve", domain=(1.0, -1.0))

    def test_non_positive_times_raise(self):
        with pytest.raises(ValidationError):
            RunConfig(command="conserve", dt=0.0)
        with pytest.raises(ValidationError):
            RunConfig(command="conserve", t_end=-1.0)

    def test_record_every_must_be_positive(self):
        with pytest.raises(ValidationError):
            RunConfig(command="conserve", record_every=0)

    def test_unknown_solver_raises(self):
        with pytest.raises(ValidationError):
            RunConfig(command="conserve", solver="cholesky")

    def test_solver_and_tableau_parse_from_strings(self):
        c = RunConfig(command="conserve", solver="banded", tableau="ssprk3")
        assert c.solver is SolverChoice.BANDED
        assert c.tableau is TableauName.SSPRK3
        items = dict(c.header_items())
        assert items["solver"] == "banded"
        assert items["tableau"] == "ssprk3"

    def test_unknown_tableau_raises(self):
        with pytest.raises(ValidationError):
            RunConfig(command="conserve", tableau="euler")

    def test_unknown_command_raises(self):
        with pytest.raises(ValidationError):
            RunConfig(command="plot")

    def test_conserve_takes_one_degree(self):
        with pytest.raises(ValidationError):
            RunConfig(command="conserve", degrees=[1, 2])

    def test_header_items_join_lists(self):
        c = RunConfig(command="impulse-rates", degrees=[1, 3], n_cells=[100, 200])
        items = dict(c.header_items())
        assert items["command"] == "impulse-rates"
        assert items["degrees"] == "1,3"
        assert items["n_cells"] == "100,200"
        assert items["dt"] == ""
        assert items["domain"] == "0.0,1.0"


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

class TestStepRecord:
    def test_fields(self):
        r = StepRecord(t=0.5, gamma=1.0, invariants=Invariants(mass=1.0, impulse=2.0, energy=3.0))
        assert r.invariants.energy == 3.0
        assert r.newton_iters == 0

    def test_non_positive_gamma_raises(self):
        with pytest.raises(ValidationError):
            StepRecord(t=0.0, gamma=0.0, invariants=Invariants(mass=0.0, impulse=0.0, energy=0.0))

    def test_invariants_frozen(self):
        inv = Invariants(mass=1.0, impulse=2.0, energy=3.0)
        with pytest.raises(ValidationError):
            inv.mass = 5.0


class TestRateRow:
    def test_rate_defaults_none(self):
        row = RateRow(k=1, n_cells=10, h=0.1, error=1e-3)
        assert row.rate is None
        assert row.kind is ErrorKind.DICHOTOMY

    def test_missing_error_raises(self):
        with pytest.raises(ValidationError):
            RateRow(k=1, n_cells=10, h=0.1)
