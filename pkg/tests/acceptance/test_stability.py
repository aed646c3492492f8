import numpy as np
import pytest

from flrw_dust.background import CosmologyParams
from flrw_dust.evolution import Scenario, run
from flrw_dust.initial_data import Mode, PerturbationSpec

from ..conftest import de_sitter, dusty, make_run_config

pytestmark = pytest.mark.slow


class TestFlrwFixedPoint:
    """Test exact FLRW data stays exact over a long run."""

    @pytest.mark.parametrize("params", [de_sitter(), dusty()], ids=["de_sitter", "dusty"])
    def test_fixed_point(self, run_dir, params):
        """Test every perturbation variable and the gauge residual stay below 1e-9."""
        cfg = make_run_config(run_dir, params=params, dt=0.05, t_final=3.0, sample_every=10)
        result = run(cfg)
        assert result.report.scenario is Scenario.NONE
        assert result.final.t == 3.0
        assert float(np.max(np.abs(result.final.perturbation(params)))) <= 1e-9
        assert all(r.gauge_resid_max <= 1e-9 for r in result.records)
        assert all(r.norms.S_Total <= 1e-9 for r in result.records)


class TestSmallData:
    """Test small perturbations of FLRW stay small."""

    def test_norm_stays_bounded(self, run_dir):
        """Test amplitude-1e-3 data completes without breakdown and sup S_Total <= 5 S_Total(0)."""
        cfg = make_run_config(
            run_dir,
            params=dusty(),
            dt=0.05,
            t_final=2.0,
            sample_every=5,
            perturbation=PerturbationSpec(amplitude=1e-3, seed=11, random_modes=4),
        )
        result = run(cfg)
        assert result.report.scenario is Scenario.NONE
        totals = [r.norms.S_Total for r in result.records]
        assert totals[0] > 0.0
        assert max(totals) <= 5.0 * totals[0]
        assert all(r.gauge_resid_max < 1e-6 for r in result.records)


class TestBreakdown:
    """Test large data ends in a reported breakdown."""

    def test_collapsing_metric(self, run_dir):
        """Test a strongly contracting extrinsic curvature trips the monitor before any non-finite value."""
        cfg = make_run_config(
            run_dir,
            params=CosmologyParams(0.03, 0.0),
            dt=0.05,
            t_final=5.0,
            sample_every=10,
            perturbation=PerturbationSpec(amplitude=0.5, modes=(Mode((0, 1, 0), "K11", weight=2.0),)),
        )
        result = run(cfg)
        assert result.report.scenario is not Scenario.NONE
        assert result.report.scenario.exit_code in (10, 11, 12)
        assert result.final.t < 5.0
        assert result.final.is_finite()
