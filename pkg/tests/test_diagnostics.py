import dataclasses
import math
from types import SimpleNamespace

import numpy as np
import pytest

from flrw_dust.background import background_closed_form
from flrw_dust.diagnostics import (
    CSV_COLUMNS,
    RATIO_PAIRS,
    DiagnosticsRecord,
    DiagnosticsWriter,
    EnergyConstants,
    EnergySet,
    NormConfig,
    NormSet,
    RatioDriftTracker,
    compute_energies,
    compute_norms,
    du_apply,
    du_commutator_max,
    energy_block,
    fit_decay,
    kinematics,
    norm_energy_ratio,
    read_csv,
    select_columns,
    truncate_csv,
)
from flrw_dust.error import MissingColumn, NonCoerciveWarning, WindowTooShort
from flrw_dust.evolution import Scenario, sample

from .conftest import de_sitter, dusty, make_flrw_state, make_perturbed_state

TWO_PI_32 = (2.0 * math.pi) ** 1.5


def _filled(cls, value: float):
    return cls(**{f.name: value for f in dataclasses.fields(cls)})


@pytest.fixture(scope="module")
def record():
    """Provide one diagnostics sample of perturbed data."""
    params = dusty()
    state = make_perturbed_state(params)
    return sample(state, background_closed_form(params, 0.0), params, NormConfig(), 0)


class TestNormConfig:
    """Test norm configuration checks."""

    def test_defaults_valid(self):
        """Test the default q, order and constants are accepted."""
        assert NormConfig().problems() == []

    def test_problems(self):
        """Test q, order and coercivity violations are all listed."""
        cfg = NormConfig(q=0.2, sobolev_order=5, energy_constants=EnergyConstants(g00=(2.0, 3.0)))
        problems = cfg.problems()
        assert len(problems) == 3
        assert any("g00" in p for p in problems)


class TestNorms:
    """Test the S-norm hierarchy."""

    def test_flrw_is_zero(self):
        """Test every norm vanishes on exact FLRW."""
        params = dusty()
        norms = compute_norms(make_flrw_state(params), background_closed_form(params, 0.0), params)
        assert all(v == pytest.approx(0.0, abs=1e-12) for v in dataclasses.asdict(norms).values())

    def test_uniform_lapse_offset(self):
        """Test g00 = −1 + c gives S_g00 = |c|(2π)^{3/2} at t = 0."""
        params = de_sitter()
        state = make_flrw_state(params)
        data = state.data.copy()
        data[0] = -1.0 - 0.01
        norms = compute_norms(state.replace(0.0, data), background_closed_form(params, 0.0), params)
        assert norms.S_g00 == pytest.approx(0.01 * TWO_PI_32, rel=1e-10)
        assert norms.S_h == pytest.approx(0.0, abs=1e-14)

    def test_density_weight(self):
        """Test S_rho is the unweighted H^{N−1} norm of ϱ − ϱ̄."""
        params = dusty()
        state = make_flrw_state(params, t=0.5)
        data = state.data.copy()
        data[20] += 0.02
        norms = compute_norms(state.replace(0.5, data), background_closed_form(params, 0.5), params)
        assert norms.S_rho == pytest.approx(0.02 * TWO_PI_32, rel=1e-10)

    def test_aggregates(self, record):
        """Test the composite norms are sums of their parts."""
        n = record.norms
        assert n.S_g == pytest.approx(n.S_g00 + n.S_g0 + n.S_h)
        assert n.S_belowtop == pytest.approx(n.S_g + n.S_u + n.S_rho)
        assert n.S_Total == pytest.approx(n.S_belowtop + n.S_belowtop_du + n.S_ell + n.S_u_top)


class TestEnergies:
    """Test the energy functionals."""

    def test_gradient_energy_on_minkowski(self, grid16):
        """Test E² of sin(x¹) with (γ, δ) = (0, 0) is 2π³."""
        x = grid16.coords[0]
        gu00 = -np.ones(grid16.shape)
        gusp = np.eye(3)[:, :, None, None, None] * np.ones(grid16.shape)
        grad = grid16.gradient(np.sin(x))
        e2 = energy_block(grid16, gu00, gusp, 1.0, np.sin(x), np.zeros(grid16.shape), grad, 0.0, 0.0)
        assert e2 == pytest.approx(2.0 * math.pi**3)

    def test_mass_term(self, grid8):
        """Test a constant field contributes ½δH²v²·(2π)³."""
        gu00 = -np.ones(grid8.shape)
        gusp = np.eye(3)[:, :, None, None, None] * np.ones(grid8.shape)
        v = np.ones(grid8.shape)
        e2 = energy_block(grid8, gu00, gusp, 1.0, v, np.zeros(grid8.shape), np.zeros((3, *grid8.shape)), 1.0, 2.0)
        assert e2 == pytest.approx(8.0 * math.pi**3)

    def test_flrw_is_zero(self):
        """Test every energy vanishes on exact FLRW."""
        params = dusty()
        energies = compute_energies(make_flrw_state(params), background_closed_form(params, 0.0), params)
        assert all(v == pytest.approx(0.0, abs=1e-12) for v in dataclasses.asdict(energies).values())

    def test_non_coercive_warning(self):
        """Test g⁰⁰ above −0.5 warns."""
        params = de_sitter()
        state = make_flrw_state(params)
        data = state.data.copy()
        data[0] = -3.0
        with pytest.warns(NonCoerciveWarning):
            compute_energies(state.replace(0.0, data), background_closed_form(params, 0.0), params)

    def test_positive_for_perturbation(self, record):
        """Test perturbed data has positive metric and fluid energies."""
        e = record.energies
        assert e.E_g00 >= 0.0
        assert e.E_dh > 0.0
        assert e.E_rho > 0.0
        assert e.E_u > 0.0
        assert e.E_g == pytest.approx(e.E_g00 + e.E_g0 + e.E_dh + e.E_h_low)


class TestCommutator:
    """Test the ∂_u/∂_α commutator diagnostic."""

    def test_du_apply(self, grid8):
        """Test ∂_u f = u⁰∂_t f + u^a∂_a f."""
        x = grid8.coords[0]
        f = np.sin(x)
        usp = np.zeros((3, *grid8.shape))
        usp[0] = 0.5
        out = du_apply(np.full(grid8.shape, 2.0), usp, f, np.ones(grid8.shape), grid8.gradient(f))
        np.testing.assert_allclose(out, 2.0 + 0.5 * np.cos(x), atol=1e-13)

    def test_uniform_flow_commutes(self):
        """Test a uniform velocity on FLRW commutes with every ∂_α."""
        params = de_sitter()
        state = make_flrw_state(params)
        data = state.data.copy()
        data[22] = 0.01
        data[4] += 1e-3 * state.grid.mode((0, 1, 0))
        kin = kinematics(state.replace(0.0, data), background_closed_form(params, 0.0), params)
        assert du_commutator_max(kin, 2) < 1e-10

    def test_recorded(self, record):
        """Test the sampled commutator is finite and small for small data."""
        assert 0.0 <= record.du_commutator_max < 1e-3


class TestRatios:
    """Test norm/energy ratios and drift tracking."""

    def test_absent_pairs(self):
        """Test both sides absent gives None and an absent energy gives inf."""
        ratios = norm_energy_ratio(_filled(NormSet, 0.0), _filled(EnergySet, 0.0))
        assert set(ratios) == set(RATIO_PAIRS)
        assert all(v is None for v in ratios.values())
        ratios = norm_energy_ratio(_filled(NormSet, 1.0), _filled(EnergySet, 0.0))
        assert ratios["g00"] == math.inf

    def test_values(self):
        """Test S/E with multi-term pairs."""
        ratios = norm_energy_ratio(_filled(NormSet, 2.0), _filled(EnergySet, 1.0))
        assert ratios["g00"] == 2.0
        assert ratios["h"] == 1.0
        assert ratios["h_full"] == pytest.approx(4.0 / 3.0)

    def test_drift_flagged_once(self):
        """Test a ratio is flagged the first time max/min exceeds 2."""
        tracker = RatioDriftTracker()
        assert tracker.update(SimpleNamespace(ratios={"g": 1.0, "h": None})) == []
        assert tracker.update(SimpleNamespace(ratios={"g": 1.9})) == []
        assert tracker.update(SimpleNamespace(ratios={"g": 2.5})) == ["g"]
        assert tracker.update(SimpleNamespace(ratios={"g": 3.0})) == []
        assert tracker.drift() == {"g": 3.0}

    def test_tracker_from_rows(self):
        """Test a tracker rebuilt from CSV rows continues where the written rows left off."""
        rows = [{"ratio_g": "1.0", "ratio_h": ""}, {"ratio_g": "2.5", "ratio_h": "0.5"}]
        tracker = RatioDriftTracker.from_rows(rows)
        assert tracker.drift() == {"g": 2.5, "h": 1.0}
        assert tracker.update(SimpleNamespace(ratios={"g": 3.0})) == []
        assert tracker.update(SimpleNamespace(ratios={"h": 1.5})) == ["h"]
        assert tracker.drift() == {"g": 3.0, "h": 3.0}


class TestDecayFit:
    """Test exponential decay fits."""

    def test_exact_exponential(self):
        """Test the exponent of 3e^{−2t}."""
        t = np.linspace(0.0, 3.0, 31)
        fit = fit_decay(t, 3.0 * np.exp(-2.0 * t))
        assert fit.exponent == pytest.approx(-2.0)
        assert fit.intercept == pytest.approx(math.log(3.0))
        assert fit.residual < 1e-12
        assert fit.samples == 31

    def test_window(self):
        """Test the window restricts the samples."""
        t = np.linspace(0.0, 3.0, 31)
        fit = fit_decay(t, np.exp(-t), window=(1.0, 3.0))
        assert fit.samples == 21

    def test_window_too_short(self):
        """Test fewer than 8 samples are refused."""
        with pytest.raises(WindowTooShort):
            fit_decay([0.0, 1.0, 2.0, 3.0, 4.0], [1.0] * 5)

    def test_non_positive(self):
        """Test zero values are refused."""
        with pytest.raises(ValueError):
            fit_decay(np.arange(10.0), np.zeros(10))


class TestSample:
    """Test a full diagnostics sample."""

    def test_fields(self, record):
        """Test the extra columns of perturbed data."""
        assert record.step == 0
        assert record.breakdown == "None"
        assert record.bootstrap_ok
        assert record.max_g00 == -1.0
        assert record.gauge_resid_max < 1e-10
        assert record.H_elliptic_min_eig > 0.0
        assert record.min_eig_g == pytest.approx(1.0, abs=2e-3)
        assert record.gauss_resid_l2 > 0.0

    def test_row_matches_columns(self, record):
        """Test a row has exactly the CSV columns."""
        assert tuple(record.row()) == CSV_COLUMNS
        assert record.row()["bootstrap_ok"] == 1

    def test_breakdown_flag(self):
        """Test the scenario passed to a sample lands in its breakdown column."""
        params = dusty()
        state = make_perturbed_state(params)
        rec = sample(
            state, background_closed_form(params, 0.0), params, NormConfig(), 7, breakdown=Scenario.G00_TO_ZERO
        )
        assert rec.row()["breakdown"] == "G00ToZero"
        assert rec.step == 7

    def test_unavailable(self):
        """Test a placeholder record keeps the CSV layout with NaN numbers."""
        rec = DiagnosticsRecord.unavailable(1.5, 12, "CNormBlowup")
        row = rec.row()
        assert tuple(row) == CSV_COLUMNS
        assert row["breakdown"] == "CNormBlowup"
        assert row["bootstrap_ok"] == 0
        assert math.isnan(row["S_Total"])
        assert all(row[f"ratio_{k}"] == "" for k in RATIO_PAIRS)


class TestCsv:
    """Test the diagnostics CSV."""

    def _write(self, path, record, steps, append=False):
        with DiagnosticsWriter(path, append=append) as w:
            for s in steps:
                w.write(dataclasses.replace(record, step=s, t=0.1 * s))

    def test_layout(self, tmp_path, record):
        """Test the schema line, header and rows."""
        path = tmp_path / "d.csv"
        self._write(path, record, [0, 1, 2])
        first = path.read_text().splitlines()[0]
        assert first.startswith("# flrw-dust diagnostics schema v1")
        columns, rows = read_csv(path)
        assert columns == list(CSV_COLUMNS)
        assert [r["step"] for r in rows] == ["0", "1", "2"]

    def test_append_keeps_single_header(self, tmp_path, record):
        """Test appending adds rows only."""
        path = tmp_path / "d.csv"
        self._write(path, record, [0, 1])
        self._write(path, record, [2], append=True)
        text = path.read_text()
        assert text.count("# flrw-dust") == 1
        assert [r["step"] for r in read_csv(path)[1]] == ["0", "1", "2"]

    def test_truncate(self, tmp_path, record):
        """Test rows past the checkpoint step are dropped."""
        path = tmp_path / "d.csv"
        self._write(path, record, [0, 2, 4, 6])
        truncate_csv(path, 2)
        columns, rows = read_csv(path)
        assert columns == list(CSV_COLUMNS)
        assert [r["step"] for r in rows] == ["0", "2"]

    def test_select_columns(self):
        """Test group expansion and unknown names."""
        picked = select_columns(CSV_COLUMNS, ["all-energies", "t"])
        assert picked[0] == "E_g00"
        assert picked[-1] == "t"
        assert len(select_columns(CSV_COLUMNS, ["all-norms"])) == 20
        with pytest.raises(MissingColumn) as info:
            select_columns(CSV_COLUMNS, ["S_g00", "E_bogus"])
        assert info.value.missing == ["E_bogus"]
