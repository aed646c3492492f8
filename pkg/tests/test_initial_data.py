import logging

import numpy as np
import pytest

from flrw_dust.background import CosmologyParams, background_closed_form
from flrw_dust.error import AmplitudeTooLarge, ConfigInvalid, NotLorentzian
from flrw_dust.grid import Grid3
from flrw_dust.initial_data import (
    PERTURBABLE,
    Bump,
    GeometricData,
    Mode,
    PerturbationSpec,
    constraint_residuals,
    construct_modified_data,
    initial_state,
    perturbed_flrw,
    slice_constraint_residuals,
)
from flrw_dust.rhs import gauge_source_residual

from .conftest import de_sitter, dusty, make_flrw_state, make_perturbed_state


class TestPerturbationSpec:
    """Test perturbation validation and mode expansion."""

    def test_perturbable_names(self):
        """Test the sixteen perturbable components."""
        assert len(PERTURBABLE) == 16
        assert PERTURBABLE[1] == "h12"
        assert PERTURBABLE[6] == "K11"

    def test_valid_spec_has_no_problems(self, grid8):
        """Test the default perturbation is accepted."""
        assert PerturbationSpec(modes=(Mode((1, -2, 0), "K23"),)).problems(grid8) == []

    def test_problems_are_collected(self, grid8):
        """Test every violation is reported at once."""
        spec = PerturbationSpec(
            amplitude=-1.0,
            modes=(Mode((3, 0, 0), "h12"), Mode((1, 0, 0), "g00")),
            random_modes=-1,
            bumps=(Bump((0.0, 0.0, 0.0), 4.0),),
        )
        problems = spec.problems(grid8)
        assert len(problems) == 5
        assert any("dealias band" in p for p in problems)
        assert any("'g00'" in p for p in problems)

    def test_invalid_spec_raises(self, grid8):
        """Test perturbed_flrw refuses an invalid spec."""
        with pytest.raises(ConfigInvalid) as info:
            perturbed_flrw(de_sitter(), PerturbationSpec(modes=(Mode((9, 0, 0), "rho"),)), grid8)
        assert len(info.value.problems) == 1

    def test_random_modes_reproducible(self, grid16):
        """Test the same seed draws the same modes inside the band."""
        a = PerturbationSpec(seed=3, random_modes=5).all_modes(grid16)
        b = PerturbationSpec(seed=3, random_modes=5).all_modes(grid16)
        assert a == b
        assert len(a) == 5
        assert all(max(abs(k) for k in m.wavevector) <= grid16.cutoff for m in a)
        assert all(m.component in PERTURBABLE for m in a)


class TestPerturbedFlrw:
    """Test the perturbed FLRW family."""

    def test_zero_amplitude_is_flrw(self, grid8):
        """Test amplitude 0 reproduces the FLRW geometric data."""
        params = dusty()
        data = perturbed_flrw(params, PerturbationSpec(amplitude=0.0, modes=(Mode((1, 0, 0), "h11"),)), grid8)
        ref = GeometricData.flrw(grid8, params)
        np.testing.assert_array_equal(data.gsp0, ref.gsp0)
        np.testing.assert_allclose(data.K0, ref.K0)
        np.testing.assert_array_equal(data.rho0, ref.rho0)

    def test_off_diagonal_mode_is_symmetric(self, grid8):
        """Test an h12 mode fills both g̊_12 and g̊_21."""
        data = perturbed_flrw(de_sitter(), PerturbationSpec(amplitude=0.01, modes=(Mode((0, 1, 0), "h12"),)), grid8)
        np.testing.assert_array_equal(data.gsp0[0, 1], data.gsp0[1, 0])
        np.testing.assert_allclose(data.gsp0[0, 1], 0.01 * grid8.mode((0, 1, 0)))

    def test_amplitude_too_large(self, grid8):
        """Test an indefinite initial metric is refused."""
        with pytest.raises(AmplitudeTooLarge):
            perturbed_flrw(de_sitter(), PerturbationSpec(amplitude=2.0, modes=(Mode((1, 0, 0), "h11"),)), grid8)

    def test_negative_density_clipped(self, grid8, caplog):
        """Test the density is clipped at zero with a warning."""
        spec = PerturbationSpec(amplitude=1e-3, modes=(Mode((1, 0, 0), "rho"),))
        with caplog.at_level(logging.WARNING, logger="flrw_dust.initial_data"):
            data = perturbed_flrw(CosmologyParams(3.0, 0.0), spec, grid8)
        assert data.rho0.min() == 0.0
        assert data.rho0.max() == pytest.approx(1e-3)
        assert "clipped" in caplog.text

    def test_bump_is_band_limited(self, grid16):
        """Test a density bump is dealiased and centred."""
        spec = PerturbationSpec(amplitude=0.1, bumps=(Bump((0.0, 0.0, 0.0), 2.0),))
        data = perturbed_flrw(dusty(), spec, grid16)
        np.testing.assert_allclose(grid16.dealias(data.rho0), data.rho0, atol=1e-12)
        peak = np.unravel_index(np.argmax(data.rho0), grid16.shape)
        assert peak == (8, 8, 8)

    def test_geometric_data_validation(self, grid8):
        """Test indefinite metrics and negative densities are rejected."""
        ref = GeometricData.flrw(grid8, de_sitter())
        with pytest.raises(NotLorentzian):
            GeometricData(-ref.gsp0, ref.K0, ref.rho0, ref.usp0).validate()
        with pytest.raises(ValueError):
            GeometricData(ref.gsp0, ref.K0, ref.rho0 - 1.0, ref.usp0).validate()


class TestModifiedData:
    """Test the reduction to gauge-consistent data."""

    def test_flrw_data_gives_flrw_state(self):
        """Test FLRW geometric data maps onto the FLRW state vector."""
        params = dusty()
        grid = Grid3(8)
        state = initial_state(params, PerturbationSpec(amplitude=0.0), grid)
        np.testing.assert_allclose(state.data, make_flrw_state(params).data, atol=1e-14)

    def test_gauge_condition_at_initial_time(self):
        """Test Γ^μ = 3ωδ^μ₀ on the initial slice for perturbed data."""
        params = dusty()
        state = make_perturbed_state(params, n=16, amplitude=1e-2)
        resid = gauge_source_residual(state, background_closed_form(params, 0.0))
        assert np.max(np.abs(resid)) < 1e-10

    def test_later_slice_rescales(self, grid8):
        """Test h = g̊e^{−2Ω} and ϱ = e^{3Ω}ρ̊ on a slice with Ω ≠ 0."""
        params = dusty()
        bg = background_closed_form(params, 0.5)
        state = construct_modified_data(GeometricData.flrw(grid8, params), bg, grid8)
        np.testing.assert_allclose(state.h[0], np.exp(-2.0 * bg.Omega))
        np.testing.assert_allclose(state.rho, np.exp(3.0 * bg.Omega) * params.rho_bar)
        np.testing.assert_array_equal(state.g00, -1.0)
        assert state.t == 0.5


class TestConstraints:
    """Test the Gauss and Codazzi residuals."""

    @pytest.mark.parametrize("params", [de_sitter(), dusty()])
    def test_flrw_satisfies_constraints(self, grid8, params):
        """Test FLRW data solves both constraints."""
        gauss, codazzi = constraint_residuals(GeometricData.flrw(grid8, params), params, grid8)
        np.testing.assert_allclose(gauss, 0.0, atol=1e-12)
        np.testing.assert_allclose(codazzi, 0.0, atol=1e-12)

    def test_density_mode_residual(self, grid8):
        """Test a density perturbation δρ leaves Gauss = −2δρ and Codazzi = 0."""
        params = dusty()
        spec = PerturbationSpec(amplitude=1e-3, modes=(Mode((0, 1, 1), "rho"),))
        gauss, codazzi = constraint_residuals(perturbed_flrw(params, spec, grid8), params, grid8)
        np.testing.assert_allclose(gauss, -2e-3 * grid8.mode((0, 1, 1)), atol=1e-12)
        np.testing.assert_allclose(codazzi, 0.0, atol=1e-12)

    def test_slice_matches_data(self):
        """Test the evolved-state residuals equal the geometric-data residuals at t = 0."""
        params = dusty()
        grid = Grid3(8)
        spec = PerturbationSpec(
            amplitude=1e-2, modes=(Mode((1, 0, 0), "h11"), Mode((0, 1, 0), "K12"), Mode((1, 1, 0), "u3"))
        )
        data = perturbed_flrw(params, spec, grid)
        expected = constraint_residuals(data, params, grid)
        state = construct_modified_data(data, background_closed_form(params, 0.0), grid)
        got = slice_constraint_residuals(state, background_closed_form(params, 0.0), params)
        np.testing.assert_allclose(got[0], expected[0], atol=1e-11)
        np.testing.assert_allclose(got[1], expected[1], atol=1e-11)
