import numpy as np
import pytest

from flrw_dust.background import CosmologyParams, background_closed_form
from flrw_dust.error import DegenerateG00Upper
from flrw_dust.rhs import (
    assemble_rates,
    fluid_rhs,
    fluid_rhs_direct,
    gauge_source_residual,
    second_time_derivative,
    second_time_derivatives,
    wave_rhs,
    wave_rhs_direct,
)
from flrw_dust.state import build_geometry

from .conftest import de_sitter, dusty, make_flrw_state, make_random_state


def _rel(a, b) -> float:
    return float(np.max(np.abs(a - b))) / max(float(np.max(np.abs(b))), 1e-300)


class TestFixedPoint:
    """Test exact FLRW is a stationary point of the evolved system."""

    @pytest.mark.parametrize("params", [de_sitter(), dusty(), CosmologyParams(0.3, 1.0)])
    @pytest.mark.parametrize("t", [0.0, 0.8])
    def test_rates_vanish(self, params, t):
        """Test every rate is zero on FLRW data."""
        state = make_flrw_state(params, t=t)
        rates = assemble_rates(state, background_closed_form(params, t), params)
        np.testing.assert_allclose(rates.data, 0.0, atol=1e-12)

    def test_gauge_holds(self):
        """Test Γ^μ = 3ωδ^μ₀ on FLRW data."""
        params = dusty()
        resid = gauge_source_residual(make_flrw_state(params, t=0.3), background_closed_form(params, 0.3))
        assert resid.shape == (4, 8, 8, 8)
        np.testing.assert_allclose(resid, 0.0, atol=1e-12)


class TestSplitAgainstDirect:
    """Test the Δ-split forms against the unsplit definitions."""

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_wave(self, seed):
        """Test wave_rhs equals the Ricci-identity form."""
        params = CosmologyParams(3.0, 1.0)
        state, bg = make_random_state(params, t=0.1 * seed, seed=seed)
        geo = build_geometry(state, bg)
        assert _rel(wave_rhs(state, bg, params, geo), wave_rhs_direct(state, bg, params, geo)) < 1e-10

    @pytest.mark.parametrize("seed", [4, 5])
    def test_fluid(self, seed):
        """Test fluid_rhs equals the geodesic and continuity equations."""
        params = CosmologyParams(3.0, 1.0)
        state, bg = make_random_state(params, t=0.2, seed=seed)
        geo = build_geometry(state, bg)
        d_rho, d_u = fluid_rhs(state, bg, params, geo)
        r_rho, r_u = fluid_rhs_direct(state, bg, params, geo)
        assert _rel(d_rho, r_rho) < 1e-10
        assert _rel(d_u, r_u) < 1e-10

    def test_wave_operator_identity(self):
        """Test g^{αβ}∂_α∂_β v with the solved ∂_t²v reproduces the source."""
        params = dusty()
        state, bg = make_random_state(params, t=0.25, seed=9)
        geo = build_geometry(state, bg)
        rhs = wave_rhs(state, bg, params, geo)
        vtt = second_time_derivatives(state, bg, params, geo, rhs=rhs)
        inv = geo.jet.inverse
        box = (
            inv.gu00 * vtt
            + 2.0 * np.einsum("a...,av...->v...", inv.gu0, geo.grad_wave_t)
            + np.einsum("ab...,abv...->v...", inv.gusp, geo.hess_wave)
        )
        assert _rel(box, rhs) < 1e-10


class TestSecondTimeDerivative:
    """Test the solved second time derivative."""

    def test_named_component(self):
        """Test selection by component name."""
        params = de_sitter()
        state, bg = make_random_state(params)
        full = second_time_derivatives(state, bg, params)
        np.testing.assert_array_equal(second_time_derivative(state, bg, params, "h12"), full[5])

    def test_unknown_component(self):
        """Test an unknown name raises ValueError."""
        params = de_sitter()
        state, bg = make_random_state(params)
        with pytest.raises(ValueError):
            second_time_derivative(state, bg, params, "h21")

    def test_degenerate_lapse(self):
        """Test |g⁰⁰| under the floor raises with a witness."""
        params = de_sitter()
        state = make_flrw_state(params)
        data = state.data.copy()
        data[0, 2, 3, 4] = -20.0
        with pytest.raises(DegenerateG00Upper) as info:
            second_time_derivatives(state.replace(0.0, data), background_closed_form(params, 0.0), params)
        assert info.value.witness == (2, 3, 4)


class TestDustRates:
    """Test the dust rates in simple configurations."""

    def test_homogeneous_velocity_decays(self):
        """Test ∂_t u = −2Hu for a small uniform velocity in de Sitter."""
        params = de_sitter()
        state = make_flrw_state(params)
        data = state.data.copy()
        data[21] = 1e-6
        rates = assemble_rates(state.replace(0.0, data), background_closed_form(params, 0.0), params)
        np.testing.assert_allclose(rates.data[21], -2e-6, rtol=1e-5)
        np.testing.assert_allclose(rates.data[22:24], 0.0, atol=1e-15)

    def test_dealias_flag(self):
        """Test dealiasing removes everything outside the band."""
        params = dusty()
        state, bg = make_random_state(params, seed=11)
        raw = assemble_rates(state, bg, params, dealias=False).data
        filtered = assemble_rates(state, bg, params).data
        np.testing.assert_allclose(filtered, state.grid.dealias(raw), atol=1e-12)
