import dataclasses
import json

import pytest

from flrw_dust.config import (
    OUTPUT_ROOT_ENV,
    OutputConfig,
    RunConfig,
    config_from_dict,
    config_hash,
    config_to_dict,
    dump_config,
    load_config,
)
from flrw_dust.error import ConfigInvalid
from flrw_dust.evolution import Integrator
from flrw_dust.initial_data import Bump, Mode, PerturbationSpec

from .conftest import dusty, make_run_config


def _minimal(**overrides):
    d = {"cosmology": {"Lambda": 3.0}, "numerics": {"n": 8, "stepper": {"dt": 0.05, "t_final": 1.0}}}
    d.update(overrides)
    return d


class TestParsing:
    """Test building configurations from JSON objects."""

    def test_minimal_defaults(self):
        """Test omitted sections take their defaults."""
        cfg = config_from_dict(_minimal())
        assert cfg.cosmology.rho_bar == 0.0
        assert cfg.numerics.stepper.integrator is Integrator.RK4
        assert cfg.numerics.stepper.cfl_safety == 0.5
        assert cfg.norms.q == 0.1
        assert cfg.output.sample_every == 10
        assert cfg.problems() == []

    def test_round_trip(self, tmp_path):
        """Test dump then load gives an equal configuration."""
        cfg = make_run_config(
            tmp_path / "out",
            params=dusty(),
            perturbation=PerturbationSpec(
                amplitude=2.5e-3,
                modes=(Mode((1, 0, -1), "K23", 0.3, -0.5),),
                seed=4,
                random_modes=2,
                bumps=(Bump((0.1, 0.2, 0.3), 1.2, 0.7),),
            ),
        )
        path = tmp_path / "cfg.json"
        dump_config(cfg, path)
        assert load_config(path) == cfg
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_unknown_keys_collected(self):
        """Test every unknown key is reported in one error."""
        d = _minimal(extra=1, output={"dir": "x"})
        d["cosmology"]["lambda"] = 2.0
        with pytest.raises(ConfigInvalid) as info:
            config_from_dict(d)
        text = "\n".join(info.value.problems)
        assert len(info.value.problems) == 3
        assert "extra" in text
        assert "dir" in text
        assert "lambda" in text

    def test_missing_required(self):
        """Test a missing Lambda and a missing dt are both reported."""
        with pytest.raises(ConfigInvalid) as info:
            config_from_dict({"cosmology": {}, "numerics": {"stepper": {"t_final": 1.0}}})
        assert len(info.value.problems) == 2

    def test_malformed_mode(self):
        """Test a mode without a component is reported, not raised raw."""
        with pytest.raises(ConfigInvalid, match="perturbation"):
            config_from_dict(_minimal(perturbation={"modes": [{"wavevector": [1, 0, 0]}]}))

    def test_invalid_json(self, tmp_path):
        """Test a syntax error becomes ConfigInvalid."""
        path = tmp_path / "bad.json"
        path.write_text("{ not json")
        with pytest.raises(ConfigInvalid, match="not valid JSON"):
            load_config(path)

    def test_top_level_must_be_object(self, tmp_path):
        """Test a JSON list is refused."""
        path = tmp_path / "list.json"
        path.write_text(json.dumps([1, 2]))
        with pytest.raises(ConfigInvalid):
            load_config(path)


class TestValidation:
    """Test semantic validation of a parsed configuration."""

    def test_lambda_must_be_positive(self):
        """Test Λ = 0 is rejected."""
        d = _minimal()
        d["cosmology"]["Lambda"] = 0.0
        with pytest.raises(ConfigInvalid, match="Lambda"):
            config_from_dict(d).validate()

    def test_cfl_violation(self):
        """Test dt above the CFL bound at t = 0 is rejected."""
        d = _minimal()
        d["numerics"]["stepper"]["dt"] = 1.0
        with pytest.raises(ConfigInvalid, match="CFL"):
            config_from_dict(d).validate()

    def test_problems_collected(self):
        """Test independent violations are reported together."""
        d = _minimal(norms={"q": 0.5}, output={"sample_every": 0})
        d["numerics"]["n"] = 12
        problems = config_from_dict(d).problems()
        assert len(problems) == 3

    def test_band_checked(self):
        """Test a mode outside the dealias band is rejected."""
        d = _minimal(perturbation={"modes": [{"wavevector": [3, 0, 0], "component": "h11"}]})
        with pytest.raises(ConfigInvalid, match="dealias"):
            config_from_dict(d).validate()

    def test_amplitude_too_large(self):
        """Test an indefinite initial metric is reported as a problem."""
        d = _minimal(perturbation={"amplitude": 2.0, "modes": [{"wavevector": [1, 0, 0], "component": "h11"}]})
        problems = config_from_dict(d).problems()
        assert len(problems) == 1
        assert problems[0].startswith("perturbation:")


class TestHashAndOutput:
    """Test the configuration digest and output resolution."""

    def test_hash_ignores_output(self, tmp_path):
        """Test output settings do not change the digest."""
        cfg = make_run_config(tmp_path / "a")
        other = dataclasses.replace(cfg, output=OutputConfig(str(tmp_path / "b"), 5, 3))
        assert config_hash(cfg) == config_hash(other)
        assert len(config_hash(cfg)) == 64

    def test_hash_tracks_physics(self, tmp_path):
        """Test a different cosmology changes the digest."""
        cfg = make_run_config(tmp_path)
        assert config_hash(cfg) != config_hash(dataclasses.replace(cfg, cosmology=dusty()))

    def test_output_root(self, tmp_path, monkeypatch):
        """Test relative directories resolve against the output root."""
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
        assert OutputConfig("runs/a").resolve() == tmp_path / "runs" / "a"
        assert OutputConfig(str(tmp_path / "abs")).resolve() == tmp_path / "abs"

    def test_output_root_unset(self, monkeypatch):
        """Test relative directories stay relative without the output root."""
        monkeypatch.delenv(OUTPUT_ROOT_ENV, raising=False)
        assert str(OutputConfig("runs/a").resolve()) == "runs/a"

    def test_from_dict_classmethod(self):
        """Test RunConfig.from_dict matches config_from_dict."""
        assert RunConfig.from_dict(_minimal()) == config_from_dict(_minimal())
