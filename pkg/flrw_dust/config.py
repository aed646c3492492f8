"""Run configuration: a tree of frozen dataclasses stored as JSON.

Floats are written with ``repr`` precision, so ``config_from_dict(config_to_dict(c))
== c`` exactly. Relative output directories resolve against
``$FLRW_DUST_OUTPUT_ROOT`` when set.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from typing_extensions import Self

from .background import CosmologyParams
from .diagnostics import EnergyConstants, NormConfig
from .error import AmplitudeTooLarge, ConfigInvalid
from .evolution import Integrator, MonitorConfig, StepperConfig
from .initial_data import Bump, Mode, PerturbationSpec

__all__ = [
    "OUTPUT_ROOT_ENV",
    "NumericsConfig",
    "OutputConfig",
    "RunConfig",
    "config_to_dict",
    "config_from_dict",
    "load_config",
    "dump_config",
    "config_hash",
]

OUTPUT_ROOT_ENV = "FLRW_DUST_OUTPUT_ROOT"


@dataclass(frozen=True)
class NumericsConfig:
    stepper: StepperConfig
    n: int = 16

    def problems(self) -> list[str]:
        out = []
        if self.n < 8 or self.n & (self.n - 1):
            out.append(f"numerics.n must be a power of two >= 8, got {self.n!r}")
        return out + self.stepper.problems()


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "run"
    sample_every: int = 10
    checkpoint_every: int = 0

    def problems(self) -> list[str]:
        out = []
        if self.sample_every < 1:
            out.append("output.sample_every must be >= 1")
        if self.checkpoint_every < 0:
            out.append("output.checkpoint_every must be >= 0 (0 disables checkpoints)")
        return out

    def resolve(self) -> Path:
        path = Path(self.directory)
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not path.is_absolute():
            path = Path(root) / path
        return path


@dataclass(frozen=True)
class RunConfig:
    cosmology: CosmologyParams
    numerics: NumericsConfig
    norms: NormConfig = NormConfig()
    perturbation: PerturbationSpec = PerturbationSpec()
    monitor: MonitorConfig = MonitorConfig()
    output: OutputConfig = field(default_factory=OutputConfig)

    def problems(self) -> list[str]:
        """Every violated precondition, including dt against the CFL bound at t = 0."""
        from .background import background_closed_form
        from .evolution import cfl_bound
        from .grid import Grid3
        from .initial_data import initial_state

        out = []
        if not self.cosmology.Lambda > 0.0:
            out.append(f"cosmology.Lambda must be > 0, got {self.cosmology.Lambda!r}")
        out += self.numerics.problems()
        out += self.norms.problems()
        out += self.monitor.problems()
        out += self.output.problems()
        if out:
            return out
        grid = Grid3(self.numerics.n)
        out += self.perturbation.problems(grid)
        if out:
            return out
        try:
            state = initial_state(self.cosmology, self.perturbation, grid)
        except AmplitudeTooLarge as exc:
            return [f"perturbation: {exc}"]
        stepper = self.numerics.stepper
        bound = cfl_bound(state, background_closed_form(self.cosmology, 0.0), stepper.cfl_safety)
        if stepper.dt > bound:
            out.append(f"numerics.stepper.dt = {stepper.dt!r} exceeds the CFL bound {bound:.6g} at t = 0")
        return out

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise ConfigInvalid(problems)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Self:
        return config_from_dict(d)


# ─── (de)serialization ───────────────────────────────────────────────────────


def _plain(value: Any) -> Any:
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    """Every field, defaults included."""
    return _plain(asdict(cfg))


def _take(d: dict[str, Any], section: str, allowed: set[str], problems: list[str]) -> dict[str, Any]:
    body = d.get(section, {})
    if not isinstance(body, dict):
        problems.append(f"{section} must be an object")
        return {}
    unknown = sorted(set(body) - allowed)
    if unknown:
        problems.append(f"{section}: unknown keys {', '.join(unknown)}")
    return {k: v for k, v in body.items() if k in allowed}


def config_from_dict(d: dict[str, Any]) -> RunConfig:
    """Build a RunConfig, collecting every structural problem into one ConfigInvalid."""
    problems: list[str] = []
    unknown = sorted(set(d) - {"cosmology", "numerics", "norms", "perturbation", "monitor", "output"})
    if unknown:
        problems.append(f"unknown top-level keys {', '.join(unknown)}")

    cosmology = None
    cosmo = _take(d, "cosmology", {"Lambda", "rho_bar"}, problems)
    if "Lambda" not in cosmo:
        problems.append("cosmology.Lambda is required")
    else:
        try:
            cosmology = CosmologyParams(float(cosmo["Lambda"]), float(cosmo.get("rho_bar", 0.0)))
        except (TypeError, ValueError) as exc:
            problems.append(f"cosmology: {exc}")

    numerics = None
    num = _take(d, "numerics", {"n", "stepper"}, problems)
    step = num.get("stepper", {})
    if not isinstance(step, dict) or "dt" not in step or "t_final" not in step:
        problems.append("numerics.stepper needs dt and t_final")
    else:
        try:
            stepper = StepperConfig(
                dt=float(step["dt"]),
                t_final=float(step["t_final"]),
                cfl_safety=float(step.get("cfl_safety", 0.5)),
                integrator=Integrator(step.get("integrator", "RK4")),
            )
            numerics = NumericsConfig(stepper, int(num.get("n", 16)))
        except (TypeError, ValueError) as exc:
            problems.append(f"numerics: {exc}")

    norms = NormConfig()
    nd = _take(d, "norms", {"q", "sobolev_order", "energy_constants"}, problems)
    try:
        ec = {k: tuple(float(x) for x in v) for k, v in nd.get("energy_constants", {}).items()}
        norms = NormConfig(
            q=float(nd.get("q", norms.q)),
            sobolev_order=int(nd.get("sobolev_order", norms.sobolev_order)),
            energy_constants=EnergyConstants(**ec),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"norms: {exc}")

    perturbation = PerturbationSpec()
    pd = _take(d, "perturbation", {"amplitude", "modes", "seed", "random_modes", "bumps"}, problems)
    try:
        perturbation = PerturbationSpec(
            amplitude=float(pd.get("amplitude", perturbation.amplitude)),
            modes=tuple(
                Mode(tuple(int(k) for k in m["wavevector"]), str(m["component"]), float(m.get("phase", 0.0)),
                     float(m.get("weight", 1.0)))
                for m in pd.get("modes", [])
            ),
            seed=int(pd.get("seed", 0)),
            random_modes=int(pd.get("random_modes", 0)),
            bumps=tuple(
                Bump(tuple(float(c) for c in b["center"]), float(b["radius"]), float(b.get("height", 1.0)))
                for b in pd.get("bumps", [])
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(f"perturbation: malformed entry ({exc!r})")

    monitor = MonitorConfig()
    md = _take(d, "monitor", set(MonitorConfig.__dataclass_fields__), problems)
    try:
        monitor = MonitorConfig(**{k: float(v) for k, v in md.items()})
    except (TypeError, ValueError) as exc:
        problems.append(f"monitor: {exc}")

    output = OutputConfig()
    od = _take(d, "output", {"directory", "sample_every", "checkpoint_every"}, problems)
    try:
        output = OutputConfig(
            directory=str(od.get("directory", output.directory)),
            sample_every=int(od.get("sample_every", output.sample_every)),
            checkpoint_every=int(od.get("checkpoint_every", output.checkpoint_every)),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"output: {exc}")

    if problems:
        raise ConfigInvalid(problems)
    return RunConfig(cosmology, numerics, norms, perturbation, monitor, output)


def load_config(path: str | os.PathLike) -> RunConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid([f"{path}: not valid JSON ({exc})"]) from None
    if not isinstance(raw, dict):
        raise ConfigInvalid([f"{path}: top level must be an object"])
    return config_from_dict(raw)


def dump_config(cfg: RunConfig, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 hex digest of the canonical JSON of everything but ``output``."""
    body = config_to_dict(cfg)
    body.pop("output")
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
