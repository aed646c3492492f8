"""Exception hierarchy for flrw_dust.

Every exception raised on purpose by the package derives from :class:`Error`, so
callers can catch the whole family at once. Geometry errors carry a *witness*
(grid index and offending value) that the evolution loop copies into its
breakdown report.
"""

from __future__ import annotations

from typing import Any, Sequence

__all__ = [
    "Error",
    "ConfigError",
    "ConfigInvalid",
    "AmplitudeTooLarge",
    "GeometryError",
    "NotLorentzian",
    "SpacelikeVelocity",
    "DegenerateG00Upper",
    "IntegrationError",
    "StepTooLarge",
    "ToleranceNotMet",
    "DiagnosticsError",
    "WindowTooShort",
    "MissingColumn",
    "CheckpointError",
    "CheckpointMismatch",
    "NonCoerciveWarning",
]


class Error(Exception):
    """Base class of all flrw_dust errors."""


# ─── Configuration ───────────────────────────────────────────────────────────


class ConfigError(Error):
    pass


class ConfigInvalid(ConfigError):
    """One or more configuration preconditions failed.

    ``problems`` lists every violation found, not only the first one.
    """

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.problems))


class AmplitudeTooLarge(ConfigError):
    """The perturbed spatial metric is not positive definite everywhere."""


# ─── Pointwise geometry ──────────────────────────────────────────────────────


class GeometryError(Error):
    """A pointwise algebraic precondition failed somewhere on the grid."""

    def __init__(self, message: str, witness: tuple[int, ...] | None = None, value: Any = None):
        self.witness = witness
        self.value = value
        if witness is not None:
            message = f"{message} at {witness} (value={value!r})"
        super().__init__(message)


class NotLorentzian(GeometryError):
    """g00 - d^2 >= 0 or the spatial block is not positive definite."""

    def __init__(
        self,
        message: str,
        witness: tuple[int, ...] | None = None,
        value: Any = None,
        spatial: bool = False,
    ):
        self.spatial = spatial
        super().__init__(message, witness, value)


class SpacelikeVelocity(GeometryError):
    """The u^0 normalization discriminant is not positive."""


class DegenerateG00Upper(GeometryError):
    """|g^00| fell below the configured floor."""


# ─── Time integration ────────────────────────────────────────────────────────


class IntegrationError(Error):
    pass


class StepTooLarge(IntegrationError):
    pass


class ToleranceNotMet(IntegrationError):
    pass


# ─── Diagnostics ─────────────────────────────────────────────────────────────


class DiagnosticsError(Error):
    pass


class WindowTooShort(DiagnosticsError):
    pass


class MissingColumn(DiagnosticsError):
    def __init__(self, missing: Sequence[str], available: Sequence[str]):
        self.missing = list(missing)
        self.available = list(available)
        super().__init__(
            f"unknown column(s) {', '.join(self.missing)}; available: {', '.join(self.available)}"
        )


# ─── Checkpoints ─────────────────────────────────────────────────────────────


class CheckpointError(Error):
    pass


class CheckpointMismatch(CheckpointError):
    """Magic, version or config hash of a checkpoint does not match."""


class NonCoerciveWarning(UserWarning):
    """The energy quadratic form is losing its coercivity margin (g^00 > -0.5)."""
