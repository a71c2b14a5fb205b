"""Exception types shared across the package."""


class QrchaosError(Exception):
    """Base class for package errors."""


class ConfigError(QrchaosError):
    """Invalid or inconsistent experiment configuration."""


class IntegrationError(QrchaosError):
    """Trajectory integration diverged or failed."""


class EncodingError(QrchaosError):
    """Input vector cannot be amplitude-encoded."""


class StateError(QrchaosError):
    """A density matrix violated a quantum-state invariant."""


class TrainingError(QrchaosError):
    """Readout training failed (degenerate regression problem)."""
