"""Exception types shared across the package."""


class SwarmDefError(Exception):
    """Base class for all package-specific errors."""


class ScenarioError(SwarmDefError):
    """Scenario file failed to parse or violated a config invariant.

    ``field`` carries the dotted path of the offending entry when known,
    e.g. ``initial_attackers[3].position``.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class ConfigurationError(SwarmDefError):
    """Runtime parameter combination is inconsistent (e.g. dt too large
    for the configured fire rates)."""


class PropagationError(SwarmDefError):
    """Numerical blowup during forward propagation.

    ``step`` and ``agent`` identify where the first non-finite value
    appeared.
    """

    def __init__(self, message: str, step: int | None = None, agent: int | None = None):
        self.step = step
        self.agent = agent
        super().__init__(message)
