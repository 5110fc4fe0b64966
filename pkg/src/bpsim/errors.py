"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when a parameter, scenario or controller setup is unusable.

    Structural problems found while *checking* data (validate_topology,
    scenario validation) are reported as issue lists instead; this exception
    is for calls that cannot proceed at all.
    """
