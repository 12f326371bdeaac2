"""Exception types shared across the package."""


class InputError(ValueError):
    """Arguments have the wrong shape, dimension or content."""


class ConfigError(ValueError):
    """A configuration value is out of range or inconsistent."""
