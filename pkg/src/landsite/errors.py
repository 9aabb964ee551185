class ConfigError(ValueError):
    """A configuration value violates its contract."""
