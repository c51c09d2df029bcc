from __future__ import annotations

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_FIT = 3


class ToolkitError(RuntimeError):
    exit_code = EXIT_DATA


class ConfigError(ToolkitError):
    """Bad configuration file / flags."""

    exit_code = EXIT_USAGE


class DataError(ToolkitError, ValueError):
    """Malformed input data or a violated precondition on numeric inputs."""

    exit_code = EXIT_DATA


class FitError(ToolkitError):
    """A fit did not converge (or its normal matrix was singular) and the caller required it to."""

    exit_code = EXIT_FIT
