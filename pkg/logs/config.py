# logs/config.py
"""
Centralized logging configuration for all components.
Provides standardized logging paths and configuration.
"""

from pathlib import Path

# Base logs directory
LOGS_DIR = Path(__file__).parent
LOGS_DIR.mkdir(exist_ok=True)

_configured_paths: set[str] = set()


class LogConfig:
    """Centralized logging configuration for all components."""

    # Simulator logs
    DYNAMICS_LOG = LOGS_DIR / "simulator" / "dynamics.log"
    MODEL_LOG = LOGS_DIR / "simulator" / "model.log"

    # Scenario logs
    SCENARIO_LOG = LOGS_DIR / "scenarios" / "scenarios.log"
    SWEEP_LOG = LOGS_DIR / "scenarios" / "sweeps.log"

    # CLI logs
    CLI_LOG = LOGS_DIR / "cli" / "cli.log"

    # System logs
    ERROR_LOG = LOGS_DIR / "system" / "errors.log"

    # Standard log format
    STANDARD_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name} | {message}"
    SIMULATOR_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | SIMULATOR | {message}"
    SCENARIO_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | SCENARIO | {message}"
    CLI_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | CLI | {message}"

    @classmethod
    def get_dynamics_log(cls):
        """Get propagation log path."""
        return str(cls.DYNAMICS_LOG)

    @classmethod
    def get_model_log(cls):
        """Get model construction log path."""
        return str(cls.MODEL_LOG)

    @classmethod
    def get_scenario_log(cls):
        """Get scenario log path."""
        return str(cls.SCENARIO_LOG)

    @classmethod
    def get_sweep_log(cls):
        """Get parameter sweep log path."""
        return str(cls.SWEEP_LOG)

    @classmethod
    def get_cli_log(cls):
        """Get command line log path."""
        return str(cls.CLI_LOG)

    @classmethod
    def get_error_log(cls):
        """Get system error log path."""
        return str(cls.ERROR_LOG)


# Common logging configuration function
def setup_logger(logger, log_path, format_string=None, level="INFO", rotation="1 week", retention="4 weeks"):
    """
    Setup a logger with standard configuration.

    Args:
        logger: The loguru logger instance
        log_path: Path to the log file
        format_string: Log format (uses STANDARD_FORMAT if None)
        level: Log level (default: INFO)
        rotation: Log rotation setting (default: 1 week)
        retention: Log retention setting (default: 4 weeks)
    """
    if format_string is None:
        format_string = LogConfig.STANDARD_FORMAT

    log_path = str(log_path)
    if log_path in _configured_paths:
        return
    _configured_paths.add(log_path)

    logger.add(log_path, format=format_string, level=level, rotation=rotation, retention=retention)

    # Also add error logging to system error log
    error_path = LogConfig.get_error_log()
    error_key = f"{error_path}|{format_string}"
    if log_path != error_path and error_key not in _configured_paths:
        _configured_paths.add(error_key)
        logger.add(error_path, format=format_string, level="ERROR", rotation=rotation, retention=retention)


def reset_configured_paths():
    """Forget attached sinks after ``logger.remove()`` so they can be attached again."""
    _configured_paths.clear()


# Initialize directory structure
def initialize_log_directories():
    """Ensure all log directories exist."""
    for attr_name in dir(LogConfig):
        if attr_name.endswith("_LOG") and not attr_name.startswith("_"):
            log_path = getattr(LogConfig, attr_name)
            log_path.parent.mkdir(parents=True, exist_ok=True)


# Initialize on import
initialize_log_directories()
