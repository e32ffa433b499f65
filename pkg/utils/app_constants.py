"""Application constants for the pimsner toolkit."""


class AppConstants:
    """Application-wide constants."""

    # Config
    CONFIG_PATH = "./configs/config.properties"
    ENV_PATH_CAP = "PIMSNER_PATH_CAP"
    ENV_LOG_LEVEL = "PIMSNER_LOG_LEVEL"

    # Resource guards
    PATH_CAP = 10 ** 6
    MAX_POWER_ITERATIONS = 100_000

    # Numerics
    DEFAULT_TOL = 1e-9
    PERRON_TOL = 1e-12
    CESARO_CUTOFF = 60
    REFERENCE_LEVEL = 200
    RATE_WINDOW = (2, 22)

    # Truncations
    DEFAULT_TRUNC = 3
    DEFAULT_RMAX = 2
    DEFAULT_DEGREE_WINDOW = 1
    MAX_ESCALATIONS = 3

    # Serialization
    PATH_SEPARATOR = "·"
    MODES = ("exact", "float")

    # Exit codes
    EXIT_OK = 0
    EXIT_INVALID_INPUT = 1
    EXIT_NON_CONVERGENCE = 2
    EXIT_INTERNAL_CHECK = 3
