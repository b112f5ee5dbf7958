"""Error hierarchy shared across the package.

Exit codes used by the CLI: 2 config, 3 data, 4 numerical.
"""


class ProtosarcError(Exception):
    exit_code = 1


class ConfigError(ProtosarcError):
    exit_code = 2


class DataError(ProtosarcError):
    exit_code = 3


class NumericalError(ProtosarcError):
    exit_code = 4
