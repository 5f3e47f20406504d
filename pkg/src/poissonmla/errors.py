"""Exception hierarchy. The CLI maps these to exit codes."""


class MLAError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(MLAError, ValueError):
    """Malformed instance, sequence, or parameter."""

    exit_code = 2


class ScheduleError(InputError):
    """A schedule violates validity for its request sequence."""


class ConstructionError(InputError):
    """A derived structure (partition, augmented tree, plan) cannot be built."""


class CapacityError(MLAError):
    """Request exceeds a computational guard (e.g. brute-force OPT size)."""

    exit_code = 3
