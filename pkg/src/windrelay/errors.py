"""Exception types shared across the package."""

from __future__ import annotations


class WindRelayError(Exception):
    """Base class for every error raised by this package."""


class InputError(WindRelayError, ValueError):
    """Bad caller input (maps to CLI exit code 2)."""


class NumericalError(WindRelayError, ArithmeticError):
    """A numerical procedure failed (maps to CLI exit code 3)."""


# phasor front-end
class InsufficientSamples(InputError):
    pass


class InvalidRate(InputError):
    pass


# network
class SingularNetwork(NumericalError):
    pass


class NoRemoteLines(InputError):
    pass


class TopologyError(InputError):
    pass


# windfarm / solver
class ZeroVoltage(NumericalError):
    pass


class DegenerateLoop(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class ZeroLoopCurrent(NumericalError):
    pass


# relay
class EmptyRemotes(InputError):
    pass


class ZeroRelayCurrent(NumericalError):
    pass


class KOutOfRange(NumericalError):
    """In-feed factor outside the plausible band; indicates bad telemetry."""


class NestingViolation(NumericalError):
    pass


# adaptive
class DatasetTooSmall(InputError):
    pass


class DuplicateSpeed(InputError):
    pass


class Diverged(NumericalError):
    pass


class ModelFormatError(InputError):
    pass
