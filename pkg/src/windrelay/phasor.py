"""
Phasor arithmetic, Fortescue transform and full-cycle DFT phasor estimation.

Magnitudes follow the RMS convention used in protection practice: a signal
``A*sqrt(2)*cos(wt + phi)`` has phasor ``A∠phi``. Angles are kept in
radians, normalized to (-pi, pi].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from windrelay.errors import InsufficientSamples, InvalidRate

ALPHA = cmath.rect(1.0, 2.0 * math.pi / 3.0)

# rows: zero, positive, negative
_FWD = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, ALPHA, ALPHA**2],
        [1.0, ALPHA**2, ALPHA],
    ],
    dtype=complex,
) / 3.0
_INV = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, ALPHA**2, ALPHA],
        [1.0, ALPHA, ALPHA**2],
    ],
    dtype=complex,
)

SAMPLES_PER_CYCLE = 32
FUNDAMENTAL_HZ = 60.0


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class Phasor:
    """Fundamental-frequency phasor (RMS magnitude, angle in radians)."""

    magnitude: float
    angle: float = 0.0

    def __post_init__(self) -> None:
        mag = float(self.magnitude)
        ang = float(self.angle)
        if not (math.isfinite(mag) and math.isfinite(ang)):
            raise ValueError(f"non-finite phasor ({mag}, {ang})")
        if mag < 0.0:
            mag, ang = -mag, ang + math.pi
        if mag == 0.0:
            ang = 0.0
        object.__setattr__(self, "magnitude", mag)
        object.__setattr__(self, "angle", normalize_angle(ang))

    @classmethod
    def from_complex(cls, value: complex) -> Phasor:
        value = complex(value)
        return cls(abs(value), math.atan2(value.imag, value.real))

    @classmethod
    def from_degrees(cls, magnitude: float, degrees: float) -> Phasor:
        return cls(magnitude, math.radians(degrees))

    @property
    def degrees(self) -> float:
        return math.degrees(self.angle)

    @property
    def real(self) -> float:
        return self.magnitude * math.cos(self.angle)

    @property
    def imag(self) -> float:
        return self.magnitude * math.sin(self.angle)

    def __complex__(self) -> complex:
        return cmath.rect(self.magnitude, self.angle)

    def __abs__(self) -> float:
        return self.magnitude

    def conjugate(self) -> Phasor:
        return Phasor(self.magnitude, -self.angle)

    def __add__(self, other: Phasor | complex | float) -> Phasor:
        return Phasor.from_complex(complex(self) + complex(other))

    __radd__ = __add__

    def __sub__(self, other: Phasor | complex | float) -> Phasor:
        return Phasor.from_complex(complex(self) - complex(other))

    def __rsub__(self, other: Phasor | complex | float) -> Phasor:
        return Phasor.from_complex(complex(other) - complex(self))

    def __mul__(self, other: Phasor | complex | float) -> Phasor:
        if isinstance(other, Phasor):
            return Phasor(self.magnitude * other.magnitude, self.angle + other.angle)
        return Phasor.from_complex(complex(self) * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Phasor | complex | float) -> Phasor:
        if isinstance(other, Phasor):
            if other.magnitude == 0.0:
                raise ZeroDivisionError("division by zero phasor")
            return Phasor(self.magnitude / other.magnitude, self.angle - other.angle)
        return Phasor.from_complex(complex(self) / complex(other))

    def __rtruediv__(self, other: complex | float) -> Phasor:
        return Phasor.from_complex(complex(other) / complex(self))

    def __neg__(self) -> Phasor:
        return Phasor(self.magnitude, self.angle + math.pi)

    def isclose(self, other: Phasor | complex, rel: float = 1e-12, abs_tol: float = 0.0) -> bool:
        return cmath.isclose(complex(self), complex(other), rel_tol=rel, abs_tol=abs_tol)

    def __str__(self) -> str:
        return f"{self.magnitude:.6g}∠{self.degrees:.4f}°"


ZERO = Phasor(0.0, 0.0)


@dataclass(frozen=True)
class ThreePhaseSet:
    a: Phasor
    b: Phasor
    c: Phasor

    @classmethod
    def from_array(cls, values: Sequence[complex]) -> ThreePhaseSet:
        a, b, c = (Phasor.from_complex(v) for v in values)
        return cls(a, b, c)

    def as_array(self) -> np.ndarray:
        return np.array([complex(self.a), complex(self.b), complex(self.c)])

    def __add__(self, other: ThreePhaseSet) -> ThreePhaseSet:
        return ThreePhaseSet.from_array(self.as_array() + other.as_array())


@dataclass(frozen=True)
class SequenceSet:
    zero: Phasor
    positive: Phasor
    negative: Phasor

    @classmethod
    def from_array(cls, values: Sequence[complex]) -> SequenceSet:
        z, p, n = (Phasor.from_complex(v) for v in values)
        return cls(z, p, n)

    def as_array(self) -> np.ndarray:
        return np.array([complex(self.zero), complex(self.positive), complex(self.negative)])

    def __add__(self, other: SequenceSet) -> SequenceSet:
        return SequenceSet.from_array(self.as_array() + other.as_array())


def abc_to_seq(abc: np.ndarray) -> np.ndarray:
    """Array form of :func:`to_sequence`; the leading axis holds a, b, c."""
    return np.tensordot(_FWD, np.asarray(abc, dtype=complex), axes=1)


def seq_to_abc(seq: np.ndarray) -> np.ndarray:
    """Array form of :func:`from_sequence`; the leading axis holds 0, 1, 2."""
    return np.tensordot(_INV, np.asarray(seq, dtype=complex), axes=1)


def to_sequence(abc: ThreePhaseSet) -> SequenceSet:
    return SequenceSet.from_array(abc_to_seq(abc.as_array()))


def from_sequence(seq: SequenceSet) -> ThreePhaseSet:
    return ThreePhaseSet.from_array(seq_to_abc(seq.as_array()))


def balanced(positive: Phasor | complex) -> ThreePhaseSet:
    """Three-phase set with only a positive-sequence component."""
    return ThreePhaseSet.from_array(seq_to_abc(np.array([0.0, complex(positive), 0.0])))


def samples_per_cycle(sample_rate: float, fundamental: float) -> int:
    ratio = sample_rate / fundamental
    n = round(ratio)
    if n < 8 or abs(ratio - n) > 1e-9 * ratio:
        raise InvalidRate(
            f"sample_rate/fundamental must be an integer >= 8, got {ratio!r}"
        )
    return int(n)


def estimate_phasor(
    samples: Sequence[float],
    sample_rate: float = SAMPLES_PER_CYCLE * FUNDAMENTAL_HZ,
    fundamental: float = FUNDAMENTAL_HZ,
) -> Phasor:
    """Full-cycle DFT estimate of the fundamental over the latest cycle.

    The phase is referenced to the first sample of ``samples`` (t = 0), so
    the estimate of a steady sinusoid does not depend on how many cycles
    were recorded.
    """
    n = samples_per_cycle(sample_rate, fundamental)
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < n:
        raise InsufficientSamples(f"need at least {n} samples, got {x.size}")
    start = x.size - n
    k = np.arange(start, x.size)
    kernel = np.exp(-2j * np.pi * (k % n) / n)
    value = math.sqrt(2.0) / n * np.dot(x[start:], kernel)
    return Phasor.from_complex(complex(value))
