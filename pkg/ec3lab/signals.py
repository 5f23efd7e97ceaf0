"""
Fast signals c(t)/J0 that dress the adiabatic Hamiltonian: H(t) = (1 + c(t)/J0) H0(t)
"""

import math
import logging
from abc import ABC, abstractmethod
from functools import lru_cache
from typing import ClassVar, Dict, List, Optional, Tuple
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DomainError, SignalSyntaxError

logger = logging.getLogger(__name__)

# Relative tolerance for snapping times onto interval and duty boundaries.
GRID_SNAP = 1e-9
MAX_SEED = (1 << 64) - 1


class SignalKind(Enum):
    ZERO = "zero"
    PULSE_TRAIN = "pulse"
    COS2 = "cos2"
    SIN2 = "sin2"
    RANDOM_HOLD = "randhold"


def _interval_position(t: float, interval: float) -> Tuple[int, float]:
    """Index j and fractional position of t within [j*interval, (j+1)*interval)"""
    x = t / interval
    nearest = round(x)
    if abs(x - nearest) <= GRID_SNAP * max(1.0, abs(x)):
        x = float(nearest)
    j = math.floor(x)
    return j, x - j


def _grid_points(start: float, stop: float, interval: float, offset: float = 0.0) -> List[float]:
    """Points offset + j*interval strictly inside (start, stop), boundary-snapped"""
    eps = GRID_SNAP * max(1.0, abs(stop))
    first = math.ceil((start - offset) / interval - GRID_SNAP)
    points = []
    j = first
    while True:
        point = offset + j * interval
        if point >= stop - eps:
            break
        if point > start + eps:
            points.append(point)
        j += 1
    return points


@dataclass(frozen=True)
class SignalSpec(ABC):
    """A fast-signal generator; instances are immutable and sampling is pure"""

    kind: ClassVar[SignalKind]

    @abstractmethod
    def sample(self, t: float) -> float:
        """Value of c(t)/J0"""

    def breakpoints(self, start: float, stop: float) -> List[float]:
        """Discontinuities strictly inside (start, stop); empty for smooth signals"""
        return []

    @property
    def is_piecewise(self) -> bool:
        return False

    @property
    def hold_interval(self) -> Optional[float]:
        """Interval Delta of piecewise-constant signals"""
        return None

    @property
    def period(self) -> Optional[float]:
        """Oscillation period of smooth periodic signals"""
        return None

    @property
    def strength(self) -> float:
        return 0.0

    def with_strength(self, s: float) -> "SignalSpec":
        raise DomainError(f"{self.kind.value} signals have no strength parameter")

    @abstractmethod
    def to_syntax(self) -> str:
        """Command-line form accepted by parse_signal"""


@dataclass(frozen=True)
class ZeroSignal(SignalSpec):
    kind: ClassVar[SignalKind] = SignalKind.ZERO

    def sample(self, t: float) -> float:
        return 0.0

    def with_strength(self, s: float) -> SignalSpec:
        if s != 0.0:
            raise DomainError("the zero signal only admits strength 0")
        return self

    def to_syntax(self) -> str:
        return "zero"


@dataclass(frozen=True)
class PulseTrain(SignalSpec):
    """Rectangular pulses of height s, on for the first duty*Delta of every interval"""
    strength_value: float
    interval: float
    duty: float = 0.5

    kind: ClassVar[SignalKind] = SignalKind.PULSE_TRAIN

    def __post_init__(self):
        if not self.strength_value >= 0.0:
            raise DomainError(f"pulse strength must be >= 0, got {self.strength_value}")
        if not self.interval > 0.0:
            raise DomainError(f"pulse interval must be > 0, got {self.interval}")
        if not 0.0 < self.duty <= 1.0:
            raise DomainError(f"duty cycle must lie in (0, 1], got {self.duty}")

    def sample(self, t: float) -> float:
        _, frac = _interval_position(t, self.interval)
        return self.strength_value if frac < self.duty - GRID_SNAP else 0.0

    def breakpoints(self, start: float, stop: float) -> List[float]:
        points = _grid_points(start, stop, self.interval)
        if self.duty < 1.0:
            points += _grid_points(start, stop, self.interval, self.duty * self.interval)
        return sorted(points)

    @property
    def is_piecewise(self) -> bool:
        return True

    @property
    def hold_interval(self) -> Optional[float]:
        return self.interval

    @property
    def strength(self) -> float:
        return self.strength_value

    def with_strength(self, s: float) -> SignalSpec:
        return replace(self, strength_value=s)

    def to_syntax(self) -> str:
        return f"pulse:s={self.strength_value!r},delta={self.interval!r},duty={self.duty!r}"


@dataclass(frozen=True)
class _Oscillating(SignalSpec):
    amplitude: float
    frequency: float

    def __post_init__(self):
        if not math.isfinite(self.amplitude) or not math.isfinite(self.frequency):
            raise DomainError("oscillating signal parameters must be finite")
        if self.amplitude < -1.0:
            raise DomainError(
                f"amplitude {self.amplitude} would make the dressed coefficient negative"
            )

    @property
    def period(self) -> Optional[float]:
        if self.frequency == 0.0:
            return None
        return 2.0 * math.pi / abs(self.frequency)

    @property
    def strength(self) -> float:
        return self.amplitude

    def with_strength(self, s: float) -> SignalSpec:
        return replace(self, amplitude=s)

    def to_syntax(self) -> str:
        return f"{self.kind.value}:a={self.amplitude!r},w={self.frequency!r}"


@dataclass(frozen=True)
class Cos2Signal(_Oscillating):
    """A cos^2(w t)"""
    kind: ClassVar[SignalKind] = SignalKind.COS2

    def sample(self, t: float) -> float:
        return self.amplitude * math.cos(self.frequency * t) ** 2


@dataclass(frozen=True)
class Sin2Signal(_Oscillating):
    """A sin^2(w t)"""
    kind: ClassVar[SignalKind] = SignalKind.SIN2

    def sample(self, t: float) -> float:
        return self.amplitude * math.sin(self.frequency * t) ** 2


@lru_cache(maxsize=1 << 16)
def _hold_uniform(seed: int, index: int) -> float:
    # Philox4x64-10 keyed by the seed, counter set to the interval index.
    generator = np.random.Generator(np.random.Philox(key=seed, counter=index))
    return float(generator.random())


@dataclass(frozen=True)
class RandomHold(SignalSpec):
    """Uniform value from [low, high], redrawn at every multiple of Delta"""
    low: float
    high: float
    interval: float
    seed: int

    kind: ClassVar[SignalKind] = SignalKind.RANDOM_HOLD

    def __post_init__(self):
        problems = []
        if not self.low <= self.high:
            problems.append(f"low {self.low} exceeds high {self.high}")
        if self.low < -1.0:
            problems.append(f"low {self.low} would make the dressed coefficient negative")
        if not self.interval > 0.0:
            problems.append(f"interval must be > 0, got {self.interval}")
        if not 0 <= self.seed <= MAX_SEED:
            problems.append(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if problems:
            raise DomainError("; ".join(problems))

    def value_at_index(self, index: int) -> float:
        return self.low + (self.high - self.low) * _hold_uniform(self.seed, index)

    def sample(self, t: float) -> float:
        j, _ = _interval_position(t, self.interval)
        return self.value_at_index(j)

    def breakpoints(self, start: float, stop: float) -> List[float]:
        return _grid_points(start, stop, self.interval)

    @property
    def is_piecewise(self) -> bool:
        return True

    @property
    def hold_interval(self) -> Optional[float]:
        return self.interval

    def to_syntax(self) -> str:
        return (
            f"randhold:lo={self.low!r},hi={self.high!r},"
            f"delta={self.interval!r},seed={self.seed}"
        )


def sample(spec: SignalSpec, t: float) -> float:
    if t < 0.0:
        raise DomainError(f"signals are defined for t >= 0, got {t}")
    return spec.sample(t)


def dressed_coefficient(spec: SignalSpec, t: float) -> float:
    """1 + c(t)/J0; non-negative for every valid spec"""
    return 1.0 + sample(spec, t)


def _parse_fields(body: str, syntax: str) -> Dict[str, str]:
    fields: Dict[str, str] = {}
    if not body:
        return fields
    for part in body.split(","):
        key, sep, value = part.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise SignalSyntaxError(f"expected key=value in '{syntax}', got '{part}'")
        fields[key.strip()] = value.strip()
    return fields


def _take_float(fields: Dict[str, str], key: str, syntax: str, default: Optional[float] = None) -> float:
    if key not in fields:
        if default is None:
            raise SignalSyntaxError(f"'{syntax}' is missing '{key}='")
        return default
    try:
        return float(fields.pop(key))
    except ValueError as e:
        raise SignalSyntaxError(f"'{key}' in '{syntax}' is not a number") from e


def parse_signal(syntax: str) -> SignalSpec:
    """
    Parse the command-line signal syntax:
    zero | pulse:s=,delta=,duty= | cos2:a=,w= | sin2:a=,w= | randhold:lo=,hi=,delta=,seed=
    """
    text = syntax.strip()
    name, _, body = text.partition(":")
    fields = _parse_fields(body, syntax)

    try:
        if name == SignalKind.ZERO.value:
            spec: SignalSpec = ZeroSignal()
        elif name == SignalKind.PULSE_TRAIN.value:
            spec = PulseTrain(
                strength_value=_take_float(fields, "s", syntax, 0.0),
                interval=_take_float(fields, "delta", syntax),
                duty=_take_float(fields, "duty", syntax, 0.5),
            )
        elif name in (SignalKind.COS2.value, SignalKind.SIN2.value):
            cls = Cos2Signal if name == SignalKind.COS2.value else Sin2Signal
            spec = cls(
                amplitude=_take_float(fields, "a", syntax),
                frequency=_take_float(fields, "w", syntax),
            )
        elif name == SignalKind.RANDOM_HOLD.value:
            seed_text = fields.pop("seed", None)
            if seed_text is None or not seed_text.isdigit():
                raise SignalSyntaxError(f"'{syntax}' needs an unsigned integer 'seed='")
            spec = RandomHold(
                low=_take_float(fields, "lo", syntax),
                high=_take_float(fields, "hi", syntax),
                interval=_take_float(fields, "delta", syntax),
                seed=int(seed_text),
            )
        else:
            known = ", ".join(kind.value for kind in SignalKind)
            raise SignalSyntaxError(f"unknown signal '{name}' (known: {known})")
    except DomainError as e:
        raise SignalSyntaxError(f"invalid parameters in '{syntax}': {e}") from e

    if fields:
        raise SignalSyntaxError(f"unexpected field(s) {sorted(fields)} in '{syntax}'")
    return spec


def mean_value(spec: SignalSpec, duration: float, samples: int = 200_000) -> float:
    """Midpoint-rule time average of c(t)/J0 over [0, duration]"""
    times = (np.arange(samples) + 0.5) * (duration / samples)
    return float(np.mean([spec.sample(float(t)) for t in times]))
