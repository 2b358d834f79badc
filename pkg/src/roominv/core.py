"""Domain types shared by the simulator, the inverse filter designer and the metrics.

Coordinates are in meters with the origin at the room center, so a point
``p`` is inside the room when ``|p_i| < dims_i / 2`` on every axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SPEED_OF_SOUND = 346.58
SAMPLE_RATE = 44100
IR_LENGTH = 65536

AXES = "xyz"


class RoomInvError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(RoomInvError, ValueError):
    pass


class PointOutsideRoom(GeometryError):
    def __init__(self, index: int, axis: str, value: float, half_width: float):
        self.index = index
        self.axis = axis
        super().__init__(
            f"point {index} lies outside the room on axis {axis}: "
            f"|{value:g}| >= {half_width:g}"
        )


class CoincidentSourceReceiver(GeometryError):
    pass


class DimensionMismatch(RoomInvError, ValueError):
    pass


class RateMismatch(RoomInvError, ValueError):
    pass


class InvalidValue(RoomInvError, ValueError):
    """A constructor argument violates a type invariant."""


class BetaNegative(InvalidValue):
    pass


class NonpositiveTau(InvalidValue):
    pass


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in AXES:
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidValue(f"{name} coordinate must be finite, got {v}")
            object.__setattr__(self, name, v)

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def distance(self, other: "Point3") -> float:
        return math.dist(tuple(self), tuple(other))


def as_point(p) -> Point3:
    if isinstance(p, Point3):
        return p
    x, y, z = p
    return Point3(x, y, z)


def _check_reflection(reflection):
    arr = np.asarray(reflection, dtype=float)
    if arr.shape not in ((), (3, 2)):
        raise InvalidValue(
            "reflection must be a scalar or a 3x2 table of (negative, positive) wall values"
        )
    if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise InvalidValue(f"reflection coefficients must lie in [0, 1], got {reflection!r}")
    if arr.shape == ():
        return float(arr)
    return tuple((float(a), float(b)) for a, b in arr)


@dataclass(frozen=True)
class RoomModel:
    """Rectangular room with rigid, frequency-independent walls.

    ``reflection`` is either one pressure reflection coefficient shared by all
    six walls or a 3x2 table ``((x-, x+), (y-, y+), (z-, z+))``.
    """

    dims: tuple[float, float, float]
    reflection: float | tuple = 1.0
    speed_of_sound: float = SPEED_OF_SOUND
    sample_rate: float = SAMPLE_RATE
    ir_length: int = IR_LENGTH

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dims)
        if len(dims) != 3 or not all(math.isfinite(d) and d > 0 for d in dims):
            raise InvalidValue(f"room dims must be three positive lengths, got {self.dims!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "reflection", _check_reflection(self.reflection))
        if not (self.speed_of_sound > 0 and math.isfinite(self.speed_of_sound)):
            raise InvalidValue("speed_of_sound must be positive")
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise InvalidValue("sample_rate must be positive")
        if int(self.ir_length) != self.ir_length or self.ir_length <= 0:
            raise InvalidValue("ir_length must be a positive integer")
        object.__setattr__(self, "ir_length", int(self.ir_length))

    @classmethod
    def from_absorptivity(cls, dims, abar: float, **kwargs) -> "RoomModel":
        from .evaluation import reflection_from_absorptivity

        return cls(dims, reflection_from_absorptivity(abar), **kwargs)

    @property
    def uniform(self) -> bool:
        return isinstance(self.reflection, float)

    @property
    def abar(self) -> float:
        """Average Sabine absorptivity ``1 - r**2`` (mean over walls if not uniform)."""
        r = np.asarray(self.reflection, dtype=float)
        return float(np.mean(1.0 - r**2))

    @property
    def wall_reflection(self) -> np.ndarray:
        """Reflection coefficients as a 3x2 array, one row per axis."""
        return np.broadcast_to(np.asarray(self.reflection, dtype=float), (3, 2)).copy()

    @property
    def volume(self) -> float:
        lx, ly, lz = self.dims
        return lx * ly * lz

    @property
    def surface(self) -> float:
        lx, ly, lz = self.dims
        return 2.0 * (lx * ly + ly * lz + lx * lz)

    @property
    def duration(self) -> float:
        return self.ir_length / self.sample_rate

    def replace(self, **changes) -> "RoomModel":
        from dataclasses import replace

        return replace(self, **changes)


def validate_geometry(room: RoomModel, pts: Iterable) -> None:
    """Raise :class:`PointOutsideRoom` unless every point is strictly inside ``room``."""
    for index, p in enumerate(pts):
        p = as_point(p)
        for axis, value, dim in zip(AXES, p, room.dims):
            if not abs(value) < dim / 2:
                raise PointOutsideRoom(index, axis, value, dim / 2)


def _frozen(samples) -> np.ndarray:
    arr = np.array(samples, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        arr = _frozen(self.samples)
        if arr.ndim != 1 or arr.size < 1:
            raise InvalidValue("an impulse response is a non-empty 1-D signal")
        if not np.all(np.isfinite(arr)):
            raise InvalidValue("impulse response samples must be finite")
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise InvalidValue("sample_rate must be positive")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, ImpulseResponse):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )

    @classmethod
    def impulse(cls, sample_rate: float, length: int = 1, delay: int = 0) -> "ImpulseResponse":
        x = np.zeros(max(length, delay + 1))
        x[delay] = 1.0
        return cls(x, sample_rate)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def energy(self) -> float:
        return float(np.dot(self.samples, self.samples))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """M x L grid of equal-length responses; entry ``(j, i)`` runs from source i to receiver j."""

    data: np.ndarray
    sample_rate: float

    def __post_init__(self):
        arr = _frozen(self.data)
        if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise InvalidValue("transfer matrix data must have shape (M, L, N) with M, L, N >= 1")
        if not np.all(np.isfinite(arr)):
            raise InvalidValue("transfer matrix samples must be finite")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[ImpulseResponse]]) -> "TransferMatrix":
        flat = [ir for row in entries for ir in row]
        if not flat or any(len(row) != len(entries[0]) for row in entries):
            raise DimensionMismatch("entries must form a non-empty rectangular grid")
        rates = {ir.sample_rate for ir in flat}
        if len(rates) != 1:
            raise RateMismatch(f"entries have different sample rates: {sorted(rates)}")
        lengths = {len(ir) for ir in flat}
        if len(lengths) != 1:
            raise DimensionMismatch(f"entries have different lengths: {sorted(lengths)}")
        data = np.array([[ir.samples for ir in row] for row in entries])
        return cls(data, rates.pop())

    @property
    def M(self) -> int:
        return self.data.shape[0]

    @property
    def L(self) -> int:
        return self.data.shape[1]

    @property
    def length(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    def __getitem__(self, ji) -> ImpulseResponse:
        j, i = ji
        return ImpulseResponse(self.data[j, i], self.sample_rate)

    def with_entry(self, j: int, i: int, ir: ImpulseResponse) -> "TransferMatrix":
        if ir.sample_rate != self.sample_rate:
            raise RateMismatch("entry sample rate differs from the matrix")
        if len(ir) != self.length:
            raise DimensionMismatch("entry length differs from the matrix")
        data = self.data.copy()
        data[j, i] = ir.samples
        return TransferMatrix(data, self.sample_rate)

    def map(self, fn) -> "TransferMatrix":
        """Apply ``fn(ImpulseResponse) -> ImpulseResponse`` to every entry."""
        return TransferMatrix.from_entries(
            [[fn(self[j, i]) for i in range(self.L)] for j in range(self.M)]
        )


@dataclass(frozen=True)
class InversionConfig:
    """Regularized inversion settings.

    ``window_tau`` of ``None`` (or ``inf``) disables the exponential taper.
    ``fft_length`` of ``None`` picks twice the next power of two at or above the
    model length.
    """

    beta: float = 1e-2
    modeling_delay: float = 0.5
    fft_length: int | None = None
    window_tau: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.beta)):
            raise InvalidValue("beta must be finite")
        if self.beta < 0:
            raise BetaNegative(f"beta must be >= 0, got {self.beta}")
        if not (math.isfinite(self.modeling_delay) and self.modeling_delay >= 0):
            raise InvalidValue("modeling_delay must be a finite non-negative time")
        if self.fft_length is not None and (
            int(self.fft_length) != self.fft_length or self.fft_length < 1
        ):
            raise InvalidValue("fft_length must be a positive integer")
        if self.window_tau is not None and not self.window_tau > 0:
            raise NonpositiveTau(f"window_tau must be > 0, got {self.window_tau}")

    @property
    def windowed(self) -> bool:
        return self.window_tau is not None and math.isfinite(self.window_tau)

    def resolved_fft_length(self, model_length: int) -> int:
        if self.fft_length is None:
            return 2 * (1 << max(0, (model_length - 1).bit_length()))
        return int(self.fft_length)

    def delay_samples(self, sample_rate: float) -> int:
        return int(round(self.modeling_delay * sample_rate))

    def validate_for(self, model_length: int, sample_rate: float) -> None:
        n = self.resolved_fft_length(model_length)
        if n < model_length:
            raise InvalidValue(f"fft_length {n} is shorter than the model length {model_length}")
        if self.delay_samples(sample_rate) >= n:
            raise InvalidValue("modeling delay must be shorter than the FFT length")


# Pistol and microphone positions in the 1.84 x 1.79 x 1.83 m plywood test cube.
CUBE_DIMS = (1.84, 1.79, 1.83)
PISTOLS = (Point3(0.26, 0.30, -0.15), Point3(-0.26, -0.30, -0.15))
MICROPHONES = (Point3(-0.57, 0.58, 0.31), Point3(-0.39, 0.58, 0.31))
CUBE_ABAR = 0.0407
