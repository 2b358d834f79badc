"""Synthetic "measured" responses: the image model plus wall and air filtering.

This is a proxy for a physical measurement, not a measurement.  Each image
arrival of reflection order ``k`` passes through ``k`` first-order high-pass
sections (wall losses at low frequency) and a zero-phase Gaussian low-pass
whose attenuation grows as ``f**2 * distance`` (air absorption).  The clean
simulation ignores both, so the two drift apart as time goes on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import fft as sfft
from scipy import signal

from .core import ImpulseResponse, RoomModel, TransferMatrix, as_point, validate_geometry
from .evaluation import reflection_from_absorptivity
from .image_source import _check_pair, _iter_arrivals

SYNTHETIC_LABEL = "synthetic degradation proxy (not a measurement)"

AIR_REFERENCE_HZ = 10_000.0
AIR_REFERENCE_M = 34.3
BLUR_BLOCK = 64


@dataclass(frozen=True)
class DegradationConfig:
    enabled: bool = True
    wall_highpass_hz: float = 100.0
    air_db_per_10khz_per_34m: float = 8.0
    abar_offset: float = 0.0

    def __post_init__(self):
        for name in ("wall_highpass_hz", "air_db_per_10khz_per_34m", "abar_offset"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a finite value >= 0, got {v}")


def air_sigma(distance: float, db_per_10khz_per_34m: float) -> float:
    """Gaussian time spread (seconds) whose magnitude response matches air loss at ``distance``.

    Loss in dB is ``A (f / 10 kHz)**2 (d / 34.3 m)``, i.e. ``exp(-kappa f**2)``
    with ``kappa = A ln(10) / 20 * d / (34.3 * 1e8)``, which is the transform of
    a Gaussian with ``sigma**2 = kappa / (2 pi**2)``.
    """
    kappa = db_per_10khz_per_34m * math.log(10) / 20 * distance / (AIR_REFERENCE_M * AIR_REFERENCE_HZ**2)
    return math.sqrt(kappa / (2 * math.pi**2))


def air_attenuation_db(freq: float, distance: float, db_per_10khz_per_34m: float) -> float:
    return db_per_10khz_per_34m * (freq / AIR_REFERENCE_HZ) ** 2 * distance / AIR_REFERENCE_M


def _gaussian_kernel(sigma_samples: float) -> np.ndarray:
    if sigma_samples < 1e-3:
        return np.ones(1)
    half = int(math.ceil(5 * sigma_samples))
    n = np.arange(-half, half + 1)
    k = np.exp(-0.5 * (n / sigma_samples) ** 2)
    return k / k.sum()


def _air_blur(x: np.ndarray, fs: float, c: float, db: float) -> np.ndarray:
    """Blur each block of ``x`` with the kernel for the distance sound travels by that time."""
    if db == 0:
        return x
    n = x.size
    out = np.zeros(n)
    for start in range(0, n, BLUR_BLOCK):
        block = x[start : start + BLUR_BLOCK]
        if not block.any():
            continue
        t = (start + 0.5 * block.size) / fs
        kernel = _gaussian_kernel(air_sigma(c * t, db) * fs)
        half = kernel.size // 2
        y = np.convolve(block, kernel)
        lo = start - half
        a, b = max(lo, 0), min(lo + y.size, n)
        out[a:b] += y[a - lo : b - lo]
    return out


def _highpass_response(fc: float, fs: float, nfft: int) -> np.ndarray:
    b, a = signal.butter(1, fc, btype="highpass", fs=fs)
    _, h = signal.freqz(b, a, worN=nfft // 2 + 1, whole=False, include_nyquist=True)
    return h


def degrade(room: RoomModel, source, receiver, config: DegradationConfig | None = None) -> ImpulseResponse:
    """Proxy "measured" response for one source/receiver pair."""
    from .image_source import simulate

    config = config or DegradationConfig()
    s, q = _check_pair(room, source, receiver)
    if not config.enabled:
        return simulate(room, s, q)
    if config.abar_offset:
        abar = min(1.0, room.abar + config.abar_offset)
        room = room.replace(reflection=reflection_from_absorptivity(abar))
    n = room.ir_length
    fs = room.sample_rate
    fs_over_c = fs / room.speed_of_sound
    nfft = sfft.next_fast_len(2 * n, real=True)
    wall = _highpass_response(config.wall_highpass_hz, fs, nfft) if config.wall_highpass_hz > 0 else None

    spectrum = np.zeros(nfft // 2 + 1, dtype=complex)
    power = np.ones_like(spectrum)
    order = 0
    reach = room.speed_of_sound * n / fs
    for chunk in _iter_arrivals(room, s, q, reach):
        while order < chunk.order:
            if wall is not None:
                power = power * wall
            order += 1
        idx = np.floor(chunk.distance * fs_over_c + 0.5).astype(np.int64)
        ok = idx < n
        train = np.bincount(idx[ok], weights=chunk.amplitude[ok], minlength=n)
        spectrum += power * sfft.rfft(train, nfft)
    y = sfft.irfft(spectrum, nfft)[:n]
    y = _air_blur(y, fs, room.speed_of_sound, config.air_db_per_10khz_per_34m)
    return ImpulseResponse(y, fs)


def degrade_matrix(
    room: RoomModel, sources: Sequence, receivers: Sequence, config: DegradationConfig | None = None
) -> TransferMatrix:
    sources = [as_point(p) for p in sources]
    receivers = [as_point(p) for p in receivers]
    validate_geometry(room, sources + receivers)
    data = np.empty((len(receivers), len(sources), room.ir_length))
    for j, q in enumerate(receivers):
        for i, s in enumerate(sources):
            data[j, i] = degrade(room, s, q, config).samples
    return TransferMatrix(data, room.sample_rate)
