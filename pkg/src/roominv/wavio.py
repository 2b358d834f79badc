"""Mono IEEE-float WAV files.

Samples are stored as 32-bit floats, so a round trip is exact for any signal
whose values are representable in float32 and rounds everything else to the
nearest float32.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.io import wavfile

from .core import ImpulseResponse, InvalidValue


def write_wav(path: str | os.PathLike, ir: ImpulseResponse) -> None:
    rate = ir.sample_rate
    if rate != int(rate):
        raise InvalidValue(f"WAV needs an integer sample rate, got {rate}")
    wavfile.write(os.fspath(path), int(rate), ir.samples.astype(np.float32))


def read_wav(path: str | os.PathLike) -> ImpulseResponse:
    rate, data = wavfile.read(os.fspath(path))
    if data.ndim != 1:
        raise InvalidValue(f"{path}: expected a mono file, got {data.shape[1]} channels")
    if data.dtype.kind == "f":
        samples = data.astype(np.float64)
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        # Integer PCM is scaled to [-1, 1).
        samples = data.astype(np.float64) / float(np.iinfo(data.dtype).max + 1)
    return ImpulseResponse(samples, float(rate))
