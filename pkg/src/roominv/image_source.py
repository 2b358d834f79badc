"""Image source simulation of rectangular-room impulse responses.

The image with lattice indices ``(l, m, n)`` sits at
``(l*Lx + (-1)**l * Sx, m*Ly + (-1)**m * Sy, n*Lz + (-1)**n * Sz)`` and
contributes ``r**(|l|+|m|+|n|) / d`` at delay ``d / c``.

The lattice is walked one reflection order at a time.  Per axis, the two
images ``+a`` and ``-a`` are stored as a pair sorted by squared offset; that
pair is unchanged when source and receiver are swapped, so the accumulation
order (and therefore every floating point sum) is identical for ``A -> B``
and ``B -> A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from scipy.signal import windows

from .core import (
    AXES,
    CoincidentSourceReceiver,
    ImpulseResponse,
    Point3,
    RoomInvError,
    RoomModel,
    TransferMatrix,
    as_point,
    validate_geometry,
)

FRACTIONAL_TAPS = 81
FRACTIONAL_PHASES = 64
ORACLE_MAX_ORDER = 4


class OrderTooLarge(RoomInvError, ValueError):
    pass


@dataclass(frozen=True)
class ImageSource:
    indices: tuple[int, int, int]
    position: Point3
    amplitude: float
    delay_seconds: float

    @property
    def order(self) -> int:
        return sum(abs(i) for i in self.indices)


def image_position(room: RoomModel, source, indices) -> Point3:
    """Position of the image of ``source`` with lattice ``indices``."""
    s = as_point(source)
    return Point3(
        *(
            k * dim + (-1) ** (k % 2) * coord
            for k, dim, coord in zip(indices, room.dims, s)
        )
    )


def _wall_hits(index: int) -> tuple[int, int]:
    """(negative wall, positive wall) reflection counts for a signed lattice index."""
    a = abs(index)
    if index >= 0:
        return a // 2, (a + 1) // 2
    return (a + 1) // 2, a // 2


@dataclass
class _Arrivals:
    order: int
    distance: np.ndarray
    amplitude: np.ndarray
    index: np.ndarray  # (k, 3) signed lattice indices


class _AxisTable:
    """Squared source-to-receiver offsets for lattice indices ``-bound..bound`` on one axis.

    ``d2[a]`` and ``gain[a]`` hold the ``+a`` / ``-a`` pair sorted by
    ``(d2, gain)``; the missing partner of ``a = 0`` is ``inf``.
    """

    def __init__(self, dim, s, q, r_neg, r_pos, bound):
        a = np.arange(bound + 1)
        d2 = np.full((bound + 1, 2), np.inf)
        gain = np.zeros((bound + 1, 2))
        signed = np.zeros((bound + 1, 2), dtype=np.int64)
        for slot, sgn in enumerate((1, -1)):
            idx = sgn * a
            parity = np.where(idx % 2 == 0, 1.0, -1.0)
            offset = idx * dim + (parity * s - q)
            neg = np.where(idx >= 0, a // 2, (a + 1) // 2)
            pos = np.where(idx >= 0, (a + 1) // 2, a // 2)
            d2[:, slot] = offset * offset
            gain[:, slot] = r_neg**neg * r_pos**pos
            signed[:, slot] = idx
        d2[0, 1] = np.inf
        gain[0, 1] = 0.0
        swap = (d2[:, 1] < d2[:, 0]) | ((d2[:, 1] == d2[:, 0]) & (gain[:, 1] < gain[:, 0]))
        for arr in (d2, gain, signed):
            arr[swap] = arr[swap][:, ::-1]
        self.d2 = d2
        self.gain = gain
        self.signed = signed
        self.bound = bound


def _axis_tables(room: RoomModel, source: Point3, receiver: Point3, radius: float):
    walls = room.wall_reflection
    tables = []
    for ax in range(3):
        dim = room.dims[ax]
        bound = int(math.ceil(radius / dim)) + 1
        tables.append(
            _AxisTable(dim, tuple(source)[ax], tuple(receiver)[ax], walls[ax, 0], walls[ax, 1], bound)
        )
    return tables


def _iter_arrivals(
    room: RoomModel,
    source: Point3,
    receiver: Point3,
    max_distance: float,
    max_order: int | None = None,
    with_indices: bool = False,
) -> Iterator[_Arrivals]:
    """Yield every image closer than ``max_distance``, grouped by reflection order."""
    tx, ty, tz = _axis_tables(room, source, receiver, max_distance)
    r2 = max_distance * max_distance
    a, b = np.meshgrid(np.arange(tx.bound + 1), np.arange(ty.bound + 1), indexing="ij")
    a = a.ravel()
    b = b.ravel()
    ab_min = tx.d2[a, 0] + ty.d2[b, 0]
    keep = ab_min < r2
    a, b, ab_min = a[keep], b[keep], ab_min[keep]
    ab = a + b
    top = tx.bound + ty.bound + tz.bound
    if max_order is not None:
        top = min(top, max_order)
    uniform = room.uniform
    r = room.reflection if uniform else None
    for k in range(top + 1):
        c = k - ab
        sel = (c >= 0) & (c <= tz.bound)
        if not sel.any():
            continue
        ka, kb, kc = a[sel], b[sel], c[sel]
        sel = ab_min[sel] + tz.d2[kc, 0] < r2
        if not sel.any():
            continue
        ka, kb, kc = ka[sel], kb[sel], kc[sel]
        d2 = (
            tx.d2[ka][:, :, None, None]
            + ty.d2[kb][:, None, :, None]
            + tz.d2[kc][:, None, None, :]
        ).ravel()
        inside = d2 < r2
        dist = np.sqrt(d2[inside])
        if uniform:
            amp = r**k / dist
        else:
            gain = (
                tx.gain[ka][:, :, None, None]
                * ty.gain[kb][:, None, :, None]
                * tz.gain[kc][:, None, None, :]
            ).ravel()[inside]
            amp = gain / dist
        index = None
        if with_indices:
            shape = (ka.size, 2, 2, 2)
            index = np.stack(
                [
                    np.broadcast_to(tx.signed[ka][:, :, None, None], shape).ravel()[inside],
                    np.broadcast_to(ty.signed[kb][:, None, :, None], shape).ravel()[inside],
                    np.broadcast_to(tz.signed[kc][:, None, None, :], shape).ravel()[inside],
                ],
                axis=1,
            )
        yield _Arrivals(k, dist, amp, index)


def _check_pair(room: RoomModel, source, receiver) -> tuple[Point3, Point3]:
    s, q = as_point(source), as_point(receiver)
    validate_geometry(room, [s, q])
    if s == q:
        raise CoincidentSourceReceiver("source and receiver coincide")
    return s, q


def lattice_images(room: RoomModel, source, receiver, max_order: int) -> list[ImageSource]:
    """All images up to ``max_order`` reflections, from the same walker ``simulate`` uses."""
    s, q = _check_pair(room, source, receiver)
    reach = (max_order + 1) * max(room.dims) * 2 + s.distance(q)
    out = []
    for chunk in _iter_arrivals(room, s, q, reach, max_order=max_order, with_indices=True):
        for idx, dist, amp in zip(chunk.index, chunk.distance, chunk.amplitude):
            idx = tuple(int(i) for i in idx)
            out.append(
                ImageSource(idx, image_position(room, s, idx), float(amp), float(dist) / room.speed_of_sound)
            )
    return out


def fractional_delay_kernels(phases: int = FRACTIONAL_PHASES, taps: int = FRACTIONAL_TAPS) -> np.ndarray:
    """Hann-windowed sinc kernels for delays ``p / phases`` of a sample, ``p = 0..phases``.

    Row ``p`` is centred on tap ``taps // 2``.
    """
    center = taps // 2
    n = np.arange(taps) - center
    frac = np.arange(phases + 1)[:, None] / phases
    return np.sinc(n[None, :] - frac) * windows.hann(taps, sym=True)[None, :]


def _render(room: RoomModel, chunks: Iterator[_Arrivals], fractional: bool) -> np.ndarray:
    n = room.ir_length
    fs_over_c = room.sample_rate / room.speed_of_sound
    if not fractional:
        out = np.zeros(n)
        for chunk in chunks:
            idx = np.floor(chunk.distance * fs_over_c + 0.5).astype(np.int64)
            ok = idx < n
            out += np.bincount(idx[ok], weights=chunk.amplitude[ok], minlength=n)
        return out

    # Polyphase accumulation: each arrival is split between its two nearest
    # kernel phases, then every phase train is convolved with its kernel.
    phases = FRACTIONAL_PHASES
    kernels = fractional_delay_kernels(phases)
    half = FRACTIONAL_TAPS // 2
    grid = np.zeros((phases + 1) * n)
    for chunk in chunks:
        x = chunk.distance * fs_over_c
        n0 = np.floor(x).astype(np.int64)
        p = (x - n0) * phases
        p0 = np.minimum(np.floor(p).astype(np.int64), phases - 1)
        w = p - p0
        ok = n0 < n
        base = n0[ok] * (phases + 1) + p0[ok]
        amp = chunk.amplitude[ok]
        grid += np.bincount(base, weights=amp * (1.0 - w[ok]), minlength=grid.size)
        grid += np.bincount(base + 1, weights=amp * w[ok], minlength=grid.size)
    trains = grid.reshape(n, phases + 1).T
    nfft = n + FRACTIONAL_TAPS - 1
    spec = np.einsum(
        "pf,pf->f", np.fft.rfft(trains, nfft, axis=1), np.fft.rfft(kernels, nfft, axis=1)
    )
    full = np.fft.irfft(spec, nfft)
    return full[half : half + n]


def simulate(room: RoomModel, source, receiver, fractional_delay: bool = False) -> ImpulseResponse:
    """Impulse response from ``source`` to ``receiver``, ``room.ir_length`` samples long.

    Every image arriving before ``ir_length / sample_rate`` is included.  By
    default each arrival is rounded to the nearest sample; with
    ``fractional_delay`` it is spread with an 81-tap Hann-windowed sinc.
    """
    s, q = _check_pair(room, source, receiver)
    reach = room.speed_of_sound * room.ir_length / room.sample_rate
    chunks = _iter_arrivals(room, s, q, reach)
    return ImpulseResponse(_render(room, chunks, fractional_delay), room.sample_rate)


def simulate_matrix(
    room: RoomModel, sources: Sequence, receivers: Sequence, fractional_delay: bool = False
) -> TransferMatrix:
    """Entry ``(j, i)`` is the response from ``sources[i]`` to ``receivers[j]``."""
    sources = [as_point(p) for p in sources]
    receivers = [as_point(p) for p in receivers]
    validate_geometry(room, sources + receivers)
    if not sources or not receivers:
        raise ValueError("need at least one source and one receiver")
    data = np.empty((len(receivers), len(sources), room.ir_length))
    for j, q in enumerate(receivers):
        for i, s in enumerate(sources):
            data[j, i] = simulate(room, s, q, fractional_delay).samples
    return TransferMatrix(data, room.sample_rate)


def simulate_oracle(room: RoomModel, source, receiver, max_order: int) -> list[ImageSource]:
    """Images found by repeatedly mirroring the source in the six wall planes.

    Independent of the lattice formula: positions are tracked as exact
    rationals, so images reached along different mirror sequences merge
    exactly, keeping the first (lowest-order) visit.
    """
    if max_order > ORACLE_MAX_ORDER:
        raise OrderTooLarge(f"oracle enumeration is limited to order {ORACLE_MAX_ORDER}")
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    s, q = _check_pair(room, source, receiver)
    half = [Fraction(d) / 2 for d in room.dims]
    start = tuple(Fraction(v) for v in s)
    no_hits = ((0, 0),) * 3
    seen = {start: no_hits}
    frontier = [start]
    for _ in range(max_order):
        nxt = []
        for pos in frontier:
            hits = seen[pos]
            for ax in range(3):
                for side, wall in ((0, -half[ax]), (1, half[ax])):
                    mirrored = list(pos)
                    mirrored[ax] = 2 * wall - pos[ax]
                    mirrored = tuple(mirrored)
                    if mirrored in seen:
                        continue
                    h = [list(pair) for pair in hits]
                    h[ax][side] += 1
                    seen[mirrored] = tuple(tuple(pair) for pair in h)
                    nxt.append(mirrored)
        frontier = nxt

    walls = room.wall_reflection
    images = []
    for pos, hits in seen.items():
        indices = []
        for ax in range(3):
            dim = Fraction(room.dims[ax])
            even = (pos[ax] - start[ax]) / dim
            indices.append(int(even) if even.denominator == 1 and int(even) % 2 == 0
                           else int((pos[ax] + start[ax]) / dim))
        order = sum(sum(pair) for pair in hits)
        if room.uniform:
            gain = room.reflection**order
        else:
            gain = math.prod(
                walls[ax, side] ** hits[ax][side] for ax in range(3) for side in range(2)
            )
        point = Point3(*(float(v) for v in pos))
        d = point.distance(q)
        images.append(ImageSource(tuple(indices), point, gain / d, d / room.speed_of_sound))
    return images
