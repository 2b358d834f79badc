"""Dereverberation and simulation-fidelity metrics.

All integrals are Riemann sums with ``dt = 1 / fs``; every metric is a ratio,
so the constant cancels.  Signals are :class:`~roominv.core.ImpulseResponse`
objects, and a dereverberated output ``x_hat`` is expected to carry its target
impulse at the modeling delay ``D``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import ImpulseResponse, RateMismatch, RoomInvError


class ZeroRmsInterval(RoomInvError, ValueError):
    def __init__(self, start: int):
        self.start = start
        super().__init__(f"interval starting at sample {start} is silent in one signal")


class EmptyIntegrationRegion(RoomInvError, ValueError):
    pass


class ZeroEnergy(RoomInvError, ValueError):
    pass


class LevelNeverReached(RoomInvError, ValueError):
    """The residual energy stays above the requested level up to the signal end."""

    def __init__(self, level: float, signal_end: float):
        self.level = level
        self.signal_end = signal_end
        super().__init__(f"level {level:g} dB not reached before the signal ends at {signal_end:g} s")


class OutOfRange(RoomInvError, ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    t_min: float = 0.0025
    early_window_T: float = 0.100
    modeling_delay: float = 0.5
    mse_interval: float = 0.020

    def __post_init__(self):
        if not 0 < self.t_min < self.early_window_T:
            raise ValueError("need 0 < t_min < early_window_T")
        if self.modeling_delay < 0:
            raise ValueError("modeling_delay must be >= 0")
        if self.mse_interval <= 0:
            raise ValueError("mse_interval must be > 0")


@dataclass
class EvalReport:
    """Per-control-point results; ``inf`` marks an exactly zero residual."""

    control_point: int
    dr_total: float
    dr_early: float
    residual_energy_total: float
    residual_energy_early: float
    snr: float
    t10_measured: float
    t20_measured: float
    t60_measured: float
    t10_dereverberated: float
    t20_dereverberated: float
    t60_dereverberated: float
    mse_curve: np.ndarray = field(default_factory=lambda: np.empty((0, 2)), repr=False)

    CSV_COLUMNS = (
        "control_point",
        "dr_total_db",
        "dr_early_db",
        "residual_energy_total",
        "residual_energy_early",
        "snr_db",
        "t10_measured_s",
        "t20_measured_s",
        "t60_measured_s",
        "t10_dereverberated_s",
        "t20_dereverberated_s",
        "t60_dereverberated_s",
    )

    def csv_row(self) -> list:
        d = asdict(self)
        d.pop("mse_curve")
        return list(d.values())


def local_mse(sim: ImpulseResponse, meas: ImpulseResponse, interval: int) -> np.ndarray:
    """RMS-normalized squared error over consecutive ``interval``-sample blocks.

    Returns an array of ``(k, E_ms[k])`` rows, one per complete block starting
    at sample ``k``.
    """
    if sim.sample_rate != meas.sample_rate:
        raise RateMismatch("signals have different sample rates")
    if len(sim) != len(meas):
        raise ValueError("signals must have equal length")
    if interval < 2:
        raise ValueError("interval must be at least 2 samples")
    blocks = len(sim) // interval
    a = sim.samples[: blocks * interval].reshape(blocks, interval)
    b = meas.samples[: blocks * interval].reshape(blocks, interval)
    ra = np.sqrt(np.mean(a * a, axis=1))
    rb = np.sqrt(np.mean(b * b, axis=1))
    silent = np.flatnonzero((ra == 0) | (rb == 0))
    if silent.size:
        raise ZeroRmsInterval(int(silent[0]) * interval)
    e = np.mean((a / ra[:, None] - b / rb[:, None]) ** 2, axis=1)
    starts = np.arange(blocks) * interval
    return np.column_stack([starts, e])


def _delay_index(x_hat: ImpulseResponse, delay: float) -> int:
    return int(round(delay * x_hat.sample_rate))


def residual_energy(x_hat: ImpulseResponse, delay: float, t_min: float, horizon: float = math.inf) -> float:
    """Energy of ``x_hat`` where ``t_min < |t - delay| < horizon``."""
    fs = x_hat.sample_rate
    lag = np.abs(np.arange(len(x_hat)) - _delay_index(x_hat, delay))
    region = (lag > t_min * fs) & (lag < horizon * fs)
    return float(np.sum(x_hat.samples[region] ** 2)) / fs


def dereverberation_ratio(
    g_meas: ImpulseResponse,
    x_hat: ImpulseResponse,
    cfg: EvalConfig,
    horizon: float = math.inf,
) -> float:
    """Room energy after ``t_min`` over residual energy away from ``D``, in dB.

    Returns ``math.inf`` when the residual is exactly zero.
    """
    if g_meas.sample_rate != x_hat.sample_rate:
        raise RateMismatch("signals have different sample rates")
    fs = g_meas.sample_rate
    n = np.arange(len(g_meas))
    region = (n > cfg.t_min * fs) & (n < horizon * fs)
    if not region.any():
        raise EmptyIntegrationRegion("no samples of g_meas between t_min and the horizon")
    room = float(np.sum(g_meas.samples[region] ** 2)) / fs
    if room <= 0:
        raise EmptyIntegrationRegion("g_meas has no energy between t_min and the horizon")
    resid = residual_energy(x_hat, cfg.modeling_delay, cfg.t_min, horizon)
    if resid == 0:
        return math.inf
    return 10.0 * math.log10(room / resid)


def impulse_snr(x_hat: ImpulseResponse, delay: float) -> float:
    """Energy of the sample at ``delay`` over the energy of all other samples, in dB."""
    d = _delay_index(x_hat, delay)
    e = x_hat.samples**2
    peak = float(e[d]) if 0 <= d < e.size else 0.0
    rest = float(np.sum(e)) - peak
    if rest <= 0:
        return math.inf
    if peak == 0:
        return -math.inf
    return 10.0 * math.log10(peak / rest)


def _backward_energy(x: np.ndarray) -> np.ndarray:
    # S[n] = sum_{m >= n} x[m]^2 for n = 0..len(x); the trailing 0 is S[len].
    s = np.cumsum((x * x)[::-1])[::-1]
    return np.append(s, 0.0)


def schroeder_curve(g: ImpulseResponse) -> np.ndarray:
    """Backward-integrated energy decay ``10 log10(S[n] / S[0])`` in dB."""
    s = _backward_energy(g.samples)[:-1]
    if s[0] <= 0:
        raise ZeroEnergy("cannot integrate a silent response")
    # Clamp rounding wiggles so the curve never rises.
    s = np.minimum.accumulate(s)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(s / s[0])


def decay_time(g: ImpulseResponse, upper_db: float = -5.0, lower_db: float = -35.0, decay_db: float = 60.0) -> float:
    """Reverberation time from a least-squares line through the Schroeder curve.

    The fit spans ``upper_db`` to ``lower_db`` and is extrapolated to a
    ``decay_db`` drop (T60 from the -5..-35 dB span by default).
    """
    curve = schroeder_curve(g)
    sel = np.flatnonzero((curve <= upper_db) & (curve >= lower_db))
    if sel.size < 2:
        raise ZeroEnergy(f"Schroeder curve does not span {upper_db}..{lower_db} dB")
    t = sel / g.sample_rate
    slope, _ = np.polyfit(t, curve[sel], 1)
    if slope >= 0:
        raise ZeroEnergy("Schroeder curve does not decay over the fit span")
    return -decay_db / slope


def remainder_reverberation_time(
    g_meas: ImpulseResponse,
    x_hat: ImpulseResponse,
    level_L: float,
    delay: float = 0.0,
) -> float:
    """Time after ``delay`` at which ``x_hat``'s remaining energy is ``level_L`` dB below ``g_meas``'s total.

    The scan starts at ``delay`` so that a dereverberated output is timed
    from its target impulse; use ``delay=0`` for a measured response.
    """
    if not level_L > 0:
        raise ValueError("level_L must be positive")
    if g_meas.sample_rate != x_hat.sample_rate:
        raise RateMismatch("signals have different sample rates")
    ref = g_meas.energy
    if ref <= 0:
        raise ZeroEnergy("reference response is silent")
    fs = x_hat.sample_rate
    d = _delay_index(x_hat, delay)
    s = _backward_energy(x_hat.samples)
    threshold = ref * 10.0 ** (-level_L / 10.0)
    hits = np.flatnonzero(s[d:] <= threshold)
    first = d + int(hits[0])
    if first >= len(x_hat):
        raise LevelNeverReached(level_L, (len(x_hat) - d) / fs)
    return (first - d) / fs


def sabine_absorptivity(dims, t60: float) -> float:
    """Average absorptivity ``0.161 V / (S T60)`` of a rectangular room."""
    lx, ly, lz = (float(d) for d in dims)
    if min(lx, ly, lz) <= 0 or t60 <= 0:
        raise ValueError("dimensions and t60 must be positive")
    volume = lx * ly * lz
    surface = 2.0 * (lx * ly + ly * lz + lx * lz)
    return 0.161 * volume / (surface * t60)


def reflection_from_absorptivity(abar: float) -> float:
    if not 0.0 <= abar <= 1.0:
        raise OutOfRange(f"absorptivity must lie in [0, 1], got {abar}")
    return math.sqrt(1.0 - abar)


def evaluate_output(
    g_meas: ImpulseResponse,
    x_hat: ImpulseResponse,
    cfg: EvalConfig,
    control_point: int = 0,
) -> EvalReport:
    """Every metric for one control point; remainder times of ``inf`` flag an unreached level."""

    def remainder(x, level, delay):
        try:
            return remainder_reverberation_time(g_meas, x, level, delay)
        except LevelNeverReached:
            return math.inf

    return EvalReport(
        control_point=control_point,
        dr_total=dereverberation_ratio(g_meas, x_hat, cfg),
        dr_early=dereverberation_ratio(g_meas, x_hat, cfg, cfg.early_window_T),
        residual_energy_total=residual_energy(x_hat, cfg.modeling_delay, cfg.t_min),
        residual_energy_early=residual_energy(x_hat, cfg.modeling_delay, cfg.t_min, cfg.early_window_T),
        snr=impulse_snr(x_hat, cfg.modeling_delay),
        t10_measured=remainder(g_meas, 10, 0.0),
        t20_measured=remainder(g_meas, 20, 0.0),
        t60_measured=remainder(g_meas, 60, 0.0),
        t10_dereverberated=remainder(x_hat, 10, cfg.modeling_delay),
        t20_dereverberated=remainder(x_hat, 20, cfg.modeling_delay),
        t60_dereverberated=remainder(x_hat, 60, cfg.modeling_delay),
    )
