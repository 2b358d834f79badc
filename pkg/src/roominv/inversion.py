"""Regularized multichannel inverse filters with a modeling delay.

At every FFT bin the M x L plant ``G`` is inverted as
``H = (G^H G + beta I)^-1 G^H`` and delayed by ``exp(-j w D)``.  The inverse
transform of length ``fft_length`` is read as a causal filter; whatever
non-causal energy the delay did not absorb wraps to the end of the buffer,
where it is measured by ``wraparound_energy_ratio``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .core import (
    BetaNegative,
    DimensionMismatch,
    ImpulseResponse,
    InversionConfig,
    NonpositiveTau,
    RateMismatch,
    RoomInvError,
    TransferMatrix,
)

TAIL_FRACTION = 0.05
ORACLE_MAX_LENGTH = 512
ORACLE_RIDGE = 1e-12

__all__ = [
    "BetaNegative",
    "InverseFilterSet",
    "NonpositiveTau",
    "SingularBin",
    "apply",
    "exp_window",
    "invert",
    "time_domain_ls_inverse_oracle",
]


class SingularBin(RoomInvError, ArithmeticError):
    def __init__(self, bin_index: int):
        self.bin = bin_index
        super().__init__(f"G^H G is singular at frequency bin {bin_index} and beta is 0")


@dataclass(frozen=True, eq=False)
class InverseFilterSet:
    """L x M causal filters; ``filters[i, j]`` feeds control signal j to source i."""

    filters: np.ndarray
    sample_rate: float
    config: InversionConfig
    delay_samples: int
    wraparound_energy_ratio: np.ndarray

    def __post_init__(self):
        for name in ("filters", "wraparound_energy_ratio"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not np.all(np.isfinite(self.wraparound_energy_ratio)):
            raise ValueError("wraparound diagnostic must be finite")

    @property
    def L(self) -> int:
        return self.filters.shape[0]

    @property
    def M(self) -> int:
        return self.filters.shape[1]

    @property
    def length(self) -> int:
        return self.filters.shape[2]

    @property
    def delay_seconds(self) -> float:
        return self.delay_samples / self.sample_rate

    def __getitem__(self, ij) -> ImpulseResponse:
        i, j = ij
        return ImpulseResponse(self.filters[i, j], self.sample_rate)

    def as_matrix(self) -> TransferMatrix:
        return TransferMatrix(self.filters, self.sample_rate)


def exp_window(g: ImpulseResponse, tau: float | None) -> ImpulseResponse:
    """Taper ``g`` by ``exp(-t / tau)``; ``None`` or ``inf`` leaves it unchanged."""
    if tau is None or tau == math.inf:
        return g
    if not tau > 0:
        raise NonpositiveTau(f"tau must be > 0, got {tau}")
    n = np.arange(len(g))
    return ImpulseResponse(g.samples * np.exp(-n / (g.sample_rate * tau)), g.sample_rate)


def _tail_ratio(h: np.ndarray) -> np.ndarray:
    n = h.shape[-1]
    start = n - max(1, int(round(TAIL_FRACTION * n)))
    total = np.sum(h * h, axis=-1)
    tail = np.sum(h[..., start:] ** 2, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, tail / np.where(total > 0, total, 1.0), 0.0)


def _regularized_pinv(G: np.ndarray, beta: float) -> np.ndarray:
    """Per-bin ``(G^H G + beta I)^-1 G^H`` for ``G`` of shape (bins, M, L)."""
    bins, m, l = G.shape
    Gh = np.conj(np.swapaxes(G, 1, 2))
    if m == 1 and l == 1:
        den = (G.real**2 + G.imag**2) + beta
        if beta == 0 and np.any(den == 0):
            raise SingularBin(int(np.flatnonzero(den.ravel() == 0)[0]))
        return Gh / den
    A = Gh @ G
    if beta == 0:
        sv = np.linalg.svd(A, compute_uv=False)
        bad = sv[:, -1] <= sv[:, 0] * l * np.finfo(float).eps
        if np.any(bad):
            raise SingularBin(int(np.flatnonzero(bad)[0]))
    else:
        A = A + beta * np.eye(l)
    return np.linalg.solve(A, Gh)


def invert(model: TransferMatrix, config: InversionConfig | None = None) -> InverseFilterSet:
    """Stable causal approximate inverse of ``model``.

    If ``config.window_tau`` is set every entry is tapered by
    :func:`exp_window` before inversion.
    """
    config = config or InversionConfig()
    if config.beta < 0:
        raise BetaNegative(f"beta must be >= 0, got {config.beta}")
    config.validate_for(model.length, model.sample_rate)
    if config.windowed:
        model = model.map(lambda g: exp_window(g, config.window_tau))
    n = config.resolved_fft_length(model.length)
    delay = config.delay_samples(model.sample_rate)

    G = sfft.rfft(model.data, n, axis=-1)  # (M, L, bins)
    H = _regularized_pinv(np.moveaxis(G, -1, 0), config.beta)  # (bins, L, M)
    H = np.moveaxis(H, 0, -1)
    bins = np.arange(H.shape[-1])
    H = H * np.exp(-2j * np.pi * bins * delay / n)
    h = sfft.irfft(H, n, axis=-1)
    return InverseFilterSet(h, model.sample_rate, config, delay, _tail_ratio(h))


def _as_matrix(x) -> TransferMatrix:
    if isinstance(x, TransferMatrix):
        return x
    if isinstance(x, InverseFilterSet):
        return x.as_matrix()
    raise TypeError(f"expected a TransferMatrix or InverseFilterSet, got {type(x).__name__}")


def apply(filters, plant: TransferMatrix, inputs) -> list[ImpulseResponse]:
    """Control-point outputs ``x_hat_k = sum_j sum_i g_ki * h_ij * x_j``.

    All convolutions are linear; each output has
    ``len(plant) + len(filters) + len(inputs) - 2`` samples.
    """
    H = _as_matrix(filters)
    G = _as_matrix(plant)
    inputs = list(inputs)
    n_src, n_ctl = H.data.shape[:2]
    if n_src != G.L:
        raise DimensionMismatch(f"filters drive {n_src} sources but the plant has {G.L}")
    if n_ctl != G.M or len(inputs) != G.M:
        raise DimensionMismatch(
            f"plant has {G.M} control points, filters take {n_ctl}, got {len(inputs)} inputs"
        )
    rates = {H.sample_rate, G.sample_rate} | {x.sample_rate for x in inputs}
    if len(rates) != 1:
        raise RateMismatch(f"sample rates disagree: {sorted(rates)}")
    lengths = {len(x) for x in inputs}
    if len(lengths) != 1:
        raise DimensionMismatch("all input signals must have the same length")
    nx = lengths.pop()
    n_out = G.length + H.length + nx - 2
    nfft = sfft.next_fast_len(n_out, real=True)
    X = sfft.rfft(np.array([x.samples for x in inputs]), nfft, axis=-1)  # (M, bins)
    Hf = sfft.rfft(H.data, nfft, axis=-1)  # (L, M, bins)
    V = np.einsum("ijf,jf->if", Hf, X)
    del Hf
    Gf = sfft.rfft(G.data, nfft, axis=-1)  # (M, L, bins)
    Y = np.einsum("kif,if->kf", Gf, V)
    y = sfft.irfft(Y, nfft, axis=-1)[:, :n_out]
    return [ImpulseResponse(row, G.sample_rate) for row in y]


def time_domain_ls_inverse_oracle(g: ImpulseResponse, filter_len: int, delay: int) -> ImpulseResponse:
    """Least-squares FIR inverse from the normal equations of the convolution matrix.

    Minimizes ``||g * h - delta(n - delay)||`` over ``h`` of ``filter_len``
    taps.  A ridge of 1e-12 keeps the normal equations solvable.
    """
    if filter_len > ORACLE_MAX_LENGTH:
        raise ValueError(f"oracle is limited to {ORACLE_MAX_LENGTH} taps")
    if filter_len < 1:
        raise ValueError("filter_len must be >= 1")
    x = g.samples
    rows = x.size + filter_len - 1
    C = np.zeros((rows, filter_len))
    for k in range(filter_len):
        C[k : k + x.size, k] = x
    target = np.zeros(rows)
    if 0 <= delay < rows:
        target[delay] = 1.0
    A = C.T @ C + ORACLE_RIDGE * np.eye(filter_len)
    h = np.linalg.solve(A, C.T @ target)
    return ImpulseResponse(h, g.sample_rate)
