"""Frequency-selective MIMO channel draws and their frequency-domain views.

A realization holds the time-domain taps ``h^{m,n}(l)`` between transmit
antenna ``m`` and receive antenna ``n``. Taps are i.i.d. Rayleigh across
antenna pairs with an exponential power-delay profile normalized to unit
energy per pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange

__all__ = [
    "ChannelConfig",
    "ChannelRealization",
    "FreqChannel",
    "pdp",
    "draw_channel",
    "dft_column",
    "selection_matrix",
    "stack_channel",
    "freq_channel",
]


@dataclass(frozen=True)
class ChannelConfig:
    tx_antennas: int = 2
    rx_antennas: int = 2
    taps: int = 4
    subcarriers: int = 64
    pdp_decay: float = 0.5

    def __post_init__(self):
        if min(self.tx_antennas, self.rx_antennas, self.taps, self.subcarriers) < 1:
            raise ValueError("antenna, tap and subcarrier counts must be >= 1")
        if self.tx_antennas > self.rx_antennas:
            raise ValueError("need tx_antennas <= rx_antennas")
        if self.taps > self.subcarriers:
            raise ValueError("need taps <= subcarriers")
        if not self.pdp_decay >= 0:
            raise ValueError("pdp_decay must be >= 0")


@dataclass(frozen=True)
class ChannelRealization:
    """Tap tensor of shape ``(M, N, L)`` indexed ``[m, n, l]``."""

    taps: np.ndarray
    config: ChannelConfig


@dataclass(frozen=True)
class FreqChannel:
    """Per-subcarrier channel matrices, ``g`` of shape ``(Q, N, M)``."""

    g: np.ndarray

    @property
    def n_subcarriers(self) -> int:
        return self.g.shape[0]


def pdp(taps: int, decay: float) -> np.ndarray:
    """Exponential power-delay profile ``c * exp(-decay * l)`` summing to 1."""
    p = np.exp(-decay * np.arange(taps))
    return p / p.sum()


def draw_channel(rng: np.random.Generator, cfg: ChannelConfig) -> ChannelRealization:
    shape = (cfg.tx_antennas, cfg.rx_antennas, cfg.taps)
    amp = np.sqrt(pdp(cfg.taps, cfg.pdp_decay) / 2.0)
    z = rng.standard_normal(shape + (2,))
    taps = amp * (z[..., 0] + 1j * z[..., 1])
    return ChannelRealization(taps, cfg)


def dft_column(i: int, Q: int, L: int) -> np.ndarray:
    """First ``L`` entries of column ``i`` of the unnormalized Q-point DFT matrix."""
    if not 0 <= i < Q:
        raise IndexOutOfRange(f"subcarrier {i} outside 0..{Q - 1}")
    if not 1 <= L <= Q:
        raise IndexOutOfRange(f"L={L} outside 1..{Q}")
    # reduce l*i mod Q first so the phase stays exact for large indices
    k = (np.arange(L) * i) % Q
    return np.exp(-2j * np.pi * k / Q)


def selection_matrix(q: int, Q: int, N: int, L: int) -> np.ndarray:
    """``I_N kron e_q^T``: maps the stacked channel to subcarrier ``q``."""
    return np.kron(np.eye(N), dft_column(q, Q, L)[None, :])


def stack_channel(ch: ChannelRealization) -> np.ndarray:
    """Stacked ``(N*L, M)`` matrix; rows ``n*L .. n*L+L-1`` hold ``h^{m,n}``."""
    M, N, L = ch.taps.shape
    return np.ascontiguousarray(ch.taps.transpose(1, 2, 0).reshape(N * L, M))


def freq_channel(ch: ChannelRealization, Q: int | None = None) -> FreqChannel:
    """Frequency-domain channel of every subcarrier.

    Computed as ``selection_matrix(q) @ stack_channel(ch)`` one subcarrier
    at a time, so the result matches that product bit for bit.
    """
    M, N, L = ch.taps.shape
    Q = ch.config.subcarriers if Q is None else Q
    h = stack_channel(ch)
    g = np.empty((Q, N, M), dtype=np.complex128)
    for q in range(Q):
        g[q] = selection_matrix(q, Q, N, L) @ h
    return FreqChannel(g)
