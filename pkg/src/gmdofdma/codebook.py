"""Beamforming-matrix codebook shared by the base station and terminals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityExceeded, EmptyCodebook
from .matdecomp import qr_economy

__all__ = ["INFINITE", "BfmCodebook", "BfmSelection", "generate_codebook", "select_bfm"]

# "B = infinity": the terminal's own unquantized BFM is used as is.
INFINITE = math.inf

MAX_BITS = 16
_CHUNK = 4096


@dataclass(frozen=True)
class BfmCodebook:
    bits: float
    entries: np.ndarray
    seed: int = 0

    @property
    def infinite(self) -> bool:
        return self.bits == INFINITE

    def __len__(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class BfmSelection:
    """Selected index (``-1`` for the infinite book), objective value and matrix."""

    index: np.ndarray
    metric: np.ndarray
    matrix: np.ndarray


def generate_codebook(B, M: int, seed: int, max_bits: int = MAX_BITS) -> BfmCodebook:
    """Seeded random unitary codebook with ``2**B`` entries.

    Entries are the phase-normalized orthonormal QR factors of i.i.d.
    complex Gaussian ``M x M`` draws taken in order from one stream, so
    the ``B``-bit book is a prefix of the ``(B+1)``-bit book.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if B == INFINITE:
        return BfmCodebook(INFINITE, np.empty((0, M, M), np.complex128), seed)
    if B < 0 or int(B) != B:
        raise ValueError(f"B must be a nonnegative integer, got {B}")
    B = int(B)
    if B > max_bits:
        raise CapacityExceeded(f"2**{B} entries exceed the bound 2**{max_bits}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2 ** B, M, M, 2))
    entries = qr_economy(z[..., 0] + 1j * z[..., 1]).q
    entries.setflags(write=False)
    return BfmCodebook(B, entries, seed)


def bfm_objective(p, entries) -> np.ndarray:
    """``||p^H @ entry - I||_F^2`` for every entry; shape ``(..., D)``."""
    p = np.asarray(p)
    M = p.shape[-1]
    ph = np.conj(np.swapaxes(p, -1, -2))[..., None, :, :]
    out = []
    for start in range(0, entries.shape[0], _CHUNK):
        diff = ph @ entries[start:start + _CHUNK] - np.eye(M)
        out.append(np.sum(diff.real ** 2 + diff.imag ** 2, axis=(-2, -1)))
    return np.concatenate(out, axis=-1)


def select_bfm(p, cb: BfmCodebook) -> BfmSelection:
    """Codebook entry closest to ``p`` under ``||p^H P_d - I||_F^2``.

    ``p`` may be a stack ``(..., M, M)``; ties go to the lowest index.
    """
    p = np.asarray(p, dtype=np.complex128)
    batch = p.shape[:-2]
    if cb.infinite:
        return BfmSelection(np.full(batch, -1), np.zeros(batch), p)
    if len(cb) == 0:
        raise EmptyCodebook("codebook has no entries")
    metric = bfm_objective(p, cb.entries)
    idx = np.argmin(metric, axis=-1)
    best = np.take_along_axis(metric, idx[..., None], axis=-1)[..., 0]
    return BfmSelection(idx, best, cb.entries[idx])
