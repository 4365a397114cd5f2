"""QPSK transmission over realized links and QRD-M tree detection."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, OddBitCount
from .schemes import EffectiveLink

__all__ = [
    "QPSK",
    "DetectorConfig",
    "qpsk_modulate",
    "qpsk_demap",
    "transmit",
    "complex_noise",
    "qrdm_detect",
    "per_stream_detect",
    "ml_detect",
    "bit_errors",
    "measure_ber",
]

# constellation index i <-> Gray bit pair (i >> 1, i & 1)
QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


@dataclass(frozen=True)
class DetectorConfig:
    m_keep: int = 12

    def validate(self, M: int) -> None:
        if not 1 <= self.m_keep <= 4 ** M:
            raise ValueError(f"m_keep={self.m_keep} outside 1..{4 ** M}")


def qpsk_modulate(bits) -> np.ndarray:
    """Map bit pairs along the last axis to unit-energy Gray QPSK symbols."""
    bits = np.asarray(bits)
    if bits.shape[-1] % 2:
        raise OddBitCount(f"got {bits.shape[-1]} bits")
    b = bits.reshape(bits.shape[:-1] + (-1, 2)).astype(np.int8)
    return QPSK[2 * b[..., 0] + b[..., 1]]


def qpsk_demap(symbols) -> np.ndarray:
    s = np.asarray(symbols)
    b = np.stack([s.real < 0, s.imag < 0], axis=-1).astype(np.int8)
    return b.reshape(s.shape[:-1] + (-1,))


def transmit(g_q, applied_bfm, s, rho: float, rng: np.random.Generator | None = None, noise=None):
    """Received vector ``y = g_q @ bfm @ (sqrt(rho) s) + w``.

    ``s`` has shape (..., M) with unit-energy entries. Noise is unit
    variance circularly-symmetric Gaussian drawn from ``rng``; pass an
    explicit ``noise`` array to reuse draws, or neither for a noiseless
    channel.
    """
    x = np.sqrt(rho) * np.asarray(s)
    y = np.einsum("...nm,...m->...n", np.asarray(g_q) @ np.asarray(applied_bfm), x)
    if noise is None and rng is not None:
        noise = complex_noise(rng, y.shape)
    if noise is not None:
        y = y + noise
    return y


def complex_noise(rng: np.random.Generator, shape) -> np.ndarray:
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def qrdm_detect(triangular, r, rho: float, cfg: DetectorConfig = DetectorConfig()) -> np.ndarray:
    """Breadth-first QRD-M search on ``r = sqrt(rho) R s + w``.

    Streams are decided from the last row upward. At each level every
    survivor is extended by the four QPSK hypotheses and the ``m_keep``
    paths with the smallest accumulated squared distance survive; ties
    are broken by lexicographic symbol order. Works on stacks: shapes
    (..., M, M) and (..., M). Returns detected symbols (..., M).
    """
    t = np.asarray(triangular)
    r = np.asarray(r)
    M = t.shape[-1]
    if t.shape[-2] != M or r.shape[-1] != M or t.shape[:-2] != r.shape[:-1]:
        raise DimensionMismatch(f"triangular {t.shape} vs received {r.shape}")
    cfg.validate(M)
    batch = r.shape[:-1]
    t = np.sqrt(rho) * t.reshape((-1, M, M))
    r = r.reshape((-1, M))
    nb = r.shape[0]

    # paths[b, s, j]: symbol index chosen for stream j (only j >= level valid)
    paths = np.zeros((nb, 1, M), dtype=np.int64)
    metric = np.zeros((nb, 1))
    for level in range(M - 1, -1, -1):
        ns = paths.shape[1]
        # interference from already-decided streams below this row
        decided = QPSK[paths[:, :, level + 1:]]
        interf = np.einsum("bj,bsj->bs", t[:, level, level + 1:], decided)
        resid = r[:, level, None, None] - interf[:, :, None] - t[:, level, level, None, None] * QPSK
        cand = metric[:, :, None] + (resid.real ** 2 + resid.imag ** 2)
        cand = cand.reshape(nb, ns * 4)
        new_paths = np.repeat(paths, 4, axis=1)
        new_paths[:, :, level] = np.tile(np.arange(4), ns)
        keep = min(cfg.m_keep, ns * 4)
        # lexicographic code over streams level..M-1 (stream 0 most significant)
        code = np.zeros((nb, ns * 4), dtype=np.int64)
        for j in range(level, M):
            code = code * 4 + new_paths[:, :, j]
        order = np.lexsort((code, cand), axis=-1)[:, :keep]
        paths = np.take_along_axis(new_paths, order[:, :, None], axis=1)
        metric = np.take_along_axis(cand, order, axis=1)
    best = paths[:, 0, :]
    return QPSK[best].reshape(batch + (M,))


def ml_detect(triangular, r, rho: float) -> np.ndarray:
    """Exhaustive maximum-likelihood search on the triangular model.

    Enumerates all ``4**M`` symbol vectors in lexicographic order; the
    first minimizer wins.
    """
    t = np.asarray(triangular)
    M = t.shape[-1]
    cands = QPSK[np.array(list(itertools.product(range(4), repeat=M)))]
    resid = np.asarray(r)[..., None, :] - np.sqrt(rho) * np.einsum("...ij,cj->...ci", t, cands)
    dist = np.sum(resid.real ** 2 + resid.imag ** 2, axis=-1)
    return cands[np.argmin(dist, axis=-1)]


def per_stream_detect(triangular, r, rho: float) -> np.ndarray:
    """Independent per-stream slicing ``r_m / r_mm``, ignoring off-diagonal terms.

    Maximum likelihood when the link is diagonal (eigen-beamforming with
    the exact right singular matrix).
    """
    d = np.diagonal(np.asarray(triangular), axis1=-2, axis2=-1)
    z = np.asarray(r) * np.conj(d)
    return (np.where(z.real < 0, -1.0, 1.0) + 1j * np.where(z.imag < 0, -1.0, 1.0)) / np.sqrt(2.0)


def bit_errors(
    link: EffectiveLink,
    rho: float,
    frames: int,
    rng: np.random.Generator | None = None,
    detector: str = "qrdm",
    m_keep: int = 12,
    payload=None,
) -> np.ndarray:
    """Bit-error counts per link over ``frames`` QPSK vectors each.

    ``link`` may hold a stack of links with leading shape ``S``; the result
    has shape ``S``. ``payload = (bits, noise)`` with shapes
    ``(frames,) + S + (2M,)`` and ``(frames,) + S + (N,)`` reuses draws.
    """
    chan = link.channel
    N, M = chan.shape[-2:]
    S = chan.shape[:-2]
    if payload is None:
        bits = rng.integers(0, 2, size=(frames,) + S + (2 * M,), dtype=np.int8)
        noise = complex_noise(rng, (frames,) + S + (N,))
    else:
        bits, noise = payload
    s = qpsk_modulate(bits)
    y = np.einsum("...nm,f...m->f...n", chan, np.sqrt(rho) * s) + noise
    r = np.einsum("...nm,f...n->f...m", np.conj(link.combiner), y)
    tri = np.broadcast_to(link.triangular, r.shape[:-1] + (M, M))
    if detector == "qrdm":
        s_hat = qrdm_detect(tri, r, rho, DetectorConfig(min(m_keep, 4 ** M)))
    elif detector == "per_stream":
        s_hat = per_stream_detect(tri, r, rho)
    elif detector == "ml":
        s_hat = ml_detect(tri, r, rho)
    else:
        raise ValueError(f"unknown detector {detector!r}")
    return np.sum(qpsk_demap(s_hat) != bits, axis=(0, -1))


def measure_ber(
    link: EffectiveLink,
    rho: float,
    trials: int,
    rng: np.random.Generator,
    detector: str = "qrdm",
    m_keep: int = 12,
) -> float:
    """Bit error rate over ``trials`` QPSK vectors per link."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    err = bit_errors(link, rho, trials, rng, detector, m_keep)
    M = link.channel.shape[-1]
    return float(np.sum(err) / (trials * 2 * M * max(np.size(err), 1)))
