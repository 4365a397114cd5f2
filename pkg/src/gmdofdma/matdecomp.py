"""Complex matrix factorizations: SVD, economy QR and GMD.

Every routine accepts a single matrix of shape ``(n, m)`` or a stack of
matrices of shape ``(..., n, m)`` with ``n >= m`` and factorizes each
matrix independently. Results are deterministic: the same input bytes
always give bit-identical factors.

Conventions
-----------
* ``svd``: singular values sorted descending; each right singular vector
  is rotated so that its largest-magnitude entry is real positive.
* ``qr_economy``: ``r`` has a real nonnegative diagonal and exact zeros
  below it.
* ``gmd``: ``a = b @ e @ p^H`` with ``e`` real upper triangular whose
  diagonal entries all equal the geometric mean of the singular values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonConvergence, RankDeficient

__all__ = [
    "SvdFactors",
    "QrFactors",
    "GmdFactors",
    "svd",
    "qr_economy",
    "gmd",
    "MAX_SWEEPS",
    "JACOBI_TOL",
    "RANK_TOL",
]

MAX_SWEEPS = 60
JACOBI_TOL = 1e-12
RANK_TOL = 1e-12


@dataclass(frozen=True)
class SvdFactors:
    """``a = u[..., :, :m] @ diag(s) @ v^H``; ``u`` is the full n x n factor."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        m = self.s.shape[-1]
        return (self.u[..., :, :m] * self.s[..., None, :]) @ _herm(self.v)


@dataclass(frozen=True)
class QrFactors:
    q: np.ndarray
    r: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.q @ self.r


@dataclass(frozen=True)
class GmdFactors:
    """``a = b @ e @ p^H`` with economy ``b`` (n x m) and real ``e``."""

    b: np.ndarray
    e: np.ndarray
    p: np.ndarray

    @property
    def geometric_mean(self) -> np.ndarray:
        return np.exp(np.mean(np.log(np.diagonal(self.e, axis1=-2, axis2=-1)), axis=-1))

    def reconstruct(self) -> np.ndarray:
        return self.b @ self.e @ _herm(self.p)


def _herm(x):
    return np.conj(np.swapaxes(x, -1, -2))


def _as_stack(a):
    a = np.asarray(a)
    if a.ndim < 2:
        raise DimensionMismatch(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n, m = a.shape[-2:]
    if n < 1 or m < 1:
        raise DimensionMismatch(f"empty matrix of shape {a.shape}")
    if n < m:
        raise DimensionMismatch(f"expected rows >= cols, got {n}x{m}")
    batch = a.shape[:-2]
    return np.array(a, dtype=np.complex128).reshape((-1, n, m)), batch


def _householder(a, complete=False):
    """Householder QR of a stack ``(B, n, m)``.

    Returns ``(q, r)`` where ``q`` is ``(B, n, n)`` if ``complete`` else
    ``(B, n, m)``; ``r`` is ``(B, n, m)`` (complete) or ``(B, m, m)``, with
    a real nonnegative diagonal. Columns whose sub-diagonal part is already
    zero are left untouched, so triangular input is a fixed point.
    """
    nb, n, m = a.shape
    r = a.copy()
    q = np.broadcast_to(np.eye(n, dtype=np.complex128), (nb, n, n)).copy()
    for k in range(min(m, n - 1) if n > 1 else 0):
        x = r[:, k:, k]
        tail = np.sum(np.abs(x[:, 1:]) ** 2, axis=1)
        act = tail > 0.0
        if not np.any(act):
            continue
        alpha = x[:, 0]
        xnorm = np.sqrt(np.abs(alpha) ** 2 + tail)
        aabs = np.abs(alpha)
        phase = np.where(aabs > 0.0, alpha / np.where(aabs > 0.0, aabs, 1.0), 1.0)
        v = x.copy()
        v[:, 0] = alpha + phase * xnorm
        vnorm2 = np.sum(np.abs(v) ** 2, axis=1)
        scale = np.where(act, 2.0 / np.where(act, vnorm2, 1.0), 0.0)
        # r <- (I - scale v v^H) r ; q <- q (I - scale v v^H)
        vh_r = np.einsum("bi,bij->bj", np.conj(v), r[:, k:, k:])
        r[:, k:, k:] -= scale[:, None, None] * v[:, :, None] * vh_r[:, None, :]
        q_v = np.einsum("bij,bj->bi", q[:, :, k:], v)
        q[:, :, k:] -= scale[:, None, None] * q_v[:, :, None] * np.conj(v)[:, None, :]
        r[act, k + 1:, k] = 0.0
        r[act, k, k] = -phase[act] * xnorm[act]
    kk = min(n, m)
    d = np.diagonal(r, axis1=1, axis2=2)[:, :kk]
    dabs = np.abs(d)
    ph = np.where(dabs > 0.0, d / np.where(dabs > 0.0, dabs, 1.0), 1.0)
    r[:, :kk, :] *= np.conj(ph)[:, :, None]
    q[:, :, :kk] *= ph[:, None, :]
    idx = np.arange(kk)
    r[:, idx, idx] = dabs
    r = np.triu(r)
    if complete:
        return q, r
    return q[:, :, :m], r[:, :m, :]


def qr_economy(a, check_rank: bool = True) -> QrFactors:
    """Economy QR decomposition with a real nonnegative ``r`` diagonal.

    Parameters
    ----------
    a : array_like, shape (..., n, m)
        Matrix or stack of matrices with ``n >= m``.
    check_rank : bool
        Raise :class:`RankDeficient` when a pivot is below ``RANK_TOL``
        times the largest column norm of the input.

    Returns
    -------
    QrFactors
        ``q`` of shape (..., n, m) with orthonormal columns and ``r`` of
        shape (..., m, m), upper triangular.
    """
    stack, batch = _as_stack(a)
    n, m = stack.shape[-2:]
    q, r = _householder(stack)
    if check_rank:
        scale = np.max(np.linalg.norm(stack, axis=1), axis=1)
        piv = np.min(np.abs(np.diagonal(r, axis1=1, axis2=2)), axis=1)
        if np.any(piv <= RANK_TOL * scale):
            raise RankDeficient("zero pivot met in QR decomposition")
    return QrFactors(q.reshape(batch + (n, m)), r.reshape(batch + (m, m)))


def _jacobi(w, max_sweeps=MAX_SWEEPS, tol=JACOBI_TOL):
    """One-sided (Hestenes) Jacobi: orthogonalize the columns of ``w``.

    Works in place on the stack ``w`` and returns the accumulated unitary
    right factor ``v`` with ``a @ v = w``.
    """
    nb, n, m = w.shape
    v = np.broadcast_to(np.eye(m, dtype=np.complex128), (nb, m, m)).copy()
    for _ in range(max_sweeps):
        rotated = False
        for i in range(m - 1):
            for j in range(i + 1, m):
                wi = w[:, :, i]
                wj = w[:, :, j]
                alpha = np.sum(wi.real ** 2 + wi.imag ** 2, axis=1)
                beta = np.sum(wj.real ** 2 + wj.imag ** 2, axis=1)
                gamma = np.sum(np.conj(wi) * wj, axis=1)
                g = np.abs(gamma)
                act = g > tol * np.sqrt(alpha * beta)
                if not np.any(act):
                    continue
                rotated = True
                gs = np.where(act, g, 1.0)
                ph = np.where(act, np.conj(gamma) / gs, 1.0)
                zeta = (beta - alpha) / (2.0 * gs)
                sgn = np.where(zeta >= 0.0, 1.0, -1.0)
                t = sgn / (np.abs(zeta) + np.hypot(1.0, zeta))
                c = np.where(act, 1.0 / np.hypot(1.0, t), 1.0)
                s = np.where(act, c * t, 0.0)
                # columns (i, j) <- (i, j) @ [[c, s], [-s ph, c ph]]
                cs = c[:, None]
                ss = s[:, None]
                pp = ph[:, None]
                new_i = cs * wi - ss * pp * wj
                new_j = ss * wi + cs * pp * wj
                w[:, :, i] = new_i
                w[:, :, j] = new_j
                vi = v[:, :, i]
                vj = v[:, :, j]
                new_vi = cs * vi - ss * pp * vj
                new_vj = ss * vi + cs * pp * vj
                v[:, :, i] = new_vi
                v[:, :, j] = new_vj
        if not rotated:
            return v
    raise NonConvergence(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def svd(a, max_sweeps: int = MAX_SWEEPS) -> SvdFactors:
    """Singular value decomposition by one-sided Jacobi rotations.

    Parameters
    ----------
    a : array_like, shape (..., n, m)
        Input with ``n >= m``; transpose beforehand for wide matrices.
    max_sweeps : int
        Sweep limit; exceeding it raises :class:`NonConvergence`.

    Returns
    -------
    SvdFactors
        ``u`` (..., n, n) unitary, ``s`` (..., m) descending and
        nonnegative, ``v`` (..., m, m) unitary.
    """
    stack, batch = _as_stack(a)
    nb, n, m = stack.shape
    w = stack.copy()
    v = _jacobi(w, max_sweeps=max_sweeps)

    sig = np.linalg.norm(w, axis=1)
    order = np.argsort(-sig, axis=1, kind="stable")
    sig = np.take_along_axis(sig, order, axis=1)
    w = np.take_along_axis(w, order[:, None, :], axis=2)
    v = np.take_along_axis(v, order[:, None, :], axis=2)

    smax = sig[:, :1]
    positive = sig > np.finfo(float).eps * max(n, m) * smax
    u_econ = np.where(positive[:, None, :], w / np.where(positive, sig, 1.0)[:, None, :], 0.0)

    # phase: largest-magnitude entry of each right singular vector real positive
    piv = np.argmax(np.abs(v), axis=1)
    pv = np.take_along_axis(v, piv[:, None, :], axis=1)[:, 0, :]
    ph = pv / np.abs(pv)
    v = v * np.conj(ph)[:, None, :]
    np.put_along_axis(v, piv[:, None, :], np.abs(pv)[:, None, :].astype(v.dtype), axis=1)
    u_econ = u_econ * np.conj(ph)[:, None, :]

    if n > m or not np.all(positive):
        u_full, _ = _householder(u_econ, complete=True)
        u = np.where(
            np.concatenate([positive, np.zeros((nb, n - m), bool)], axis=1)[:, None, :],
            np.concatenate([u_econ, np.zeros((nb, n, n - m), np.complex128)], axis=2),
            u_full,
        )
    else:
        u = u_econ
    return SvdFactors(
        u.reshape(batch + (n, n)), sig.reshape(batch + (m,)), v.reshape(batch + (m, m))
    )


def gmd(a, max_sweeps: int = MAX_SWEEPS) -> GmdFactors:
    """Geometric mean decomposition ``a = b @ e @ p^H``.

    Starts from the SVD and, for each diagonal position ``k``, swaps in a
    partner diagonal entry on the other side of the geometric mean and
    applies one left and one right real Givens rotation so that the
    ``k``-th diagonal entry becomes the geometric mean. The product of
    the remaining diagonal entries is preserved at every step, so the
    last entry ends at the geometric mean too.

    Raises :class:`RankDeficient` if the smallest singular value is below
    ``RANK_TOL`` relative to the largest.
    """
    stack, batch = _as_stack(a)
    nb, n, m = stack.shape
    f = svd(stack, max_sweeps=max_sweeps)
    s = f.s
    if np.any(s[:, -1] <= RANK_TOL * s[:, 0]):
        raise RankDeficient("GMD requires full column rank")
    gm = np.exp(np.mean(np.log(s), axis=1))
    e = np.zeros((nb, m, m))
    idx = np.arange(m)
    e[:, idx, idx] = s
    b = f.u[:, :, :m].copy()
    p = f.v.copy()
    rows = np.arange(nb)
    for k in range(m - 1):
        d = e[:, idx, idx]
        big = d[:, k] >= gm
        rest = d[:, k + 1:]
        j = k + 1 + np.where(big, np.argmin(rest, axis=1), np.argmax(rest, axis=1))
        perm = np.broadcast_to(idx, (nb, m)).copy()
        perm[rows, k + 1] = j
        perm[rows, j] = k + 1
        e = np.take_along_axis(e, perm[:, :, None], axis=1)
        e = np.take_along_axis(e, perm[:, None, :], axis=2)
        b = np.take_along_axis(b, perm[:, None, :], axis=2)
        p = np.take_along_axis(p, perm[:, None, :], axis=2)

        d1 = e[:, k, k]
        d2 = e[:, k + 1, k + 1]
        den = d1 * d1 - d2 * d2
        flat = np.abs(den) <= 1e-15 * gm * gm
        c2 = np.clip((gm * gm - d2 * d2) / np.where(flat, 1.0, den), 0.0, 1.0)
        c = np.where(flat, 1.0, np.sqrt(c2))
        sn = np.where(flat, 0.0, np.sqrt(1.0 - c2))
        g2 = np.stack([np.stack([c, -sn], -1), np.stack([sn, c], -1)], -2)
        g1 = np.stack([np.stack([c * d1, -sn * d2], -1), np.stack([sn * d2, c * d1], -1)], -2)
        g1 = np.where(flat[:, None, None], np.eye(2), g1 / gm[:, None, None])

        kk = slice(k, k + 2)
        e[:, :, kk] = e[:, :, kk] @ g2
        e[:, kk, :] = np.swapaxes(g1, 1, 2) @ e[:, kk, :]
        e[:, k + 1, k] = 0.0
        b[:, :, kk] = b[:, :, kk] @ g1
        p[:, :, kk] = p[:, :, kk] @ g2
    e = np.triu(e)
    return GmdFactors(
        b.reshape(batch + (n, m)), e.reshape(batch + (m, m)), p.reshape(batch + (m, m))
    )
