"""Terminal-side processing for the five scheduling/beamforming schemes.

Each ``*_report`` function decomposes one terminal's channel, quantizes
the beamforming matrix (BFM) against the shared codebook, builds the
realized triangular link for every subcarrier and returns the feedback
payload. Reported rates are computed on the link that the quantized BFM
actually produces.

=========  ==================  =======================  ================
scheme     decomposition       BFM indices fed back     rates fed back
=========  ==================  =======================  ================
PS_EB      SVD of each G_q     Q                        Q
PC_EB      SVD of cluster mid  G                        G (cluster mean)
PS_QRD     SVD of stacked H    1                        Q
PS_GMD     GMD of stacked H    1                        Q
PC_GMD     GMD of stacked H    1                        G (cluster mean)
=========  ==================  =======================  ================
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import FreqChannel
from .codebook import BfmCodebook, select_bfm
from .errors import InvalidPlan
from .matdecomp import gmd, qr_economy, svd

__all__ = [
    "SchemeId",
    "FeedbackReport",
    "EffectiveLink",
    "ClusterPlan",
    "make_cluster_plan",
    "realized_link",
    "throughput_from_r",
    "ps_eb_report",
    "pc_eb_report",
    "ps_gmd_report",
    "pc_gmd_report",
    "ps_qrd_report",
]


class SchemeId(str, enum.Enum):
    PS_EB = "PS_EB"
    PC_EB = "PC_EB"
    PS_QRD = "PS_QRD"
    PS_GMD = "PS_GMD"
    PC_GMD = "PC_GMD"

    @property
    def per_cluster(self) -> bool:
        return self in (SchemeId.PC_EB, SchemeId.PC_GMD)

    @property
    def eigen(self) -> bool:
        return self in (SchemeId.PS_EB, SchemeId.PC_EB)

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EffectiveLink:
    """Realized link per subcarrier after terminal-side combining.

    ``combiner`` (..., N, M) has orthonormal columns and
    ``combiner^H @ channel == triangular`` where ``channel`` is the
    beamformed channel ``G_q @ bfm`` of shape (..., N, M).
    """

    combiner: np.ndarray
    triangular: np.ndarray
    channel: np.ndarray
    snr: float = 1.0

    def __getitem__(self, idx) -> "EffectiveLink":
        return EffectiveLink(
            self.combiner[idx], self.triangular[idx], self.channel[idx], self.snr
        )


@dataclass(frozen=True)
class ClusterPlan:
    G: int
    U: int
    index_sets: tuple

    @property
    def Q(self) -> int:
        return self.G * self.U

    def centers(self) -> np.ndarray:
        """Middle subcarrier ``i_{g, ceil(U/2)}`` of each cluster (0-based)."""
        return np.arange(self.G) * self.U + (math.ceil(self.U / 2) - 1)

    def cluster_mean(self, per_subcarrier) -> np.ndarray:
        x = np.asarray(per_subcarrier)
        return x.reshape(x.shape[:-1] + (self.G, self.U)).mean(axis=-1)


def make_cluster_plan(Q: int, G: int) -> ClusterPlan:
    if G < 1 or Q < 1 or Q % G:
        raise InvalidPlan(f"cannot split {Q} subcarriers into {G} equal clusters")
    U = Q // G
    sets = tuple(tuple(range(g * U, (g + 1) * U)) for g in range(G))
    return ClusterPlan(G, U, sets)


@dataclass
class FeedbackReport:
    """One terminal's feedback for one scheme.

    ``link`` is terminal-local state (the realized per-subcarrier links)
    kept for detection; it is not part of the fed-back payload.
    """

    scheme: SchemeId
    bfm_indices: np.ndarray
    rate_scalars: np.ndarray
    bit_cost: float
    link: EffectiveLink | None = field(default=None, repr=False)
    plan: ClusterPlan | None = field(default=None, repr=False)

    def with_snr(self, rho: float) -> "FeedbackReport":
        """Same decomposition and BFM, rates recomputed at another SNR."""
        rates = throughput_from_r(self.link.triangular, rho)
        if self.plan is not None:
            rates = self.plan.cluster_mean(rates)
        link = EffectiveLink(self.link.combiner, self.link.triangular, self.link.channel, rho)
        return FeedbackReport(self.scheme, self.bfm_indices, rates, self.bit_cost, link, self.plan)


def realized_link(g_q, applied_bfm, rho: float = 1.0) -> EffectiveLink:
    """Economy QR of the beamformed channel ``g_q @ applied_bfm``."""
    h = np.asarray(g_q) @ np.asarray(applied_bfm)
    f = qr_economy(h)
    return EffectiveLink(f.q, f.r, h, rho)


def throughput_from_r(triangular, rho: float) -> np.ndarray:
    """Supportable rate ``sum_m log2(1 + rho |r_mm|^2)`` in bits/s/Hz."""
    d = np.abs(np.diagonal(np.asarray(triangular), axis1=-2, axis2=-1))
    return np.sum(np.log2(1.0 + rho * d * d), axis=-1)


def _cost(scheme, Q, G, cb, M):
    from .scheduler import feedback_cost

    return feedback_cost(scheme, Q, G, cb.bits, M=M).total_bits


def _report(scheme, fc, sel_index, applied, rho, cb, plan=None):
    link = realized_link(fc.g, applied, rho)
    rates = throughput_from_r(link.triangular, rho)
    if plan is not None:
        rates = plan.cluster_mean(rates)
    Q, _, M = fc.g.shape
    G = plan.G if plan is not None else Q
    return FeedbackReport(
        scheme, np.atleast_1d(sel_index), rates, _cost(scheme, Q, G, cb, M), link, plan
    )


def ps_eb_report(fc: FreqChannel, rho: float, cb: BfmCodebook) -> FeedbackReport:
    """Per-subcarrier eigen-beamforming: one quantized ``V_q`` per subcarrier."""
    v = svd(fc.g).v
    sel = select_bfm(v, cb)
    return _report(SchemeId.PS_EB, fc, sel.index, sel.matrix, rho, cb)


def pc_eb_report(fc: FreqChannel, plan: ClusterPlan, rho: float, cb: BfmCodebook) -> FeedbackReport:
    """Per-cluster eigen-beamforming.

    The BFM of each cluster is the right singular matrix of its middle
    subcarrier, quantized and applied to every subcarrier of the cluster.
    """
    if plan.Q != fc.n_subcarriers:
        raise InvalidPlan(f"plan covers {plan.Q} subcarriers, channel has {fc.n_subcarriers}")
    v = svd(fc.g[plan.centers()]).v
    sel = select_bfm(v, cb)
    applied = np.repeat(sel.matrix, plan.U, axis=0)
    return _report(SchemeId.PC_EB, fc, sel.index, applied, rho, cb, plan)


def ps_gmd_report(h, fc: FreqChannel, rho: float, cb: BfmCodebook) -> FeedbackReport:
    """GMD of the stacked channel; the quantized ``P`` serves all subcarriers."""
    p = gmd(h).p
    sel = select_bfm(p, cb)
    return _report(SchemeId.PS_GMD, fc, sel.index, sel.matrix, rho, cb)


def pc_gmd_report(h, fc: FreqChannel, plan: ClusterPlan, rho: float, cb: BfmCodebook) -> FeedbackReport:
    if plan.Q != fc.n_subcarriers:
        raise InvalidPlan(f"plan covers {plan.Q} subcarriers, channel has {fc.n_subcarriers}")
    p = gmd(h).p
    sel = select_bfm(p, cb)
    return _report(SchemeId.PC_GMD, fc, sel.index, sel.matrix, rho, cb, plan)


def ps_qrd_report(h, fc: FreqChannel, rho: float, cb: BfmCodebook) -> FeedbackReport:
    """SVD of the stacked channel; the quantized ``V`` serves all subcarriers."""
    v = svd(h).v
    sel = select_bfm(v, cb)
    return _report(SchemeId.PS_QRD, fc, sel.index, sel.matrix, rho, cb)
