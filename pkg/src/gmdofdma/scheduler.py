"""Base-station scheduling from feedback reports, and feedback bit accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyReports, InvalidPlan, MixedSchemes
from .schemes import ClusterPlan, SchemeId

__all__ = [
    "ScheduleDecision",
    "FeedbackBudget",
    "schedule",
    "system_throughput",
    "feedback_cost",
    "winner_shares",
    "BITS_PER_SCALAR",
]

BITS_PER_SCALAR = 16


@dataclass(frozen=True)
class ScheduleDecision:
    granularity: str  # "subcarrier" or "cluster"
    winners: np.ndarray
    rates: np.ndarray


@dataclass(frozen=True)
class FeedbackBudget:
    bfm_bits: float
    scalar_count: int
    total_bits: float
    bits_per_scalar: int = BITS_PER_SCALAR


def schedule(reports) -> ScheduleDecision:
    """Give every subcarrier (or cluster) to the terminal reporting the highest rate.

    Ties go to the lowest terminal index.
    """
    reports = list(reports)
    if not reports:
        raise EmptyReports("no feedback reports to schedule")
    scheme = reports[0].scheme
    n_units = len(reports[0].rate_scalars)
    for r in reports[1:]:
        if r.scheme != scheme or len(r.rate_scalars) != n_units:
            raise MixedSchemes("all reports must share scheme and granularity")
    rates = np.stack([np.asarray(r.rate_scalars, dtype=float) for r in reports])
    winners = np.argmax(rates, axis=0)
    won = rates[winners, np.arange(n_units)]
    gran = "cluster" if SchemeId(scheme).per_cluster else "subcarrier"
    return ScheduleDecision(gran, winners, won)


def system_throughput(decision: ScheduleDecision, plan: ClusterPlan | None = None) -> float:
    """Mean winning rate per subcarrier; cluster rates are weighted by cluster size."""
    rates = np.asarray(decision.rates, dtype=float)
    if plan is None or decision.granularity == "subcarrier":
        return float(np.mean(rates))
    return float(np.sum(plan.U * rates) / plan.Q)


def feedback_cost(scheme, Q: int, G: int, B, bits_per_scalar: int = BITS_PER_SCALAR, M: int = 2) -> FeedbackBudget:
    """Feedback bits one terminal spends per block.

    ``B`` may be ``INFINITE`` (unquantized BFM), in which case the BFM
    part and the total are infinite.
    """
    if G < 1 or Q < 1 or Q % G:
        raise InvalidPlan(f"cannot split {Q} subcarriers into {G} equal clusters")
    scheme = SchemeId(scheme)
    n_bfm, n_scalar = {
        SchemeId.PS_EB: (Q, Q * M),
        SchemeId.PC_EB: (G, G),
        SchemeId.PS_GMD: (1, Q),
        SchemeId.PS_QRD: (1, Q),
        SchemeId.PC_GMD: (1, G),
    }[scheme]
    bfm_bits = n_bfm * B
    return FeedbackBudget(bfm_bits, n_scalar, bfm_bits + n_scalar * bits_per_scalar, bits_per_scalar)


def winner_shares(decisions, K: int) -> np.ndarray:
    """Fraction of scheduled units won by each terminal over many decisions."""
    counts = np.zeros(K)
    total = 0
    for d in decisions:
        counts += np.bincount(np.asarray(d.winners), minlength=K)[:K]
        total += len(d.winners)
    return counts / max(total, 1)
