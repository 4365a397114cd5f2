"""Reduced-feedback opportunistic scheduling and beamforming for MIMO-OFDMA.

Link-level Monte-Carlo simulator built on a small complex-matrix
factorization library (one-sided Jacobi SVD, Householder QR and the
geometric mean decomposition).
"""

from .errors import (
    CapacityExceeded,
    ConfigInvalid,
    DimensionMismatch,
    EmptyCodebook,
    EmptyReports,
    IndexOutOfRange,
    InvalidPlan,
    MixedSchemes,
    NonConvergence,
    OddBitCount,
    RankDeficient,
)

__version__ = "0.1.0"
