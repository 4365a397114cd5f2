"""Monte-Carlo harness for the three experiment cases.

Every trial draws its own channels and payload from counter-derived
seed streams keyed by ``(master seed, case, stream kind, index, trial)``,
so results do not depend on execution order or on the number of worker
processes. Per-trial metrics are reduced in trial order.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig, draw_channel, freq_channel, stack_channel
from .codebook import INFINITE, generate_codebook
from .errors import ConfigInvalid, RankDeficient
from .link import bit_errors, complex_noise
from .scheduler import schedule, system_throughput
from .schemes import (
    EffectiveLink,
    SchemeId,
    make_cluster_plan,
    pc_eb_report,
    pc_gmd_report,
    ps_eb_report,
    ps_gmd_report,
    ps_qrd_report,
)

__all__ = [
    "SimConfig",
    "ResultRow",
    "CaseResult",
    "trial_rng",
    "simulate_case1",
    "simulate_case2",
    "simulate_case3",
    "run_case1",
    "run_case2",
    "run_case3",
    "emit_csv",
    "format_csv",
    "ebn0_to_rho",
]

CASE_IDS = {"selftest": 0, "case1": 1, "case2": 2, "case3": 3}
_CHANNEL, _PAYLOAD, _CODEBOOK = 0, 1, 2
_MAX_REDRAWS = 100


@dataclass
class SimConfig:
    """Simulation parameters; field names double as config-file keys.

    ``snr_grid`` is Eb/N0 in dB for the BER cases (``rho = 2 Eb/N0`` for
    QPSK at unit noise variance); ``case2_snr_db`` is Eb/N0 as well, and
    ``case3_snr_db`` is the plain SNR ``rho`` in dB.
    """

    Q: int = 64
    M: int = 2
    N: int = 2
    L: int = 4
    K: int = 10
    snr_grid: list = field(default_factory=lambda: [0.0, 2.5, 5.0, 7.5, 10.0])
    B: float = INFINITE
    B_grid: list = field(default_factory=lambda: [0, 2, 4, 6, 8, INFINITE])
    K_grid: list = field(default_factory=lambda: [1, 5, 10])
    G_grid: list = field(default_factory=lambda: [2, 4, 8, 16, 32])
    trials: int = 2000
    frames: int = 100
    seed: int = 0
    pdp_decay: float = 0.5
    m_keep: int = 12
    bits_per_scalar: int = 16
    schemes: list = field(default_factory=lambda: [s.value for s in SchemeId])
    case2_snr_db: float = 5.0
    case3_snr_db: float = 10.0
    workers: int = 1

    def validate(self) -> "SimConfig":
        try:
            ChannelConfig(self.M, self.N, self.L, self.Q, self.pdp_decay)
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from None
        if self.trials < 1:
            raise ConfigInvalid("trials must be >= 1")
        if self.frames < 1:
            raise ConfigInvalid("frames must be >= 1")
        if self.K < 1 or any(k < 1 for k in self.K_grid):
            raise ConfigInvalid("user counts must be >= 1")
        if self.seed < 0:
            raise ConfigInvalid("seed must be >= 0")
        if self.workers < 1:
            raise ConfigInvalid("workers must be >= 1")
        if not 1 <= self.m_keep <= 4 ** self.M:
            raise ConfigInvalid(f"m_keep must lie in 1..{4 ** self.M}")
        for g in self.G_grid:
            if g < 1 or self.Q % g:
                raise ConfigInvalid(f"G={g} does not divide Q={self.Q}")
        for b in list(self.B_grid) + [self.B]:
            if b != INFINITE and (b < 0 or b > 16 or int(b) != b):
                raise ConfigInvalid(f"B={b} must be an integer in 0..16 or inf")
        for s in self.schemes:
            if s not in SchemeId.__members__:
                raise ConfigInvalid(f"unknown scheme {s!r}")
        return self

    @property
    def channel_config(self) -> ChannelConfig:
        return ChannelConfig(self.M, self.N, self.L, self.Q, self.pdp_decay)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ResultRow:
    case: str
    scheme: str
    snr_db: float
    K: int
    B: float
    G: int
    metric: str
    value: float
    ci95: float
    trials: int


@dataclass
class CaseResult:
    """Per-trial metrics ``values[label]`` (1-D arrays in trial order)."""

    case: str
    values: dict

    def mean(self, label) -> float:
        return float(np.mean(self.values[label]))

    def ci95(self, label) -> float:
        return ci95(self.values[label])


def ci95(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return 0.0
    return float(1.96 * np.std(x, ddof=1) / math.sqrt(x.size))


def ebn0_to_rho(ebn0_db: float) -> float:
    return 2.0 * 10.0 ** (ebn0_db / 10.0)


def db_to_lin(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def trial_rng(seed: int, case: int, kind: int, index: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(case, kind, index, trial))
    return np.random.default_rng(ss)


def codebook_seed(seed: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(0, _CODEBOOK)).generate_state(1)[0])


@functools.lru_cache(maxsize=64)
def _codebook(B, M, seed):
    return generate_codebook(B, M, codebook_seed(seed))


def _draw_user(cfg, case, k, t, build):
    """Draw user ``k``'s channel for trial ``t`` and build its reports.

    Rank-deficient draws are discarded and redrawn from the same stream.
    """
    rng = trial_rng(cfg.seed, case, _CHANNEL, k, t)
    ccfg = cfg.channel_config
    for _ in range(_MAX_REDRAWS):
        ch = draw_channel(rng, ccfg)
        try:
            return build(stack_channel(ch), freq_channel(ch))
        except RankDeficient:
            continue
    raise RankDeficient(f"{_MAX_REDRAWS} consecutive degenerate channel draws")


def _payload(cfg, case, index, t):
    rng = trial_rng(cfg.seed, case, _PAYLOAD, index, t)
    shape = (cfg.frames, cfg.Q)
    bits = rng.integers(0, 2, size=shape + (2 * cfg.M,), dtype=np.int8)
    noise = complex_noise(rng, shape + (cfg.N,))
    return bits, noise


def _scheduled_ber(reports, rho, payload, cfg):
    """Schedule on reported rates, transmit on the winners' links, return BER."""
    reports = [r.with_snr(rho) for r in reports]
    dec = schedule(reports)
    q = np.arange(cfg.Q)
    win = dec.winners
    if reports[0].plan is not None:
        win = np.repeat(win, reports[0].plan.U)
    links = [r.link for r in reports]
    stacked = EffectiveLink(
        np.stack([l.combiner for l in links])[win, q],
        np.stack([l.triangular for l in links])[win, q],
        np.stack([l.channel for l in links])[win, q],
        rho,
    )
    detector = "per_stream" if SchemeId(reports[0].scheme).eigen else "qrdm"
    err = bit_errors(stacked, rho, cfg.frames, detector=detector, m_keep=cfg.m_keep, payload=payload)
    return float(np.sum(err)) / (cfg.frames * cfg.Q * 2 * cfg.M)


_PS_BUILDERS = {
    SchemeId.PS_EB: lambda h, fc, cb: ps_eb_report(fc, 1.0, cb),
    SchemeId.PS_QRD: lambda h, fc, cb: ps_qrd_report(h, fc, 1.0, cb),
    SchemeId.PS_GMD: lambda h, fc, cb: ps_gmd_report(h, fc, 1.0, cb),
}

CASE1_SCHEMES = (SchemeId.PS_GMD, SchemeId.PS_QRD, SchemeId.PS_EB)
CASE3_SCHEMES = (SchemeId.PC_GMD, SchemeId.PC_EB)


def _case1_trial(cfg, t):
    cb = _codebook(cfg.B, cfg.M, cfg.seed)
    schemes = [s for s in CASE1_SCHEMES if s.value in cfg.schemes]

    def build(h, fc):
        return {s: _PS_BUILDERS[s](h, fc, cb) for s in schemes}

    users = [_draw_user(cfg, 1, k, t, build) for k in range(cfg.K)]
    out = {}
    for i, ebn0 in enumerate(cfg.snr_grid):
        rho = ebn0_to_rho(ebn0)
        payload = _payload(cfg, 1, i, t)
        for s in schemes:
            out[(s.value, i)] = _scheduled_ber([u[s] for u in users], rho, payload, cfg)
    return out


def _case2_trial(cfg, t):
    books = {b: _codebook(b, cfg.M, cfg.seed) for b in cfg.B_grid}
    ref_cb = _codebook(INFINITE, cfg.M, cfg.seed)
    refs = [s for s in (SchemeId.PS_EB, SchemeId.PS_QRD) if s.value in cfg.schemes]
    k_max = max(list(cfg.K_grid) + [cfg.K])

    def build(h, fc):
        rep = {("PS_GMD", b): ps_gmd_report(h, fc, 1.0, cb) for b, cb in books.items()}
        for s in refs:
            rep[(s.value, INFINITE)] = _PS_BUILDERS[s](h, fc, ref_cb)
        return rep

    users = [_draw_user(cfg, 2, k, t, build) for k in range(k_max)]
    rho = ebn0_to_rho(cfg.case2_snr_db)
    payload = _payload(cfg, 2, 0, t)
    out = {}
    for K in cfg.K_grid:
        for b in cfg.B_grid:
            out[("PS_GMD", K, b)] = _scheduled_ber(
                [u[("PS_GMD", b)] for u in users[:K]], rho, payload, cfg
            )
    for s in refs:
        out[(s.value, cfg.K, INFINITE)] = _scheduled_ber(
            [u[(s.value, INFINITE)] for u in users[: cfg.K]], rho, payload, cfg
        )
    return out


def _case3_trial(cfg, t):
    cb = _codebook(cfg.B, cfg.M, cfg.seed)
    rho = db_to_lin(cfg.case3_snr_db)
    plans = {g: make_cluster_plan(cfg.Q, g) for g in cfg.G_grid}
    schemes = [s for s in CASE3_SCHEMES if s.value in cfg.schemes]

    def build(h, fc):
        rep = {}
        for g, plan in plans.items():
            if SchemeId.PC_GMD in schemes:
                rep[("PC_GMD", g)] = pc_gmd_report(h, fc, plan, rho, cb)
            if SchemeId.PC_EB in schemes:
                rep[("PC_EB", g)] = pc_eb_report(fc, plan, rho, cb)
        return rep

    users = [_draw_user(cfg, 3, k, t, build) for k in range(cfg.K)]
    out = {}
    for s in schemes:
        for g, plan in plans.items():
            dec = schedule([u[(s.value, g)] for u in users])
            out[(s.value, g)] = system_throughput(dec, plan)
    return out


_TRIALS = {1: _case1_trial, 2: _case2_trial, 3: _case3_trial}


def _run_chunk(case, cfg, trials):
    fn = _TRIALS[case]
    return [fn(cfg, t) for t in trials]


def _collect(case, cfg) -> dict:
    cfg.validate()
    idx = list(range(cfg.trials))
    if cfg.workers == 1:
        per_trial = _run_chunk(case, cfg, idx)
    else:
        n = cfg.workers
        size = math.ceil(len(idx) / (4 * n))
        chunks = [idx[i:i + size] for i in range(0, len(idx), size)]
        per_trial = []
        with ProcessPoolExecutor(max_workers=n) as pool:
            for part in pool.map(_run_chunk, [case] * len(chunks), [cfg] * len(chunks), chunks):
                per_trial.extend(part)
    keys = per_trial[0].keys()
    return {key: np.array([tr[key] for tr in per_trial]) for key in keys}


def simulate_case1(cfg: SimConfig) -> CaseResult:
    """Uncoded BER of PS-GMD, PS-QRD and PS-EB versus Eb/N0.

    Keys are ``(scheme, snr_index)``.
    """
    return CaseResult("case1", _collect(1, cfg))


def simulate_case2(cfg: SimConfig) -> CaseResult:
    """PS-GMD BER over the ``(K, B)`` grid, plus unquantized PS-EB/PS-QRD references.

    Keys are ``(scheme, K, B)``.
    """
    return CaseResult("case2", _collect(2, cfg))


def simulate_case3(cfg: SimConfig) -> CaseResult:
    """Scheduled throughput of PC-GMD and PC-EB per cluster count. Keys ``(scheme, G)``."""
    return CaseResult("case3", _collect(3, cfg))


def _row(case, scheme, snr_db, K, B, G, metric, x, trials):
    x = np.asarray(x, dtype=float)
    return ResultRow(case, scheme, float(snr_db), int(K), B, int(G), metric,
                     float(np.mean(x)), ci95(x), int(trials))


def case1_rows(cfg: SimConfig, res: CaseResult) -> list:
    rows = []
    for s in CASE1_SCHEMES:
        for i, ebn0 in enumerate(cfg.snr_grid):
            if (s.value, i) in res.values:
                rows.append(_row("case1", s.value, ebn0, cfg.K, cfg.B, cfg.Q, "ber",
                                 res.values[(s.value, i)], cfg.trials))
    return rows


def case2_rows(cfg: SimConfig, res: CaseResult) -> list:
    rows = []
    for K in cfg.K_grid:
        for b in cfg.B_grid:
            rows.append(_row("case2", "PS_GMD", cfg.case2_snr_db, K, b, cfg.Q, "ber",
                             res.values[("PS_GMD", K, b)], cfg.trials))
    for s in ("PS_QRD", "PS_EB"):
        key = (s, cfg.K, INFINITE)
        if key in res.values:
            rows.append(_row("case2", s, cfg.case2_snr_db, cfg.K, INFINITE, cfg.Q, "ber",
                             res.values[key], cfg.trials))
    return rows


def case3_rows(cfg: SimConfig, res: CaseResult) -> list:
    rows = []
    for s in CASE3_SCHEMES:
        for g in cfg.G_grid:
            if (s.value, g) in res.values:
                rows.append(_row("case3", s.value, cfg.case3_snr_db, cfg.K, cfg.B, g,
                                 "throughput", res.values[(s.value, g)], cfg.trials))
    return rows


def run_case1(cfg: SimConfig) -> list:
    return case1_rows(cfg, simulate_case1(cfg))


def run_case2(cfg: SimConfig) -> list:
    return case2_rows(cfg, simulate_case2(cfg))


def run_case3(cfg: SimConfig) -> list:
    return case3_rows(cfg, simulate_case3(cfg))


CSV_HEADER = ("case", "scheme", "snr_db", "K", "B", "G", "metric", "value", "ci95", "trials")


def _fmt(x) -> str:
    if isinstance(x, float):
        if x == INFINITE:
            return "inf"
        return repr(x)
    return str(x)


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])
    return buf.getvalue()


def emit_csv(rows, path) -> None:
    """Write rows as CSV; raises ``OSError`` when the path is not writable."""
    text = format_csv(rows)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(text)


def read_csv(path) -> list:
    """Parse a file written by :func:`emit_csv` back into rows."""
    out = []
    with open(path, newline="", encoding="ascii") as fh:
        for rec in csv.DictReader(fh):
            out.append(ResultRow(
                rec["case"], rec["scheme"], float(rec["snr_db"]), int(rec["K"]),
                float(rec["B"]), int(rec["G"]), rec["metric"], float(rec["value"]),
                float(rec["ci95"]), int(rec["trials"]),
            ))
    return out
