"""Quick invariant suite behind ``simcli selftest``.

Each check returns ``(passed, statistic, instances)``; the statistic is
the worst residual (or the relevant sample quantity) observed.
"""

from __future__ import annotations

import itertools

import numpy as np

from .channel import ChannelConfig, draw_channel, freq_channel, selection_matrix, stack_channel
from .codebook import INFINITE, generate_codebook, select_bfm
from .link import DetectorConfig, QPSK, complex_noise, ml_detect, qrdm_detect
from .matdecomp import gmd, qr_economy, svd
from .scheduler import feedback_cost, schedule, system_throughput
from .schemes import (
    SchemeId,
    make_cluster_plan,
    pc_gmd_report,
    ps_eb_report,
    ps_gmd_report,
    ps_qrd_report,
)
from .sim import ResultRow

__all__ = ["CHECKS", "run_selftest", "selftest_rows"]

_INF_CB = generate_codebook(INFINITE, 2, 0)


def _cgauss(rng, shape):
    z = rng.standard_normal(tuple(shape) + (2,))
    return z[..., 0] + 1j * z[..., 1]


def _rel(x, y):
    return float(np.max(np.abs(x - y) / np.abs(y)))


def _shapes():
    return [(n, m) for m in range(1, 5) for n in range(m, 17, 3)]


def check_factorizations(rng, n=10):
    worst = 0.0
    count = 0
    for shape in _shapes():
        a = _cgauss(rng, (n,) + shape)
        scale = np.linalg.norm(a, axis=(-2, -1))
        eye_m = np.eye(shape[1])
        f = svd(a)
        q = qr_economy(a)
        g = gmd(a)
        res = [
            np.linalg.norm(f.reconstruct() - a, axis=(-2, -1)) / scale,
            np.linalg.norm(np.conj(np.swapaxes(f.u, -1, -2)) @ f.u - np.eye(shape[0]), axis=(-2, -1)),
            np.linalg.norm(np.conj(np.swapaxes(f.v, -1, -2)) @ f.v - eye_m, axis=(-2, -1)),
            np.linalg.norm(q.reconstruct() - a, axis=(-2, -1)) / scale,
            np.linalg.norm(np.conj(np.swapaxes(q.q, -1, -2)) @ q.q - eye_m, axis=(-2, -1)),
            np.linalg.norm(g.reconstruct() - a, axis=(-2, -1)) / scale,
            np.linalg.norm(np.conj(np.swapaxes(g.p, -1, -2)) @ g.p - eye_m, axis=(-2, -1)),
            np.linalg.norm(np.conj(np.swapaxes(g.b, -1, -2)) @ g.b - eye_m, axis=(-2, -1)),
        ]
        gm = np.exp(np.mean(np.log(f.s), axis=-1))
        res.append(np.max(np.abs(np.diagonal(g.e, axis1=-2, axis2=-1) - gm[:, None]), axis=-1) / gm)
        worst = max(worst, max(float(np.max(r)) for r in res))
        count += n
    return worst <= 1e-9, worst, count


def check_det_identity(rng, n=20):
    worst = 0.0
    count = 0
    for shape in _shapes():
        a = _cgauss(rng, (n,) + shape)
        pr = np.prod(np.abs(np.diagonal(qr_economy(a).r, axis1=-2, axis2=-1)), axis=-1)
        ps = np.prod(svd(a).s, axis=-1)
        worst = max(worst, _rel(pr, ps))
        count += n
    return worst <= 1e-9, worst, count


def check_gmd_norm(rng, n=20):
    worst = 0.0
    for shape in _shapes():
        a = _cgauss(rng, (n,) + shape)
        e = gmd(a).e
        worst = max(worst, _rel(np.linalg.norm(e, axis=(-2, -1)), np.linalg.norm(a, axis=(-2, -1))))
    return worst <= 1e-9, worst, n * len(_shapes())


def check_determinism(rng, n=20):
    a = _cgauss(rng, (n, 8, 2))
    same = True
    for fn in (svd, qr_economy, gmd):
        x, y = fn(a.copy()), fn(a.copy())
        same &= all(np.array_equal(getattr(x, k), getattr(y, k)) for k in x.__dataclass_fields__)
    return bool(same), 0.0 if same else 1.0, n


def check_kronecker(rng, n=20):
    cfg = ChannelConfig()
    worst = 0.0
    for _ in range(n):
        ch = draw_channel(rng, cfg)
        h = stack_channel(ch)
        g = freq_channel(ch).g
        for q in range(cfg.subcarriers):
            w = selection_matrix(q, cfg.subcarriers, cfg.rx_antennas, cfg.taps)
            worst = max(worst, float(np.linalg.norm(g[q] - w @ h)))
    return worst == 0.0, worst, n


def check_parseval(rng, n=50):
    cfg = ChannelConfig()
    worst = 0.0
    for _ in range(n):
        ch = draw_channel(rng, cfg)
        lhs = np.sum(np.abs(freq_channel(ch).g) ** 2)
        rhs = cfg.subcarriers * np.sum(np.abs(stack_channel(ch)) ** 2)
        worst = max(worst, abs(lhs - rhs) / rhs)
    return worst <= 1e-9, worst, n


def check_codebook(rng, n=0):
    seed = int(rng.integers(2 ** 31))
    big = generate_codebook(6, 2, seed)
    worst = float(np.max(np.linalg.norm(
        np.conj(np.swapaxes(big.entries, -1, -2)) @ big.entries - np.eye(2), axis=(-2, -1))))
    nested = all(
        np.array_equal(generate_codebook(b, 2, seed).entries, big.entries[: 2 ** b]) for b in range(6)
    )
    return worst <= 1e-10 and nested, worst, len(big)


def check_selection(rng, n=50):
    cb = generate_codebook(4, 2, int(rng.integers(2 ** 31)))
    p = qr_economy(_cgauss(rng, (n, 2, 2))).q
    sel = select_bfm(p, cb)
    ok = True
    for i in range(n):
        vals = [np.linalg.norm(p[i].conj().T @ e - np.eye(2)) ** 2 for e in cb.entries]
        ok &= int(np.argmin(vals)) == int(sel.index[i])
    return bool(ok), 0.0, n


def _links(rng, n):
    cfg = ChannelConfig()
    for _ in range(n):
        ch = draw_channel(rng, cfg)
        yield stack_channel(ch), freq_channel(ch)


def check_link_det_identity(rng, n=20):
    worst = 0.0
    for h, fc in _links(rng, n):
        lam = np.prod(svd(fc.g).s, axis=-1)
        for rep in (ps_gmd_report(h, fc, 1.0, _INF_CB), ps_qrd_report(h, fc, 1.0, _INF_CB)):
            d = np.prod(np.abs(np.diagonal(rep.link.triangular, axis1=-2, axis2=-1)), axis=-1)
            worst = max(worst, _rel(d, lam))
    return worst <= 1e-9, worst, n * 64


def check_rate_dominance(rng, n=20):
    worst = -np.inf
    for h, fc in _links(rng, n):
        c = ps_gmd_report(h, fc, 10.0, _INF_CB).rate_scalars
        t = ps_eb_report(fc, 10.0, _INF_CB).rate_scalars
        worst = max(worst, float(np.max(c - t)))
    return worst <= 1e-12, max(worst, 0.0), n * 64


def check_asymptotic_ratio(rng, n=4):
    ratios = []
    data = list(_links(rng, n))
    for rho in (1e3, 1e4, 1e6):
        r = [ps_gmd_report(h, fc, rho, _INF_CB).rate_scalars / ps_eb_report(fc, rho, _INF_CB).rate_scalars
             for h, fc in data]
        ratios.append(float(np.mean(r)))
    ok = ratios[0] < ratios[1] < ratios[2] and ratios[2] >= 0.99
    return ok, ratios[2], n * 64


def check_clustering(rng, n=10):
    worst = 0.0
    for h, fc in _links(rng, n):
        ps = ps_gmd_report(h, fc, 10.0, _INF_CB).rate_scalars
        for g in (2, 4, 8, 16, 32):
            plan = make_cluster_plan(64, g)
            pc = pc_gmd_report(h, fc, plan, 10.0, _INF_CB).rate_scalars
            worst = max(worst, float(np.max(np.abs(pc - ps.reshape(g, -1).mean(axis=1)))))
    return worst <= 1e-12, worst, n


def check_qrdm_ml(rng, n=2000):
    t = np.triu(_cgauss(rng, (n, 2, 2)))
    s = QPSK[rng.integers(0, 4, (n, 2))]
    r = np.einsum("bij,bj->bi", t, s) * np.sqrt(4.0) + complex_noise(rng, (n, 2))
    a = qrdm_detect(t, r, 4.0, DetectorConfig(16))
    b = ml_detect(t, r, 4.0)
    mism = int(np.sum(np.any(a != b, axis=1)))
    return mism == 0, float(mism), n


def check_noise_whiteness(rng, n=100000):
    comb = qr_economy(_cgauss(rng, (4, 2))).q
    w = complex_noise(rng, (n, 4))
    z = w @ np.conj(comb)
    cov = z.T @ np.conj(z) / n
    dev = float(np.max(np.abs(cov - np.eye(2))))
    return dev <= 0.02, dev, n


def check_scheduling(rng, n=10):
    ok = True
    for _ in range(n):
        reps = [ps_gmd_report(h, fc, 10.0, _INF_CB) for h, fc in _links(rng, 6)]
        full = schedule(reps)
        part = schedule(reps[:3])
        rates = np.stack([r.rate_scalars for r in reps])
        ok &= np.array_equal(full.rates, rates.max(axis=0))
        ok &= bool(np.all(full.rates >= part.rates))
        ok &= system_throughput(full) >= system_throughput(part)
    return bool(ok), 0.0, n


def check_budget(rng, n=0):
    ok = True
    count = 0
    for Q, G, B, M in itertools.product((16, 64), (1, 2, 8, 16), (0, 1, 4, 8), (1, 2, 4)):
        c = {s: feedback_cost(s, Q, G, B, 16, M).total_bits for s in SchemeId}
        ok &= c[SchemeId.PC_GMD] <= c[SchemeId.PS_GMD] <= c[SchemeId.PS_EB]
        ok &= feedback_cost(SchemeId.PS_GMD, Q, G, B, 16, M).bfm_bits == B
        ok &= feedback_cost(SchemeId.PS_EB, Q, G, B, 16, M).bfm_bits == Q * B
        count += 1
    return bool(ok), 0.0, count


CHECKS = {
    "factorization_residuals": check_factorizations,
    "qr_svd_det_identity": check_det_identity,
    "gmd_norm_conservation": check_gmd_norm,
    "factorization_determinism": check_determinism,
    "kronecker_consistency": check_kronecker,
    "parseval": check_parseval,
    "codebook_unitary_nested": check_codebook,
    "bfm_selection_bruteforce": check_selection,
    "link_det_identity": check_link_det_identity,
    "rate_dominance": check_rate_dominance,
    "asymptotic_ratio": check_asymptotic_ratio,
    "cluster_average": check_clustering,
    "qrdm_equals_ml": check_qrdm_ml,
    "noise_whiteness": check_noise_whiteness,
    "scheduling_pointwise_max": check_scheduling,
    "feedback_budget_order": check_budget,
}


def run_selftest(seed: int = 0, echo=print) -> list:
    """Run every check with its own seeded stream; returns ``(name, ok, stat, n)``."""
    out = []
    for i, (name, fn) in enumerate(CHECKS.items()):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, 9, i)))
        ok, stat, n = fn(rng)
        out.append((name, bool(ok), float(stat), int(n)))
        if echo is not None:
            echo(f"{'PASS' if ok else 'FAIL'}  {name:28s} stat={stat:.3e} n={n}")
    return out


def selftest_rows(results) -> list:
    rows = []
    for name, ok, stat, n in results:
        rows.append(ResultRow("selftest", name, 0.0, 0, INFINITE, 0, "pass", 1.0 if ok else 0.0, 0.0, n))
        rows.append(ResultRow("selftest", name, 0.0, 0, INFINITE, 0, "statistic", abs(stat), 0.0, n))
    return rows
