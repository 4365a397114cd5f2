"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Statistical orderings use paired differences over common random numbers.
A strict ordering ("a < b at 95% confidence") needs the 95% interval of
the mean difference to exclude zero in the right direction. A weak
ordering ("non-increasing") fails only when the data show a significant
violation.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from gmdofdma.channel import ChannelConfig, draw_channel, freq_channel, stack_channel
from gmdofdma.codebook import INFINITE, generate_codebook
from gmdofdma.link import DetectorConfig, complex_noise, measure_ber, ml_detect, qpsk_demap, qpsk_modulate, qrdm_detect
from gmdofdma.matdecomp import gmd, qr_economy, svd
from gmdofdma.scheduler import feedback_cost
from gmdofdma.schemes import SchemeId, ps_gmd_report, ps_qrd_report, realized_link
from gmdofdma.sim import SimConfig, simulate_case1, simulate_case2, simulate_case3

from conftest import ACCEPTANCE_LINES, cgauss, herm

pytestmark = pytest.mark.slow

INF_CB = generate_codebook(INFINITE, 2, seed=0)


def record(name, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} [{elapsed:.1f}s / {limit:.0f}s]")
    return ok


def paired(a, b):
    """Mean and 95% half-width of ``a - b`` over trials."""
    d = np.asarray(a, float) - np.asarray(b, float)
    return float(d.mean()), float(1.96 * d.std(ddof=1) / np.sqrt(d.size))


def significantly_greater(a, b):
    m, h = paired(a, b)
    return m - h > 0


def channels(seed, n, cfg=ChannelConfig()):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        ch = draw_channel(rng, cfg)
        out.append((stack_channel(ch), freq_channel(ch)))
    return out


def test_c01_factorization_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_rec = worst_unit = worst_gm = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(m, 17))
        a = cgauss(rng, (n, m))
        na = np.linalg.norm(a)
        f, q, g = svd(a), qr_economy(a), gmd(a)
        for rec in (f.reconstruct(), q.reconstruct(), g.reconstruct()):
            worst_rec = max(worst_rec, np.linalg.norm(rec - a) / na)
        for u in (f.u, f.v, q.q, g.b, g.p):
            worst_unit = max(worst_unit, np.linalg.norm(herm(u) @ u - np.eye(u.shape[1])))
        gm = np.exp(np.mean(np.log(np.linalg.svd(a, compute_uv=False))))
        worst_gm = max(worst_gm, np.max(np.abs(np.diag(g.e) - gm)) / gm)
    ok = record("C1 factorization suite", max(worst_rec, worst_unit, worst_gm) <= 1e-9,
                f"reconstruction {worst_rec:.1e}, unitarity {worst_unit:.1e}, gm diagonal {worst_gm:.1e}",
                time.perf_counter() - t0, 30)
    assert ok


def test_c02_determinant_identity():
    t0 = time.perf_counter()
    worst = {"PS_GMD": 0.0, "PS_QRD": 0.0}
    count = 0
    for h, fc in channels(2, 16):
        lam = np.prod(np.linalg.svd(fc.g, compute_uv=False), axis=-1)
        for name, fn in (("PS_GMD", ps_gmd_report), ("PS_QRD", ps_qrd_report)):
            d = np.prod(np.abs(np.diagonal(fn(h, fc, 1.0, INF_CB).link.triangular, axis1=1, axis2=2)), axis=-1)
            worst[name] = max(worst[name], float(np.max(np.abs(d - lam) / lam)))
        count += fc.n_subcarriers
    ok = record("C2 determinant identity", count >= 1000 and max(worst.values()) <= 1e-9,
                f"{count} instances, worst rel err GMD {worst['PS_GMD']:.1e} QRD {worst['PS_QRD']:.1e}",
                time.perf_counter() - t0, 30)
    assert ok


def test_c03_asymptotic_ratio():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    rhos = (1e3, 1e4, 1e6)
    ratios = {r: [] for r in rhos}
    slack = -np.inf
    for h, fc in channels(3, 200):
        q = int(rng.integers(fc.n_subcarriers))
        s = np.linalg.svd(fc.g[q], compute_uv=False)
        rep = ps_gmd_report(h, fc, 1.0, INF_CB)
        for rho in rhos:
            c = rep.with_snr(rho).rate_scalars[q]
            t = np.sum(np.log2(1 + rho * s ** 2))
            slack = max(slack, c - t)
            ratios[rho].append(c / t)
    means = [float(np.mean(ratios[r])) for r in rhos]
    monotone = all(b >= a for a, b in zip(means, means[1:]))
    ok = record("C3 asymptotic ratio", monotone and means[-1] >= 0.99 and slack <= 1e-12,
                f"mean C/T {', '.join(f'{m:.5f}' for m in means)}; max C-T {slack:.1e}",
                time.perf_counter() - t0, 10)
    assert ok


def _triangular_model(rng, n):
    t = qr_economy(cgauss(rng, (n, 2, 2)) / np.sqrt(2)).r
    bits = rng.integers(0, 2, (n, 4), dtype=np.int8)
    return t, bits, qpsk_modulate(bits), complex_noise(rng, (n, 2))


def _snr_at(ber_curve, snr_db, target=1e-3):
    """SNR where the BER curve crosses ``target``, interpolating log10 BER linearly."""
    lb = np.log10(np.maximum(ber_curve, 1e-12))
    i = int(np.argmax(lb < np.log10(target)))
    x0, x1, y0, y1 = snr_db[i - 1], snr_db[i], lb[i - 1], lb[i]
    return x0 + (np.log10(target) - y0) * (x1 - x0) / (y1 - y0)


def test_c04_detector_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    t, bits, s, w = _triangular_model(rng, 10000)
    r = np.einsum("bij,bj->bi", t, s) * np.sqrt(4.0) + w
    full = qrdm_detect(t, r, 4.0, DetectorConfig(16))
    exact = bool(np.array_equal(full, ml_detect(t, r, 4.0)))

    snr_db = np.arange(0.0, 32.0, 2.0)
    t, bits, s, w = _triangular_model(rng, 100000)
    ber = {"qrdm12": [], "ml": []}
    for db in snr_db:
        rho = 10 ** (db / 10)
        r = np.einsum("bij,bj->bi", t, s) * np.sqrt(rho) + w
        ber["qrdm12"].append(np.mean(qpsk_demap(qrdm_detect(t, r, rho, DetectorConfig(12))) != bits))
        ber["ml"].append(np.mean(qpsk_demap(ml_detect(t, r, rho)) != bits))
    gap = abs(_snr_at(np.array(ber["qrdm12"]), snr_db) - _snr_at(np.array(ber["ml"]), snr_db))
    ok = record("C4 detector oracle", exact and gap <= 0.2,
                f"m_keep=16 equals ML on 1e4 trials: {exact}; m_keep=12 gap at BER 1e-3: {gap:.3f} dB",
                time.perf_counter() - t0, 120)
    assert ok


def test_c05_rayleigh_anchor():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    parts = []
    good = True
    for rho in (1.0, 10.0):
        h = cgauss(rng, (500000, 1, 1)) / np.sqrt(2)
        ber = measure_ber(realized_link(h, np.eye(1)), rho, 1, rng)
        closed = 0.5 * (1 - np.sqrt(rho / (2 + rho)))
        good &= abs(ber - closed) <= 0.1 * closed
        parts.append(f"rho={rho:g}: {ber:.5f} vs {closed:.5f}")
    ok = record("C5 Rayleigh BER anchor", good, "; ".join(parts), time.perf_counter() - t0, 60)
    assert ok


def test_c06_case1_ordering():
    t0 = time.perf_counter()
    cfg = SimConfig(snr_grid=[10.0], trials=2000, frames=100, seed=6)
    res = simulate_case1(cfg)
    g, q, e = (res.values[(s, 0)] for s in ("PS_GMD", "PS_QRD", "PS_EB"))
    dm, dh = paired(g, e)
    gmd_better = dm + dh < 0
    overlap = abs(q.mean() - e.mean()) <= res.ci95(("PS_QRD", 0)) + res.ci95(("PS_EB", 0))
    ok = record(
        "C6 case 1 ordering", gmd_better and overlap,
        f"BER GMD {g.mean():.2e}, QRD {q.mean():.2e}±{res.ci95(('PS_QRD', 0)):.1e}, "
        f"EB {e.mean():.2e}±{res.ci95(('PS_EB', 0)):.1e}; GMD-EB {dm:.2e}±{dh:.1e} "
        f"({'significant' if gmd_better else 'not significant'}); QRD/EB intervals "
        f"{'overlap' if overlap else 'disjoint'}",
        time.perf_counter() - t0, 600)
    assert ok


def test_c07_case2_properties():
    t0 = time.perf_counter()
    cfg = SimConfig(trials=800, frames=50, seed=7)
    v = simulate_case2(cfg).values
    violations = []
    for K in cfg.K_grid:
        for a, b in zip(cfg.B_grid, cfg.B_grid[1:]):
            x, y = v[("PS_GMD", K, b)], v[("PS_GMD", K, a)]
            if significantly_greater(x, y):
                m, h = paired(x, y)
                violations.append(f"K={K} B {a:g}->{b:g} +{m:.1e}±{h:.1e}")
    for b in cfg.B_grid:
        for k1, k2 in zip(cfg.K_grid, cfg.K_grid[1:]):
            x, y = v[("PS_GMD", k2, b)], v[("PS_GMD", k1, b)]
            if significantly_greater(x, y):
                m, h = paired(x, y)
                violations.append(f"B={b:g} K {k1}->{k2} +{m:.1e}±{h:.1e}")
    detail = "no significant increase" if not violations else "significant increases: " + "; ".join(violations)
    ok = record("C7 case 2 properties", not violations, detail, time.perf_counter() - t0, 600)
    assert ok


def test_c08_case3_properties():
    t0 = time.perf_counter()
    cfg = SimConfig(trials=300, seed=8)
    v = simulate_case3(cfg).values
    grid = cfg.G_grid
    drops = []
    for s in ("PC_GMD", "PC_EB"):
        for a, b in zip(grid, grid[1:]):
            if significantly_greater(v[(s, a)], v[(s, b)]):
                drops.append(f"{s} G {a}->{b}")
    m, h = paired(v[("PC_GMD", 2)], v[("PC_EB", 2)])
    gmd_ge_eb = m + h >= 0
    spread = abs(v[("PC_GMD", 32)].mean() - v[("PC_GMD", 2)].mean()) / v[("PC_GMD", 32)].mean()
    means = ", ".join(f"G={g}: {v[('PC_GMD', g)].mean():.3f}/{v[('PC_EB', g)].mean():.3f}" for g in grid)
    ok = record(
        "C8 case 3 properties", not drops and gmd_ge_eb and spread <= 0.05,
        f"GMD/EB {means}; monotone {'yes' if not drops else drops}; "
        f"GMD-EB at G=2 {m:+.4f}±{h:.4f}; GMD spread G=2..32 {100 * spread:.1f}%",
        time.perf_counter() - t0, 300)
    assert ok


def test_c09_feedback_ledger():
    t0 = time.perf_counter()
    good = True
    checked = 0
    for Q in (8, 16, 64, 128, 256):
        for G in [g for g in range(1, Q + 1) if Q % g == 0]:
            for B in list(range(0, 17)) + [INFINITE]:
                for M in (1, 2, 4):
                    pc = feedback_cost(SchemeId.PC_GMD, Q, G, B, M=M)
                    ps = feedback_cost(SchemeId.PS_GMD, Q, G, B, M=M)
                    eb = feedback_cost(SchemeId.PS_EB, Q, G, B, M=M)
                    good &= pc.total_bits <= ps.total_bits <= eb.total_bits
                    good &= ps.bfm_bits == B and eb.bfm_bits == Q * B
                    checked += 1
    ok = record("C9 feedback ledger", good, f"{checked} (Q, G, B, M) combinations",
                time.perf_counter() - t0, 1)
    assert ok


def _simcli(args):
    return subprocess.run([sys.executable, "-m", "gmdofdma.cli", *args], capture_output=True, text=True)


def test_c10_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "c3.cfg"
    cfg.write_text("trials = 500\nseed = 10\n")
    same = {}
    codes = []
    for cmd in ("selftest", "case3"):
        outs = []
        for workers in (1, 2):
            out = tmp_path / f"{cmd}-{workers}.csv"
            p = _simcli([cmd, "--config", str(cfg), "--workers", str(workers), "--out", str(out)])
            codes.append(p.returncode)
            outs.append(out.read_bytes() if out.exists() else None)
        same[cmd] = outs[0] is not None and outs[0] == outs[1]
    ok = record("C10 determinism", all(same.values()) and codes == [0] * 4,
                f"byte-identical selftest {same['selftest']}, case3 {same['case3']}; exit codes {codes}",
                time.perf_counter() - t0, 600)
    assert ok
