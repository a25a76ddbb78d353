"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary (see ``conftest.py``) and when this file is run as a script.
Campaign outputs go to ``$HARQNP_ACCEPTANCE_OUT`` when set, else a temporary
directory.
"""

import os
import subprocess
import sys
import time
from importlib import resources

import numpy as np
import pytest

from harqnp import alist, campaign, verify
from harqnp import config as cfgmod
from harqnp.plotting import plot_curves
from harqnp.roc import ALPHA_GRID, binary_test_point, binomial_se, dominance_report, sup_distance

RESULTS = {}


def record(number, passed, detail, seconds):
    RESULTS[number] = (bool(passed), detail, seconds)


def result_lines():
    return [f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail} ({sec:.1f} s)"
            for n, (ok, detail, sec) in sorted(RESULTS.items())]


@pytest.fixture(scope="module")
def out_root(tmp_path_factory):
    root = os.environ.get("HARQNP_ACCEPTANCE_OUT")
    if root:
        os.makedirs(root, exist_ok=True)
        return root
    return str(tmp_path_factory.mktemp("acceptance"))


def shipped(name, out_root, **changes):
    with resources.as_file(resources.files("harqnp") / "configs" / f"{name}.yaml") as path:
        cfg = cfgmod.load(path)
    cfg.output_dir = os.path.join(out_root, name)
    for key, value in changes.items():
        setattr(cfg, key, value)
    return cfg.validate()


def run(cfg):
    start = time.perf_counter()
    result = campaign.run_campaign(cfg)
    curves, _ = campaign.write_roc_outputs(result.records, cfg.output_dir)
    return result.records, curves, time.perf_counter() - start


def suite(number, name, budget, **kwargs):
    res = verify.SUITES[name](**kwargs)
    ok = res.passed and res.seconds < budget
    record(number, ok, f"{res.detail}; budget {budget:g} s", res.seconds)
    assert res.passed, res.line()
    assert res.seconds < budget, f"took {res.seconds:.2f} s, budget {budget} s"


# ---------------------------------------------------------------------------
# Exact small-instance oracles
# ---------------------------------------------------------------------------

def test_criterion_01_terror_exact():
    suite(1, "terror", 1.0)


def test_criterion_02_coset_equivalence():
    suite(2, "coset", 10.0)


def test_criterion_03_ml_cdf_vs_nested_mc():
    suite(3, "ml_cdf", 120.0, n_inner=100_000, points=20)


def test_criterion_04_ml_enumeration_exact():
    suite(4, "ml_enumeration", 30.0)


def test_criterion_08_tree_map():
    suite(8, "tree_map", 1.0)


# ---------------------------------------------------------------------------
# Campaign-level statistical properties
# ---------------------------------------------------------------------------

def test_criterion_05_np_dominance(out_root):
    cfg = shipped("ml12", out_root)
    records, curves, seconds = run(cfg)
    bad = []
    worst = np.inf
    for p in cfg.prediction_lengths:
        scored = {k: c for (k, q), c in curves.items() if q == p and k != "decode_based"}
        rep = dominance_report(scored, "np_exact")
        bad += [(p,) + v for v in rep.violations if v[0] in ("llr_mean", "subcode", "mi_full", "mi_valid")]
        grid = np.asarray(ALPHA_GRID)
        ref = scored["np_exact"]
        for kind in ("llr_mean", "subcode", "mi_full", "mi_valid"):
            tol = 3 * np.hypot(ref.se_beta_at(grid), scored[kind].se_beta_at(grid))
            margin = scored[kind].beta_at(grid) + tol - ref.beta_at(grid)
            worst = min(worst, float(margin.min()))
    n_fail = sum(r["outcome"] == "N" for r in records)
    ok = not bad and seconds < 600
    record(5, ok, f"{len(records)} trials ({n_fail} undecodable), {len(bad)} grid violations, "
                  f"smallest margin beta_X + 3 se - beta_np = {worst:.3g}; budget 600 s", seconds)
    assert not bad, bad
    assert seconds < 600


def test_criterion_06_decode_point_on_np_curve(out_root):
    cfg = shipped("ml12_full", out_root)
    records, curves, seconds = run(cfg)
    p = cfg.prediction_lengths[0]
    vals, ok_ = campaign.statistic_values(records, "decode_based", p)
    a, b, sa, sb = binary_test_point(vals, ok_)
    np_curve = curves[("np_exact", p)]
    d_beta = b - float(np_curve.beta_at(a)[0])
    tol_beta = 3 * np.hypot(sb, float(np_curve.se_beta_at(a)[0]))
    # alpha gap: where the curve reaches the point's beta
    grid = np.linspace(0, 1, 200001)
    reach = grid[np.flatnonzero(np_curve.beta_at(grid) <= b)[0]]
    d_alpha = a - reach
    tol_alpha = 3 * np.hypot(sa, float(binomial_se(reach, np_curve.n_success)))
    ok = abs(d_beta) <= tol_beta and abs(d_alpha) <= tol_alpha and seconds < 300
    record(6, ok, f"point ({a:.4g}, {b:.4g}); d_alpha {d_alpha:.3g} (tol {tol_alpha:.3g}), "
                  f"d_beta {d_beta:.3g} (tol {tol_beta:.3g}); budget 300 s", seconds)
    assert abs(d_beta) <= tol_beta and abs(d_alpha) <= tol_alpha
    assert seconds < 300


def test_criterion_07_mi_full_matches_np_without_crc(out_root):
    cfg = shipped("ml12_nocrc", out_root)
    records, curves, seconds = run(cfg)
    p = cfg.prediction_lengths[0]
    mi, ref = curves[("mi_full", p)], curves[("np_exact", p)]
    grid = np.unique(np.concatenate([mi.alpha, ref.alpha]))
    gap = np.abs(mi.beta_at(grid) - ref.beta_at(grid))
    envelope = 3 * np.hypot(mi.se_beta_at(grid), ref.se_beta_at(grid))
    excess = float(np.max(gap - envelope))
    sup = sup_distance(mi, ref)
    ok = excess <= 0 and seconds < 300
    record(7, ok, f"sup-distance {sup:.3g}, largest excess over 3 se envelope {excess:.3g}; "
                  f"budget 300 s", seconds)
    assert excess <= 0
    assert seconds < 300


def test_criterion_09_kde_fidelity(out_root):
    """Tiny ML-decoded [8, 3] code where the exact density ratio is computable."""
    code = verify.random_code(8, 3, 5, min_distance=3)
    work = os.path.join(out_root, "kde")
    os.makedirs(work, exist_ok=True)
    path = os.path.join(work, "code.alist")
    alist.write(path, code.parity)
    cfg = cfgmod.from_dict({
        "code": {"alist": path},
        "crc": None,
        "channel": {"snr_db": -3.0},
        "decoder": {"family": "ml"},
        "prediction_lengths": [5],
        "predictors": ["np_exact", "np_kde"],
        "trial_count": 10000,
        "master_seed": 9,
        "oracle": {"qmc_points": 1024, "p_success_samples": 100000},
        "kde": {"mode": "regression", "training_trials": 100000, "max_points": 100000},
        "chunk_size": 500,
        "output_dir": work,
    }).validate()
    records, curves, seconds = run(cfg)
    sup = sup_distance(curves[("np_kde", 5)], curves[("np_exact", 5)])
    ok = sup <= 0.05 and seconds < 600
    record(9, ok, f"sup-distance {sup:.4f} (limit 0.05) with 1e5 training samples, "
                  f"{len(records)} test trials; budget 600 s", seconds)
    assert sup <= 0.05
    assert seconds < 600


def test_criterion_11_determinism(tmp_path):
    with resources.as_file(resources.files("harqnp") / "configs" / "determinism.yaml") as cfg_path:
        start = time.perf_counter()
        outs = []
        for threads in (1, 8):
            out = tmp_path / f"t{threads}"
            proc = subprocess.run([sys.executable, "-m", "harqnp.cli", "simulate", "--config",
                                   str(cfg_path), "--threads", str(threads), "--out", str(out)],
                                  capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outs.append((out / "records.ndjson").read_bytes())
        seconds = time.perf_counter() - start
    same = outs[0] == outs[1]
    n = outs[0].count(b"\n")
    ok = same and seconds < 300
    record(11, ok, f"{n} records, 1 vs 8 workers {'identical' if same else 'DIFFER'}; "
                   f"budget 300 s", seconds)
    assert same
    assert seconds < 300


# ---------------------------------------------------------------------------
# Figure campaigns at n = 24
# ---------------------------------------------------------------------------

def _figure_checks(name, records, curves, cfg):
    """Part (c) for one campaign: beta at the longer prefix never worse beyond 3 se."""
    p_short, p_long = sorted(cfg.prediction_lengths)
    grid = np.asarray(ALPHA_GRID)
    worse = []
    for kind in {k for k, _ in curves if k != "decode_based"}:
        short, long = curves[(kind, p_short)], curves[(kind, p_long)]
        tol = 3 * np.hypot(short.se_beta_at(grid), long.se_beta_at(grid))
        gap = long.beta_at(grid) - short.beta_at(grid)
        worse += [(name, kind, float(a)) for a, g, t in zip(grid, gap, tol) if g > t]
    return worse


@pytest.mark.slow
def test_criterion_10_figures(out_root):
    timings = {}
    data = {}
    for name in ("fig2", "fig3", "fig4"):
        cfg = shipped(name, out_root)
        records, curves, seconds = run(cfg)
        timings[name] = seconds
        data[name] = (cfg, records, curves)
        points = {}
        for p in cfg.prediction_lengths:
            vals, ok_ = campaign.statistic_values(records, "decode_based", p)
            a, b, _, _ = binary_test_point(vals, ok_)
            points[("decode_based", p)] = (a, b)
        plot_curves({k: (c.alpha, c.beta) for k, c in curves.items() if k[0] != "decode_based"},
                    os.path.join(cfg.output_dir, "fig.svg"), points, title=name)
    details, failures = [], []

    # (a) ranking under ML decoding, gaps averaged over alpha in [0.01, 0.1]
    cfg, records, curves = data["fig2"]
    for p in cfg.prediction_lengths:
        scored = {k: c for (k, q), c in curves.items() if q == p and k != "decode_based"}
        gaps = dominance_report(scored, "np_exact").mean_gaps
        ok_a = gaps["mi_valid"] < gaps["subcode"] and max(gaps, key=gaps.get) == "llr_mean"
        details.append(f"(a) p={p} gaps " + ", ".join(f"{k} {gaps[k]:.3g}" for k in sorted(gaps, key=gaps.get)))
        if not ok_a:
            failures.append(f"(a) p={p}")

    # (b) bounded-distance decoding: decode-based point is a vertex of the
    # quantized density-ratio curve, which has at most t + 2 levels
    cfg, records, curves = data["fig3"]
    t = cfg.decoder.t
    for p in cfg.prediction_lengths:
        vals, ok_ = campaign.statistic_values(records, "decode_based", p)
        a, b, _, _ = binary_test_point(vals, ok_)
        quant, _ = campaign.statistic_values(records, "np_quant", p)
        levels = np.unique(quant).size
        curve = curves[("np_quant", p)]
        on_vertex = any(abs(a - x) < 1e-12 and abs(b - y) < 1e-12 for x, y in curve.points)
        linear_pieces = len(curve.points) - 1
        soft_gap = b - float(curves[("np_exact", p)].beta_at(a)[0])
        details.append(f"(b) p={p} point ({a:.4g}, {b:.4g}) vertex {on_vertex}, {levels} levels, "
                       f"{linear_pieces} linear pieces, beta above soft-decision curve {soft_gap:.3g}")
        if not (on_vertex and levels <= t + 2):
            failures.append(f"(b) p={p}")

    # (c) longer prefixes never worse, every predictor and decoder
    worse = []
    for name, (cfg, records, curves) in data.items():
        worse += _figure_checks(name, records, curves, cfg)
    pairs = sorted({(name, kind) for name, kind, _ in worse})
    details.append(f"(c) {len(worse)} grid points where p=21 is worse beyond 3 se"
                   + (" in " + ", ".join(f"{n}/{k}" for n, k in pairs) if pairs else ""))
    if worse:
        failures.append(f"(c) {worse}")

    total = sum(timings.values())
    details.append("timings " + ", ".join(f"{k} {v:.0f} s" for k, v in timings.items()))
    ok = not failures and total < 7200
    record(10, ok, "; ".join(details) + "; budget 7200 s", total)
    assert not failures, failures
    assert total < 7200


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    print("\n".join(result_lines()))
    sys.exit(code)
