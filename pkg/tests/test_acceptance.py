"""Acceptance gate: every primary criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS/FAIL line
per criterion. The heavy playground criteria share one seeded 20-image
64x64 synthetic suite and split work over two processes.
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner

from probattn.adaptation import AdaptationConfig
from probattn.cli import main as cli_main
from probattn.playground import evaluate_curve, generate_dataset, load_manifest
from probattn.playground.features import FeatureConfig
from probattn.playground.session import PlaygroundConfig
from probattn.verify import (
    Sizes,
    suite_alpha_adaptation_formula,
    suite_axial_oracle,
    suite_beta_update_formula,
    suite_beta_zero_equivalence,
    suite_em_grid_oracle,
    suite_em_monotonicity,
    suite_key_adaptation_em_guarantee,
    suite_key_adaptation_formula,
    suite_pe_attention_oracle,
    suite_prior_update_formula,
    suite_value_propagation_em_guarantee,
    suite_value_propagation_formula,
)

SUITE_SEED = 31
SHIFT = (2.5, -2.0, 2.0, 0.0, 0.0)
JOBS = 2


def report(name, passed, detail):
    print(f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'} ({detail})")
    assert passed, f"{name}: {detail}"


def accept_cfg(key_iters=0, value_iters=5, shift=None):
    return PlaygroundConfig(
        feature=FeatureConfig(color_scale=10.0, coordinate_scale=2.0,
                              smoothing_radius=0.7),
        adaptation=AdaptationConfig(theta_xi=0.0, theta_mu=0.5,
                                    key_iters=key_iters,
                                    value_iters=value_iters),
        prior_sigma=6.0,
        click_radius=2,
        query_shift=shift,
    )


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance_suite")
    manifest = generate_dataset(20, 64, seed=SUITE_SEED, out_dir=out)
    return load_manifest(manifest)


def test_beta_zero_equivalence():
    t0 = time.perf_counter()
    result = suite_beta_zero_equivalence(seed=0, cases=100)
    elapsed = time.perf_counter() - t0
    report(
        "beta_zero_equivalence",
        result.passed and elapsed < 5.0,
        f"max sup-norm error {result.max_error:.2e} <= 1e-6 over 100 "
        f"instances in {elapsed:.2f}s (< 5s)",
    )


def test_em_monotonicity_group():
    t0 = time.perf_counter()
    trace = suite_em_monotonicity(seed=0, cases=1000)
    keys = suite_key_adaptation_em_guarantee(seed=0, cases=100)
    values = suite_value_propagation_em_guarantee(seed=0, cases=100)
    elapsed = time.perf_counter() - t0
    report(
        "em_monotonicity",
        trace.passed and keys.passed and values.passed and elapsed < 30.0,
        f"trace slack {trace.max_error:.2e} <= 1e-10 (1000 runs), key ascent "
        f"slack {keys.max_error:.2e} <= 1e-9 (100), value ascent slack "
        f"{values.max_error:.2e} <= 1e-9 (100), {elapsed:.1f}s (< 30s)",
    )


def test_grid_search_oracle():
    result = suite_em_grid_oracle(seed=0, cases=50)
    report(
        "grid_search_oracle",
        result.passed,
        f"max |fixed point - grid optimum| {result.max_error:.2e} <= 1e-3 "
        "over 50 scalar instances",
    )


def test_adaptation_formula_oracles():
    results = [
        suite_key_adaptation_formula(seed=0, cases=50),
        suite_alpha_adaptation_formula(seed=0, cases=50),
        suite_value_propagation_formula(seed=0, cases=50),
        suite_beta_update_formula(seed=0, cases=50),
        suite_prior_update_formula(seed=0, cases=50),
    ]
    worst = max(r.max_error for r in results)
    report(
        "adaptation_formula_oracles",
        all(r.passed for r in results),
        f"worst relative error {worst:.2e} <= 1e-9 across "
        f"{', '.join(r.name for r in results)} (50 instances each)",
    )


def test_position_embedding_oracles():
    pe = suite_pe_attention_oracle(seed=0, sizes=Sizes())
    ax = suite_axial_oracle(seed=0)
    report(
        "position_embedding_oracle",
        pe.passed and ax.passed,
        f"pairwise brute-force error {pe.max_error:.2e} <= 1e-9 "
        f"(1-D up to 16, 2-D up to 8x8), per-slice axial error "
        f"{ax.max_error:.2e} <= 1e-9",
    )


def test_value_propagation_dominates(suite):
    t0 = time.perf_counter()
    with_vp = evaluate_curve(suite, accept_cfg(value_iters=5), max_clicks=10,
                             trials=5, seed=2024, jobs=JOBS)
    without = evaluate_curve(suite, accept_cfg(value_iters=0), max_clicks=10,
                             trials=5, seed=2024, jobs=JOBS)
    elapsed = time.perf_counter() - t0
    margins = with_vp.mean_iou[1:] - without.mean_iou[1:]
    report(
        "value_propagation_dominates",
        bool(np.all(margins > 0)) and elapsed < 300.0,
        f"min margin {margins.min():+.4f} > 0 at clicks 1..10 "
        f"(5 trials, 20 images), {elapsed:.0f}s (< 300s)",
    )


def test_key_adaptation_recovers_domain_shift(suite):
    plain = evaluate_curve(suite, accept_cfg(key_iters=0, shift=SHIFT),
                           max_clicks=0, trials=5, seed=11, jobs=JOBS)
    adapted = evaluate_curve(suite, accept_cfg(key_iters=1, shift=SHIFT),
                             max_clicks=0, trials=5, seed=11, jobs=JOBS)
    gain = adapted.mean_iou[0] - plain.mean_iou[0]
    report(
        "key_adaptation_domain_shift",
        gain >= 0.05,
        f"mean IoU at 0 clicks {plain.mean_iou[0]:.3f} -> "
        f"{adapted.mean_iou[0]:.3f}, gain {gain:+.3f} >= +0.05 (5 trials)",
    )


def test_combined_regime_trend(suite):
    curves = {}
    for name, ka, vi in (("ka", 1, 0), ("vp", 0, 5), ("both", 1, 5)):
        result = evaluate_curve(
            suite, accept_cfg(key_iters=ka, value_iters=vi, shift=SHIFT),
            max_clicks=10, trials=5, seed=13, jobs=JOBS,
        )
        curves[name] = result.mean_iou
    ka, vp, both = curves["ka"], curves["vp"], curves["both"]
    early = ka[0] > vp[0]
    late = bool(np.all(vp[5:] > ka[5:]))
    dominated = both[0] >= max(ka[0], vp[0]) and both[10] >= max(ka[10], vp[10])
    report(
        "combined_regime_trend",
        early and late and dominated,
        f"at 0 clicks KA {ka[0]:.3f} > VP {vp[0]:.3f}; "
        f"VP-KA at clicks 5..10: {np.round(vp[5:] - ka[5:], 3).tolist()}; "
        f"KA+VP {both[0]:.3f}@0 / {both[10]:.3f}@10 dominates",
    )


def test_bench_determinism(tmp_path):
    runner = CliRunner()
    data_dir = tmp_path / "ds"
    result = runner.invoke(
        cli_main,
        ["gen-synth", "--count", "3", "--size", "64", "--seed", "21",
         "--out-dir", str(data_dir)],
    )
    assert result.exit_code == 0, result.output
    payloads = []
    for name in ("one.csv", "two.csv"):
        out = tmp_path / name
        result = runner.invoke(
            cli_main,
            ["bench", "--manifest", str(data_dir / "manifest.json"),
             "--max-clicks", "2", "--trials", "2", "--seed", "77",
             "--value-iters", "3", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        payloads.append(out.read_bytes())
    report(
        "bench_determinism",
        payloads[0] == payloads[1],
        "two cmd_bench runs with identical seeds produced byte-identical CSVs",
    )
