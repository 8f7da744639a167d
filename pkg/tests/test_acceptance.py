"""Acceptance suite: one test per exit criterion, each printing a
pass/fail line (run with ``pytest -s tests/test_acceptance.py`` to see
them).  Tolerances are pinned here and nowhere else."""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from fieldnorm.bootstrap import (
    BootstrapSpec,
    comparison_suite,
    summarize_comparisons,
)
from fieldnorm.cli import main as cli_main
from fieldnorm.corpus import WORLD, ArticleSet, Corpus, FieldYearKey
from fieldnorm.indicators import (
    EMNPC,
    LUNDBERG_Z,
    MNCS,
    MNLCS,
    MNPC,
    PROP_CITED,
    ProportionSummary,
    compute_baseline,
    emnpc,
    mnlcs,
    mnpc,
    normalize_log,
)
from fieldnorm.intervals import (
    IntervalEstimate,
    SampleMoments,
    fieller_ci,
    heuristic_expanded_ci,
    mnlcs_normal_ci,
    mnpc_combined_ci,
    mnpc_field_ci,
    risk_ratio_ci,
    t_critical,
    wilson_ci,
)
from fieldnorm.scopes import indicator_value
from fieldnorm.synthetic import LognormalSpec, generate_cell, scenario_grid

from conftest import GROUP_A, GROUP_B, KEY_A, KEY_B, WORLD_A, WORLD_B, make_cell

# Monte-Carlo population log-mean for mu=1, sigma=1 (see test_synthetic).
POP_LOG_MEAN = 1.06697


def _check(num: int, name: str, ok: bool, detail: str = "") -> None:
    print(f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {name}  {detail}")
    assert ok, f"criterion {num} failed: {name} {detail}"


def _summaries(group, spec):
    return [
        ProportionSummary(group, FieldYearKey(f, 2013), cited, total)
        for f, cited, total in spec
    ]


def test_criterion_01_mnlcs_golden_values():
    start = time.time()
    baseline_a = compute_baseline(ArticleSet(WORLD, KEY_A, WORLD_A))
    baseline_b = compute_baseline(ArticleSet(WORLD, KEY_B, WORLD_B))
    scores_a = normalize_log(ArticleSet("G", KEY_A, GROUP_A), baseline_a)
    scores_b = normalize_log(ArticleSet("G", KEY_B, GROUP_B), baseline_b)
    world_scores = [
        normalize_log(ArticleSet(WORLD, KEY_A, WORLD_A), baseline_a),
        normalize_log(ArticleSet(WORLD, KEY_B, WORLD_B), baseline_b),
    ]
    values = {
        "baseline A": (round(baseline_a.log_mean, 2), 0.64),
        "baseline B": (round(baseline_b.log_mean, 2), 0.83),
        "field A": (round(mnlcs([scores_a]).estimate, 2), 1.31),
        "field B": (round(mnlcs([scores_b]).estimate, 2), 0.87),
        "combined": (round(mnlcs([scores_a, scores_b]).estimate, 2), 1.09),
        "world": (round(mnlcs(world_scores).estimate, 2), 1.00),
    }
    ok = all(got == want for got, want in values.values()) and time.time() - start < 1.0
    _check(1, "two-field worked example, log-ratio means", ok, str(values))


def test_criterion_02_proportion_golden_values():
    start = time.time()
    group = _summaries("G", [("A", 3, 5), ("B", 4, 5)])
    world = _summaries(WORLD, [("A", 5, 10), ("B", 8, 10)])
    low_group = _summaries("G", [("C", 8, 100), ("D", 10, 200)])
    low_world = _summaries(WORLD, [("C", 4, 100), ("D", 40, 200)])
    values = {
        "EMNPC": (round(emnpc(group, world).estimate, 2), 1.08),
        "MNPC": (round(mnpc(group, world).estimate, 2), 1.10),
        "EMNPC C/D": (round(emnpc(low_group, low_world).estimate, 3), 0.542),
        "MNPC C/D": (round(mnpc(low_group, low_world).estimate, 3), 0.833),
    }
    ok = all(got == want for got, want in values.values()) and time.time() - start < 1.0
    _check(2, "proportion-cited worked examples", ok, str(values))


def test_criterion_03_equalisation_property():
    from fieldnorm.indicators import equalised_proportion, proportion_cited

    group_a = _summaries("A", [("MED", 160, 200), ("HUM", 20, 100)])
    group_b = _summaries("B", [("MED", 80, 100), ("HUM", 40, 200)])
    world = _summaries(WORLD, [("MED", 800, 1000), ("HUM", 200, 1000)])
    raw_a = proportion_cited(group_a).estimate
    raw_b = proportion_cited(group_b).estimate
    eq_a = equalised_proportion(group_a)[0].estimate
    eq_b = equalised_proportion(group_b)[0].estimate
    em_a = emnpc(group_a, world).estimate
    em_b = emnpc(group_b, world).estimate
    ok = (
        round(raw_a, 2) == 0.60
        and round(raw_b, 2) == 0.40
        and eq_a == pytest.approx(0.50, abs=1e-12)
        and eq_b == pytest.approx(0.50, abs=1e-12)
        and em_a == pytest.approx(em_b, abs=1e-12)
    )
    _check(3, "equalisation removes field-mix advantage",
           ok, f"raw=({raw_a:.2f},{raw_b:.2f}) eq=({eq_a},{eq_b})")


def test_criterion_04_fairness_contrast():
    world = _summaries(WORLD, [("X", 800, 1000), ("Y", 200, 1000)])
    group_a = _summaries("A", [("X", 88, 100), ("Y", 18, 100)])
    group_b = _summaries("B", [("X", 72, 100), ("Y", 22, 100)])
    em_a, em_b = emnpc(group_a, world).estimate, emnpc(group_b, world).estimate
    mn_a, mn_b = mnpc(group_a, world).estimate, mnpc(group_b, world).estimate
    ok = (
        round(em_a, 2) == 1.06
        and round(em_b, 2) == 0.94
        and round(mn_a, 2) == 1.00
        and round(mn_b, 2) == 1.00
    )
    _check(4, "ratio-of-sums vs sum-of-ratios fairness contrast",
           ok, f"EMNPC=({em_a:.3f},{em_b:.3f}) MNPC=({mn_a:.3f},{mn_b:.3f})")


def test_criterion_05_world_identity():
    corpora = scenario_grid(
        [0.6, 0.9, 1.2, 1.5, 1.8], [0.8, 1.1], [0.0, 0.25, 0.5, 0.35, 0.1], [250],
        group_shifts=[0.15], base_seed=17,
    )
    corpora = corpora[:50]
    assert len(corpora) == 50
    worst = 0.0
    for corpus in corpora:
        keys = corpus.keys_for(WORLD)
        for indicator, target in [
            (MNLCS, 1.0), (MNCS, 1.0), (EMNPC, 1.0), (MNPC, 1.0), (LUNDBERG_Z, 0.0),
        ]:
            value = indicator_value(corpus, WORLD, keys, indicator)
            worst = max(worst, abs(value.estimate - target))
    _check(5, "world self-normalisation identity over 50 corpora",
           worst <= 1e-9, f"worst deviation {worst:.2e}")


def test_criterion_06_formula_fidelity_grid():
    start = time.time()
    scenarios = scenario_grid(
        [0.5, 1.0, 1.5, 2.0], [0.7, 1.0, 1.3], [0.0, 0.05, 0.1, 0.2], [1000],
        group_shifts=[0.0], base_seed=20250810,
    )
    assert len(scenarios) == 48
    spec = BootstrapSpec(iterations=1000, seed=99, resample_world=False)
    rows = comparison_suite(scenarios, [MNLCS, MNCS], spec)
    summary = {s.label: s for s in summarize_comparisons(rows)}
    log_s, raw_s = summary[MNLCS], summary[MNCS]
    elapsed = time.time() - start
    ok = (
        log_s.gaps == 0
        and log_s.lower_abs_mean <= 0.10
        and log_s.upper_abs_mean <= 0.10
        and log_s.lower_max_abs <= 0.25
        and log_s.upper_max_abs <= 0.25
        and raw_s.lower_abs_mean > log_s.lower_abs_mean
        and raw_s.upper_abs_mean > log_s.upper_abs_mean
        and elapsed < 300
    )
    _check(
        6, "48-cell lognormal grid: formula tracks bootstrap after log transform", ok,
        f"log abs=({log_s.lower_abs_mean:.3f},{log_s.upper_abs_mean:.3f}) "
        f"max=({log_s.lower_max_abs:.3f},{log_s.upper_max_abs:.3f}) "
        f"raw abs=({raw_s.lower_abs_mean:.3f},{raw_s.upper_abs_mean:.3f}) [{elapsed:.0f}s]",
    )


def test_criterion_07_sparse_breakdown_signature():
    scenarios = scenario_grid(
        [1.0, 1.5, 2.0], [1.0, 1.3], [0.97, 0.98, 0.99], [500],
        group_shifts=[0.0], base_seed=11,
    )
    spec = BootstrapSpec(iterations=1000, seed=3, resample_world=False)
    rows = comparison_suite(scenarios, [MNLCS], spec)
    summary = summarize_comparisons(rows)[0]
    # The symmetric formula overshoots below and falls short above the
    # right-skewed bootstrap distribution.  In formula-minus-bootstrap
    # terms (the convention of the source comparison tables) the lower
    # side is positive and the upper side negative; compare_ci reports
    # bootstrap-minus-formula, so the signs flip here.
    formula_minus_boot_lower = -summary.lower_mean
    formula_minus_boot_upper = -summary.upper_mean
    ok = formula_minus_boot_lower > 0 and formula_minus_boot_upper < 0
    _check(
        7, "zero-inflated cells: systematic one-sided formula bias", ok,
        f"formula-minus-bootstrap averages: lower {formula_minus_boot_lower:+.3f}, "
        f"upper {formula_minus_boot_upper:+.3f} over {summary.cells - summary.gaps} cells",
    )


def test_criterion_08_fragility_contrast():
    one_dead_cell = Corpus.from_cells(
        [
            make_cell("G", "A", 2013, [1, 0, 2]),
            make_cell("G", "B", 2013, [2, 1, 0]),
            make_cell(WORLD, "A", 2013, [0, 0, 0, 0]),
            make_cell(WORLD, "B", 2013, [1, 0, 1, 2]),
        ]
    )
    keys = one_dead_cell.keys_for("G")
    mnpc_value = indicator_value(one_dead_cell, "G", keys, MNPC)
    emnpc_value = indicator_value(one_dead_cell, "G", keys, EMNPC)

    all_dead = Corpus.from_cells(
        [
            make_cell("G", "A", 2013, [1, 0, 2]),
            make_cell("G", "B", 2013, [2, 1, 0]),
            make_cell(WORLD, "A", 2013, [0, 0, 0, 0]),
            make_cell(WORLD, "B", 2013, [0, 0, 0, 0]),
        ]
    )
    keys2 = all_dead.keys_for("G")
    mnpc_dead = indicator_value(all_dead, "G", keys2, MNPC)
    emnpc_dead = indicator_value(all_dead, "G", keys2, EMNPC)
    ok = (
        not mnpc_value.defined
        and emnpc_value.defined
        and not mnpc_dead.defined
        and not emnpc_dead.defined
    )
    _check(
        8, "one dead world cell breaks the sum of ratios, not the ratio of sums", ok,
        f"MNPC defined={mnpc_value.defined} EMNPC defined={emnpc_value.defined}; "
        f"all-zero world: MNPC={mnpc_dead.defined} EMNPC={emnpc_dead.defined}",
    )


def test_criterion_09_fieller_behaviour():
    t = t_critical(398, 0.05)
    unstable_world = SampleMoments(1.0, 1.2 / t * math.sqrt(200), 1.2 / t, 200)
    group = SampleMoments(1.1, 0.4, 0.4 / math.sqrt(200), 200)
    undefined = fieller_ci(group, unstable_world, 0.05)

    tiny = SampleMoments(0.8, 1e-12 * math.sqrt(400), 1e-12, 400)
    group2 = SampleMoments(1.0, 0.4, 0.4 / math.sqrt(400), 400)
    nearly_exact = fieller_ci(group2, tiny, 0.05)
    t2 = t_critical(798, 0.05)
    scaled_lower = (group2.mean - t2 * group2.se) / tiny.mean
    scaled_upper = (group2.mean + t2 * group2.se) / tiny.mean
    rel_width_err = abs(nearly_exact.width - (scaled_upper - scaled_lower)) / (
        scaled_upper - scaled_lower
    )
    ok = (not undefined.defined) and undefined.h > 1.0 and rel_width_err < 1e-3
    _check(
        9, "ratio interval: undefined beyond h=1, scaled-normal limit at tiny world se",
        ok, f"h={undefined.h:.2f}, relative width error {rel_width_err:.2e}",
    )


def test_criterion_10_coverage():
    start = time.time()
    key = FieldYearKey("F", 2000)
    covered = 0
    runs = 1000
    for run in range(runs):
        cell = generate_cell(LognormalSpec(1.0, 1.0, 0.0, 1000, seed=100000 + run), key, "G")
        scores = np.log1p(cell.counts_array()) / POP_LOG_MEAN
        ci = mnlcs_normal_ci(scores, 0.05)
        covered += ci.lower <= 1.0 <= ci.upper
    rate = covered / runs
    elapsed = time.time() - start
    ok = 0.93 <= rate <= 0.97 and elapsed < 120
    _check(10, "95% normal-theory interval coverage on lognormal counts",
           ok, f"coverage {rate:.3f} over {runs} runs [{elapsed:.0f}s]")


def test_criterion_11_interval_sanity_sweep():
    rng = np.random.default_rng(2718)
    calls = 10_000
    violations = []

    def ordered(ci: IntervalEstimate) -> bool:
        return (not ci.defined) or ci.lower <= ci.upper

    for _ in range(calls):
        values = rng.normal(rng.uniform(-2, 2), rng.uniform(0.01, 2), rng.integers(2, 40))
        ci = mnlcs_normal_ci(values, rng.uniform(0.01, 0.2))
        if not (ordered(ci) and ci.lower <= ci.estimate <= ci.upper):
            violations.append(("normal", ci))

    for _ in range(calls):
        g = SampleMoments(
            rng.uniform(0.05, 3), 0.0, rng.uniform(0.001, 0.5), int(rng.integers(2, 500))
        )
        w = SampleMoments(
            rng.uniform(0.05, 3), 0.0, rng.uniform(0.001, 0.5), int(rng.integers(2, 500))
        )
        if not ordered(fieller_ci(g, w, rng.uniform(0.01, 0.2))):
            violations.append(("fieller", (g, w)))

    for _ in range(calls):
        alpha = rng.uniform(0.01, 0.2)
        cells, all_values = [], []
        for _ in range(int(rng.integers(1, 4))):
            n = int(rng.integers(5, 60))
            values = rng.normal(rng.uniform(0.5, 2), rng.uniform(0.05, 0.8), n)
            normal = mnlcs_normal_ci(values, alpha)
            g = SampleMoments.from_values(values)
            w = SampleMoments(
                rng.uniform(0.5, 2), 0.0, rng.uniform(0.001, 0.3), int(rng.integers(2, 400))
            )
            cells.append((n, normal, fieller_ci(g, w, alpha), float(values.mean())))
            all_values.append(values)
        if any(not f.defined for _, _, f, _ in cells):
            continue
        combined_values = np.concatenate(all_values)
        combined = mnlcs_normal_ci(combined_values, alpha)
        mode = "literal" if rng.random() < 0.5 else "expand_from_mean"
        ci = heuristic_expanded_ci(cells, combined, float(combined_values.mean()), mode)
        if not ordered(ci):
            violations.append(("heuristic", ci))

    for _ in range(calls):
        total = int(rng.integers(1, 2000))
        cited = int(rng.integers(0, total + 1))
        ci = wilson_ci(cited, total, rng.uniform(0.01, 0.2))
        if not (0.0 <= ci.lower <= ci.upper <= 1.0 and ci.lower <= ci.estimate <= ci.upper):
            violations.append(("wilson", ci))

    worst_asym = 0.0
    for _ in range(calls):
        n_g, n_w = int(rng.integers(1, 1000)), int(rng.integers(1, 1000))
        s_g, s_w = int(rng.integers(0, n_g + 1)), int(rng.integers(0, n_w + 1))
        continuity = bool(rng.random() < 0.5)
        alpha = rng.uniform(0.01, 0.2)
        ci = risk_ratio_ci((s_g, n_g), (s_w, n_w), alpha, continuity)
        if not ordered(ci):
            violations.append(("risk_ratio", ci))
        if ci.defined and not continuity:
            asym = abs(
                (math.log(ci.upper) - math.log(ci.estimate))
                - (math.log(ci.estimate) - math.log(ci.lower))
            )
            worst_asym = max(worst_asym, asym)
        field = mnpc_field_ci((s_g, n_g), (s_w, n_w), alpha, continuity)
        if not ordered(field):
            violations.append(("mnpc_field", field))

    for _ in range(calls):
        k = int(rng.integers(1, 5))
        weights = rng.dirichlet(np.ones(k))
        per_field, mnpc_val = [], 0.0
        alpha = rng.uniform(0.01, 0.2)
        defined = True
        for w_i in weights:
            n_g, n_w = int(rng.integers(2, 500)), int(rng.integers(2, 500))
            s_g, s_w = int(rng.integers(1, n_g + 1)), int(rng.integers(1, n_w + 1))
            field = mnpc_field_ci((s_g, n_g), (s_w, n_w), alpha)
            ratio = (s_g / n_g) / (s_w / n_w)
            defined = defined and field.defined
            per_field.append((float(w_i), ratio, field))
            mnpc_val += w_i * ratio
        if not defined:
            continue
        ci = mnpc_combined_ci(per_field, float(mnpc_val))
        if not (ordered(ci) and ci.lower <= ci.estimate <= ci.upper):
            violations.append(("mnpc_combined", ci))

    ok = not violations and worst_asym <= 1e-12
    _check(11, "randomized interval sanity sweep (1e4 calls per operation)",
           ok, f"violations={len(violations)} worst log-asymmetry {worst_asym:.1e}")


def test_criterion_12_end_to_end_determinism(tmp_path):
    def pipeline(root):
        sim = root / "sim"
        assert cli_main([
            "simulate", "--output-dir", str(sim), "--mu", "1.2", "--sigma", "1.0",
            "--zero-inflation", "0.1", "--n", "300", "--group-shift", "0.2",
            "--seed", "99",
        ]) == 0
        scenario_dir = next(p for p in sorted(sim.iterdir()) if p.is_dir())
        sampled = root / "sampled"
        assert cli_main([
            "sample", "--input-dir", str(scenario_dir), "--output-dir", str(sampled),
            "--size", "150", "--seed", "99",
        ]) == 0
        out = root / "report.csv"
        assert cli_main([
            "compute", "--input-dir", str(sampled), "--output", str(out),
            "--indicators", "mnlcs,mncs,lundberg,emnpc,mnpc,prop",
            "--ci", "all", "--seed", "99", "--bootstrap-iters", "150",
        ]) == 0
        return root

    import shutil

    root = tmp_path / "run"
    pipeline(root)
    snapshot = {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*")) if p.is_file()
    }
    shutil.rmtree(root)
    pipeline(root)
    mismatches = [
        rel for rel, data in snapshot.items() if (root / rel).read_bytes() != data
    ]
    report_rows = snapshot["report.csv"].decode().count("\n") - 1
    ok = not mismatches and report_rows > 0
    _check(12, "simulate -> sample -> compute rerun is byte-identical",
           ok, f"{report_rows} report rows, mismatches={mismatches}")
