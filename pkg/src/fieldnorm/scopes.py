"""Assembly of indicator values and intervals over a scope of cells.

A scope is a set of field/year keys for one group.  These helpers gather
the per-cell scores or proportion summaries, compute the point estimate as
a flagged value (never raising for data-dependent degeneracies), and attach
whichever analytic interval belongs to the indicator.
"""

from __future__ import annotations

import numpy as np

from .corpus import WORLD, Corpus, FieldYearKey
from .indicators import (
    EMNPC,
    EQ_PROP_CITED,
    LUNDBERG_Z,
    MEAN_INDICATORS,
    MNCS,
    MNLCS,
    MNPC,
    PROP_CITED,
    IndicatorValue,
    NormalizedScores,
    ProportionSummary,
    UndefinedNormalizationError,
    compute_baseline,
    emnpc,
    equalised_proportion,
    mnlcs,
    mnpc,
    normalize_log,
    normalize_lundberg,
    normalize_raw,
    proportion_cited,
)
from .intervals import (
    FIELLER,
    HEURISTIC_EXPANSION,
    LITERAL,
    MNPC_WEIGHTED,
    NORMAL_T,
    RISK_RATIO,
    WILSON,
    IntervalEstimate,
    SampleMoments,
    fieller_ci,
    heuristic_expanded_ci,
    mnlcs_normal_ci,
    mnpc_combined_ci,
    mnpc_field_ci,
    risk_ratio_ci,
    wilson_ci,
)

_TRANSFORMS = {MNLCS: normalize_log, MNCS: normalize_raw, LUNDBERG_Z: normalize_lundberg}

# Analytic method attached to each indicator by the formula route.
FORMULA_METHOD = {
    MNLCS: NORMAL_T,
    MNCS: NORMAL_T,
    LUNDBERG_Z: NORMAL_T,
    EMNPC: RISK_RATIO,
    MNPC: MNPC_WEIGHTED,
    PROP_CITED: WILSON,
    EQ_PROP_CITED: WILSON,
}

CONTINUITY_MODES = ("auto", "on", "off")


def collect_scores(
    corpus: Corpus, group: str, keys: set[FieldYearKey], indicator: str
) -> list[NormalizedScores]:
    """Per-cell normalised scores for a mean-type indicator, sorted by key."""
    normalize = _TRANSFORMS[indicator]
    scores = []
    for key in sorted(keys):
        baseline = compute_baseline(corpus.world(key))
        scores.append(normalize(corpus.cell(group, key), baseline))
    return scores


def collect_proportions(
    corpus: Corpus, group: str, keys: set[FieldYearKey]
) -> list[ProportionSummary]:
    return [ProportionSummary.from_articles(corpus.cell(group, k)) for k in sorted(keys)]


def indicator_value(
    corpus: Corpus, group: str, keys: set[FieldYearKey], indicator: str
) -> IndicatorValue:
    """Point estimate over a scope, flagged rather than raised when undefined."""
    if not keys:
        raise ValueError("empty scope")
    if indicator in MEAN_INDICATORS:
        try:
            return mnlcs(collect_scores(corpus, group, keys, indicator))
        except UndefinedNormalizationError as exc:
            return IndicatorValue(
                group, frozenset(keys), indicator, None, defined=False, note=str(exc)
            )
    group_sets = collect_proportions(corpus, group, keys)
    if indicator == PROP_CITED:
        return proportion_cited(group_sets)
    if indicator == EQ_PROP_CITED:
        return equalised_proportion(group_sets)[0]
    world_sets = collect_proportions(corpus, WORLD, keys)
    if indicator == EMNPC:
        return emnpc(group_sets, world_sets)
    if indicator == MNPC:
        return mnpc(group_sets, world_sets)
    raise ValueError(f"unknown indicator {indicator!r}")


def resolve_continuity(
    mode: str,
    group_sets: list[ProportionSummary],
    world_sets: list[ProportionSummary],
) -> bool:
    """'auto' switches the correction on once any cell's cited count drops below 5."""
    if mode not in CONTINUITY_MODES:
        raise ValueError(f"unknown continuity mode {mode!r}")
    if mode == "auto":
        return any(s.cited < 5 for s in group_sets + world_sets)
    return mode == "on"


def _undefined(method: str, alpha: float, note: str) -> IntervalEstimate:
    return IntervalEstimate(
        estimate=None, lower=None, upper=None, alpha=alpha, method=method,
        defined=False, note=note,
    )


def formula_interval(
    corpus: Corpus,
    group: str,
    keys: set[FieldYearKey],
    indicator: str,
    alpha: float = 0.05,
    continuity: str = "auto",
) -> IntervalEstimate:
    """The analytic interval belonging to ``indicator`` over the scope."""
    if indicator in MEAN_INDICATORS:
        try:
            scores = collect_scores(corpus, group, keys, indicator)
        except UndefinedNormalizationError as exc:
            return _undefined(NORMAL_T, alpha, str(exc))
        values = np.concatenate([s.values for s in scores])
        if len(values) < 2:
            return _undefined(NORMAL_T, alpha, "fewer than two articles in scope")
        return mnlcs_normal_ci(values, alpha)

    group_sets = collect_proportions(corpus, group, keys)
    if indicator == PROP_CITED:
        return wilson_ci(sum(s.cited for s in group_sets), sum(s.total for s in group_sets), alpha)
    if indicator == EQ_PROP_CITED:
        value, _ = equalised_proportion(group_sets)
        total = sum(s.total for s in group_sets)
        return wilson_ci(round(value.estimate * total), total, alpha)

    world_sets = collect_proportions(corpus, WORLD, keys)
    correct = resolve_continuity(continuity, group_sets, world_sets)
    if indicator == EMNPC:
        p_g = sum(s.proportion for s in group_sets) / len(group_sets)
        p_w = sum(s.proportion for s in world_sets) / len(world_sets)
        n_g = sum(s.total for s in group_sets)
        n_w = sum(s.total for s in world_sets)
        return risk_ratio_ci((p_g * n_g, n_g), (p_w * n_w, n_w), alpha, correct)
    if indicator == MNPC:
        n_group = sum(s.total for s in group_sets)
        per_field = []
        for g, w in zip(group_sets, world_sets):
            cell = mnpc_field_ci((g.cited, g.total), (w.cited, w.total), alpha, correct)
            if not cell.defined:
                return _undefined(MNPC_WEIGHTED, alpha, f"{cell.note} for {g.key}")
            per_field.append((g.total / n_group, g.proportion / w.proportion, cell))
        point = mnpc(group_sets, world_sets)
        if not point.defined:
            return _undefined(MNPC_WEIGHTED, alpha, point.note)
        return mnpc_combined_ci(per_field, point.estimate)
    raise ValueError(f"no formula interval for indicator {indicator!r}")


def _log_moments(corpus: Corpus, group: str, key: FieldYearKey) -> SampleMoments:
    return SampleMoments.from_values(np.log1p(corpus.cell(group, key).counts_array()))


def fieller_interval(
    corpus: Corpus,
    group: str,
    keys: set[FieldYearKey],
    alpha: float = 0.05,
    expansion_mode: str = LITERAL,
) -> IntervalEstimate:
    """Fieller limits for one cell, heuristic expansion across several.

    Only defined for the log-ratio indicator; the moments entering the
    ratio are those of the ln(1+c) values.
    """
    method = FIELLER if len(keys) == 1 else HEURISTIC_EXPANSION
    try:
        scores = collect_scores(corpus, group, keys, MNLCS)
        if len(keys) == 1:
            key = next(iter(keys))
            return fieller_ci(_log_moments(corpus, group, key), _log_moments(corpus, WORLD, key), alpha)
        per_cell = []
        for s in scores:
            cell_normal = mnlcs_normal_ci(s.values, alpha)
            cell_fieller = fieller_ci(
                _log_moments(corpus, group, s.key), _log_moments(corpus, WORLD, s.key), alpha
            )
            per_cell.append((len(s.values), cell_normal, cell_fieller, float(s.values.mean())))
        values = np.concatenate([s.values for s in scores])
        combined = mnlcs_normal_ci(values, alpha)
        return heuristic_expanded_ci(per_cell, combined, float(values.mean()), expansion_mode)
    except (UndefinedNormalizationError, ValueError) as exc:
        return _undefined(method, alpha, str(exc))
