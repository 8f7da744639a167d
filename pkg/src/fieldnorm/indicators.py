"""Point estimates of the field/year-normalised indicators.

Mean-type indicators transform each article count c and average the result:

* MNLCS     ln(1+c) divided by the world mean of ln(1+c) for the cell
* MNCS      c divided by the world mean count for the cell
* Lundberg  (ln(1+c) - world log-mean) / world log-sd, a difference score

Proportion-type indicators compare shares of articles with c > 0:

* EMNPC     ratio of equalised (unweighted across cells) proportions cited
* MNPC      cell-size-weighted sum of per-cell proportion ratios

The world set scores exactly 1 against itself for every ratio indicator and
exactly 0 for the Lundberg variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import WORLD, ArticleSet, FieldYearKey

# Transform tags for per-article normalised scores.
LOG_RATIO = "log_ratio"
RAW_RATIO = "raw_ratio"
Z_SCORE = "z_score"
CITED_RECIPROCAL = "cited_reciprocal"

# Indicator tags.
MNLCS = "MNLCS"
MNCS = "MNCS"
LUNDBERG_Z = "LUNDBERG_Z"
EMNPC = "EMNPC"
MNPC = "MNPC"
PROP_CITED = "PROP_CITED"
EQ_PROP_CITED = "EQ_PROP_CITED"

MEAN_INDICATORS = (MNLCS, MNCS, LUNDBERG_Z)
PROPORTION_INDICATORS = (EMNPC, MNPC, PROP_CITED, EQ_PROP_CITED)

_TRANSFORM_INDICATOR = {LOG_RATIO: MNLCS, RAW_RATIO: MNCS, Z_SCORE: LUNDBERG_Z}


class UndefinedNormalizationError(ValueError):
    """Raised when a world baseline cannot support a transform."""


@dataclass(frozen=True)
class NormalizationBaseline:
    """Per-cell world statistics every indicator divides by.

    log_sd is None for single-article world cells, where the sample
    standard deviation does not exist.
    """

    key: FieldYearKey
    log_mean: float
    log_sd: float | None
    raw_mean: float
    prop_cited: float
    n_world: int


@dataclass(frozen=True)
class NormalizedScores:
    group: str
    key: FieldYearKey
    values: np.ndarray
    transform: str


@dataclass(frozen=True)
class ProportionSummary:
    """Cited/total counts of one cell (articles with value > 0 are 'cited')."""

    group: str
    key: FieldYearKey
    cited: int
    total: int

    def __post_init__(self) -> None:
        if not 0 <= self.cited <= self.total or self.total < 1:
            raise ValueError(f"invalid proportion summary {self.cited}/{self.total}")

    @property
    def proportion(self) -> float:
        return self.cited / self.total

    @classmethod
    def from_articles(cls, aset: ArticleSet) -> "ProportionSummary":
        counts = aset.counts_array()
        return cls(aset.group, aset.key, int(np.count_nonzero(counts)), len(counts))


@dataclass(frozen=True)
class IndicatorValue:
    group: str
    scope: frozenset[FieldYearKey]
    indicator: str
    estimate: float | None
    defined: bool = True
    note: str = ""


def compute_baseline(world: ArticleSet) -> NormalizationBaseline:
    """World-cell statistics: natural-log mean/sd, raw mean, proportion cited."""
    if world.group != WORLD:
        raise ValueError(f"baseline requires a {WORLD} cell, got group {world.group!r}")
    counts = world.counts_array()
    logs = np.log1p(counts)
    n = len(counts)
    return NormalizationBaseline(
        key=world.key,
        log_mean=float(logs.mean()),
        log_sd=float(logs.std(ddof=1)) if n > 1 else None,
        raw_mean=float(counts.mean()),
        prop_cited=float(np.count_nonzero(counts)) / n,
        n_world=n,
    )


def _check_key(aset: ArticleSet, baseline: NormalizationBaseline) -> None:
    if aset.key != baseline.key:
        raise ValueError(f"baseline key {baseline.key} does not match cell key {aset.key}")


def normalize_log(aset: ArticleSet, baseline: NormalizationBaseline) -> NormalizedScores:
    _check_key(aset, baseline)
    if baseline.log_mean <= 0.0:
        raise UndefinedNormalizationError(
            f"undefined normalisation: all world counts zero for {baseline.key}"
        )
    values = np.log1p(aset.counts_array()) / baseline.log_mean
    return NormalizedScores(aset.group, aset.key, values, LOG_RATIO)


def normalize_lundberg(aset: ArticleSet, baseline: NormalizationBaseline) -> NormalizedScores:
    _check_key(aset, baseline)
    if baseline.log_sd is None or baseline.log_sd <= 0.0:
        raise UndefinedNormalizationError(
            f"undefined standardisation: world log-sd is zero or undefined for {baseline.key}"
        )
    values = (np.log1p(aset.counts_array()) - baseline.log_mean) / baseline.log_sd
    return NormalizedScores(aset.group, aset.key, values, Z_SCORE)


def normalize_raw(aset: ArticleSet, baseline: NormalizationBaseline) -> NormalizedScores:
    _check_key(aset, baseline)
    if baseline.raw_mean <= 0.0:
        raise UndefinedNormalizationError(
            f"undefined normalisation: world mean count is zero for {baseline.key}"
        )
    values = aset.counts_array() / baseline.raw_mean
    return NormalizedScores(aset.group, aset.key, values, RAW_RATIO)


def normalize_cited_reciprocal(
    aset: ArticleSet, baseline: NormalizationBaseline
) -> NormalizedScores:
    """Per-article scores: 1/(world proportion cited) if cited, else 0."""
    _check_key(aset, baseline)
    counts = aset.counts_array()
    if baseline.prop_cited <= 0.0:
        if np.any(counts > 0):
            raise UndefinedNormalizationError(
                f"cited articles over a zero world proportion for {baseline.key}"
            )
        values = np.zeros(len(counts))
    else:
        values = np.where(counts > 0, 1.0 / baseline.prop_cited, 0.0)
    return NormalizedScores(aset.group, aset.key, values, CITED_RECIPROCAL)


def mnlcs(scores: Sequence[NormalizedScores]) -> IndicatorValue:
    """Flat mean of normalised scores over every article in every cell.

    With log_ratio input this is the MNLCS; raw_ratio input yields the MNCS
    and z_score input the mean Lundberg z-score.
    """
    if not scores:
        raise ValueError("no scores supplied")
    transforms = {s.transform for s in scores}
    if len(transforms) > 1:
        raise ValueError(f"mixed transforms {sorted(transforms)}")
    transform = transforms.pop()
    if transform not in _TRANSFORM_INDICATOR:
        raise ValueError(f"unsupported transform {transform!r}")
    groups = {s.group for s in scores}
    if len(groups) > 1:
        raise ValueError(f"mixed groups {sorted(groups)}")
    keys = [s.key for s in scores]
    if len(keys) != len(set(keys)):
        raise ValueError("overlapping scopes: duplicate cell keys")
    values = np.concatenate([s.values for s in scores])
    return IndicatorValue(
        group=groups.pop(),
        scope=frozenset(keys),
        indicator=_TRANSFORM_INDICATOR[transform],
        estimate=float(values.mean()),
    )


def _common_group(sets: Sequence[ProportionSummary]) -> str:
    groups = {s.group for s in sets}
    if len(groups) > 1:
        raise ValueError(f"mixed groups {sorted(groups)}")
    return groups.pop()


def proportion_cited(sets: Sequence[ProportionSummary]) -> IndicatorValue:
    """Pooled proportion cited: total cited over total articles."""
    if not sets:
        raise ValueError("no proportion summaries supplied")
    cited = sum(s.cited for s in sets)
    total = sum(s.total for s in sets)
    return IndicatorValue(
        group=_common_group(sets),
        scope=frozenset(s.key for s in sets),
        indicator=PROP_CITED,
        estimate=cited / total,
    )


def equalised_proportion(sets: Sequence[ProportionSummary]) -> tuple[IndicatorValue, float]:
    """Unweighted average of per-cell proportions, plus the equalised cell size.

    The second return value is the mean cell size, needed when an interval
    is attached to the equalised proportion.
    """
    if not sets:
        raise ValueError("no proportion summaries supplied")
    keys = [s.key for s in sets]
    if len(keys) != len(set(keys)):
        raise ValueError("duplicate cell keys in equalised proportion")
    estimate = sum(s.proportion for s in sets) / len(sets)
    n_equalised = sum(s.total for s in sets) / len(sets)
    value = IndicatorValue(
        group=_common_group(sets),
        scope=frozenset(keys),
        indicator=EQ_PROP_CITED,
        estimate=estimate,
    )
    return value, n_equalised


def _match_keys(
    group_sets: Sequence[ProportionSummary], world_sets: Sequence[ProportionSummary]
) -> dict[FieldYearKey, tuple[ProportionSummary, ProportionSummary]]:
    group_by_key = {s.key: s for s in group_sets}
    world_by_key = {s.key: s for s in world_sets}
    if len(group_by_key) != len(group_sets) or len(world_by_key) != len(world_sets):
        raise ValueError("duplicate cell keys")
    if group_by_key.keys() != world_by_key.keys():
        raise ValueError("group and world summaries cover different cell keys")
    return {k: (group_by_key[k], world_by_key[k]) for k in sorted(group_by_key)}


def emnpc(
    group_sets: Sequence[ProportionSummary], world_sets: Sequence[ProportionSummary]
) -> IndicatorValue:
    """Ratio of group to world equalised proportions (a ratio of sums).

    Undefined (flagged, not raised) only when every world proportion is zero.
    """
    pairs = _match_keys(group_sets, world_sets)
    group = _common_group(group_sets)
    scope = frozenset(pairs)
    sum_group = sum(g.proportion for g, _ in pairs.values())
    sum_world = sum(w.proportion for _, w in pairs.values())
    if sum_world == 0.0:
        return IndicatorValue(
            group, scope, EMNPC, None, defined=False, note="all world proportions zero"
        )
    return IndicatorValue(group, scope, EMNPC, sum_group / sum_world)


def mnpc(
    group_sets: Sequence[ProportionSummary], world_sets: Sequence[ProportionSummary]
) -> IndicatorValue:
    """Size-weighted sum of per-cell proportion ratios (a sum of ratios).

    A 0/0 cell ratio is replaced by 1 and noted; a cell with cited group
    articles over a zero world proportion makes the whole value undefined.
    """
    pairs = _match_keys(group_sets, world_sets)
    group = _common_group(group_sets)
    scope = frozenset(pairs)
    n_group = sum(g.total for g, _ in pairs.values())
    total = 0.0
    notes: list[str] = []
    for key, (g, w) in pairs.items():
        weight = g.total / n_group
        if w.cited == 0:
            if g.cited == 0:
                total += weight
                notes.append(f"0/0 field ratio replaced by 1 for {key}")
                continue
            return IndicatorValue(
                group,
                scope,
                MNPC,
                None,
                defined=False,
                note=f"positive numerator over zero world proportion for {key}",
            )
        total += weight * (g.proportion / w.proportion)
    return IndicatorValue(group, scope, MNPC, total, note="; ".join(notes))
