from __future__ import annotations

import pytest

from fieldnorm.corpus import WORLD, ArticleSet, Corpus, FieldYearKey


def make_cell(group: str, field: str, year: int, counts) -> ArticleSet:
    return ArticleSet(group, FieldYearKey(field, year), tuple(counts))


KEY_A = FieldYearKey("A", 2013)
KEY_B = FieldYearKey("B", 2013)

# Two-field worked example: a group of 5 articles per field, the rest of
# the world contributing another 5, so each world cell holds 10 articles.
GROUP_A = (0, 0, 1, 2, 10)
GROUP_B = (0, 1, 1, 2, 2)
WORLD_A = (0, 0, 1, 2, 10, 0, 0, 0, 2, 2)
WORLD_B = (0, 1, 1, 2, 2, 0, 1, 2, 2, 5)


@pytest.fixture
def demo_corpus() -> Corpus:
    return Corpus.from_cells(
        [
            ArticleSet("G", KEY_A, GROUP_A),
            ArticleSet("G", KEY_B, GROUP_B),
            ArticleSet(WORLD, KEY_A, WORLD_A),
            ArticleSet(WORLD, KEY_B, WORLD_B),
        ]
    )
