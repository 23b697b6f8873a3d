"""Type spans by their nearest dictionary entry.

A span's surface is embedded and matched against every dictionary
entry name by cosine similarity (exact brute-force scan, no ANN).
Ties break toward the lowest entry index.  A match whose type lies
outside the corpus tagging space is discarded, which can only remove
false positives when the gold types all lie inside the space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .corpus import Span, TaggingSpace, TypedEntity
from .dictionary import Dictionary
from .embedding import Encoder


@dataclass(frozen=True)
class MatchResult:
    entry_index: int
    similarity: float
    matched_type: str


class DictionaryIndex:
    """Pre-embedded entry-name matrix for repeated queries against one
    dictionary."""

    def __init__(self, dictionary: Dictionary, encoder: Encoder):
        if len(dictionary) == 0:
            raise ValueError("cannot match against an empty dictionary")
        self.dictionary = dictionary
        self.encoder = encoder
        self.matrix = np.stack([encoder.vector(e.name) for e in dictionary])

    def scan(self, surfaces: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Best entry index and similarity for each surface."""
        if not surfaces:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
        queries = np.stack([self.encoder.vector(s) for s in surfaces])
        idx, sims = _kernels.nearest_scan(queries, self.matrix)
        return idx, np.clip(sims, -1.0, 1.0)


def nearest(
    query_surface: str,
    dictionary: Dictionary,
    encoder: Encoder,
    index: DictionaryIndex | None = None,
) -> MatchResult:
    """The dictionary entry most similar to the query surface.

    Pass a prebuilt ``DictionaryIndex`` to amortize entry embedding
    across many calls.
    """
    if index is None:
        index = DictionaryIndex(dictionary, encoder)
    idx, sims = index.scan([query_surface])
    i = int(idx[0])
    return MatchResult(i, float(sims[0]), index.dictionary[i].entry_type)


def type_span(
    span: Span,
    surface: str,
    dictionary: Dictionary,
    encoder: Encoder,
    tagging_space: TaggingSpace,
    index: DictionaryIndex | None = None,
) -> TypedEntity | None:
    """Type one span; returns None when the matched type is filtered."""
    result = nearest(surface, dictionary, encoder, index)
    if result.matched_type not in tagging_space:
        return None
    return TypedEntity(span, result.matched_type, surface, result.similarity)


def batch_match(
    mentions: Sequence[tuple[Span, str]],
    dictionary: Dictionary,
    encoder: Encoder,
    tagging_space: TaggingSpace,
) -> list[TypedEntity]:
    """Type every (span, surface) mention; filtered ones are omitted
    and input order is preserved."""
    if not mentions:
        return []
    index = DictionaryIndex(dictionary, encoder)
    idx, sims = index.scan([surface for _, surface in mentions])
    out: list[TypedEntity] = []
    for (span, surface), i, sim in zip(mentions, idx, sims):
        matched = dictionary[int(i)].entry_type
        if matched in tagging_space:
            out.append(TypedEntity(span, matched, surface, float(sim)))
    return out
