"""Majority voting over per-dictionary prediction sets."""

from __future__ import annotations

import math
from typing import Sequence

from .corpus import Span, TypedEntity


def vote(runs: Sequence[Sequence[TypedEntity]], threshold: float = 0.5) -> list[TypedEntity]:
    """Aggregate k prediction runs into one set.

    A (sentence, span, type) group survives with at least
    ``ceil(k * threshold)`` votes (the default 0.5 gives strict-majority
    ceil(k/2)).  If surviving groups share a span with different types,
    the one with more votes wins; ties fall to the higher summed
    similarity, then the lexicographically smaller type.  The emitted
    entity carries the group's best score.  Output is sorted by
    (sentence_id, start, end) and never contains two entities on the
    same span.
    """
    if not runs:
        raise ValueError("need at least one prediction run")
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    needed = max(1, math.ceil(len(runs) * threshold))

    votes: dict[tuple, int] = {}
    score_sum: dict[tuple, float] = {}
    best_score: dict[tuple, float] = {}
    surface: dict[tuple, str] = {}
    for run in runs:
        seen: set[tuple] = set()
        for ent in run:
            key = ent.key
            if key in seen:  # each run counts once per prediction
                continue
            seen.add(key)
            votes[key] = votes.get(key, 0) + 1
            if ent.score is not None:
                score_sum[key] = score_sum.get(key, 0.0) + ent.score
                if key not in best_score or ent.score > best_score[key]:
                    best_score[key] = ent.score
            if ent.surface and (key not in surface or ent.surface < surface[key]):
                surface[key] = ent.surface

    # resolve same-span, different-type conflicts among survivors:
    # more votes > higher summed score > smaller type
    best_for_span: dict[tuple[str, int, int], tuple] = {}
    for key, count in votes.items():
        if count < needed:
            continue
        span_key = key[:3]
        rank = (count, score_sum.get(key, 0.0), _SmallerWins(key[3]))
        incumbent = best_for_span.get(span_key)
        if incumbent is None or rank > incumbent[0]:
            best_for_span[span_key] = (rank, key)

    winners = sorted(key for _, key in best_for_span.values())
    return [
        TypedEntity(Span(sid, start, end), etype, surface.get(key, ""), best_score.get(key))
        for key in winners
        for sid, start, end, etype in [key]
    ]


class _SmallerWins:
    """Comparison wrapper: a lexicographically smaller string compares
    as greater, so max() prefers it."""

    __slots__ = ("value",)

    def __init__(self, value: str):
        self.value = value

    def __lt__(self, other: "_SmallerWins") -> bool:
        return self.value > other.value

    def __gt__(self, other: "_SmallerWins") -> bool:
        return self.value < other.value

    def __eq__(self, other) -> bool:
        return isinstance(other, _SmallerWins) and self.value == other.value
