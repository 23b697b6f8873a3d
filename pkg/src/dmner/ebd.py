"""Span sources: probability decoding, masked losses, distant and
LLM-derived annotation.

Boundary detection itself (the neural tagger) lives outside this
package; what arrives here is either its probability tensors, its
prediction files, or raw LLM answer text.  This module turns those into
spans and into trusted/unknown training labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Sequence

import numpy as np

from .corpus import Sentence, Span, TypedEntity
from .dictionary import Dictionary
from .errors import ParseError

EPS = 1e-12  # probability clamp before logs


def _check_probs(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} outside [0, 1]")


@dataclass(frozen=True)
class SpanProbabilities:
    """Per-position start/end probabilities and the start-end pairing
    matrix for one sentence."""

    sentence_id: str
    p_start: np.ndarray
    p_end: np.ndarray
    p_span: np.ndarray

    def __post_init__(self):
        n = self.p_start.shape[0]
        if self.p_end.shape != (n,) or self.p_span.shape != (n, n):
            raise ValueError(
                f"shape mismatch: start {self.p_start.shape}, end {self.p_end.shape}, "
                f"span {self.p_span.shape}"
            )
        for name, arr in (("p_start", self.p_start), ("p_end", self.p_end), ("p_span", self.p_span)):
            _check_probs(name, arr)

    @property
    def n(self) -> int:
        return self.p_start.shape[0]


def _check_binary(name: str, arr: np.ndarray) -> None:
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must be binary")


@dataclass(frozen=True)
class SpanLabels:
    """Trusted labels plus unknown masks; a masked position's loss terms
    are dropped, and a position may not be trusted-positive and masked
    at once."""

    y_start: np.ndarray
    y_end: np.ndarray
    y_span: np.ndarray
    m_start: np.ndarray
    m_end: np.ndarray
    m_span: np.ndarray

    def __post_init__(self):
        n = self.y_start.shape[0]
        expect = {
            "y_start": (n,), "y_end": (n,), "y_span": (n, n),
            "m_start": (n,), "m_end": (n,), "m_span": (n, n),
        }
        for name, shape in expect.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, want {shape}")
            _check_binary(name, arr)
        for y, m in (("y_start", "m_start"), ("y_end", "m_end"), ("y_span", "m_span")):
            if np.any((getattr(self, y) == 1) & (getattr(self, m) == 1)):
                raise ValueError(f"{y} and {m} overlap: trusted positives cannot be masked")

    @property
    def n(self) -> int:
        return self.y_start.shape[0]


def decode_spans(probs: SpanProbabilities, p_threshold: float = 0.5) -> list[Span]:
    """All (start, end) pairs above threshold; nesting and overlap are
    allowed, output sorted by (start, end)."""
    if not 0.0 < p_threshold < 1.0:
        raise ValueError(f"p_threshold must be in (0, 1), got {p_threshold}")
    starts = np.flatnonzero(probs.p_start > p_threshold)
    ends = np.flatnonzero(probs.p_end > p_threshold)
    spans = []
    for i in starts:
        for j in ends:
            if i <= j and probs.p_span[i, j] > p_threshold:
                spans.append(Span(probs.sentence_id, int(i), int(j)))
    spans.sort(key=lambda s: (s.start, s.end))
    return spans


class MaskedLosses(NamedTuple):
    start: float
    end: float
    span: float
    total: float


def masked_losses(probs: SpanProbabilities, labels: SpanLabels) -> MaskedLosses:
    """Binary cross-entropy over positions/pairs, with masked terms
    dropped; the span sum runs over start <= end only and the total is
    exactly the sum of the three components."""
    if probs.n != labels.n:
        raise ValueError(f"length mismatch: probs n={probs.n}, labels n={labels.n}")

    def ce(p: np.ndarray, y: np.ndarray) -> np.ndarray:
        p = np.clip(p, EPS, 1.0 - EPS)
        return -(y * np.log(p) + (1 - y) * np.log(1.0 - p))

    l_start = float(np.sum((1 - labels.m_start) * ce(probs.p_start, labels.y_start)))
    l_end = float(np.sum((1 - labels.m_end) * ce(probs.p_end, labels.y_end)))
    span_terms = (1 - labels.m_span) * ce(probs.p_span, labels.y_span)
    l_span = float(np.sum(np.triu(span_terms)))
    return MaskedLosses(l_start, l_end, l_span, l_start + l_end + l_span)


@dataclass(frozen=True)
class AnnotatedSentence:
    """Trusted entities plus unknown spans for one sentence; the two
    never overlap."""

    sentence: Sentence
    trusted: tuple[TypedEntity, ...]
    unknown: tuple[Span, ...]

    def __post_init__(self):
        for span in self.unknown:
            for ent in self.trusted:
                if span.overlaps(ent.span):
                    raise ValueError(f"unknown span {span} overlaps trusted {ent.span}")


def _lower_words(sentence: Sentence) -> list[str]:
    return [t.text.lower() for t in sentence.tokens]


def _greedy_match(
    words_lower: list[str], names: dict[tuple[str, ...], int], max_len: int
) -> list[tuple[int, int, int]]:
    """Left-to-right greedy longest match; returns (start, end, name id)."""
    found = []
    n = len(words_lower)
    i = 0
    while i < n:
        hit = None
        for length in range(min(max_len, n - i), 0, -1):
            key = tuple(words_lower[i : i + length])
            if key in names:
                hit = (i, i + length - 1, names[key])
                break
        if hit is None:
            i += 1
        else:
            found.append(hit)
            i = hit[1] + 1
    return found


def _name_table(names: Iterable[str]) -> tuple[dict[tuple[str, ...], int], int]:
    table: dict[tuple[str, ...], int] = {}
    max_len = 0
    for i, name in enumerate(names):
        key = tuple(name.lower().split())
        if key and key not in table:
            table[key] = i
            max_len = max(max_len, len(key))
    return table, max_len


def distant_annotate(
    sentence: Sentence, trusted_dict: Dictionary, phrase_list: Sequence[str] = ()
) -> AnnotatedSentence:
    """Dictionary names become trusted entities, phrases become unknown
    spans; matching is case-insensitive greedy longest over token
    sequences, and phrases conflicting with trusted spans are dropped."""
    words_lower = _lower_words(sentence)

    table, max_len = _name_table(e.name for e in trusted_dict)
    trusted = []
    for start, end, entry_index in _greedy_match(words_lower, table, max_len):
        entry = trusted_dict[entry_index]
        trusted.append(
            TypedEntity(
                Span(sentence.id, start, end),
                entry.entry_type,
                sentence.surface(start, end),
            )
        )

    table, max_len = _name_table(phrase_list)
    unknown = []
    if table:
        trusted_spans = [e.span for e in trusted]
        for start, end, _ in _greedy_match(words_lower, table, max_len):
            span = Span(sentence.id, start, end)
            if not any(span.overlaps(t) for t in trusted_spans):
                unknown.append(span)

    return AnnotatedSentence(sentence, tuple(trusted), tuple(unknown))


def mine_spans(sentence: Sentence, names: Iterable[str]) -> list[Span]:
    """Untyped greedy-longest matches of a name list (phrase mining or
    unrestricted knowledge-base names)."""
    table, max_len = _name_table(names)
    if not table:
        return []
    words_lower = _lower_words(sentence)
    return [
        Span(sentence.id, start, end)
        for start, end, _ in _greedy_match(words_lower, table, max_len)
    ]


def parse_llm_answer(answer_text: str) -> list[str]:
    """Entity names from an LLM answer: lines starting with ``-`` (after
    leading whitespace), dash stripped, outer whitespace trimmed."""
    names = []
    for line in answer_text.splitlines():
        stripped = line.lstrip()
        if stripped.startswith("-"):
            name = stripped[1:].strip()
            if name:
                names.append(name)
    return names


def align_names_to_spans(sentence: Sentence, names: Iterable[str]) -> list[Span]:
    """Every case-insensitive token-sequence occurrence of each name;
    names that never occur contribute nothing."""
    words_lower = _lower_words(sentence)
    n = len(words_lower)
    spans: set[Span] = set()
    for name in names:
        key = tuple(name.lower().split())
        if not key or len(key) > n:
            continue
        for i in range(n - len(key) + 1):
            if tuple(words_lower[i : i + len(key)]) == key:
                spans.add(Span(sentence.id, i, i + len(key) - 1))
    return sorted(spans)


def vote_llm_annotations(runs: Sequence[Iterable[Span]]) -> list[Span]:
    """Keep spans present in a strict majority of annotation runs."""
    if not runs:
        raise ValueError("need at least one annotation run")
    tally: dict[Span, int] = {}
    for run in runs:
        for span in set(run):
            tally[span] = tally.get(span, 0) + 1
    needed = len(runs) / 2
    return sorted(s for s, c in tally.items() if c > needed)


def merge_unknowns(
    sentence: Sentence,
    trusted: Sequence[TypedEntity],
    llm_spans: Sequence[Span] = (),
    distant_spans: Sequence[Span] = (),
    use_llm: bool = True,
    use_kb: bool = True,
) -> AnnotatedSentence:
    """Combine the active unknown-span sources, dropping any span that
    conflicts with a trusted entity."""
    pool: set[Span] = set()
    if use_llm:
        pool.update(llm_spans)
    if use_kb:
        pool.update(distant_spans)
    trusted_spans = [e.span for e in trusted]
    unknown = sorted(s for s in pool if not any(s.overlaps(t) for t in trusted_spans))
    return AnnotatedSentence(sentence, tuple(trusted), tuple(unknown))


# --- file formats ---------------------------------------------------------


def save_probabilities(records: Iterable[SpanProbabilities], writer: IO[str]) -> None:
    """One JSON record per line; p_span is stored row-major."""
    for rec in records:
        row = {
            "sentence_id": rec.sentence_id,
            "n": rec.n,
            "p_start": rec.p_start.tolist(),
            "p_end": rec.p_end.tolist(),
            "p_span": rec.p_span.reshape(-1).tolist(),
        }
        writer.write(json.dumps(row, sort_keys=True) + "\n")


def load_probabilities(source: IO[str] | Iterable[str]) -> list[SpanProbabilities]:
    out = []
    for line_no, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            n = int(row["n"])
            rec = SpanProbabilities(
                row["sentence_id"],
                np.asarray(row["p_start"], dtype=np.float64),
                np.asarray(row["p_end"], dtype=np.float64),
                np.asarray(row["p_span"], dtype=np.float64).reshape(n, n),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad probability record: {exc}", line_no) from None
        out.append(rec)
    return out


def load_llm_runs(root: str | Path) -> list[dict[str, str]]:
    """Answer text per sentence id for each ``run-*`` directory under
    ``root``, in run order."""
    root = Path(root)
    run_dirs = sorted(root.glob("run-*"), key=lambda p: p.name)
    if not run_dirs:
        raise FileNotFoundError(f"no run-* directories under {root}")
    runs = []
    for run_dir in run_dirs:
        answers = {}
        for path in sorted(run_dir.glob("*.txt")):
            answers[path.stem] = path.read_text(encoding="utf-8")
        runs.append(answers)
    return runs


def save_annotations(annotated: Iterable[AnnotatedSentence], writer: IO[str]) -> None:
    for ann in annotated:
        row = {
            "sentence_id": ann.sentence.id,
            "trusted": [
                {"start": e.span.start, "end": e.span.end, "type": e.entity_type,
                 "surface": e.surface}
                for e in ann.trusted
            ],
            "unknown": [{"start": s.start, "end": s.end} for s in ann.unknown],
        }
        writer.write(json.dumps(row, sort_keys=True) + "\n")


def annotation_counts(annotated: Iterable[AnnotatedSentence]) -> tuple[int, int]:
    trusted = unknown = 0
    for ann in annotated:
        trusted += len(ann.trusted)
        unknown += len(ann.unknown)
    return trusted, unknown
