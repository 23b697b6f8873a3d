"""Greedy dictionary refinement against a typed dev-mention set.

Each pass first tries to grow the dictionary from a sampled batch of
knowledge-base candidates, then prunes entries that hurt.  For a
candidate ``c``, the dev mentions that would pick ``c`` as their
nearest entry split into ``cnt_p`` (gold type equals the candidate's)
and ``cnt_n`` (the rest); ``c`` is added iff ``cnt_p > cnt_n``, and the
dictionary mutates immediately so later candidates see it.  The prune
phase walks a snapshot of the dictionary and removes an entry iff
``cnt_n > cnt_p + threshold_t`` over the mentions currently assigned to
it; the margin exists because a removal re-routes those mentions to
entries whose correctness is unverified.

Determinism notes, load-bearing for reproducibility:

* batches are drawn without replacement within a pass by a partial
  Fisher-Yates over the full KB (the pool resets every pass) using the
  fixed generator in ``dmner._rng``; candidates are evaluated in draw
  order, and a draw that is already in the dictionary is skipped;
* a candidate is ranked as if appended, so it must beat the current
  best similarity strictly to claim a mention (existing entries win
  ties, matching the matcher's lowest-index tie break);
* every similarity is produced by the same kernel routine
  (``matvec``), so comparisons never mix differently-rounded values;
* an entry is never pruned if it is the last one left.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from . import _kernels
from ._rng import DeterministicRng
from .dictionary import DictEntry, Dictionary
from .embedding import Encoder
from .errors import ParseError


@dataclass(frozen=True)
class RefinementConfig:
    threshold_t: int = 2
    iterations: int = 20
    batch_size: int = 4096
    rng_seed: int = 0

    def __post_init__(self):
        if self.threshold_t < 0:
            raise ValueError("threshold_t must be non-negative")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass(frozen=True)
class DevExample:
    """A dev-split mention surface with its gold entity type."""

    surface: str
    gold_type: str

    def __post_init__(self):
        if not self.surface or not self.gold_type:
            raise ValueError("dev example needs a surface and a gold type")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    accuracy: float
    added: int
    removed: int


@dataclass(frozen=True)
class RefinementTrace:
    initial_accuracy: float
    records: tuple[IterationRecord, ...]

    @property
    def final_accuracy(self) -> float:
        return self.records[-1].accuracy if self.records else self.initial_accuracy


class _Assignment:
    """Nearest dictionary entry per dev mention, kept incrementally.

    ``best_sim``/``best_idx`` always equal a full lowest-index-ties
    argmax over the current entries; all similarities flow through
    ``_kernels.matvec`` so stored and fresh values compare exactly.
    """

    def __init__(self, dev_matrix: np.ndarray):
        self.dev_matrix = dev_matrix
        m = dev_matrix.shape[0]
        self.best_sim = np.full(m, -np.inf)
        self.best_idx = np.zeros(m, dtype=np.int64)

    def sims(self, vec: np.ndarray) -> np.ndarray:
        return _kernels.matvec(self.dev_matrix, vec)

    def append(self, index: int, sims: np.ndarray) -> None:
        claimed = sims > self.best_sim
        self.best_idx[claimed] = index
        self.best_sim[claimed] = sims[claimed]

    def drop(self, index: int, vectors: Sequence[np.ndarray]) -> None:
        orphaned = self.best_idx == index
        self.best_idx[self.best_idx > index] -= 1
        self.best_sim[orphaned] = -np.inf
        self.best_idx[orphaned] = 0
        for j, vec in enumerate(vectors):
            s = self.sims(vec)
            claimed = orphaned & (s > self.best_sim)
            self.best_idx[claimed] = j
            self.best_sim[claimed] = s[claimed]


def refine(
    d_init: Dictionary,
    kb: Sequence[DictEntry],
    dev: Sequence[DevExample],
    encoder: Encoder,
    config: RefinementConfig,
) -> tuple[Dictionary, RefinementTrace]:
    """Refine ``d_init`` against dev mentions; returns the refined
    dictionary and the per-pass trace."""
    if not dev:
        raise ValueError("refinement needs a non-empty dev set")
    if len(d_init) == 0:
        raise ValueError("initial dictionary must be non-empty")

    dev_matrix = np.stack([encoder.vector(e.surface) for e in dev])
    gold = np.array([e.gold_type for e in dev], dtype=object)
    m = len(dev)

    entries: list[DictEntry] = list(d_init)
    vectors: list[np.ndarray] = [encoder.vector(e.name) for e in entries]
    position: dict[tuple[str, str], int] = {e.key: j for j, e in enumerate(entries)}

    state = _Assignment(dev_matrix)
    for j, vec in enumerate(vectors):
        state.append(j, state.sims(vec))

    def accuracy() -> float:
        types = np.array([e.entry_type for e in entries], dtype=object)
        correct = int(np.count_nonzero(types[state.best_idx] == gold))
        return correct / m

    def counts(claimed: np.ndarray, entry_type: str) -> tuple[int, int]:
        total = int(np.count_nonzero(claimed))
        cnt_p = int(np.count_nonzero(claimed & (gold == entry_type)))
        return cnt_p, total - cnt_p

    initial_accuracy = accuracy()
    rng = DeterministicRng(config.rng_seed)
    records: list[IterationRecord] = []

    for iteration in range(1, config.iterations + 1):
        added = removed = 0

        batch = rng.sample_indices(len(kb), min(config.batch_size, len(kb)))
        for kb_index in batch:
            candidate = kb[kb_index]
            if candidate.key in position:
                continue
            vec = encoder.vector(candidate.name)
            sims = state.sims(vec)
            claimed = sims > state.best_sim  # appended entry loses ties
            cnt_p, cnt_n = counts(claimed, candidate.entry_type)
            if cnt_p > cnt_n:
                position[candidate.key] = len(entries)
                entries.append(candidate)
                vectors.append(vec)
                state.append(len(entries) - 1, sims)
                added += 1

        for entry in list(entries):
            j = position.get(entry.key)
            if j is None:
                continue
            cnt_p, cnt_n = counts(state.best_idx == j, entry.entry_type)
            if cnt_n > cnt_p + config.threshold_t and len(entries) > 1:
                del entries[j]
                del vectors[j]
                del position[entry.key]
                for key, pos in position.items():
                    if pos > j:
                        position[key] = pos - 1
                state.drop(j, vectors)
                removed += 1

        records.append(IterationRecord(iteration, accuracy(), added, removed))

    return Dictionary(entries), RefinementTrace(initial_accuracy, tuple(records))


def save_trace(trace: RefinementTrace, writer: IO[str]) -> None:
    """One JSON record per line; iteration 0 is the starting accuracy."""
    first = {"iteration": 0, "accuracy": trace.initial_accuracy, "added": 0, "removed": 0}
    writer.write(json.dumps(first, sort_keys=True) + "\n")
    for rec in trace.records:
        row = {
            "iteration": rec.iteration,
            "accuracy": rec.accuracy,
            "added": rec.added,
            "removed": rec.removed,
        }
        writer.write(json.dumps(row, sort_keys=True) + "\n")


def load_trace(source: IO[str] | Iterable[str]) -> RefinementTrace:
    initial = None
    records = []
    for line_no, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            rec = IterationRecord(row["iteration"], row["accuracy"], row["added"], row["removed"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"bad trace record: {exc}", line_no) from None
        if rec.iteration == 0:
            initial = rec.accuracy
        else:
            records.append(rec)
    if initial is None:
        raise ParseError("trace missing the iteration-0 record")
    return RefinementTrace(initial, tuple(records))
