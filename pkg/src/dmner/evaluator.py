"""Exact-match scoring and dictionary-typing accuracy.

A prediction counts as correct only when sentence id, start, end and
type all match a gold entity (no partial credit).  Zero denominators
yield 0 so property tests stay total.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Sequence

from .corpus import TypedEntity
from .dictionary import Dictionary
from .embedding import Encoder
from .matcher import DictionaryIndex
from .refine import DevExample


@dataclass(frozen=True)
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "EvalReport":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(tp, fp, fn, precision, recall, f1)


def _dedupe(entities: Sequence[TypedEntity]) -> set[tuple]:
    return {e.key for e in entities}


def evaluate(pred: Sequence[TypedEntity], gold: Sequence[TypedEntity]) -> EvalReport:
    """Exact-match precision/recall/F1 on (sentence, span, type) tuples."""
    pred_keys = _dedupe(pred)
    gold_keys = _dedupe(gold)
    tp = len(pred_keys & gold_keys)
    return EvalReport.from_counts(tp, len(pred_keys) - tp, len(gold_keys) - tp)


def dictionary_accuracy(
    dev: Sequence[DevExample], dictionary: Dictionary, encoder: Encoder
) -> float:
    """Fraction of dev mentions whose nearest entry has the gold type."""
    if not dev:
        raise ValueError("need a non-empty dev set")
    index = DictionaryIndex(dictionary, encoder)
    idx, _ = index.scan([e.surface for e in dev])
    correct = sum(
        1 for e, i in zip(dev, idx) if dictionary[int(i)].entry_type == e.gold_type
    )
    return correct / len(dev)


def report_to_json(report: EvalReport, dictionary_accuracies: Sequence[float] | None = None) -> str:
    row: dict = {
        "true_positives": report.true_positives,
        "false_positives": report.false_positives,
        "false_negatives": report.false_negatives,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
    }
    if dictionary_accuracies is not None:
        row["dictionary_accuracy"] = list(dictionary_accuracies)
    return json.dumps(row, sort_keys=True, indent=2) + "\n"


def format_report(report: EvalReport, dictionary_accuracies: Sequence[float] | None = None) -> str:
    lines = [
        f"TP {report.true_positives}  FP {report.false_positives}  FN {report.false_negatives}",
        f"precision {report.precision:.4f}",
        f"recall    {report.recall:.4f}",
        f"f1        {report.f1:.4f}",
    ]
    if dictionary_accuracies:
        accs = " ".join(f"{a:.4f}" for a in dictionary_accuracies)
        lines.append(f"dictionary accuracy (per dictionary): {accs}")
    return "\n".join(lines) + "\n"


def write_report(
    report: EvalReport,
    writer: IO[str],
    dictionary_accuracies: Sequence[float] | None = None,
) -> None:
    writer.write(report_to_json(report, dictionary_accuracies))
