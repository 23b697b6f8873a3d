"""Matching dictionaries: typed name lists with stable order.

The dictionary file format is the same ``<name>\\t<type>`` TSV as a
knowledge base, with an optional third ``source`` column.  Entry order
is meaningful: the matcher breaks similarity ties toward the lowest
index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Sequence

from ._rng import MASK64, DeterministicRng
from .corpus import TypedEntity
from .errors import ParseError

SOURCES = ("train", "kb", "trusted")


@dataclass(frozen=True)
class DictEntry:
    name: str
    entry_type: str
    source: str = "kb"

    def __post_init__(self):
        if not self.name:
            raise ValueError("entry name must be non-empty")
        if not self.entry_type:
            raise ValueError("entry type must be non-empty")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}, expected one of {SOURCES}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.name, self.entry_type)


class Dictionary:
    """Ordered, duplicate-free list of entries."""

    def __init__(self, entries: Iterable[DictEntry]):
        self.entries: tuple[DictEntry, ...] = tuple(entries)
        seen: set[tuple[str, str]] = set()
        for entry in self.entries:
            if entry.key in seen:
                raise ValueError(f"duplicate dictionary entry {entry.key}")
            seen.add(entry.key)
        self._keys = seen

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> DictEntry:
        return self.entries[index]

    def __iter__(self) -> Iterator[DictEntry]:
        return iter(self.entries)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._keys

    def __eq__(self, other) -> bool:
        return isinstance(other, Dictionary) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"Dictionary({len(self.entries)} entries)"

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)


def init_dictionary(source: Iterable[TypedEntity | DictEntry]) -> Dictionary:
    """Build the initial dictionary from gold entities or trusted entries.

    Deduplicates on (name, type), keeping first-occurrence order.
    """
    entries: list[DictEntry] = []
    seen: set[tuple[str, str]] = set()
    for item in source:
        if isinstance(item, DictEntry):
            entry = item
        elif isinstance(item, TypedEntity):
            entry = DictEntry(item.surface, item.entity_type, "train")
        else:
            raise TypeError(f"cannot build dictionary from {type(item).__name__}")
        if entry.key not in seen:
            seen.add(entry.key)
            entries.append(entry)
    if not entries:
        raise ValueError("cannot build a dictionary from an empty source")
    return Dictionary(entries)


def parse_kb(source: IO[str] | Iterable[str], source_tag: str = "kb") -> tuple[list[DictEntry], int]:
    """Parse a ``<name>\\t<type>`` knowledge-base file.

    Returns the entries in file order plus the number of duplicate
    (name, type) lines that were dropped.
    """
    entries: list[DictEntry] = []
    seen: set[tuple[str, str]] = set()
    duplicates = 0
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ParseError(f"expected <name>\\t<type>, got {len(cols)} columns", line_no)
        name, etype = cols
        if not name or not etype:
            raise ParseError(f"empty name or type in {line!r}", line_no)
        if (name, etype) in seen:
            duplicates += 1
            continue
        seen.add((name, etype))
        entries.append(DictEntry(name, etype, source_tag))
    return entries, duplicates


def load_dictionary(source: IO[str] | Iterable[str]) -> Dictionary:
    """Load a dictionary TSV (2 columns, or 3 with a source tag)."""
    entries: list[DictEntry] = []
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) not in (2, 3):
            raise ParseError(f"expected 2 or 3 columns, got {len(cols)}", line_no)
        try:
            entries.append(DictEntry(*cols))
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
    try:
        return Dictionary(entries)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def save_dictionary(dictionary: Dictionary, writer: IO[str]) -> None:
    for entry in dictionary:
        writer.write(f"{entry.name}\t{entry.entry_type}\t{entry.source}\n")


def build_variants(
    kb: Sequence[DictEntry], k: int, seed: int
) -> list[list[DictEntry]]:
    """``k`` shuffled orderings of the knowledge base.

    Variant ``i`` is a Fisher-Yates shuffle driven by the deterministic
    generator seeded with ``seed + i`` (mod 2**64); see ``dmner._rng``
    for the exact algorithm.  Each variant feeds an independent
    refinement run.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    variants = []
    for i in range(k):
        rng = DeterministicRng((seed + i) & MASK64)
        order = list(kb)
        rng.shuffle(order)
        variants.append(order)
    return variants
