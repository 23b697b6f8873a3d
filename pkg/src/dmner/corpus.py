"""Corpora, spans and annotation file I/O.

File formats handled here (all UTF-8, token indices inclusive):

* IOB2 corpus: one ``<token>\\t<tag>`` pair per line, blank line between
  sentences, optional ``#id <sentence_id>`` line naming the sentence
  that follows (unnamed sentences get their 0-based ordinal as id).
  Tags are ``O``, ``B-<type>`` or ``I-<type>``.
* Predictions: ``<sentence_id>\\t<start>\\t<end>\\t<type>[\\t<score>]``
  per line.
* Phrase list: one phrase per line.

Parsed objects are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import ParseError


@dataclass(frozen=True)
class Token:
    text: str
    index: int

    def __post_init__(self):
        if not self.text:
            raise ValueError("token text must be non-empty")
        if self.index < 0:
            raise ValueError("token index must be non-negative")


@dataclass(frozen=True)
class Sentence:
    """A pre-tokenized sentence; no re-tokenization is ever applied."""

    id: str
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")
        for pos, tok in enumerate(self.tokens):
            if tok.index != pos:
                raise ValueError(
                    f"sentence {self.id!r}: token index {tok.index} at position {pos}"
                )

    @classmethod
    def from_words(cls, sentence_id: str, words: Iterable[str]) -> "Sentence":
        return cls(sentence_id, tuple(Token(w, i) for i, w in enumerate(words)))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(t.text for t in self.tokens)

    def surface(self, start: int, end: int) -> str:
        """Space-joined text of the inclusive token range ``start..end``."""
        if not 0 <= start <= end < len(self.tokens):
            raise ValueError(
                f"span ({start},{end}) out of range for sentence {self.id!r} "
                f"of length {len(self.tokens)}"
            )
        return " ".join(t.text for t in self.tokens[start : end + 1])


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive token-index boundary of a mention."""

    sentence_id: str
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid span boundaries ({self.start},{self.end})")

    def overlaps(self, other: "Span") -> bool:
        return (
            self.sentence_id == other.sentence_id
            and self.start <= other.end
            and other.start <= self.end
        )


@dataclass(frozen=True)
class TypedEntity:
    span: Span
    entity_type: str
    surface: str = ""
    score: float | None = None

    def __post_init__(self):
        if not self.entity_type:
            raise ValueError("entity_type must be non-empty")
        if self.score is not None and not -1.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [-1, 1]")

    @property
    def key(self) -> tuple[str, int, int, str]:
        """Identity used for voting and exact-match evaluation."""
        return (self.span.sentence_id, self.span.start, self.span.end, self.entity_type)


@dataclass(frozen=True)
class TaggingSpace:
    """The set of entity types a corpus annotates; predictions outside
    it are discarded by the matcher."""

    types: frozenset[str]

    def __post_init__(self):
        if not self.types:
            raise ValueError("tagging space must be non-empty")
        if any(not t for t in self.types):
            raise ValueError("tagging space contains an empty label")

    @classmethod
    def of(cls, *types: str) -> "TaggingSpace":
        return cls(frozenset(types))

    def __contains__(self, label: str) -> bool:
        return label in self.types

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.types))


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    gold: tuple[TypedEntity, ...]
    tagging_space: TaggingSpace
    repaired_tags: int = 0  # dangling I- tags repaired during parsing
    by_id: dict[str, Sentence] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, Sentence] = {}
        for sent in self.sentences:
            if sent.id in index:
                raise ValueError(f"duplicate sentence id {sent.id!r}")
            index[sent.id] = sent
        object.__setattr__(self, "by_id", index)
        for ent in self.gold:
            self.validate_entity(ent)

    def validate_entity(self, ent: TypedEntity) -> None:
        sent = self.by_id.get(ent.span.sentence_id)
        if sent is None:
            raise ValueError(f"unknown sentence id {ent.span.sentence_id!r}")
        surface = sent.surface(ent.span.start, ent.span.end)
        if ent.surface and ent.surface != surface:
            raise ValueError(
                f"surface {ent.surface!r} does not match tokens {surface!r} "
                f"at {ent.span}"
            )
        if ent.entity_type not in self.tagging_space:
            raise ValueError(f"entity type {ent.entity_type!r} outside tagging space")

    def sentence(self, sentence_id: str) -> Sentence:
        try:
            return self.by_id[sentence_id]
        except KeyError:
            raise ValueError(f"unknown sentence id {sentence_id!r}") from None


def _iter_lines(source: IO[str] | Iterable[str]) -> Iterator[str]:
    for line in source:
        yield line.rstrip("\n").rstrip("\r")


def _split_tag(tag: str, line_no: int) -> tuple[str, str]:
    if tag == "O":
        return "O", ""
    if tag.startswith(("B-", "I-")) and len(tag) > 2:
        return tag[0], tag[2:]
    raise ParseError(f"invalid IOB tag {tag!r}", line_no)


def parse_iob(source: IO[str] | Iterable[str], strict: bool = False) -> Corpus:
    """Parse an IOB2 file into a corpus with decoded gold entities.

    Dangling ``I-`` tags (no preceding ``B-``/``I-`` of the same type)
    are repaired to ``B-`` and counted in ``Corpus.repaired_tags``;
    with ``strict=True`` they raise instead.
    """
    sentences: list[Sentence] = []
    gold: list[TypedEntity] = []
    types: set[str] = set()
    repairs = 0

    words: list[str] = []
    tags: list[tuple[str, str]] = []  # (marker, entity type)
    pending_id: str | None = None
    ordinal = 0

    def flush(line_no: int) -> None:
        nonlocal words, tags, pending_id, ordinal, repairs
        if not words:
            if pending_id is not None:
                raise ParseError(f"#id {pending_id!r} names an empty sentence", line_no)
            return
        sid = pending_id if pending_id is not None else str(ordinal)
        sent = Sentence.from_words(sid, words)
        sentences.append(sent)

        start = None
        cur_type = ""
        for i, (marker, etype) in enumerate(tags):
            if marker == "I" and not (start is not None and etype == cur_type):
                # dangling I-: repair to B- (lenient mode)
                if strict:
                    raise ParseError(
                        f"dangling I-{etype} at token {i} of sentence {sid!r}",
                        line_no,
                    )
                repairs += 1
                marker = "B"
            if marker in ("B", "O") and start is not None:
                gold.append(
                    TypedEntity(Span(sid, start, i - 1), cur_type, sent.surface(start, i - 1))
                )
                start = None
            if marker == "B":
                start, cur_type = i, etype
        if start is not None:
            last = len(tags) - 1
            gold.append(
                TypedEntity(Span(sid, start, last), cur_type, sent.surface(start, last))
            )
        words, tags, pending_id = [], [], None
        ordinal += 1

    line_no = 0
    for line_no, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            flush(line_no)
            continue
        if "\t" not in line:
            if line.startswith("#id "):
                if words:
                    raise ParseError("#id must precede the sentence", line_no)
                pending_id = line[4:].strip()
                if not pending_id:
                    raise ParseError("empty #id", line_no)
                continue
            raise ParseError(f"expected <token>\\t<tag>, got {line!r}", line_no)
        cols = line.split("\t")
        if len(cols) != 2:
            raise ParseError(f"expected 2 columns, got {len(cols)}", line_no)
        word, tag = cols
        if not word:
            raise ParseError("empty token", line_no)
        marker, etype = _split_tag(tag.strip(), line_no)
        if etype:
            types.add(etype)
        words.append(word)
        tags.append((marker, etype))
    flush(line_no + 1)

    if not types:
        # an all-O corpus still needs a non-empty tagging space
        types = {"UNK"}
    return Corpus(tuple(sentences), tuple(gold), TaggingSpace(frozenset(types)), repairs)


def encode_iob_tags(length: int, entities: Iterable[TypedEntity]) -> list[str]:
    """IOB2 tags for one sentence; entities must not overlap."""
    tags = ["O"] * length
    for ent in sorted(entities, key=lambda e: (e.span.start, e.span.end)):
        if not ent.span.end < length:
            raise ValueError(f"span {ent.span} beyond sentence length {length}")
        if any(tags[i] != "O" for i in range(ent.span.start, ent.span.end + 1)):
            raise ValueError(f"overlapping entity at {ent.span}")
        tags[ent.span.start] = f"B-{ent.entity_type}"
        for i in range(ent.span.start + 1, ent.span.end + 1):
            tags[i] = f"I-{ent.entity_type}"
    return tags


def write_iob(corpus: Corpus, writer: IO[str]) -> None:
    """Write the corpus back out; ``parse_iob`` of the output round-trips."""
    per_sentence: dict[str, list[TypedEntity]] = {s.id: [] for s in corpus.sentences}
    for ent in corpus.gold:
        per_sentence[ent.span.sentence_id].append(ent)
    for i, sent in enumerate(corpus.sentences):
        if i:
            writer.write("\n")
        writer.write(f"#id {sent.id}\n")
        tags = encode_iob_tags(len(sent), per_sentence[sent.id])
        for tok, tag in zip(sent.tokens, tags):
            writer.write(f"{tok.text}\t{tag}\n")


def read_predictions(
    source: IO[str] | Iterable[str], corpus: Corpus | None = None
) -> list[TypedEntity]:
    """Read prediction records; with a corpus, validate spans and fill
    in surfaces."""
    out: list[TypedEntity] = []
    for line_no, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) not in (4, 5):
            raise ParseError(f"expected 4 or 5 columns, got {len(cols)}", line_no)
        sid, start_s, end_s, etype = cols[:4]
        try:
            start, end = int(start_s), int(end_s)
        except ValueError:
            raise ParseError(f"non-integer span in {line!r}", line_no) from None
        score = None
        if len(cols) == 5 and cols[4]:
            try:
                score = float(cols[4])
            except ValueError:
                raise ParseError(f"bad score {cols[4]!r}", line_no) from None
            if not math.isfinite(score):
                raise ParseError(f"non-finite score {cols[4]!r}", line_no)
        try:
            span = Span(sid, start, end)
            surface = ""
            if corpus is not None:
                sent = corpus.sentence(sid)
                surface = sent.surface(start, end)
            out.append(TypedEntity(span, etype, surface, score))
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
    return out


def write_predictions(entities: Iterable[TypedEntity], writer: IO[str]) -> None:
    for ent in entities:
        row = f"{ent.span.sentence_id}\t{ent.span.start}\t{ent.span.end}\t{ent.entity_type}"
        if ent.score is not None:
            row += f"\t{ent.score!r}"
        writer.write(row + "\n")


def read_phrases(source: IO[str] | Iterable[str]) -> list[str]:
    """Phrase list: one phrase per line, blanks skipped."""
    phrases = []
    for line in _iter_lines(source):
        phrase = line.strip()
        if phrase:
            phrases.append(phrase)
    return phrases


@dataclass(frozen=True)
class CorpusStats:
    sentences: int
    tokens: int
    entities: int
    by_type: dict[str, int]

    def format_table(self) -> str:
        lines = [
            f"sentences      {self.sentences}",
            f"tokens         {self.tokens}",
            f"entities       {self.entities}",
        ]
        for etype in sorted(self.by_type):
            lines.append(f"  {etype:<12} {self.by_type[etype]}")
        return "\n".join(lines)


def corpus_stats(corpus: Corpus) -> CorpusStats:
    by_type: dict[str, int] = {}
    for ent in corpus.gold:
        by_type[ent.entity_type] = by_type.get(ent.entity_type, 0) + 1
    return CorpusStats(
        sentences=len(corpus.sentences),
        tokens=sum(len(s) for s in corpus.sentences),
        entities=len(corpus.gold),
        by_type=by_type,
    )
