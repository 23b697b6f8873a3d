"""Unit-norm text embeddings and cosine similarity.

The default encoder hashes character trigrams, so the whole pipeline
runs with no external model.  Real encoder vectors drop in through the
store file format (see ``save_store``/``load_store``); the matcher only
ever sees ``text -> unit vector``.

Hashed encoding is bit-exact across platforms: bucket counts are small
integers, so their accumulation in float64 is exact regardless of
summation order, and the final normalization uses correctly-rounded
sqrt/divide.
"""

from __future__ import annotations

import math
from typing import IO, Iterable

import numpy as np

from .errors import ConfigError, MissingEmbeddingError, ParseError

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def basis_vector(dim: int) -> np.ndarray:
    """e_0, the fixed unit vector used for zero-feature texts."""
    v = np.zeros(dim, dtype=np.float64)
    v[0] = 1.0
    return v


def embed_hashed(text: str, dim: int) -> np.ndarray:
    """Deterministic unit vector from signed character-trigram hashing.

    The text is lowercased and padded with ``#`` on both ends; every
    trigram is hashed with 64-bit FNV-1a (over its UTF-8 bytes), lands
    in bucket ``hash % dim`` and contributes +1 or -1 depending on hash
    bit 63.  The result is L2-normalized; texts with no features map
    to the first basis vector.
    """
    if dim < 8:
        raise ConfigError(f"embedding dim must be >= 8, got {dim}")
    padded = "#" + text.lower() + "#"
    vec = np.zeros(dim, dtype=np.float64)
    for i in range(len(padded) - 2):
        h = _fnv1a64(padded[i : i + 3].encode("utf-8"))
        sign = -1.0 if h >> 63 else 1.0
        vec[h % dim] += sign
    norm = math.sqrt(float(np.dot(vec, vec)))
    if norm == 0.0:
        return basis_vector(dim)
    return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two unit vectors, clamped to [-1, 1]."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return min(1.0, max(-1.0, float(np.dot(a, b))))


class EmbeddingStore:
    """Immutable-by-convention map from surface text to unit vector."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ConfigError(f"store dim must be positive, got {dim}")
        self.dim = dim
        self._vectors: dict[str, np.ndarray] = {}
        self.renormalized = 0  # rows fixed up during load

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, text: str) -> bool:
        return text in self._vectors

    def add(self, text: str, vector: np.ndarray) -> None:
        if text in self._vectors:
            raise ValueError(f"duplicate store key {text!r}")
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.dim,):
            raise ValueError(f"vector for {text!r} has shape {vector.shape}, want ({self.dim},)")
        if not np.all(np.isfinite(vector)):
            raise ValueError(f"non-finite vector for {text!r}")
        vector = vector.copy()
        vector.flags.writeable = False
        self._vectors[text] = vector

    def get(self, text: str) -> np.ndarray:
        try:
            return self._vectors[text]
        except KeyError:
            raise MissingEmbeddingError(text) from None

    def keys(self):
        return self._vectors.keys()

    def items(self):
        return self._vectors.items()


def save_store(store: EmbeddingStore, writer: IO[str]) -> None:
    """Write ``dim=<d> count=<n>`` then one ``<text>\\t<floats>`` row per
    entry.  Floats use shortest exact decimals (full round-trip)."""
    writer.write(f"dim={store.dim} count={len(store)}\n")
    for text, vec in store.items():
        if "\t" in text or "\n" in text:
            raise ValueError(f"store key may not contain tab or newline: {text!r}")
        writer.write(text + "\t" + " ".join(repr(x) for x in vec.tolist()) + "\n")


def load_store(source: IO[str] | Iterable[str]) -> EmbeddingStore:
    """Read a store file; rows whose norm is off by more than 1e-4 are
    renormalized and counted in ``store.renormalized``."""
    lines = iter(source)
    try:
        header = next(lines).strip()
    except StopIteration:
        raise ParseError("empty store file", 1) from None
    parts = header.split()
    if len(parts) != 2 or not parts[0].startswith("dim=") or not parts[1].startswith("count="):
        raise ParseError(f"bad store header {header!r}", 1)
    try:
        dim = int(parts[0][4:])
        count = int(parts[1][6:])
    except ValueError:
        raise ParseError(f"bad store header {header!r}", 1) from None
    store = EmbeddingStore(dim)
    rows = 0
    for line_no, raw in enumerate(lines, start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        text, sep, values = line.partition("\t")
        if not sep:
            raise ParseError("missing tab separator", line_no)
        fields = values.split()
        if len(fields) != dim:
            raise ParseError(f"expected {dim} values, got {len(fields)}", line_no)
        try:
            vec = np.array([float(f) for f in fields], dtype=np.float64)
        except ValueError:
            raise ParseError("non-numeric value", line_no) from None
        if not np.all(np.isfinite(vec)):
            raise ParseError(f"non-finite value in row for {text!r}", line_no)
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-4:
            if norm == 0.0:
                raise ParseError(f"zero vector for {text!r}", line_no)
            vec = vec / norm
            store.renormalized += 1
        try:
            store.add(text, vec)
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
        rows += 1
    if rows != count:
        raise ParseError(f"header declares count={count} but found {rows} rows")
    return store


class HashedEncoder:
    """Trigram-hashing encoder; caches vectors per text."""

    def __init__(self, dim: int = 64):
        if dim < 8:
            raise ConfigError(f"embedding dim must be >= 8, got {dim}")
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def vector(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            vec = embed_hashed(text, self.dim)
            vec.flags.writeable = False
            self._cache[text] = vec
        return vec


class StoreEncoder:
    """Store-backed lookup; misses fall back to hashing only when enabled."""

    def __init__(self, store: EmbeddingStore, fallback: bool = False):
        self.store = store
        self.dim = store.dim
        self._fallback = HashedEncoder(store.dim) if fallback else None

    def vector(self, text: str) -> np.ndarray:
        if text in self.store:
            return self.store.get(text)
        if self._fallback is not None:
            return self._fallback.vector(text)
        raise MissingEmbeddingError(text)


Encoder = HashedEncoder | StoreEncoder


def embed_all(texts: Iterable[str], encoder: Encoder) -> EmbeddingStore:
    """Embed every distinct text, in first-seen order."""
    store = EmbeddingStore(encoder.dim)
    for text in texts:
        if text not in store:
            store.add(text, encoder.vector(text))
    return store
