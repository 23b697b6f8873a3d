"""Batch inference into the embedding-store text format.

The output contract is the store file the matching toolkit reads:
first line ``dim=<d> count=<n>``, then one ``<text>\\t<f1> ... <fd>``
row per distinct input name, floats as shortest exact decimals.  The
exporter talks to the toolkit only through this format.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger("dmner_export")

POOLING_MODES = ("cls", "mean")


class ExportError(Exception):
    pass


@dataclass(frozen=True)
class ExportJob:
    names_path: Path
    model: str
    out_path: Path
    batch_size: int = 64
    pooling: str = "cls"
    normalize: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExportError(f"batch size must be >= 1, got {self.batch_size}")
        if self.pooling not in POOLING_MODES:
            raise ExportError(f"pooling must be one of {POOLING_MODES}, got {self.pooling!r}")


def read_names(path: Path) -> list[str]:
    """One surface per line; blanks skipped, duplicates dropped
    (first occurrence wins)."""
    names: list[str] = []
    seen: set[str] = set()
    for raw in path.read_text(encoding="utf-8").splitlines():
        name = raw.strip()
        if name and name not in seen:
            seen.add(name)
            names.append(name)
    return names


def _load_model(identifier: str):
    try:
        import torch
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:
        raise ExportError(f"transformers/torch not available: {exc}") from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(identifier)
        model = AutoModel.from_pretrained(identifier)
    except Exception as exc:
        raise ExportError(f"could not load model {identifier!r}: {exc}") from exc
    model.eval()
    return torch, tokenizer, model


def _encode(torch, tokenizer, model, batch: list[str], pooling: str) -> np.ndarray:
    encoded = tokenizer(batch, padding=True, truncation=True, return_tensors="pt")
    with torch.no_grad():
        hidden = model(**encoded).last_hidden_state
    if pooling == "cls":
        pooled = hidden[:, 0, :]
    else:
        mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
        pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
    return pooled.double().cpu().numpy()


def export(job: ExportJob) -> tuple[int, int]:
    """Encode every distinct name and write the store file.

    Returns (count, dim).  Inference runs in eval mode, so the output
    is deterministic for fixed weights and inputs.
    """
    names = read_names(job.names_path)
    if not names:
        raise ExportError(f"no names found in {job.names_path}")
    torch, tokenizer, model = _load_model(job.model)

    rows: list[np.ndarray] = []
    for lo in range(0, len(names), job.batch_size):
        batch = names[lo : lo + job.batch_size]
        vectors = _encode(torch, tokenizer, model, batch, job.pooling)
        for name, vec in zip(batch, vectors):
            if not np.all(np.isfinite(vec)):
                raise ExportError(f"model produced a non-finite vector for {name!r}")
            if job.normalize:
                norm = float(np.linalg.norm(vec))
                if norm == 0.0:
                    raise ExportError(f"model produced a zero vector for {name!r}")
                vec = vec / norm
            rows.append(vec)
        log.debug("encoded %d/%d", min(lo + job.batch_size, len(names)), len(names))

    dim = rows[0].shape[0]
    job.out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(job.out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"dim={dim} count={len(names)}\n")
        for name, vec in zip(names, rows):
            if "\t" in name:
                raise ExportError(f"names may not contain tabs: {name!r}")
            fh.write(name + "\t" + " ".join(repr(float(x)) for x in vec) + "\n")
    return len(names), dim
