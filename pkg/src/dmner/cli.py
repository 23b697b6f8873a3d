"""Pipeline driver.

Subcommands are individually re-runnable and coupled only through
files in the output directory:

    embed-build   embeddings.txt
    annotate      annotated.jsonl
    refine        dict-<i>.tsv, trace-<i>.jsonl
    match         pred-<i>.tsv
    ensemble      pred-ensemble.tsv
    eval          report.json, report.txt
    run-all       all of the above in order

``DMNER_LOG`` (error, info, debug) controls verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from pathlib import Path

from . import ebd, ensemble, matcher
from ._rng import MASK64
from .config import PipelineConfig, build_config
from .corpus import (
    Corpus,
    corpus_stats,
    parse_iob,
    read_phrases,
    read_predictions,
    write_predictions,
)
from .dictionary import (
    Dictionary,
    build_variants,
    init_dictionary,
    load_dictionary,
    parse_kb,
    save_dictionary,
)
from .embedding import Encoder, HashedEncoder, StoreEncoder, embed_all, load_store, save_store
from .errors import ConfigError, DmnerError
from .evaluator import dictionary_accuracy, evaluate, format_report, report_to_json
from .refine import DevExample, RefinementConfig, refine, save_trace

log = logging.getLogger("dmner")


# --- shared loading helpers -----------------------------------------------


def _read_corpus(path: Path, strict: bool) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_iob(fh, strict=strict)


def _load_corpus(cfg: PipelineConfig) -> Corpus:
    return _read_corpus(cfg.require("corpus"), cfg.strict_iob)


def _store_path(cfg: PipelineConfig) -> Path | None:
    if cfg.store is not None:
        return cfg.store
    built = cfg.out_dir / "embeddings.txt"
    return built if built.exists() else None


def _encoder(cfg: PipelineConfig) -> Encoder:
    store_path = _store_path(cfg)
    if store_path is not None:
        with open(store_path, encoding="utf-8") as fh:
            store = load_store(fh)
        fallback = cfg.store_fallback or cfg.encoder == "hashed"
        return StoreEncoder(store, fallback=fallback)
    if cfg.encoder == "store":
        raise ConfigError("encoder=store needs --store (or a prior embed-build)")
    return HashedEncoder(cfg.dim)


def _load_kb(cfg: PipelineConfig):
    if cfg.kb is None:
        return []
    with open(cfg.kb, encoding="utf-8") as fh:
        entries, duplicates = parse_kb(fh)
    if duplicates:
        log.info("dropped %d duplicate KB lines", duplicates)
    return entries


def _initial_dictionary(cfg: PipelineConfig, corpus: Corpus | None = None) -> Dictionary:
    if cfg.dict_init is not None:
        with open(cfg.dict_init, encoding="utf-8") as fh:
            return load_dictionary(fh)
    if corpus is None and cfg.corpus is not None:
        corpus = _load_corpus(cfg)
    if corpus is not None and corpus.gold:
        return init_dictionary(corpus.gold)
    raise ConfigError("need --dict-init, or a --corpus with gold annotations")


def _dev_examples(cfg: PipelineConfig) -> list[DevExample]:
    dev_corpus = _read_corpus(cfg.require("dev"), cfg.strict_iob)
    if not dev_corpus.gold:
        raise ConfigError(
            "the dev corpus has no gold entities; refinement needs them "
            "(or run with --no-dev to use the initial dictionary as-is)"
        )
    return [DevExample(e.surface, e.entity_type) for e in dev_corpus.gold]


def _mentions(cfg: PipelineConfig, corpus: Corpus):
    """(span, surface) pairs to type, from a span file or decoded
    probability tensors."""
    if cfg.spans is not None and cfg.probs is not None:
        raise ConfigError("give either --spans or --probs, not both")
    if cfg.spans is not None:
        with open(cfg.spans, encoding="utf-8") as fh:
            records = read_predictions(fh, corpus)
        return [(e.span, e.surface) for e in records]
    if cfg.probs is not None:
        with open(cfg.probs, encoding="utf-8") as fh:
            tensors = ebd.load_probabilities(fh)
        mentions = []
        for probs in tensors:
            sent = corpus.sentence(probs.sentence_id)
            if probs.n != len(sent):
                raise ConfigError(
                    f"probability record for {probs.sentence_id!r} has n={probs.n}, "
                    f"sentence has {len(sent)} tokens"
                )
            for span in ebd.decode_spans(probs, cfg.decode_threshold):
                mentions.append((span, sent.surface(span.start, span.end)))
        return mentions
    raise ConfigError("matching needs span input: --spans <file> or --probs <file>")


def _numbered(directory: Path, stem: str) -> list[Path]:
    pattern = re.compile(rf"{stem}-(\d+)\.\w+$")
    hits = []
    for path in directory.glob(f"{stem}-*"):
        m = pattern.match(path.name)
        if m:
            hits.append((int(m.group(1)), path))
    return [p for _, p in sorted(hits)]


def _write(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)


# --- subcommands -----------------------------------------------------------


def cmd_stats(cfg: PipelineConfig) -> None:
    stats = corpus_stats(_load_corpus(cfg))
    print(stats.format_table())


def cmd_embed_build(cfg: PipelineConfig) -> None:
    surfaces: set[str] = set()
    surfaces.update(e.name for e in _load_kb(cfg))
    if cfg.dict_init is not None:
        with open(cfg.dict_init, encoding="utf-8") as fh:
            surfaces.update(e.name for e in load_dictionary(fh))
    corpus = None
    if cfg.corpus is not None:
        corpus = _load_corpus(cfg)
        surfaces.update(e.surface for e in corpus.gold)
        if cfg.spans is not None or cfg.probs is not None:
            surfaces.update(surface for _, surface in _mentions(cfg, corpus))
    if cfg.dev is not None:
        dev_corpus = _read_corpus(cfg.dev, cfg.strict_iob)
        surfaces.update(e.surface for e in dev_corpus.gold)
    if not surfaces:
        raise ConfigError("nothing to embed: no KB, dictionary, corpus or dev input given")

    if cfg.encoder == "store":
        with open(cfg.require("store", "the source store to subset"), encoding="utf-8") as fh:
            source: Encoder = StoreEncoder(load_store(fh), fallback=cfg.store_fallback)
    else:
        source = HashedEncoder(cfg.dim)
    store = embed_all(sorted(surfaces), source)

    out = cfg.out_dir / "embeddings.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        save_store(store, fh)
    print(f"wrote {out} ({len(store)} vectors, dim {store.dim})")


def cmd_annotate(cfg: PipelineConfig) -> None:
    corpus = _load_corpus(cfg)
    gold_by_sentence: dict[str, list] = {}
    for ent in corpus.gold:
        gold_by_sentence.setdefault(ent.span.sentence_id, []).append(ent)

    trusted_dict = None
    if not corpus.gold:
        trusted_dict = _initial_dictionary(cfg, corpus)

    phrases = []
    if cfg.phrase_list is not None:
        with open(cfg.phrase_list, encoding="utf-8") as fh:
            phrases = read_phrases(fh)
    kb_names = [e.name for e in _load_kb(cfg)]

    llm_runs = None
    if cfg.use_llm:
        llm_runs = ebd.load_llm_runs(cfg.require("llm_runs", "required when use_llm is on"))

    annotated = []
    for sent in corpus.sentences:
        if corpus.gold:
            trusted = tuple(gold_by_sentence.get(sent.id, ()))
        else:
            trusted = ebd.distant_annotate(sent, trusted_dict).trusted

        mined = ebd.mine_spans(sent, phrases) + ebd.mine_spans(sent, kb_names)

        llm_spans = []
        if llm_runs is not None:
            per_run = [
                ebd.align_names_to_spans(sent, ebd.parse_llm_answer(answers.get(sent.id, "")))
                for answers in llm_runs
            ]
            llm_spans = ebd.vote_llm_annotations(per_run)

        annotated.append(
            ebd.merge_unknowns(
                sent, trusted, llm_spans, mined,
                use_llm=cfg.use_llm, use_kb=cfg.use_kb_unknowns,
            )
        )

    out = cfg.out_dir / "annotated.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        ebd.save_annotations(annotated, fh)
    trusted_n, unknown_n = ebd.annotation_counts(annotated)
    print(f"wrote {out} ({trusted_n} trusted entities, {unknown_n} unknown spans)")


def cmd_refine(cfg: PipelineConfig) -> None:
    d_init = _initial_dictionary(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for stale in _numbered(cfg.out_dir, "dict") + _numbered(cfg.out_dir, "trace"):
        stale.unlink()

    if cfg.no_dev:
        out = cfg.out_dir / "dict-1.tsv"
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            save_dictionary(d_init, fh)
        print(f"wrote {out} ({len(d_init)} entries, no refinement without dev gold)")
        return

    dev = _dev_examples(cfg)
    kb = _load_kb(cfg)
    encoder = _encoder(cfg)
    seed = cfg.require_seed()

    for i, variant in enumerate(build_variants(kb, cfg.k, seed), start=1):
        run_config = RefinementConfig(
            threshold_t=cfg.t,
            iterations=cfg.iter,
            batch_size=cfg.batch_size,
            rng_seed=(seed + i - 1) & MASK64,
        )
        refined, trace = refine(d_init, variant, dev, encoder, run_config)
        dict_path = cfg.out_dir / f"dict-{i}.tsv"
        with open(dict_path, "w", encoding="utf-8", newline="\n") as fh:
            save_dictionary(refined, fh)
        trace_path = cfg.out_dir / f"trace-{i}.jsonl"
        with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
            save_trace(trace, fh)
        print(
            f"wrote {dict_path} ({len(d_init)} -> {len(refined)} entries, "
            f"dev accuracy {trace.initial_accuracy:.4f} -> {trace.final_accuracy:.4f})"
        )


def cmd_match(cfg: PipelineConfig) -> None:
    corpus = _load_corpus(cfg)
    mentions = _mentions(cfg, corpus)
    encoder = _encoder(cfg)

    dict_paths = _numbered(cfg.out_dir, "dict")
    if not dict_paths:
        if cfg.dict_init is None:
            raise ConfigError("no refined dictionaries in the output directory and no --dict-init")
        dict_paths = [cfg.dict_init]

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for stale in _numbered(cfg.out_dir, "pred"):
        stale.unlink()
    for i, dict_path in enumerate(dict_paths, start=1):
        with open(dict_path, encoding="utf-8") as fh:
            dictionary = load_dictionary(fh)
        typed = matcher.batch_match(mentions, dictionary, encoder, corpus.tagging_space)
        rows = sorted(set(typed), key=lambda e: e.key)
        out = cfg.out_dir / f"pred-{i}.tsv"
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            write_predictions(rows, fh)
        print(f"wrote {out} ({len(rows)} predictions from {len(mentions)} spans)")


def cmd_ensemble(cfg: PipelineConfig) -> None:
    pred_paths = _numbered(cfg.out_dir, "pred")
    if not pred_paths:
        raise ConfigError(f"no pred-<i>.tsv files in {cfg.out_dir}; run match first")
    dict_paths = _numbered(cfg.out_dir, "dict")
    if dict_paths and len(dict_paths) != len(pred_paths):
        raise ConfigError(
            f"{len(dict_paths)} dictionaries but {len(pred_paths)} prediction sets"
        )

    corpus = _load_corpus(cfg) if cfg.corpus is not None else None
    runs = []
    for path in pred_paths:
        with open(path, encoding="utf-8") as fh:
            runs.append(read_predictions(fh, corpus))
    voted = ensemble.vote(runs, cfg.vote_threshold)
    out = cfg.out_dir / "pred-ensemble.tsv"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        write_predictions(voted, fh)
    print(f"wrote {out} ({len(voted)} predictions from {len(runs)} runs)")


def cmd_eval(cfg: PipelineConfig) -> None:
    corpus = _load_corpus(cfg)
    pred_path = cfg.pred if cfg.pred is not None else cfg.out_dir / "pred-ensemble.tsv"
    if not pred_path.exists():
        raise ConfigError(f"no predictions at {pred_path}; run match/ensemble or pass --pred")
    with open(pred_path, encoding="utf-8") as fh:
        pred = read_predictions(fh, corpus)
    report = evaluate(pred, corpus.gold)

    accuracies = None
    if cfg.dev is not None:
        dev = _dev_examples(cfg)
        encoder = _encoder(cfg)
        dict_paths = _numbered(cfg.out_dir, "dict")
        if not dict_paths and cfg.dict_init is not None:
            dict_paths = [cfg.dict_init]
        if dict_paths:
            accuracies = []
            for path in dict_paths:
                with open(path, encoding="utf-8") as fh:
                    accuracies.append(dictionary_accuracy(dev, load_dictionary(fh), encoder))

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write(cfg.out_dir / "report.json", report_to_json(report, accuracies))
    _write(cfg.out_dir / "report.txt", format_report(report, accuracies))
    print(format_report(report, accuracies), end="")


def cmd_run_all(cfg: PipelineConfig) -> None:
    cmd_embed_build(cfg)
    if cfg.dict_init is not None or cfg.corpus is not None:
        cmd_annotate(cfg)
    cmd_refine(cfg)
    cmd_match(cfg)
    cmd_ensemble(cfg)
    cmd_eval(cfg)


COMMANDS = {
    "embed-build": cmd_embed_build,
    "annotate": cmd_annotate,
    "refine": cmd_refine,
    "match": cmd_match,
    "ensemble": cmd_ensemble,
    "eval": cmd_eval,
    "stats": cmd_stats,
    "run-all": cmd_run_all,
}

_OVERRIDE_KEYS = (
    "corpus", "dev", "kb", "dict_init", "phrase_list", "llm_runs", "store",
    "spans", "probs", "pred", "out_dir", "encoder", "dim", "store_fallback",
    "seed", "t", "iter", "batch_size", "k", "vote_threshold",
    "decode_threshold", "use_llm", "use_kb_unknowns", "strict_iob", "no_dev",
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmner",
        description="Two-stage NER: span sources plus nearest-dictionary-entry typing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=(func.__doc__ or "").strip() or None)
        p.add_argument("--config", type=Path, help="key = value settings file")
        for key in ("corpus", "dev", "kb", "dict-init", "phrase-list", "llm-runs",
                    "store", "spans", "probs", "pred", "out-dir"):
            p.add_argument(f"--{key}", type=Path)
        for key in ("dim", "seed", "k", "t", "iter", "batch-size"):
            p.add_argument(f"--{key}", type=int)
        for key in ("vote-threshold", "decode-threshold"):
            p.add_argument(f"--{key}", type=float)
        p.add_argument("--encoder", choices=("hashed", "store"))
        for key in ("use-llm", "use-kb-unknowns", "store-fallback", "strict-iob"):
            p.add_argument(f"--{key}", action=argparse.BooleanOptionalAction, default=None)
        p.add_argument("--no-dev", dest="no_dev", action="store_const", const=True,
                       default=None, help="skip refinement, use the initial dictionary")
    return parser


def _setup_logging() -> None:
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    raw = os.environ.get("DMNER_LOG", "info").lower()
    if raw not in levels:
        print(f"warning: DMNER_LOG={raw!r} not one of {sorted(levels)}; using info",
              file=sys.stderr)
        raw = "info"
    logging.basicConfig(level=levels[raw], format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    overrides = {key: getattr(args, key) for key in _OVERRIDE_KEYS}
    try:
        cfg = build_config(args.config, overrides)
        COMMANDS[args.command](cfg)
    except (DmnerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
