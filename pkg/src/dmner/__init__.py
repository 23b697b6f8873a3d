"""Two-stage NER toolkit: entity spans are supplied (files, distant
annotation, LLM answers) and typed by nearest-neighbor matching against
an embedding-indexed dictionary, with greedy dictionary refinement,
tagging-space filtering and multi-dictionary vote ensembling."""

from .corpus import (
    Corpus,
    Sentence,
    Span,
    TaggingSpace,
    Token,
    TypedEntity,
    corpus_stats,
    parse_iob,
    read_phrases,
    read_predictions,
    write_iob,
    write_predictions,
)
from .dictionary import (
    DictEntry,
    Dictionary,
    build_variants,
    init_dictionary,
    load_dictionary,
    parse_kb,
    save_dictionary,
)
from .ebd import (
    AnnotatedSentence,
    MaskedLosses,
    SpanLabels,
    SpanProbabilities,
    align_names_to_spans,
    decode_spans,
    distant_annotate,
    masked_losses,
    merge_unknowns,
    mine_spans,
    parse_llm_answer,
    vote_llm_annotations,
)
from .embedding import (
    EmbeddingStore,
    HashedEncoder,
    StoreEncoder,
    cosine,
    embed_all,
    embed_hashed,
    load_store,
    save_store,
)
from .ensemble import vote
from .errors import ConfigError, DmnerError, MissingEmbeddingError, ParseError
from .evaluator import EvalReport, dictionary_accuracy, evaluate
from .matcher import DictionaryIndex, MatchResult, batch_match, nearest, type_span
from .refine import DevExample, RefinementConfig, RefinementTrace, refine

__version__ = "0.1.0"
