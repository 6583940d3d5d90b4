"""Embedding exporter: runs a bidirectional-transformer encoder over a
prescription-sentence dataset and writes EMB1 files with one pooled vector
per sentence and one pooled vector per located drug span."""

from rxemb.encoder import Encoder, load_encoder, reference_encoder
from rxemb.export import ExportJob, ExportSummary, export_embeddings, read_dataset
from rxemb.lexicon import find_drug_spans, load_lexicon, tokenize_with_offsets
from rxemb.pooling import (
    SentenceEncoding,
    encode_sentences,
    sentence_vector,
    span_vector,
)

__version__ = "0.1.0"

__all__ = [
    "Encoder",
    "ExportJob",
    "ExportSummary",
    "SentenceEncoding",
    "encode_sentences",
    "export_embeddings",
    "find_drug_spans",
    "load_encoder",
    "load_lexicon",
    "read_dataset",
    "reference_encoder",
    "sentence_vector",
    "span_vector",
    "tokenize_with_offsets",
]
