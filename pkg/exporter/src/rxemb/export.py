"""Dataset-to-EMB1 export driver.

Reads a sentence-pair dataset (JSON lines with id/text_a/text_b), encodes
every sentence, locates lexicon drugs by character offsets, and writes one
sentence vector plus one vector per located (sentence, drug) span. Spans
the tokenizer cannot align (e.g. truncated away) fall back to the sentence
vector, with a warning and a comment flag in the output file.
"""

import json
import warnings
from dataclasses import dataclass

from rxemb.emb1 import write_emb1
from rxemb.encoder import Encoder, load_encoder
from rxemb.lexicon import find_drug_spans, load_lexicon
from rxemb.pooling import encode_sentences, sentence_vector, span_vector


@dataclass
class ExportJob:
    dataset: str
    lexicon: str
    encoder_id: str
    out: str
    batch_size: int = 16
    device: str = None


@dataclass
class ExportSummary:
    out: str
    dim: int
    n_sentences: int
    n_spans: int
    n_fallbacks: int


def read_dataset(path) -> list:
    """JSONL rows with at least id/text_a/text_b -> [(pair_id, text_a, text_b)]."""
    rows = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: invalid JSON") from exc
            if not isinstance(doc, dict):
                raise ValueError(f"{where}: expected a JSON object")
            for field in ("id", "text_a", "text_b"):
                if not isinstance(doc.get(field), str) or not doc[field].strip():
                    raise ValueError(f"{where}: missing or empty field {field!r}")
            pid = doc["id"]
            if any(ch.isspace() for ch in pid):
                raise ValueError(f"{where}: pair id {pid!r} contains whitespace")
            if pid in seen:
                raise ValueError(f"{where}: duplicate pair id {pid!r}")
            seen.add(pid)
            rows.append((pid, doc["text_a"], doc["text_b"]))
    return rows


def _sentences(rows) -> list:
    """One (sentence_id, text) per pair side: '<id>/a' and '<id>/b'."""
    out = []
    for pid, text_a, text_b in rows:
        out.append((f"{pid}/a", text_a))
        out.append((f"{pid}/b", text_b))
    return out


def export_embeddings(dataset, lexicon, encoder, out, batch_size: int = 16) -> ExportSummary:
    """Run the full export; `encoder` is an Encoder or a model id string."""
    if not isinstance(encoder, Encoder):
        encoder = load_encoder(str(encoder))
    rows = read_dataset(dataset)
    names = load_lexicon(lexicon)
    sentences = _sentences(rows)

    encodings = encode_sentences(encoder, [text for _, text in sentences], batch_size)

    sentence_vectors = {}
    drug_span_vectors = {}
    fallbacks = []
    for (sid, text), encoding in zip(sentences, encodings):
        s_vec = sentence_vector(encoding)
        sentence_vectors[sid] = s_vec
        for drug, start, end in find_drug_spans(text, names):
            key = (sid, drug)
            if key in drug_span_vectors:
                continue  # first occurrence wins
            vec = span_vector(encoding, start, end)
            if vec is None:
                warnings.warn(
                    f"drug {drug!r} in sentence {sid!r} has no aligned tokens; "
                    "falling back to the sentence vector"
                )
                fallbacks.append(f"fallback {sid} {drug}")
                vec = s_vec
            drug_span_vectors[key] = vec

    write_emb1(out, encoder.hidden_size, sentence_vectors, drug_span_vectors,
               comments=fallbacks)
    return ExportSummary(
        out=str(out),
        dim=encoder.hidden_size,
        n_sentences=len(sentence_vectors),
        n_spans=len(drug_span_vectors),
        n_fallbacks=len(fallbacks),
    )


def run_job(job: ExportJob) -> ExportSummary:
    encoder = load_encoder(job.encoder_id, device=job.device)
    return export_embeddings(job.dataset, job.lexicon, encoder, job.out,
                             batch_size=job.batch_size)
