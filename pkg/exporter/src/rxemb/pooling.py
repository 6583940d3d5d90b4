"""Hidden-state pooling.

Per sentence, two token matrices are kept: the final encoder layer (used
for the pooled sentence vector: mean over real tokens) and the mean of the
last four encoder layers (used for drug-span vectors: layer mean per token
first, then mean over the span's subword tokens). Character offsets from
the fast tokenizer drive span alignment.
"""

from dataclasses import dataclass

import numpy as np
import torch


@dataclass
class SentenceEncoding:
    """Per-token vectors and alignment data for one sentence."""

    token_last: np.ndarray  # (n_tokens, hidden) final-layer states, float32
    token_pooled: np.ndarray  # (n_tokens, hidden) last-k-layer mean, float32
    offsets: list  # (char_start, char_end) per token
    special: list  # True for [CLS]/[SEP]-style tokens


def encode_sentences(encoder, texts, batch_size: int = 16) -> list:
    """Run the encoder over `texts`; fixed-length padding keeps a sentence's
    states independent of which batch it lands in."""
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    out = []
    for lo in range(0, len(texts), batch_size):
        out.extend(_encode_batch(encoder, texts[lo:lo + batch_size]))
    return out


def _encode_batch(encoder, texts) -> list:
    enc = encoder.tokenizer(
        list(texts),
        return_offsets_mapping=True,
        return_special_tokens_mask=True,
        padding="max_length",
        truncation=True,
        max_length=encoder.max_length,
        return_tensors="pt",
    )
    device = next(encoder.model.parameters()).device
    with torch.inference_mode():
        result = encoder.model(
            input_ids=enc["input_ids"].to(device),
            attention_mask=enc["attention_mask"].to(device),
            output_hidden_states=True,
        )
    # hidden_states[0] is the embedding output; encoder layers follow
    layers = result.hidden_states[1:]
    k = min(encoder.pool_layers, len(layers))
    pooled = torch.stack(layers[-k:], dim=0).mean(dim=0)
    last = layers[-1]

    encodings = []
    for row in range(len(texts)):
        n_real = int(enc["attention_mask"][row].sum())
        encodings.append(
            SentenceEncoding(
                token_last=last[row, :n_real].cpu().numpy().astype(np.float32),
                token_pooled=pooled[row, :n_real].cpu().numpy().astype(np.float32),
                offsets=[tuple(map(int, o)) for o in enc["offset_mapping"][row][:n_real]],
                special=[bool(int(s)) for s in enc["special_tokens_mask"][row][:n_real]],
            )
        )
    return encodings


def _content_rows(encoding: SentenceEncoding) -> list:
    return [i for i, s in enumerate(encoding.special) if not s]


def sentence_vector(encoding: SentenceEncoding) -> np.ndarray:
    """Mean of the final-layer states over the sentence's real tokens."""
    rows = _content_rows(encoding)
    if not rows:
        raise ValueError("sentence produced no content tokens")
    return encoding.token_last[rows].mean(axis=0).astype(np.float32)


def span_vector(encoding: SentenceEncoding, start: int, end: int):
    """Mean of the last-k-layer token means over the subword tokens covering
    character range [start, end); None when no token overlaps the span."""
    rows = [
        i
        for i in _content_rows(encoding)
        if encoding.offsets[i][0] < end and encoding.offsets[i][1] > start
    ]
    if not rows:
        return None
    return encoding.token_pooled[rows].mean(axis=0).astype(np.float32)
