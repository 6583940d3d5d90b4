"""Encoder handles: a tokenizer/model pair plus pooling configuration.

`load_encoder` wraps any Hugging Face model id or local path holding a
bidirectional-transformer encoder with a fast tokenizer. `reference_encoder`
builds a miniature deterministic encoder in-process (character-level
WordPiece vocabulary, 4 tiny layers) for tests and smoke runs — no network,
hand-inspectable states.
"""

import os
import tempfile
from dataclasses import dataclass

import torch
from transformers import AutoModel, AutoTokenizer, BertConfig, BertModel, BertTokenizerFast

REFERENCE_NAME = "reference"

_SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
_CHARS = list("abcdefghijklmnopqrstuvwxyz0123456789") + [".", ",", "/", "%", "-"]


@dataclass
class Encoder:
    tokenizer: object
    model: object
    name: str
    hidden_size: int
    max_length: int
    pool_layers: int = 4

    def __post_init__(self):
        self.model.eval()


def reference_encoder(seed: int = 0) -> Encoder:
    """Deterministic miniature encoder: char-level WordPiece vocabulary,
    hidden size 16, 4 encoder layers, seeded random weights."""
    vocab = _SPECIALS + _CHARS + ["##" + c for c in _CHARS]
    with tempfile.TemporaryDirectory() as tmp:
        with open(os.path.join(tmp, "vocab.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(vocab) + "\n")
        tokenizer = BertTokenizerFast.from_pretrained(tmp)
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=16,
        num_hidden_layers=4,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=128,
    )
    model = BertModel(config)
    return Encoder(
        tokenizer=tokenizer,
        model=model,
        name=f"{REFERENCE_NAME}-seed{seed}",
        hidden_size=config.hidden_size,
        max_length=config.max_position_embeddings,
    )


def load_encoder(model_id: str, device=None) -> Encoder:
    """Wrap a pretrained encoder; `reference` builds the miniature one."""
    if model_id == REFERENCE_NAME:
        return reference_encoder()
    tokenizer = AutoTokenizer.from_pretrained(model_id, use_fast=True)
    model = AutoModel.from_pretrained(model_id)
    if device is not None:
        model = model.to(device)
    max_length = int(min(getattr(model.config, "max_position_embeddings", 512), 512))
    return Encoder(
        tokenizer=tokenizer,
        model=model,
        name=model_id,
        hidden_size=int(model.config.hidden_size),
        max_length=max_length,
    )
