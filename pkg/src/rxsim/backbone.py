"""Pluggable sentence-pair scorers standing in for a fine-tuned encoder.

Two built-ins share one training path: a self-contained lexical scorer
(token/trigram/hashed-bag features with an affine calibration) and an
embedding-backed scorer (sentence-vector cosine over a precomputed
store). Training fits only the calibration vector; pair features are
fixed, so the loss is an exact least-squares objective.
"""

import copy
import hashlib
import math
import re
from abc import ABC, abstractmethod

import numpy as np

from .data import sentence_ids
from .embeddings import EmbeddingStore, read_emb1
from .serialize import read_checkpoint, write_checkpoint

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> list:
    return _TOKEN_RE.findall(text.lower())


def _trigrams(text: str) -> dict:
    norm = " ".join(_tokens(text))
    counts = {}
    for k in range(len(norm) - 2):
        gram = norm[k : k + 3]
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def _counts_cosine(a: dict, b: dict) -> float:
    if not a or not b:
        return 0.0
    dot = sum(v * b[k] for k, v in a.items() if k in b)
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return dot / (na * nb) if na > 0 and nb > 0 else 0.0


def _hashed_bow(tokens, dim: int) -> np.ndarray:
    vec = np.zeros(dim)
    for tok in tokens:
        h = int.from_bytes(hashlib.md5(tok.encode("utf-8")).digest(), "little")
        sign = 1.0 if (h >> 64) & 1 else -1.0
        vec[h % dim] += sign
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def _vec_cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(u @ v / (nu * nv))


class BackboneScorer(ABC):
    """Fixed pair features plus a trainable affine calibration."""

    params: np.ndarray  # feature weights followed by the bias

    @abstractmethod
    def pair_features(self, pair) -> np.ndarray:
        """Symmetric feature vector for one sentence pair."""

    def raw_score(self, pair) -> float:
        feats = self.pair_features(pair)
        return float(feats @ self.params[:-1] + self.params[-1])

    def score_pair(self, pair, clamp: bool = True) -> float:
        raw = self.raw_score(pair)
        return min(max(raw, 0.0), 5.0) if clamp else raw

    def clone(self):
        return copy.deepcopy(self)


class LexicalScorer(BackboneScorer):
    """Token Jaccard, character-trigram cosine, hashed bag-of-words cosine,
    plus hashed sum/absolute-difference blocks that give the calibration
    enough capacity to absorb per-pair pseudo-label signal."""

    kind = "lexical"

    def __init__(self, hash_dim: int = 128, params=None):
        self.hash_dim = hash_dim
        n_feats = 3 + 2 * hash_dim
        if params is None:
            self.params = np.zeros(n_feats + 1)
        else:
            self.params = np.asarray(params, dtype=np.float64)
            if self.params.shape != (n_feats + 1,):
                raise ValueError(f"expected {n_feats + 1} calibration values")

    def pair_features(self, pair) -> np.ndarray:
        toks_a, toks_b = _tokens(pair.text_a), _tokens(pair.text_b)
        set_a, set_b = set(toks_a), set(toks_b)
        union = set_a | set_b
        jaccard = len(set_a & set_b) / len(union) if union else 0.0
        tri = _counts_cosine(_trigrams(pair.text_a), _trigrams(pair.text_b))
        u = _hashed_bow(toks_a, self.hash_dim)
        v = _hashed_bow(toks_b, self.hash_dim)
        return np.concatenate([[jaccard, tri, float(u @ v)], (u + v) / 2.0, np.abs(u - v) / 2.0])


class EmbeddingScorer(BackboneScorer):
    """Sentence-vector cosine from an EmbeddingStore, affine-calibrated.

    The default calibration maps cosine 1 to 5 and cosine -1 to 0, so an
    identical pair scores the maximum out of the box."""

    kind = "embedding"

    def __init__(self, store: EmbeddingStore, params=None):
        self.store = store
        self.params = np.array([2.5, 2.5]) if params is None else np.asarray(params, dtype=np.float64)
        if self.params.shape != (2,):
            raise ValueError("embedding scorer calibration is (weight, bias)")

    def pair_features(self, pair) -> np.ndarray:
        sid_a, sid_b = sentence_ids(pair)
        for sid in (sid_a, sid_b):
            if sid not in self.store.sentence_vectors:
                raise KeyError(f"embedding store has no sentence vector for {sid!r}")
        cos = _vec_cosine(
            self.store.sentence_vectors[sid_a].astype(np.float64),
            self.store.sentence_vectors[sid_b].astype(np.float64),
        )
        return np.array([cos])


def load_embedding_store(path) -> EmbeddingStore:
    return read_emb1(path)


def _design_matrix(scorer: BackboneScorer, pairs) -> np.ndarray:
    rows = [scorer.pair_features(p) for p in pairs]
    feats = np.asarray(rows, dtype=np.float64).reshape(len(pairs), -1)
    return np.concatenate([feats, np.ones((len(pairs), 1))], axis=1)


def backbone_loss(scorer: BackboneScorer, train_examples, test_examples, gamma_b: float) -> float:
    """L_B = MSE over labeled pairs + gamma_b * MSE against pseudo labels."""
    loss = 0.0
    if train_examples:
        resid = [scorer.raw_score(p) - y for p, y in train_examples]
        loss += float(np.mean(np.square(resid)))
    if gamma_b > 0.0 and test_examples:
        resid = [scorer.raw_score(p) - y for p, y in test_examples]
        loss += gamma_b * float(np.mean(np.square(resid)))
    return loss


def train_backbone(scorer: BackboneScorer, train_examples, test_examples=(),
                   gamma_b: float = 0.5, epochs: int = 200, lr: float = 0.02,
                   optimizer: str = "adam"):
    """Fit the calibration by full-batch descent on the co-training loss.

    train_examples / test_examples: (pair, target) sequences, gold on the
    train side and the other network's pseudo labels on the test side.
    Returns (trained copy, per-epoch loss trace). Adam is the default
    because the hashed feature blocks are poorly conditioned under plain
    gradient descent; optimizer="gd" gives the plain variant.
    """
    if gamma_b < 0:
        raise ValueError("gamma_b must be >= 0")
    if optimizer not in ("adam", "gd"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    scorer = scorer.clone()
    if epochs == 0:
        return scorer, []

    F_tr = _design_matrix(scorer, [p for p, _ in train_examples]) if train_examples else None
    y_tr = np.array([y for _, y in train_examples], dtype=np.float64)
    use_pseudo = gamma_b > 0.0 and len(test_examples) > 0
    F_te = _design_matrix(scorer, [p for p, _ in test_examples]) if use_pseudo else None
    y_te = np.array([y for _, y in test_examples], dtype=np.float64) if use_pseudo else None

    theta = scorer.params.copy()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    trace = []
    for epoch in range(epochs):
        loss = 0.0
        grad = np.zeros_like(theta)
        if F_tr is not None and len(y_tr):
            r = F_tr @ theta - y_tr
            loss += float(np.mean(r ** 2))
            grad += 2.0 * (F_tr.T @ r) / len(y_tr)
        if use_pseudo:
            r = F_te @ theta - y_te
            loss += gamma_b * float(np.mean(r ** 2))
            grad += gamma_b * 2.0 * (F_te.T @ r) / len(y_te)
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite backbone loss at epoch {epoch} (lr={lr})")
        trace.append(loss)
        if optimizer == "adam":
            m = beta1 * m + (1 - beta1) * grad
            v = beta2 * v + (1 - beta2) * grad ** 2
            m_hat = m / (1 - beta1 ** (epoch + 1))
            v_hat = v / (1 - beta2 ** (epoch + 1))
            theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
        else:
            theta = theta - lr * grad
    scorer.params = theta
    return scorer, trace


def save_backbone_checkpoint(scorer: BackboneScorer, path) -> None:
    payload = {"scorer": scorer.kind, "params": scorer.params.tolist()}
    if isinstance(scorer, LexicalScorer):
        payload["hash_dim"] = scorer.hash_dim
    write_checkpoint(path, "backbone", payload)


def load_backbone_checkpoint(path, store: EmbeddingStore = None) -> BackboneScorer:
    payload = read_checkpoint(path, "backbone")
    if payload["scorer"] == "lexical":
        return LexicalScorer(hash_dim=payload["hash_dim"], params=payload["params"])
    if payload["scorer"] == "embedding":
        if store is None:
            raise ValueError("embedding scorer checkpoint needs an embedding store")
        return EmbeddingScorer(store, params=payload["params"])
    raise ValueError(f"unknown scorer kind {payload['scorer']!r}")
