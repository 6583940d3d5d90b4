"""Drug-graph construction: node set, initial embeddings, weighted adjacency.

Edge weights mix three sources: annotated pair labels (ground), backbone
predictions over the whole dataset (pseudo) and ontology-derived medical
weights. A sentence pair contributes to a drug pair (i, j) when i occurs
in one sentence and j in the other; same-sentence co-occurrence alone
does not count, and self-loops are excluded.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EdgeProvenance:
    w_ground: float
    n_ground: int
    w_pseudo: float
    n_pseudo: int
    w_ontology: float
    weight: float


@dataclass
class DrugGraph:
    drugs: list
    X: np.ndarray
    W: np.ndarray
    A: np.ndarray
    edge_mask: np.ndarray
    provenance: dict = field(default_factory=dict)
    mode: str = "local"
    normalization: str = "row"
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {d: k for k, d in enumerate(self.drugs)}

    @property
    def n(self) -> int:
        return len(self.drugs)


def collect_drug_nodes(pair_drugs) -> list:
    """Sorted, deduplicated drug names across all sentence pairs."""
    names = set()
    for drugs_a, drugs_b in pair_drugs:
        names.update(drugs_a)
        names.update(drugs_b)
    return sorted(names)


def _hash_seed(drug: str) -> int:
    digest = hashlib.sha256(drug.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def fallback_embedding(drug: str, dim: int) -> np.ndarray:
    """Deterministic hash-seeded unit vector for a drug name."""
    rng = np.random.default_rng(_hash_seed(drug))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def init_node_embeddings(drugs, occurrences, store=None, dim=32) -> np.ndarray:
    """Initial embedding matrix X, one row per drug.

    With an EmbeddingStore: mean of the drug-span vectors over the
    sentences containing the drug. Without: hash-seeded unit vectors of
    the configured dimension.
    """
    if store is None:
        X = np.stack([fallback_embedding(d, dim) for d in drugs]) if drugs else np.zeros((0, dim))
        return X.astype(np.float64)
    rows = []
    for drug in drugs:
        sids = occurrences.get(drug, [])
        if not sids:
            raise KeyError(f"drug {drug!r} occurs in no sentence")
        vecs = []
        for sid in sids:
            key = (sid, drug)
            if key not in store.drug_span_vectors:
                raise KeyError(f"embedding store has no span vector for drug {drug!r} in sentence {sid!r}")
            vecs.append(store.drug_span_vectors[key].astype(np.float64))
        rows.append(np.mean(vecs, axis=0))
    return np.stack(rows) if rows else np.zeros((0, store.dim))


def _induced_drug_pairs(drugs_a, drugs_b):
    """Unordered cross-sentence drug pairs for one sentence pair."""
    pairs = set()
    for a in drugs_a:
        for b in drugs_b:
            if a != b:
                pairs.add((a, b) if a < b else (b, a))
    return sorted(pairs)


def accumulate_pair_values(pair_records, values) -> dict:
    """Sum and count of pair values per drug pair, in dataset order.

    pair_records: iterable of (pair_id, drugs_a, drugs_b); values maps
    pair_id -> score. Pairs missing from values are skipped.
    """
    acc = {}
    for pair_id, drugs_a, drugs_b in pair_records:
        if pair_id not in values:
            continue
        y = values[pair_id]
        for key in _induced_drug_pairs(drugs_a, drugs_b):
            total, count = acc.get(key, (0.0, 0))
            acc[key] = (total + y, count + 1)
    return acc


def ground_weight(drug_i, drug_j, labeled_pairs):
    """Mean annotated score over training pairs containing the drug pair."""
    return _mean_over_pairs(drug_i, drug_j, labeled_pairs)


def pseudo_weight(drug_i, drug_j, predicted_pairs):
    """Mean predicted score over all dataset pairs containing the drug pair."""
    return _mean_over_pairs(drug_i, drug_j, predicted_pairs)


def _mean_over_pairs(drug_i, drug_j, pairs):
    key = (drug_i, drug_j) if drug_i < drug_j else (drug_j, drug_i)
    total = 0.0
    count = 0
    for drugs_a, drugs_b, value in pairs:
        if key in _induced_drug_pairs(drugs_a, drugs_b):
            total += value
            count += 1
    return (total / count if count else None), count


def combine_local(w_ground, n_ground, w_pseudo, n_pseudo, alpha: float):
    """Convex mix of ground and pseudo weights; None means no edge."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if n_ground > 0 and n_pseudo > 0:
        return (1.0 - alpha) * w_ground + alpha * w_pseudo
    if n_pseudo > 0:
        return w_pseudo
    if n_ground > 0:
        return w_ground
    return None


def combine_medical(w_ground, n_ground, w_pseudo, n_pseudo, w_ontology, alpha: float, beta: float):
    """Ground/pseudo/ontology mix; with beta=0 this reduces exactly to combine_local.

    The ontology term participates only when beta > 0, so a beta of 0
    disables it entirely (including for pairs with no local evidence,
    which then stay out of the edge set, matching the local graph).
    """
    if not 0.0 <= alpha <= 1.0 or not 0.0 <= beta <= 1.0:
        raise ValueError("alpha and beta must lie in [0, 1]")
    has_pseudo = n_pseudo > 0
    has_ontology = beta > 0.0
    if has_pseudo and has_ontology:
        side = (1.0 - beta) * w_pseudo + beta * w_ontology
    elif has_pseudo:
        side = w_pseudo
    elif has_ontology:
        side = w_ontology
    else:
        side = None

    if n_ground > 0 and side is not None:
        return (1.0 - alpha) * w_ground + alpha * side
    if side is not None:
        return side
    if n_ground > 0:
        return w_ground
    return None


def build_adjacency(drugs, X, weights, provenance, mode: str, normalization: str = "row") -> DrugGraph:
    """Assemble the symmetric weight matrix and the aggregation matrix.

    weights maps (drug_i, drug_j) with i < j to a final edge weight; row
    normalization divides each row of W by its sum, leaving zero rows as
    zero. The raw W is kept alongside the normalized A.
    """
    if normalization not in ("none", "row"):
        raise ValueError(f"unknown normalization {normalization!r}")
    n = len(drugs)
    index = {d: k for k, d in enumerate(drugs)}
    W = np.zeros((n, n), dtype=np.float64)
    mask = np.zeros((n, n), dtype=bool)
    for (di, dj), w in weights.items():
        i, j = index[di], index[dj]
        W[i, j] = W[j, i] = w
        mask[i, j] = mask[j, i] = True
    if normalization == "row":
        sums = W.sum(axis=1, keepdims=True)
        A = np.divide(W, sums, out=np.zeros_like(W), where=sums > 0)
    else:
        A = W.copy()
    return DrugGraph(
        drugs=list(drugs), X=X, W=W, A=A, edge_mask=mask,
        provenance=dict(provenance), mode=mode, normalization=normalization,
    )


def build_drug_graph(
    drugs,
    X,
    pair_records,
    train_labels,
    predictions,
    mode: str = "local",
    alpha: float = 0.2,
    beta: float = 0.5,
    ontology_weights=None,
    normalization: str = "row",
) -> DrugGraph:
    """Full graph build from pair attributions, labels/predictions and ontology weights.

    pair_records: (pair_id, drugs_a, drugs_b) for the whole dataset D;
    train_labels: pair_id -> gold for D_tr; predictions: pair_id -> backbone
    score over D; ontology_weights: (i, j) -> w_o for i < j (medical mode).
    """
    if mode not in ("local", "medical"):
        raise ValueError(f"unknown graph mode {mode!r}")
    if mode == "medical" and ontology_weights is None:
        raise ValueError("medical mode needs ontology weights")

    ground_acc = accumulate_pair_values(pair_records, train_labels)
    pseudo_acc = accumulate_pair_values(pair_records, predictions)

    candidates = set(ground_acc) | set(pseudo_acc)
    if mode == "medical" and beta > 0.0:
        candidates |= {k for k, w in ontology_weights.items() if w > 0.0}

    weights = {}
    provenance = {}
    for key in sorted(candidates):
        g_sum, n_g = ground_acc.get(key, (0.0, 0))
        p_sum, n_p = pseudo_acc.get(key, (0.0, 0))
        w_g = g_sum / n_g if n_g else 0.0
        w_p = p_sum / n_p if n_p else 0.0
        if mode == "local":
            w = combine_local(w_g if n_g else None, n_g, w_p if n_p else None, n_p, alpha)
            w_o = 0.0
        else:
            w_o = ontology_weights.get(key, 0.0)
            w = combine_medical(
                w_g if n_g else None, n_g, w_p if n_p else None, n_p, w_o, alpha, beta
            )
        if w is None:
            continue
        weights[key] = w
        provenance[key] = EdgeProvenance(
            w_ground=w_g if n_g else None,
            n_ground=n_g,
            w_pseudo=w_p if n_p else None,
            n_pseudo=n_p,
            w_ontology=w_o if mode == "medical" else None,
            weight=w,
        )
    return build_adjacency(drugs, X, weights, provenance, mode, normalization)


def dump_graph_json(graph: DrugGraph, path, alpha=None, beta=None) -> None:
    """Interpretability dump: drugs plus per-edge weight provenance."""
    edges = []
    for (di, dj), prov in sorted(graph.provenance.items()):
        edges.append(
            {
                "i": di,
                "j": dj,
                "w_ground": prov.w_ground,
                "n_ground": prov.n_ground,
                "w_pseudo": prov.w_pseudo,
                "n_pseudo": prov.n_pseudo,
                "w_ontology": prov.w_ontology,
                "weight": prov.weight,
            }
        )
    doc = {
        "mode": graph.mode,
        "normalization": graph.normalization,
        "alpha": alpha,
        "beta": beta,
        "drugs": graph.drugs,
        "edges": edges,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
