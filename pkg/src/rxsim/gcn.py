"""Graph-convolutional auxiliary scorer, hand-rolled on numpy.

Each layer computes h_i = sum_{j in N(i)} a_ij * tanh(U h_j + v); the
head concatenates the best cross-sentence drug cosine with the concept
diff vector and applies an affine map. Training is full-batch gradient
descent on MSE(train) + gamma_a * MSE(test pseudo labels), with the
backward pass written out explicitly so it can be checked against
finite differences.
"""

import copy
from dataclasses import dataclass, field

import numpy as np

from .graph import DrugGraph
from .serialize import read_checkpoint, write_checkpoint

_NORM_EPS = 1e-30


@dataclass
class GcnConfig:
    layer_sizes: tuple = ()
    lr: float = 1e-2
    epochs: int = 200
    gamma_a: float = 0.5
    aggregation: str = "weighted"

    def __post_init__(self):
        if self.aggregation not in ("weighted", "unweighted"):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")


@dataclass
class GcnModel:
    Us: list
    vs: list
    head_w: np.ndarray
    head_b: float
    config: GcnConfig

    @property
    def layer_sizes(self) -> tuple:
        return tuple(self.config.layer_sizes)


@dataclass(frozen=True)
class GcnExample:
    """One sentence pair as the GCN sees it: drug sets, diff features, target."""

    pair_id: str
    drugs_a: tuple
    drugs_b: tuple
    diff: tuple
    target: float


def default_layer_sizes(d_in: int) -> tuple:
    return (d_in, 256, 128)


def init_model(d_in: int, config: GcnConfig = None, seed: int = 0) -> GcnModel:
    """Seeded uniform init in [-1/sqrt(d_in), +1/sqrt(d_in)] per layer."""
    config = copy.deepcopy(config) if config is not None else GcnConfig()
    if not config.layer_sizes:
        config.layer_sizes = default_layer_sizes(d_in)
    sizes = tuple(config.layer_sizes)
    if sizes[0] != d_in:
        raise ValueError(f"first layer expects {sizes[0]}-dim input, got {d_in}")
    rng = np.random.default_rng(seed)
    Us, vs = [], []
    for d_prev, d_out in zip(sizes, sizes[1:]):
        bound = 1.0 / np.sqrt(d_prev)
        Us.append(rng.uniform(-bound, bound, size=(d_out, d_prev)))
        vs.append(rng.uniform(-bound, bound, size=d_out))
    head_dim = 6
    bound = 1.0 / np.sqrt(head_dim)
    head_w = rng.uniform(-bound, bound, size=head_dim)
    head_b = float(rng.uniform(-bound, bound))
    return GcnModel(Us=Us, vs=vs, head_w=head_w, head_b=head_b, config=config)


def _aggregation_matrix(graph: DrugGraph, mode: str) -> np.ndarray:
    if mode == "weighted":
        return graph.A
    return graph.edge_mask.astype(np.float64)


def forward_layer(H_prev: np.ndarray, graph: DrugGraph, U: np.ndarray, v: np.ndarray,
                  aggregation: str = "weighted") -> np.ndarray:
    """One neighborhood aggregation step; empty neighborhoods yield zero rows."""
    if H_prev.shape[1] != U.shape[1]:
        raise ValueError(f"layer expects {U.shape[1]}-dim input, got {H_prev.shape[1]}")
    if H_prev.shape[0] != graph.n:
        raise ValueError(f"graph has {graph.n} nodes but H has {H_prev.shape[0]} rows")
    A = _aggregation_matrix(graph, aggregation)
    return A @ np.tanh(H_prev @ U.T + v)


def forward_embeddings(model: GcnModel, graph: DrugGraph, keep_cache: bool = False):
    """Run all layers over the whole graph; optionally keep per-layer caches."""
    A = _aggregation_matrix(graph, model.config.aggregation)
    H = graph.X.astype(np.float64)
    cache = []
    for U, v in zip(model.Us, model.vs):
        if H.shape[1] != U.shape[1]:
            raise ValueError(f"layer expects {U.shape[1]}-dim input, got {H.shape[1]}")
        Z = np.tanh(H @ U.T + v)
        if keep_cache:
            cache.append((H, Z))
        H = A @ Z
    return (H, cache, A) if keep_cache else H


class _Batch:
    """Flattened cross-sentence drug-pair candidates for a set of examples."""

    def __init__(self, graph: DrugGraph, examples):
        cand_i, cand_j, cand_pair = [], [], []
        diffs, targets, ids = [], [], []
        for p, ex in enumerate(examples):
            if not ex.drugs_a or not ex.drugs_b:
                raise ValueError(f"pair {ex.pair_id!r} has a sentence with no drugs")
            for name in (*ex.drugs_a, *ex.drugs_b):
                if name not in graph.index:
                    raise KeyError(f"drug {name!r} is not a node of the graph")
            for a in ex.drugs_a:
                for b in ex.drugs_b:
                    cand_i.append(graph.index[a])
                    cand_j.append(graph.index[b])
                    cand_pair.append(p)
            diffs.append(ex.diff)
            targets.append(ex.target)
            ids.append(ex.pair_id)
        self.n_pairs = len(ids)
        self.ids = ids
        self.cand_i = np.asarray(cand_i, dtype=np.intp)
        self.cand_j = np.asarray(cand_j, dtype=np.intp)
        self.cand_pair = np.asarray(cand_pair, dtype=np.intp)
        if diffs:
            self.diffs = np.asarray(diffs, dtype=np.float64).reshape(self.n_pairs, -1)
        else:
            self.diffs = np.zeros((0, 5))
        self.targets = np.asarray(targets, dtype=np.float64)


def _batch_cosine(H: np.ndarray, batch: _Batch):
    """Max cross-pair cosine per example plus the argmax bookkeeping."""
    norms = np.linalg.norm(H, axis=1)
    hi, hj = H[batch.cand_i], H[batch.cand_j]
    denom = norms[batch.cand_i] * norms[batch.cand_j]
    ok = denom > _NORM_EPS
    cos = np.zeros(len(denom))
    np.divide((hi * hj).sum(axis=1), denom, out=cos, where=ok)
    best = np.full(batch.n_pairs, -np.inf)
    np.maximum.at(best, batch.cand_pair, cos)
    # first candidate attaining the per-pair max, for a deterministic subgradient
    is_max = cos >= best[batch.cand_pair]
    first = np.full(batch.n_pairs, len(cos), dtype=np.intp)
    np.minimum.at(first, batch.cand_pair[is_max], np.nonzero(is_max)[0])
    return best, first, cos, norms, ok


def _batch_predict(model: GcnModel, H: np.ndarray, batch: _Batch):
    best, first, cos, norms, ok = _batch_cosine(H, batch)
    feats = np.concatenate([best[:, None], batch.diffs], axis=1)
    preds = feats @ model.head_w + model.head_b
    return preds, (best, first, cos, norms, ok, feats)


def predict_batch(model: GcnModel, graph: DrugGraph, examples, clamp: bool = True) -> np.ndarray:
    """Scores for a list of examples; clamped to [0,5] unless training."""
    batch = _Batch(graph, examples)
    H = forward_embeddings(model, graph)
    preds, _ = _batch_predict(model, H, batch)
    return np.clip(preds, 0.0, 5.0) if clamp else preds


def pair_score(model: GcnModel, graph: DrugGraph, drugs_a, drugs_b, diff,
               clamp: bool = True) -> float:
    """Score one sentence pair from its drug sets and diff vector."""
    ex = GcnExample("pair", tuple(drugs_a), tuple(drugs_b), tuple(diff), 0.0)
    return float(predict_batch(model, graph, [ex], clamp=clamp)[0])


def _zero_grads(model: GcnModel) -> dict:
    return {
        "Us": [np.zeros_like(U) for U in model.Us],
        "vs": [np.zeros_like(v) for v in model.vs],
        "head_w": np.zeros_like(model.head_w),
        "head_b": 0.0,
    }


def _accumulate_batch(model, graph, H, cache, A, batch, weight, grads, d_H_total):
    """Weighted squared-error loss for one batch; gradient added in place.

    weight scales the batch mean (1 for the train term, gamma_a for the
    pseudo term). Returns the weighted loss contribution.
    """
    if batch.n_pairs == 0:
        return 0.0
    preds, (best, first, cos, norms, ok, feats) = _batch_predict(model, H, batch)
    resid = preds - batch.targets
    loss = weight * float(np.mean(resid ** 2))
    dpred = weight * 2.0 * resid / batch.n_pairs

    grads["head_w"] += feats.T @ dpred
    grads["head_b"] += float(dpred.sum())

    dcos = dpred * model.head_w[0]
    sel = first[first < len(cos)]
    live = ok[sel]
    sel = sel[live]
    if sel.size:
        pair_idx = batch.cand_pair[sel]
        i_idx, j_idx = batch.cand_i[sel], batch.cand_j[sel]
        hi, hj = H[i_idx], H[j_idx]
        ni, nj = norms[i_idx], norms[j_idx]
        c = cos[sel]
        coeff = dcos[pair_idx][:, None]
        np.add.at(d_H_total, i_idx, coeff * (hj / (ni * nj)[:, None] - c[:, None] * hi / (ni ** 2)[:, None]))
        np.add.at(d_H_total, j_idx, coeff * (hi / (ni * nj)[:, None] - c[:, None] * hj / (nj ** 2)[:, None]))
    return loss


def _backprop_layers(model, cache, A, d_H, grads):
    for layer in range(len(model.Us) - 1, -1, -1):
        H_prev, Z = cache[layer]
        dZ = A.T @ d_H
        dpre = dZ * (1.0 - Z ** 2)
        grads["Us"][layer] += dpre.T @ H_prev
        grads["vs"][layer] += dpre.sum(axis=0)
        d_H = dpre @ model.Us[layer]


def loss_and_grads(model: GcnModel, graph: DrugGraph, train_batch: _Batch,
                   test_batch: _Batch, gamma_a: float):
    """Joint gold + pseudo-label squared loss and its analytic gradients."""
    H, cache, A = forward_embeddings(model, graph, keep_cache=True)
    grads = _zero_grads(model)
    d_H = np.zeros_like(H)
    loss = _accumulate_batch(model, graph, H, cache, A, train_batch, 1.0, grads, d_H)
    if gamma_a > 0.0 and test_batch.n_pairs:
        loss += _accumulate_batch(model, graph, H, cache, A, test_batch, gamma_a, grads, d_H)
    _backprop_layers(model, cache, A, d_H, grads)
    return loss, grads


def auxiliary_loss(model: GcnModel, graph: DrugGraph, train_examples, test_examples,
                   gamma_a: float) -> float:
    loss, _ = loss_and_grads(model, graph, _Batch(graph, train_examples),
                             _Batch(graph, test_examples), gamma_a)
    return loss


def train_auxiliary(model: GcnModel, graph: DrugGraph, train_examples, test_examples,
                    gamma_a: float = None, epochs: int = None, lr: float = None):
    """Full-batch gradient descent on the auxiliary loss.

    Graph weights and node features are never touched; only layer
    parameters and the head move. Returns (trained copy, loss trace with
    the loss at the start of each epoch).
    """
    model = copy.deepcopy(model)
    cfg = model.config
    gamma_a = cfg.gamma_a if gamma_a is None else gamma_a
    epochs = cfg.epochs if epochs is None else epochs
    lr = cfg.lr if lr is None else lr
    if gamma_a < 0:
        raise ValueError("gamma_a must be >= 0")
    train_batch = _Batch(graph, train_examples)
    test_batch = _Batch(graph, test_examples)
    trace = []
    for epoch in range(epochs):
        loss, grads = loss_and_grads(model, graph, train_batch, test_batch, gamma_a)
        if not np.isfinite(loss):
            raise RuntimeError(f"non-finite auxiliary loss at epoch {epoch} (lr={lr})")
        trace.append(loss)
        for layer in range(len(model.Us)):
            model.Us[layer] -= lr * grads["Us"][layer]
            model.vs[layer] -= lr * grads["vs"][layer]
        model.head_w = model.head_w - lr * grads["head_w"]
        model.head_b -= lr * grads["head_b"]
    return model, trace


def _flatten_params(model: GcnModel):
    views = []
    for U in model.Us:
        views.append(U.ravel())
    for v in model.vs:
        views.append(v.ravel())
    views.append(model.head_w.ravel())
    views.append(np.array([model.head_b]))
    return views


def _flatten_grads(grads, model: GcnModel) -> np.ndarray:
    parts = [g.ravel() for g in grads["Us"]] + [g.ravel() for g in grads["vs"]]
    parts.append(grads["head_w"].ravel())
    parts.append(np.array([grads["head_b"]]))
    return np.concatenate(parts)


def gradient_check(model: GcnModel, graph: DrugGraph, train_examples, test_examples,
                   gamma_a: float = 0.5, step: float = 1e-6) -> float:
    """Max relative error between analytic and central-FD gradients."""
    model = copy.deepcopy(model)
    train_batch = _Batch(graph, train_examples)
    test_batch = _Batch(graph, test_examples)
    _, grads = loss_and_grads(model, graph, train_batch, test_batch, gamma_a)
    analytic = _flatten_grads(grads, model)

    def loss_at():
        loss, _ = loss_and_grads(model, graph, train_batch, test_batch, gamma_a)
        return loss

    views = _flatten_params(model)
    fd = np.empty_like(analytic)
    pos = 0
    head_b_view = views[-1]
    for view in views:
        for k in range(view.size):
            orig = view[k]
            view[k] = orig + step
            if view is head_b_view:
                model.head_b = float(view[0])
            up = loss_at()
            view[k] = orig - step
            if view is head_b_view:
                model.head_b = float(view[0])
            down = loss_at()
            view[k] = orig
            if view is head_b_view:
                model.head_b = float(view[0])
            fd[pos] = (up - down) / (2.0 * step)
            pos += 1
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-8)
    return float(np.max(np.abs(analytic - fd) / denom))


def save_gcn_checkpoint(model: GcnModel, path) -> None:
    payload = {
        "layer_sizes": list(model.layer_sizes),
        "layers": [{"U": U.tolist(), "v": v.tolist()} for U, v in zip(model.Us, model.vs)],
        "head_w": model.head_w.tolist(),
        "head_b": model.head_b,
        "config": {
            "lr": model.config.lr,
            "epochs": model.config.epochs,
            "gamma_a": model.config.gamma_a,
            "aggregation": model.config.aggregation,
        },
    }
    write_checkpoint(path, "gcn", payload)


def load_gcn_checkpoint(path) -> GcnModel:
    payload = read_checkpoint(path, "gcn")
    cfg = GcnConfig(layer_sizes=tuple(payload["layer_sizes"]), **payload["config"])
    Us = [np.asarray(layer["U"], dtype=np.float64) for layer in payload["layers"]]
    vs = [np.asarray(layer["v"], dtype=np.float64) for layer in payload["layers"]]
    return GcnModel(Us=Us, vs=vs, head_w=np.asarray(payload["head_w"], dtype=np.float64),
                    head_b=float(payload["head_b"]), config=cfg)
