"""Cyclic co-training orchestration and the weighted-sum ensemble baseline.

Each iteration: train the backbone (pseudo term disabled at iteration 0),
predict over the whole dataset, rebuild the drug graph from those
predictions, train the GCN against gold plus backbone pseudo labels, and
hand the GCN's test-set predictions back to the next backbone round.
Both networks restart from the same initial parameters every iteration,
so with all coupling coefficients at zero the cycle is exactly
stationary after the first pass.
"""

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import parse
from .backbone import EmbeddingScorer, LexicalScorer, save_backbone_checkpoint, train_backbone
from .data import sentence_ids
from .diff import DiffScaler, assemble_diff
from .gcn import GcnConfig, GcnExample, init_model, predict_batch, save_gcn_checkpoint, train_auxiliary
from .graph import build_drug_graph, collect_drug_nodes, dump_graph_json, init_node_embeddings
from .metrics import mse, pearson_detailed
from .ontology import compute_p_max, medical_weight, pairwise_distances

LAMBDA_GRID = tuple(round(0.05 * k, 2) for k in range(21))


@dataclass
class CycleConfig:
    mode: str = "medical"
    alpha: float = None
    beta: float = None
    gamma_a: float = 0.5
    gamma_b: float = 0.5
    iterations: int = 5
    seed: int = 0
    backbone: str = "lexical"
    hash_dim: int = 128
    backbone_epochs: int = 200
    backbone_lr: float = 0.02
    backbone_optimizer: str = "adam"
    # The auxiliary net gets a longer budget and a single hidden layer here:
    # on desk-scale graphs the stacked default underfits the cosine feature
    # before the head learns to use it.
    gcn_layer_sizes: tuple = None
    gcn_epochs: int = 600
    gcn_lr: float = 3e-2
    aggregation: str = "weighted"
    embed_dim: int = 32

    def resolved_layer_sizes(self, d_in: int = None) -> tuple:
        """Explicit sizes win; otherwise one hidden layer sized to the actual
        node dimension (store-backed embeddings may differ from embed_dim)."""
        if self.gcn_layer_sizes:
            return tuple(self.gcn_layer_sizes)
        return (d_in if d_in is not None else self.embed_dim, 128)

    def __post_init__(self):
        if self.mode not in ("local", "medical"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.alpha is None:
            self.alpha = 0.2 if self.mode == "local" else 0.5
        if self.beta is None:
            self.beta = 0.0 if self.mode == "local" else 0.5
        if self.mode == "local" and self.beta != 0.0:
            raise ValueError("the local graph has no ontology term; beta must be 0")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["gcn_layer_sizes"] = list(self.gcn_layer_sizes) if self.gcn_layer_sizes else None
        return doc


@dataclass
class PreparedData:
    pairs: list
    train: list
    test: list
    drugs: list
    X: np.ndarray
    pair_records: list  # (pair id, drugs_a, drugs_b) over all of D
    drug_sets: dict  # pair id -> (drugs_a, drugs_b)
    diffs: dict  # pair id -> scaled 5-tuple
    gold: dict  # pair id -> gold score (train always, test when available)
    ontology_weights: dict = None
    store: object = None

    @property
    def by_id(self) -> dict:
        return {p.id: p for p in self.pairs}


@dataclass
class IterationRecord:
    iteration: int
    backbone: object
    gcn: object
    graph: object
    pseudo_b: dict
    pseudo_a: dict
    backbone_pearson: float
    backbone_mse: float
    gcn_pearson: float
    gcn_mse: float


@dataclass
class CycleResult:
    config: CycleConfig
    history: list
    bootstrap_backbone: object

    def backbone_curve(self) -> list:
        return [rec.backbone_pearson for rec in self.history]

    def peak_backbone(self) -> float:
        """Best co-trained backbone Pearson (iterations after the bootstrap)."""
        curve = self.backbone_curve()
        if len(curve) < 2:
            raise ValueError("need at least 2 iterations for a co-trained peak")
        return max(curve[1:])


def _sentence_drugs(text: str, lexicon) -> tuple:
    found = parse.find_drugs(parse.tokenize(text), lexicon)
    return tuple(dict.fromkeys(found))


def prepare_data(pairs, lexicon, store=None, ontology=None, embed_dim: int = 32) -> PreparedData:
    """Parse every sentence once: drug sets, scaled diff features, node
    embeddings and (when an ontology is given) medical edge weights."""
    train = [p for p in pairs if p.split == "train"]
    test = [p for p in pairs if p.split == "test"]
    if not train or not test:
        raise ValueError("dataset must carry both train and test splits")

    drug_sets = {}
    raw_diffs = {}
    for p in pairs:
        drugs_a = _sentence_drugs(p.text_a, lexicon)
        drugs_b = _sentence_drugs(p.text_b, lexicon)
        if not drugs_a or not drugs_b:
            raise ValueError(f"pair {p.id!r} has a sentence without a lexicon drug")
        drug_sets[p.id] = (drugs_a, drugs_b)
        ca = parse.extract_concepts(p.text_a, lexicon)
        cb = parse.extract_concepts(p.text_b, lexicon)
        raw_diffs[p.id] = assemble_diff(ca, cb)

    scaler = DiffScaler().fit([raw_diffs[p.id] for p in train])
    diffs = {pid: tuple(scaler.transform(d)) for pid, d in raw_diffs.items()}

    pair_records = [(p.id, *drug_sets[p.id]) for p in pairs]
    drugs = collect_drug_nodes(drug_sets.values())

    occurrences = {}
    for p in pairs:
        for sid, side in zip(sentence_ids(p), drug_sets[p.id]):
            for drug in side:
                occurrences.setdefault(drug, [])
                if sid not in occurrences[drug]:
                    occurrences[drug].append(sid)

    if store is not None:
        X = init_node_embeddings(drugs, occurrences, store=store)
    else:
        X = init_node_embeddings(drugs, occurrences, store=None, dim=embed_dim)

    ontology_weights = None
    if ontology is not None:
        distances = pairwise_distances(ontology, drugs)
        p_max = compute_p_max(ontology, drugs)
        ontology_weights = {key: medical_weight(p, p_max) for key, p in distances.items()}

    gold = {p.id: p.gold for p in pairs if p.gold is not None}
    return PreparedData(
        pairs=list(pairs), train=train, test=test, drugs=drugs, X=X,
        pair_records=pair_records, drug_sets=drug_sets, diffs=diffs, gold=gold,
        ontology_weights=ontology_weights, store=store,
    )


def _fresh_backbone(data: PreparedData, config: CycleConfig):
    if config.backbone == "lexical":
        return LexicalScorer(hash_dim=config.hash_dim)
    if config.backbone == "embedding":
        if data.store is None:
            raise ValueError("embedding backbone needs an embedding store")
        return EmbeddingScorer(data.store)
    raise ValueError(f"unknown backbone {config.backbone!r}")


def _gcn_examples(data: PreparedData, pairs, targets: dict) -> list:
    return [
        GcnExample(p.id, *data.drug_sets[p.id], data.diffs[p.id], targets[p.id])
        for p in pairs
    ]


def _build_graph(data: PreparedData, config: CycleConfig, pseudo_b: dict):
    train_labels = {p.id: data.gold[p.id] for p in data.train}
    return build_drug_graph(
        data.drugs, data.X, data.pair_records, train_labels, pseudo_b,
        mode=config.mode, alpha=config.alpha, beta=config.beta,
        ontology_weights=data.ontology_weights,
    )


def _test_metrics(data: PreparedData, scores: dict):
    ids = [p.id for p in data.test if p.id in data.gold]
    if len(ids) < 2:
        raise ValueError("test split needs at least 2 gold-labeled pairs for metrics")
    gold = [data.gold[pid] for pid in ids]
    pred = [scores[pid] for pid in ids]
    return pearson_detailed(pred, gold).r, mse(pred, gold)


def _train_iteration_backbone(data, config, pseudo_a):
    scorer = _fresh_backbone(data, config)
    train_ex = [(p, data.gold[p.id]) for p in data.train]
    if pseudo_a is None:
        return train_backbone(scorer, train_ex, (), gamma_b=0.0,
                              epochs=config.backbone_epochs, lr=config.backbone_lr,
                              optimizer=config.backbone_optimizer)
    test_ex = [(p, pseudo_a[p.id]) for p in data.test]
    return train_backbone(scorer, train_ex, test_ex, gamma_b=config.gamma_b,
                          epochs=config.backbone_epochs, lr=config.backbone_lr,
                          optimizer=config.backbone_optimizer)


def _train_iteration_gcn(data, config, graph, pseudo_b):
    model0 = init_model(data.X.shape[1], GcnConfig(
        layer_sizes=config.resolved_layer_sizes(data.X.shape[1]),
        lr=config.gcn_lr, epochs=config.gcn_epochs, gamma_a=config.gamma_a,
        aggregation=config.aggregation,
    ), seed=config.seed)
    train_ex = _gcn_examples(data, data.train, data.gold)
    test_ex = _gcn_examples(data, data.test, pseudo_b)
    return train_auxiliary(model0, graph, train_ex, test_ex)


def _score_all(backbone, pairs) -> dict:
    return {p.id: backbone.score_pair(p) for p in pairs}


def _persist_iteration(out_dir, config, rec: IterationRecord, history) -> None:
    if out_dir is None:
        return
    save_backbone_checkpoint(rec.backbone, os.path.join(out_dir, f"backbone_{rec.iteration:04d}.json"))
    save_gcn_checkpoint(rec.gcn, os.path.join(out_dir, f"gcn_{rec.iteration:04d}.json"))
    dump_graph_json(rec.graph, os.path.join(out_dir, f"graph_{rec.iteration:04d}.json"),
                    alpha=config.alpha, beta=config.beta)
    write_metrics_csv(history, os.path.join(out_dir, "metrics.csv"))


def write_metrics_csv(history, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,network,pearson,mse\n")
        for rec in history:
            fh.write(f"{rec.iteration},backbone,{rec.backbone_pearson},{rec.backbone_mse}\n")
            fh.write(f"{rec.iteration},gcn,{rec.gcn_pearson},{rec.gcn_mse}\n")


def run_cycle(data: PreparedData, config: CycleConfig, out_dir=None) -> CycleResult:
    """Run the full co-training loop; history has one record per iteration.

    iterations=0 trains only the bootstrap backbone and leaves the GCN
    untouched. Completed-iteration artifacts are flushed before the next
    iteration starts, so an aborted run keeps everything finished so far.
    """
    if config.mode == "medical" and data.ontology_weights is None:
        raise ValueError("medical mode needs prepared ontology weights")
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
            json.dump(config.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    if config.iterations == 0:
        backbone, _ = _train_iteration_backbone(data, config, None)
        if out_dir is not None:
            save_backbone_checkpoint(backbone, os.path.join(out_dir, "backbone_0000.json"))
            write_metrics_csv([], os.path.join(out_dir, "metrics.csv"))
        return CycleResult(config=config, history=[], bootstrap_backbone=backbone)

    history = []
    pseudo_a = None
    for t in range(config.iterations):
        backbone, _ = _train_iteration_backbone(data, config, pseudo_a)
        pseudo_b = _score_all(backbone, data.pairs)
        graph = _build_graph(data, config, pseudo_b)
        gcn, _ = _train_iteration_gcn(data, config, graph, pseudo_b)
        test_ex = _gcn_examples(data, data.test, pseudo_b)
        gcn_scores = predict_batch(gcn, graph, test_ex, clamp=True)
        pseudo_a = {p.id: float(s) for p, s in zip(data.test, gcn_scores)}

        b_r, b_mse = _test_metrics(data, pseudo_b)
        g_r, g_mse = _test_metrics(data, pseudo_a)
        rec = IterationRecord(
            iteration=t, backbone=backbone, gcn=gcn, graph=graph,
            pseudo_b=pseudo_b, pseudo_a=pseudo_a,
            backbone_pearson=b_r, backbone_mse=b_mse,
            gcn_pearson=g_r, gcn_mse=g_mse,
        )
        history.append(rec)
        _persist_iteration(out_dir, config, rec, history)
    return CycleResult(config=config, history=history, bootstrap_backbone=history[0].backbone)


# ---------------------------------------------------------------------------
# weighted-sum ensemble baseline


def ensemble_score(backbone_score: float, gcn_score: float, lam: float) -> float:
    """lam * backbone + (1 - lam) * gcn."""
    return lam * backbone_score + (1.0 - lam) * gcn_score


def fit_ensemble_weight(backbone_scores, gcn_scores, gold) -> float:
    """Grid search over lambda in steps of 0.05 maximizing training Pearson;
    exact ties resolve toward 0.5."""
    b = np.asarray(backbone_scores, dtype=np.float64)
    g = np.asarray(gcn_scores, dtype=np.float64)
    y = list(gold)
    best_lam, best_r = None, -np.inf
    for lam in LAMBDA_GRID:
        r = pearson_detailed(lam * b + (1.0 - lam) * g, y).r
        better = r > best_r or (r == best_r and abs(lam - 0.5) < abs(best_lam - 0.5))
        if better:
            best_lam, best_r = lam, r
    return best_lam


@dataclass
class EnsembleResult:
    lam: float
    test_pearson: float
    test_mse: float
    backbone: object
    gcn: object
    graph: object


def run_ensemble(data: PreparedData, config: CycleConfig) -> EnsembleResult:
    """Bootstrap backbone + independently trained GCN (gamma_a = 0), combined
    by a grid-fitted weighted sum."""
    backbone, _ = _train_iteration_backbone(data, config, None)
    pseudo_b = _score_all(backbone, data.pairs)
    graph = _build_graph(data, config, pseudo_b)
    cfg = dataclasses.replace(config, gamma_a=0.0)
    gcn, _ = _train_iteration_gcn(data, cfg, graph, pseudo_b)

    def gcn_scores(pairs):
        ex = _gcn_examples(data, pairs, {p.id: 0.0 for p in pairs})
        return predict_batch(gcn, graph, ex, clamp=True)

    train_ids = [p.id for p in data.train]
    lam = fit_ensemble_weight(
        [pseudo_b[pid] for pid in train_ids], gcn_scores(data.train),
        [data.gold[pid] for pid in train_ids],
    )
    test_g = gcn_scores(data.test)
    combined = {
        p.id: ensemble_score(pseudo_b[p.id], float(gs), lam)
        for p, gs in zip(data.test, test_g)
    }
    r, m = _test_metrics(data, combined)
    return EnsembleResult(lam=lam, test_pearson=r, test_mse=m,
                          backbone=backbone, gcn=gcn, graph=graph)


def sweep_beta(data: PreparedData, config: CycleConfig, betas=None) -> list:
    """Co-trained backbone peak for each beta at fixed alpha (medical mode)."""
    if betas is None:
        betas = tuple(round(0.1 * k, 1) for k in range(11))
    rows = []
    for beta in betas:
        cfg = dataclasses.replace(config, mode="medical", beta=beta)
        result = run_cycle(data, cfg)
        rows.append((beta, result.peak_backbone()))
    return rows


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("beta,backbone_pearson\n")
        for beta, r in rows:
            fh.write(f"{beta},{r}\n")
