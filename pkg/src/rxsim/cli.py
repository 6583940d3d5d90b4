"""Command-line surface: dataset generation, training runs and reports.

Every subcommand is batch-oriented and deterministic given --seed. A
--config file holds key = value overrides for the cycle configuration
(same keys as the run-cycle flags, e.g. "gamma_b = 0.5").
"""

import argparse
import ast
import json
import os
import sys

from . import cyclic, data, graph, metrics, parse
from .backbone import load_backbone_checkpoint, load_embedding_store
from .gcn import load_gcn_checkpoint, predict_batch
from .ontology import load_ontology


def parse_config_file(path) -> dict:
    """key = value lines; '#' comments; values as Python/TOML-ish literals."""
    overrides = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if value in ("true", "false"):
                overrides[key] = value == "true"
                continue
            try:
                overrides[key] = ast.literal_eval(value)
            except (ValueError, SyntaxError):
                overrides[key] = value.strip("\"'")
    return overrides


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--config", help="key = value override file")
    sub.add_argument("--out-dir", default=None)


def _add_inputs(sub, ontology=True, embeddings=True):
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--lexicon", required=True)
    if ontology:
        sub.add_argument("--ontology-edges")
        sub.add_argument("--drug-map")
    if embeddings:
        sub.add_argument("--embeddings", help="EMB1 file for the embedding backbone / node init")


def _cycle_config(args, **forced) -> cyclic.CycleConfig:
    overrides = parse_config_file(args.config) if args.config else {}
    fields = {f.name for f in cyclic.CycleConfig.__dataclass_fields__.values()}
    unknown = set(overrides) - fields
    if unknown:
        raise SystemExit(f"unknown config keys: {sorted(unknown)}")
    values = dict(overrides)
    values["seed"] = args.seed
    for key in ("mode", "alpha", "beta", "iterations", "gamma_a", "gamma_b"):
        arg = getattr(args, key, None)
        if arg is not None:
            values[key] = arg
    values.update(forced)
    return cyclic.CycleConfig(**values)


def _load_inputs(args):
    pairs = data.load_dataset(args.dataset)
    lexicon = parse.load_lexicon(args.lexicon)
    ontology = None
    if getattr(args, "ontology_edges", None):
        if not args.drug_map:
            raise SystemExit("--ontology-edges needs --drug-map")
        ontology = load_ontology(args.ontology_edges, args.drug_map)
    store = None
    if getattr(args, "embeddings", None):
        store = load_embedding_store(args.embeddings)
    return pairs, lexicon, ontology, store


def _ensure_split(pairs, ratio, seed):
    if all(p.split is not None for p in pairs):
        return
    data.split_dataset(pairs, ratio=ratio, seed=seed)


def _prepared(args, config, need_graph: bool = True):
    pairs, lexicon, ontology, store = _load_inputs(args)
    _ensure_split(pairs, getattr(args, "ratio", 0.65), args.seed)
    if need_graph and config.mode == "medical" and ontology is None:
        raise SystemExit("medical mode needs --ontology-edges and --drug-map")
    return cyclic.prepare_data(pairs, lexicon, store=store, ontology=ontology,
                               embed_dim=config.embed_dim)


def _require_out_dir(args) -> str:
    if not args.out_dir:
        raise SystemExit("this command needs --out-dir")
    os.makedirs(args.out_dir, exist_ok=True)
    return args.out_dir


def cmd_parse(args) -> int:
    lexicon = parse.load_lexicon(args.lexicon)
    if not args.sentence and not args.dataset:
        raise SystemExit("parse needs --sentence or --dataset")
    if args.sentence:
        concepts = parse.extract_concepts(args.sentence, lexicon)
        print(json.dumps(concepts.to_dict(), sort_keys=True))
        return 0
    for pair in data.load_dataset(args.dataset):
        doc = {"id": pair.id}
        for side, text in (("a", pair.text_a), ("b", pair.text_b)):
            try:
                doc[side] = parse.extract_concepts(text, lexicon).to_dict()
            except parse.ParseFailure as exc:
                doc[side] = {"error": str(exc)}
        print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_synth(args) -> int:
    out_dir = _require_out_dir(args)
    spec = data.SynthSpec(n_drugs=args.n_drugs, n_pairs=args.n_pairs,
                          sigma=args.sigma, seed=args.seed)
    result = data.synth_generate(spec, out_dir=out_dir)
    print(f"wrote {len(result.pairs)} pairs, {len(result.lexicon)} drugs to {out_dir}")
    return 0


def cmd_split(args) -> int:
    pairs = data.load_dataset(args.dataset)
    train, test = data.split_dataset(pairs, ratio=args.ratio, seed=args.seed)
    out = args.out or args.dataset
    data.write_dataset(pairs, out)
    print(f"split {len(train)}/{len(test)} (ratio {args.ratio}) -> {out}")
    return 0


def cmd_build_graph(args) -> int:
    out_dir = _require_out_dir(args)
    config = _cycle_config(args)
    prepared = _prepared(args, config)
    if args.backbone:
        scorer = load_backbone_checkpoint(args.backbone, store=prepared.store)
        predictions = {p.id: scorer.score_pair(p) for p in prepared.pairs}
    else:
        predictions = {}
    train_labels = {p.id: prepared.gold[p.id] for p in prepared.train}
    g = graph.build_drug_graph(
        prepared.drugs, prepared.X, prepared.pair_records, train_labels, predictions,
        mode=config.mode, alpha=config.alpha, beta=config.beta,
        ontology_weights=prepared.ontology_weights,
    )
    path = os.path.join(out_dir, "graph.json")
    graph.dump_graph_json(g, path, alpha=config.alpha, beta=config.beta)
    print(f"{g.n} drugs, {len(g.provenance)} edges -> {path}")
    return 0


def cmd_train_backbone(args) -> int:
    out_dir = _require_out_dir(args)
    config = _cycle_config(args, iterations=0)
    prepared = _prepared(args, config, need_graph=False)
    result = cyclic.run_cycle(prepared, config, out_dir=out_dir)
    scores = {p.id: result.bootstrap_backbone.score_pair(p) for p in prepared.test}
    r, m = cyclic._test_metrics(prepared, scores)
    print(f"backbone test pearson={r:.4f} mse={m:.4f}")
    return 0


def cmd_train_gcn(args) -> int:
    out_dir = _require_out_dir(args)
    config = _cycle_config(args, iterations=1)
    prepared = _prepared(args, config)
    result = cyclic.run_cycle(prepared, config, out_dir=out_dir)
    rec = result.history[-1]
    print(f"gcn test pearson={rec.gcn_pearson:.4f} mse={rec.gcn_mse:.4f}")
    return 0


def cmd_run_cycle(args) -> int:
    out_dir = _require_out_dir(args)
    config = _cycle_config(args)
    prepared = _prepared(args, config)
    result = cyclic.run_cycle(prepared, config, out_dir=out_dir)
    for rec in result.history:
        print(f"iteration {rec.iteration}: backbone r={rec.backbone_pearson:.4f} "
              f"gcn r={rec.gcn_pearson:.4f}")
    return 0


def _scores_for_eval(args, prepared, config):
    scorer = load_backbone_checkpoint(args.backbone, store=prepared.store)
    backbone_scores = {p.id: scorer.score_pair(p) for p in prepared.pairs}
    gcn_scores = None
    if args.gcn:
        g = cyclic._build_graph(prepared, config, backbone_scores)
        model = load_gcn_checkpoint(args.gcn)
        ex = cyclic._gcn_examples(prepared, prepared.test, {p.id: 0.0 for p in prepared.test})
        preds = predict_batch(model, g, ex, clamp=True)
        gcn_scores = {p.id: float(s) for p, s in zip(prepared.test, preds)}
    return backbone_scores, gcn_scores


def cmd_eval(args) -> int:
    config = _cycle_config(args)
    prepared = _prepared(args, config)
    backbone_scores, gcn_scores = _scores_for_eval(args, prepared, config)
    r, m = cyclic._test_metrics(prepared, backbone_scores)
    print(f"backbone test pearson={r:.4f} mse={m:.4f}")
    if gcn_scores is not None:
        r, m = cyclic._test_metrics(prepared, gcn_scores)
        print(f"gcn test pearson={r:.4f} mse={m:.4f}")
    return 0


def cmd_export_report(args) -> int:
    out_dir = _require_out_dir(args)
    config = _cycle_config(args)
    prepared = _prepared(args, config)
    backbone_scores, gcn_scores = _scores_for_eval(args, prepared, config)
    if gcn_scores is None:
        raise SystemExit("export-report needs --gcn for the two-network comparison")
    records = [
        metrics.PairRecord(p.id, prepared.gold[p.id], backbone_scores[p.id], gcn_scores[p.id])
        for p in prepared.test if p.id in prepared.gold
    ]
    report = metrics.build_report(records, "backbone")
    metrics.write_report_csv(report, os.path.join(out_dir, "report.csv"))
    metrics.write_plot_tsv(records, os.path.join(out_dir, "plot.tsv"))
    print(f"wrote report.csv and plot.tsv for {len(records)} pairs to {out_dir}")
    return 0


def cmd_sweep_beta(args) -> int:
    out_dir = _require_out_dir(args)
    config = _cycle_config(args, mode="medical")
    prepared = _prepared(args, config)
    rows = cyclic.sweep_beta(prepared, config)
    path = os.path.join(out_dir, "sweep_beta.csv")
    cyclic.write_sweep_csv(rows, path)
    for beta, r in rows:
        print(f"beta={beta}: backbone r={r:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rxsim")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("parse", help="extract concepts from a sentence or dataset")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--sentence")
    p.add_argument("--dataset")
    _add_common(p)
    p.set_defaults(func=cmd_parse)

    p = subs.add_parser("synth", help="generate the synthetic benchmark files")
    p.add_argument("--n-drugs", type=int, default=60)
    p.add_argument("--n-pairs", type=int, default=400)
    p.add_argument("--sigma", type=float, default=0.5)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("split", help="write back a seeded train/test split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--ratio", type=float, default=0.65)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_split)

    for name, fn, extra in (
        ("build-graph", cmd_build_graph, ("backbone",)),
        ("train-backbone", cmd_train_backbone, ()),
        ("train-gcn", cmd_train_gcn, ()),
        ("run-cycle", cmd_run_cycle, ()),
        ("eval", cmd_eval, ("backbone_required", "gcn")),
        ("export-report", cmd_export_report, ("backbone_required", "gcn")),
        ("sweep-beta", cmd_sweep_beta, ()),
    ):
        p = subs.add_parser(name)
        _add_inputs(p)
        p.add_argument("--ratio", type=float, default=0.65)
        p.add_argument("--mode", choices=("local", "medical"), default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--gamma-a", type=float, default=None, dest="gamma_a")
        p.add_argument("--gamma-b", type=float, default=None, dest="gamma_b")
        p.add_argument("--iterations", type=int, default=None)
        if "backbone" in extra:
            p.add_argument("--backbone", help="backbone checkpoint for pseudo labels")
        if "backbone_required" in extra:
            p.add_argument("--backbone", required=True)
        if "gcn" in extra:
            p.add_argument("--gcn", help="gcn checkpoint")
        _add_common(p)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (parse.ParseFailure, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
