"""Dataset IO, seeded splitting and the synthetic benchmark generator.

The generator plants a ground-truth signal that mixes the two factors
the models are supposed to pick up: concept differences between the two
sentences and drug relatedness in a generated ingredient ontology.
Sentences are rendered from templates co-designed with the parser, so
every generated sentence round-trips through concept extraction.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import parse
from .diff import DiffScaler, assemble_diff
from .ontology import IngredientGraph, compute_p_max, pairwise_distances

GOLD_DIFF_COEFF = 0.4
GOLD_PATH_COEFF = 0.6


@dataclass
class SentencePair:
    id: str
    text_a: str
    text_b: str
    gold: float = None
    split: str = None

    def __post_init__(self):
        if not self.id or any(c.isspace() for c in self.id):
            raise ValueError(f"pair id must be non-empty and whitespace-free: {self.id!r}")
        if self.gold is not None and not 0.0 <= self.gold <= 5.0:
            raise ValueError(f"gold score {self.gold} outside [0, 5] for pair {self.id!r}")
        if self.split not in (None, "train", "test"):
            raise ValueError(f"unknown split {self.split!r} for pair {self.id!r}")


class DatasetFormatError(ValueError):
    """Malformed dataset line, reported with its line number."""


def sentence_ids(pair) -> tuple:
    """Per-sentence ids derived from a pair id; shared by the embedding
    reader/writer sides so exported vectors line up with dataset rows."""
    return f"{pair.id}/a", f"{pair.id}/b"


def load_dataset(path) -> list:
    """Read a JSONL file of sentence pairs; ids unique, gold within [0,5]."""
    pairs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            if not isinstance(doc, dict):
                raise DatasetFormatError(f"{path}:{lineno}: expected an object")
            missing = [k for k in ("id", "text_a", "text_b") if k not in doc]
            if missing:
                raise DatasetFormatError(f"{path}:{lineno}: missing fields {missing}")
            try:
                pair = SentencePair(
                    id=str(doc["id"]),
                    text_a=doc["text_a"],
                    text_b=doc["text_b"],
                    gold=None if doc.get("gold") is None else float(doc["gold"]),
                    split=doc.get("split"),
                )
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc}") from None
            if pair.id in seen:
                raise DatasetFormatError(f"{path}:{lineno}: duplicate pair id {pair.id!r}")
            if pair.split == "train" and pair.gold is None:
                raise DatasetFormatError(f"{path}:{lineno}: train pair {pair.id!r} has no gold score")
            seen.add(pair.id)
            pairs.append(pair)
    return pairs


def write_dataset(pairs, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            doc = {"id": p.id, "text_a": p.text_a, "text_b": p.text_b}
            if p.gold is not None:
                doc["gold"] = p.gold
            if p.split is not None:
                doc["split"] = p.split
            fh.write(json.dumps(doc, sort_keys=True) + "\n")


def split_dataset(pairs, ratio: float = 0.65, seed: int = 0):
    """Seeded uniform shuffle, then prefix split; split labels written back."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie strictly between 0 and 1")
    if len(pairs) < 2:
        raise ValueError("need at least 2 pairs to split")
    order = np.random.default_rng(seed).permutation(len(pairs))
    n_train = int(round(ratio * len(pairs)))
    n_train = min(max(n_train, 1), len(pairs) - 1)
    shuffled = [pairs[k] for k in order]
    train, test = shuffled[:n_train], shuffled[n_train:]
    for p in train:
        p.split = "train"
    for p in test:
        p.split = "test"
    return train, test


# ---------------------------------------------------------------------------
# synthetic benchmark


@dataclass
class SynthSpec:
    n_drugs: int = 60
    n_pairs: int = 400
    n_ingredients: int = None
    n_classes: int = None
    combo_rate: float = 0.15
    sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_ingredients is None:
            self.n_ingredients = max(4, self.n_drugs // 3)
        if self.n_classes is None:
            self.n_classes = max(2, self.n_ingredients // 4)
        if min(self.n_drugs, self.n_pairs, self.n_ingredients, self.n_classes) <= 0:
            raise ValueError("all counts must be positive")
        if self.sigma < 0 or not 0.0 <= self.combo_rate <= 1.0:
            raise ValueError("sigma must be >= 0 and combo_rate within [0, 1]")


@dataclass
class SynthResult:
    pairs: list
    lexicon: list
    ontology_edges: list
    drug_map: list
    graph: IngredientGraph
    concepts: dict  # pair id -> (concepts_a, concepts_b)
    pair_drugs: dict  # pair id -> (drug_a, drug_b)


_SYLLABLES = (
    "al an ar be bi ca ce ci co da de di do fa fe fi ga ge la le li lo ma me "
    "mi mo na ne ni no pa pe pi po ra re ri ro sa se si so ta te ti to va ve "
    "vi vo xa ze zo"
).split()
_SUFFIXES = "cin dine fen ide ine lol mab nib pril sone statin tan vir zole".split()

# Every word the sentence templates can emit; generated names must avoid them.
_RESERVED = frozenset(
    "take apply use of by mouth orally topically to the skin nasally in each "
    "nostril injection subcutaneously intramuscularly every hours hour daily "
    "weekly times time once twice one two three four as needed tablet tablets "
    "capsule capsules solution cream spray sprays mg mcg g ml unit units".split()
)

_FREQ_PHRASES = (
    ("once daily", 1.0),
    ("twice daily", 2.0),
    ("three times daily", 3.0),
    ("four times daily", 4.0),
    ("every 12 hours", 2.0),
    ("every 8 hours", 3.0),
    ("every 6 hours", 4.0),
    ("weekly", 1.0 / 7.0),
    ("as needed", 1.0),
)

# form -> (verb, unit pool, route phrase pool, dose pool, strength pool).
# Pools are shared by every drug: concept choices carry no drug identity, so
# the planted concept-diff signal stays independent of the planted
# drug-relatedness signal.
_FAMILIES = {
    "tablet": ("take", ("mg", "mcg"), ("by mouth", "orally"), (0.5, 1.0, 2.0, 3.0),
               (5.0, 10.0, 20.0, 25.0, 40.0, 50.0, 100.0, 200.0, 250.0, 500.0)),
    "capsule": ("take", ("mg",), ("by mouth", "orally"), (1.0, 2.0, 3.0),
                (10.0, 20.0, 25.0, 50.0, 100.0, 200.0, 250.0, 500.0)),
    "solution": ("take", ("ml",), ("by mouth", "subcutaneously"), (1.0, 2.0),
                 (5.0, 10.0, 12.5, 20.0, 25.0, 50.0)),
    "cream": ("apply", ("%",), ("topically", "to the skin"), (1.0,),
              (0.5, 1.0, 2.5, 5.0, 10.0)),
    "spray": ("use", ("mcg",), ("nasally", "in each nostril"), (1.0,),
              (25.0, 50.0, 100.0, 137.0, 200.0)),
}


def _gen_name(rng, used: set) -> str:
    while True:
        name = rng.choice(_SYLLABLES) + rng.choice(_SYLLABLES) + rng.choice(_SUFFIXES)
        if name not in used and name not in _RESERVED:
            used.add(name)
            return name


def _fmt(value: float) -> str:
    return f"{value:g}"


def _render(drug: str, form: str, strength: float, unit: str, dose: float,
            route_phrase: str, freq_phrase: str) -> str:
    verb = _FAMILIES[form][0]
    form_word = form + "s" if dose > 1 and form in ("tablet", "capsule", "spray") else form
    return (
        f"{verb} {_fmt(dose)} {form_word} of {drug} {_fmt(strength)} {unit} "
        f"{route_phrase} {freq_phrase}"
    )


def _sample_sentence(rng, drug: str, copy_from: dict = None) -> dict:
    """Concept sample for one sentence; copy_from pins components at random
    so concept differences spread from zero upward regardless of the drugs."""
    if copy_from is not None and rng.random() < 0.5:
        form = copy_from["form"]
    else:
        form = list(_FAMILIES)[rng.integers(len(_FAMILIES))]
    _, units, routes, doses, strengths = _FAMILIES[form]
    chosen = {
        "form": form,
        "strength": strengths[rng.integers(len(strengths))],
        "unit": units[rng.integers(len(units))],
        "dose": doses[rng.integers(len(doses))],
        "route": routes[rng.integers(len(routes))],
        "freq": _FREQ_PHRASES[rng.integers(len(_FREQ_PHRASES))],
    }
    if copy_from is not None and copy_from["form"] == form:
        for key in ("strength", "unit", "dose", "route", "freq"):
            if rng.random() < 0.5:
                chosen[key] = copy_from[key]
    chosen["text"] = _render(
        drug, form, chosen["strength"], chosen["unit"], chosen["dose"],
        chosen["route"], chosen["freq"][0],
    )
    return chosen


def _build_ontology(rng, drugs, spec: SynthSpec):
    """Ingredients partitioned into disjoint related-ingredient chains;
    drugs attach to one ingredient (occasionally two from the same chain),
    so hop distances spread from 2 (shared ingredient) through chain hops
    to unreachable across chains."""
    used = set(drugs)
    ingredients = [f"ing:{_gen_name(rng, used)}" for _ in range(spec.n_ingredients)]
    order = rng.permutation(len(ingredients))
    chains = np.array_split(order, spec.n_classes)
    edges = []
    ing_chain = {}
    for cid, chain in enumerate(chains):
        for k, idx in enumerate(chain):
            ing_chain[ingredients[idx]] = cid
            if k:
                edges.append((ingredients[chain[k - 1]], ingredients[idx]))
    drug_map = []
    drug_ings = {}
    for drug in drugs:
        main = ingredients[rng.integers(len(ingredients))]
        links = [main]
        siblings = [i for i in ingredients
                    if i != main and ing_chain[i] == ing_chain[main]]
        if siblings and rng.random() < spec.combo_rate:
            links.append(siblings[rng.integers(len(siblings))])
        drug_ings[drug] = links
        drug_map.append((drug, drug))
        for ing in links:
            edges.append((drug, ing))

    nodes = set()
    adjacency = {}
    for a, b in edges:
        nodes.update((a, b))
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    graph = IngredientGraph(nodes=nodes, adjacency=adjacency,
                            drug_index={d: d for d in drugs})
    return graph, edges, drug_map, drug_ings, ing_chain


def _pick_pair(rng, drugs, by_ingredient, by_class):
    """Drug pair biased toward related drugs so planted relatedness varies."""
    roll = rng.random()
    if roll < 0.25:
        d = drugs[rng.integers(len(drugs))]
        return d, d
    if roll < 0.50 and by_ingredient:
        group = by_ingredient[rng.integers(len(by_ingredient))]
        a, b = rng.choice(len(group), size=2, replace=False)
        return group[a], group[b]
    if roll < 0.70 and by_class:
        group = by_class[rng.integers(len(by_class))]
        a, b = rng.choice(len(group), size=2, replace=False)
        return group[a], group[b]
    a, b = rng.choice(len(drugs), size=2, replace=False)
    return drugs[a], drugs[b]


def synth_generate(spec: SynthSpec, out_dir=None) -> SynthResult:
    """Deterministic benchmark: pairs with planted gold, ontology and lexicon.

    Gold = clamp(5 - 0.4 * 5 * diff_magnitude - 0.6 * 5 * p/p_max + noise, 0, 5),
    where diff_magnitude is the corpus-normalized mean concept difference
    and p the ontology hop distance (p_max when unreachable).
    """
    rng = np.random.default_rng(spec.seed)
    used = set()
    drugs = sorted(_gen_name(rng, used) for _ in range(spec.n_drugs))
    graph, edges, drug_map, drug_ings, ing_chain = _build_ontology(rng, drugs, spec)
    lexicon = frozenset(drugs)

    groups_ing = {}
    for drug, ings in drug_ings.items():
        for ing in ings:
            groups_ing.setdefault(ing, []).append(drug)
    by_ingredient = [sorted(g) for _, g in sorted(groups_ing.items()) if len(g) >= 2]
    groups_cls = {}
    for drug, ings in drug_ings.items():
        groups_cls.setdefault(ing_chain[ings[0]], []).append(drug)
    by_class = [sorted(g) for _, g in sorted(groups_cls.items()) if len(g) >= 2]

    rows = []
    for k in range(spec.n_pairs):
        drug_a, drug_b = _pick_pair(rng, drugs, by_ingredient, by_class)
        sent_a = _sample_sentence(rng, drug_a)
        sent_b = _sample_sentence(rng, drug_b, copy_from=sent_a)
        rows.append((f"p{k:04d}", drug_a, drug_b, sent_a, sent_b))

    concepts = {}
    diffs = {}
    for pid, drug_a, drug_b, sent_a, sent_b in rows:
        ca = parse.extract_concepts(sent_a["text"], lexicon)
        cb = parse.extract_concepts(sent_b["text"], lexicon)
        if ca.drug_name != drug_a or cb.drug_name != drug_b:
            raise AssertionError(f"template/parser drift on pair {pid}")
        concepts[pid] = (ca, cb)
        diffs[pid] = assemble_diff(ca, cb)

    scaler = DiffScaler().fit(list(diffs.values()))
    distances = pairwise_distances(graph, drugs)
    p_max = compute_p_max(graph, drugs)

    pairs = []
    pair_drugs = {}
    for pid, drug_a, drug_b, sent_a, sent_b in rows:
        magnitude = float(np.mean(scaler.transform(diffs[pid])))
        if drug_a == drug_b:
            p = 0
        else:
            key = (drug_a, drug_b) if drug_a < drug_b else (drug_b, drug_a)
            p = distances[key]
        p_norm = 1.0 if p is None else min(p, p_max) / p_max
        gold = 5.0 - GOLD_DIFF_COEFF * 5.0 * magnitude - GOLD_PATH_COEFF * 5.0 * p_norm
        gold += rng.normal(0.0, spec.sigma)
        gold = float(min(max(gold, 0.0), 5.0))
        pairs.append(SentencePair(id=pid, text_a=sent_a["text"], text_b=sent_b["text"], gold=gold))
        pair_drugs[pid] = (drug_a, drug_b)

    result = SynthResult(
        pairs=pairs, lexicon=sorted(lexicon), ontology_edges=edges,
        drug_map=drug_map, graph=graph, concepts=concepts, pair_drugs=pair_drugs,
    )
    if out_dir is not None:
        write_synth_files(result, out_dir)
    return result


def write_synth_files(result: SynthResult, out_dir) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    write_dataset(result.pairs, os.path.join(out_dir, "dataset.jsonl"))
    with open(os.path.join(out_dir, "lexicon.txt"), "w", encoding="utf-8", newline="\n") as fh:
        for name in result.lexicon:
            fh.write(name + "\n")
    with open(os.path.join(out_dir, "ontology_edges.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        for a, b in result.ontology_edges:
            fh.write(f"{a}\t{b}\n")
    with open(os.path.join(out_dir, "drug_map.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        for drug, node in result.drug_map:
            fh.write(f"{drug}\t{node}\n")
