"""Drug-ingredient ontology subset: hop distances and medical weights.

The ontology is an undirected, unweighted edge list over concept ids
(drug products and ingredients). Dataset drug names map to concept ids
through a separate two-column file. Medical weight for a drug pair is
5*(p_max - p)/p_max, with unreachable pairs treated as p_max.
"""

from collections import deque
from dataclasses import dataclass, field


class OntologyFormatError(ValueError):
    """Malformed edge or drug-map line, reported with its line number."""


@dataclass
class IngredientGraph:
    nodes: set
    adjacency: dict
    drug_index: dict
    unmapped: set = field(default_factory=set)

    def node_for(self, drug: str):
        return self.drug_index.get(drug)


def _parse_tsv(path, n_cols):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != n_cols or any(not c.strip() for c in cols):
                raise OntologyFormatError(
                    f"{path}:{lineno}: expected {n_cols} tab-separated columns, got {raw!r}"
                )
            rows.append(tuple(c.strip() for c in cols))
    return rows


def load_ontology(edge_file, drug_map_file) -> IngredientGraph:
    """Build the graph from an edge TSV and a drug-name -> concept-id TSV."""
    nodes = set()
    adjacency = {}
    for a, b in _parse_tsv(edge_file, 2):
        nodes.update((a, b))
        adjacency.setdefault(a, set())
        adjacency.setdefault(b, set())
        if a == b:
            continue
        adjacency[a].add(b)
        adjacency[b].add(a)

    drug_index = {}
    unmapped = set()
    for lineno_row, (drug, concept) in enumerate(_parse_tsv(drug_map_file, 2), start=1):
        drug = drug.lower()
        prev = drug_index.get(drug)
        if prev is not None and prev != concept:
            raise OntologyFormatError(
                f"{drug_map_file}: drug {drug!r} mapped to both {prev!r} and {concept!r}"
            )
        if concept in nodes:
            drug_index[drug] = concept
        else:
            unmapped.add(drug)
    return IngredientGraph(nodes=nodes, adjacency=adjacency, drug_index=drug_index, unmapped=unmapped)


def _bfs_distances(g: IngredientGraph, source: str) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.adjacency.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def shortest_path(g: IngredientGraph, drug_i: str, drug_j: str):
    """Hop count between two dataset drugs, or None when unreachable/unmapped."""
    a = g.node_for(drug_i)
    b = g.node_for(drug_j)
    if a is None or b is None:
        return None
    if a == b:
        return 0
    return _bfs_distances(g, a).get(b)


def pairwise_distances(g: IngredientGraph, drugs) -> dict:
    """Distances for all unordered dataset drug pairs (None = unreachable)."""
    drugs = sorted(set(drugs))
    by_source = {}
    for d in drugs:
        node = g.node_for(d)
        by_source[d] = _bfs_distances(g, node) if node is not None else {}
    out = {}
    for i, di in enumerate(drugs):
        for dj in drugs[i + 1:]:
            node_j = g.node_for(dj)
            out[(di, dj)] = by_source[di].get(node_j) if node_j is not None else None
    return out


def compute_p_max(g: IngredientGraph, drugs) -> int:
    """Largest finite pair distance among dataset drugs; 1 when none is connected."""
    if not drugs:
        return 1
    finite = [d for d in pairwise_distances(g, drugs).values() if d is not None]
    p_max = max(finite, default=0)
    return p_max if p_max >= 1 else 1


def medical_weight(p_ij, p_max: int) -> float:
    """Eq-style inverse-distance weight in [0, 5]; None and overlong paths clamp to p_max."""
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    p = p_max if p_ij is None else min(p_ij, p_max)
    return 5.0 * (p_max - p) / p_max
