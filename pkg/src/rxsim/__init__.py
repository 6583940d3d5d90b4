"""Prescription-sentence similarity: rule-based concept parsing, drug
graphs, a GCN auxiliary scorer and cyclic co-training with a pluggable
backbone."""

from .backbone import (
    BackboneScorer,
    EmbeddingScorer,
    LexicalScorer,
    load_backbone_checkpoint,
    load_embedding_store,
    save_backbone_checkpoint,
    train_backbone,
)
from .cyclic import (
    CycleConfig,
    CycleResult,
    PreparedData,
    ensemble_score,
    fit_ensemble_weight,
    prepare_data,
    run_cycle,
    run_ensemble,
    sweep_beta,
)
from .data import (
    SentencePair,
    SynthSpec,
    load_dataset,
    sentence_ids,
    split_dataset,
    synth_generate,
    write_dataset,
)
from .diff import ConceptDiffVector, DiffScaler, assemble_diff, nominal_diff, numeric_diff
from .embeddings import EmbeddingStore, read_emb1, write_emb1
from .gcn import (
    GcnConfig,
    GcnExample,
    GcnModel,
    forward_layer,
    gradient_check,
    init_model,
    load_gcn_checkpoint,
    pair_score,
    save_gcn_checkpoint,
    train_auxiliary,
)
from .graph import (
    DrugGraph,
    build_drug_graph,
    collect_drug_nodes,
    combine_local,
    combine_medical,
    ground_weight,
    init_node_embeddings,
    pseudo_weight,
)
from .metrics import (
    EvalReport,
    PairRecord,
    build_report,
    diagnostic_sort,
    mse,
    pearson,
    pearson_detailed,
)
from .ontology import (
    IngredientGraph,
    compute_p_max,
    load_ontology,
    medical_weight,
    pairwise_distances,
    shortest_path,
)
from .parse import ParseFailure, PrescriptionConcepts, extract_concepts, find_drugs, load_lexicon

__version__ = "0.1.0"
