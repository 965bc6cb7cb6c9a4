"""Complex-valued knowledge-graph embeddings with soft Horn-rule injection.

Training bounds the embeddings to a non-negative box, scores triples with the
complex bilinear form, and softly injects definite Horn rules (hierarchies,
compositions, longer chains) as closed-form hinge/squared penalties on the
relation embeddings. Includes filtered-ranking evaluation, zero/few-shot
split construction, and numerical verification of the per-dimension
inequalities the injection relies on.
"""

from .evaluation import (
    RankingReport,
    evaluate,
    filtered_rank,
    mean_hinge_violation,
    relation_rule_diagnostics,
)
from .fewshot import FewShotSpec, make_fewshot_split
from .kg import KnowledgeGraph, Triple, build_graph, load_graph, load_triples
from .model import (
    EmbeddingTable,
    init_table,
    load_table,
    project,
    save_table,
    score,
    score_all_heads,
    score_all_tails,
    score_dim,
)
from .rules import HornRule, filter_rules, ground_confidence, parse_rules
from .training import (
    AdagradState,
    LabeledBatch,
    TrainConfig,
    adagrad_step,
    logistic_loss,
    n3_regularization,
    rule_penalty,
    sample_negatives,
    train,
)
from .verify import (
    TheoremReport,
    check_sufficient_condition_composition,
    check_sufficient_condition_horn,
    counterexample_search_unrestricted,
    gradient_check,
)

__all__ = [
    "RankingReport",
    "evaluate",
    "filtered_rank",
    "mean_hinge_violation",
    "relation_rule_diagnostics",
    "FewShotSpec",
    "make_fewshot_split",
    "KnowledgeGraph",
    "Triple",
    "build_graph",
    "load_graph",
    "load_triples",
    "EmbeddingTable",
    "init_table",
    "load_table",
    "project",
    "save_table",
    "score",
    "score_all_heads",
    "score_all_tails",
    "score_dim",
    "HornRule",
    "filter_rules",
    "ground_confidence",
    "parse_rules",
    "AdagradState",
    "LabeledBatch",
    "TrainConfig",
    "adagrad_step",
    "logistic_loss",
    "n3_regularization",
    "rule_penalty",
    "sample_negatives",
    "train",
    "TheoremReport",
    "check_sufficient_condition_composition",
    "check_sufficient_condition_horn",
    "counterexample_search_unrestricted",
    "gradient_check",
]

__version__ = "0.1.0"
