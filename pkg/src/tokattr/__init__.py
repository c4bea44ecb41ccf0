"""tokattr: Shapley-style token attribution for black-box text classifiers.

The package explains any text classifier reachable through the
:class:`~tokattr.model.ModelAdapter` contract: exact Shapley and Owen
oracles for verification, a fast recursive partition explainer for real
corpora, and a permutation-sampling estimator for long inputs, followed
by per-class word aggregation, ranking, heatmap reporting, and
embedding-based spurious-word screening.
"""

__version__ = "0.1.0"

from .aggregate import (
    AggregateTable,
    EvalReport,
    RankedWordList,
    aggregate_avg_shap,
    min_ratio_diagnostic,
    rank_top_words,
    task_text_frequency,
    weighted_f1,
)
from .attribution import (
    AttributionResult,
    exact_shapley,
    explain_corpus,
    owen_exact,
    partition_attribute,
    permutation_shapley,
)
from .corpus import (
    Dimension,
    Gazetteer,
    Token,
    TokenizedUtterance,
    apply_corrections,
    apply_gazetteer,
    tokenize,
)
from .model import MaskedInput, ModelAdapter, make_builtin
from .report import HeatmapSpec, Palette, build_heatmap, render_svg
from .simcheck import EmbeddingStore, cosine, load_vectors, spuriousness_report
from .trees import PartitionTree, build_tree

__all__ = [
    "AggregateTable",
    "AttributionResult",
    "Dimension",
    "EmbeddingStore",
    "Gazetteer",
    "HeatmapSpec",
    "MaskedInput",
    "ModelAdapter",
    "Palette",
    "PartitionTree",
    "RankedWordList",
    "EvalReport",
    "Token",
    "TokenizedUtterance",
    "aggregate_avg_shap",
    "apply_corrections",
    "apply_gazetteer",
    "build_heatmap",
    "build_tree",
    "cosine",
    "exact_shapley",
    "explain_corpus",
    "load_vectors",
    "make_builtin",
    "min_ratio_diagnostic",
    "owen_exact",
    "partition_attribute",
    "permutation_shapley",
    "rank_top_words",
    "render_svg",
    "spuriousness_report",
    "task_text_frequency",
    "tokenize",
    "weighted_f1",
]
