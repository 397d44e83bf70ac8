"""Counterfactual multiverse metrics and graph explanations."""

import json

from . import _core
from ._core import (
    bsp_path,
    branching_point,
    direction_difference,
    graph_opportunity,
    normalize_path,
    opportunity_matrix,
    path_length,
    shortest_path,
    vector_opportunity,
    weighted_distance,
)


def explain(data, threshold, factual, top_c=5, **options):
    """Graph explanation for one dataset row, as a dict.

    `options` accepts k, lam, target_class, gamma, alt_count, alt_separation,
    k_model, predictions, schema, label_column and seed.
    """
    return json.loads(_core.explain(str(data), threshold, factual, top_c, **options))


__all__ = [
    "bsp_path",
    "branching_point",
    "direction_difference",
    "explain",
    "graph_opportunity",
    "normalize_path",
    "opportunity_matrix",
    "path_length",
    "shortest_path",
    "vector_opportunity",
    "weighted_distance",
]
