"""Supervised cross-lingual embedding alignment and BLI evaluation.

Covers least-squares, Procrustes and RCSLS maps, exact NN/CSLS retrieval,
stem-based soft matching for inflected target languages, and script-based
vocabulary pruning.
"""

__version__ = "0.1.0"

from .alignment import (
    LinearMap,
    RcslsConfig,
    TrainMatrices,
    apply_map,
    build_train_matrices,
    fit_least_squares,
    fit_procrustes,
    fit_rcsls,
    load_map,
    save_map,
)
from .embeddings import EmbeddingSpace, load_text_embeddings, lookup, normalize, save_text_embeddings, subset
from .errors import BliError, ConfigError
from .evaluation import PrecisionReport, evaluate_exact, evaluate_stem, improvement_percent
from .lexicon import BilingualLexicon, GroupedLexicon, group_by_source, load_dictionary, reconcile
from .pruning import Decision, PrunePolicy, classify_token, load_policy, prune_space
from .retrieval import CslsParams, RetrievalResult, csls_penalties, csls_topk, nn_topk
from .stemming import StemRuleSet, load_rules, stem, stem_all
