"""Rank autoformalization candidates by symbolic equivalence and
semantic consistency."""

from .config import RunConfig, load_config
from .dataset import Candidate, LabeledProblem, Problem, load_dataset
from .equiv import (
    EquivalencePartition,
    check_equivalence,
    check_premise_contradiction,
    check_statement_equivalence,
    partition_candidates,
    symbolic_scores,
)
from .parser import ParseError, parse_statement
from .pipeline import build_services, run_alpha_sweep, run_eval, run_rank
from .provers import BuiltinProver, ProofOutcome, ProverBackend, SmtProver
from .scoring import CombinationStrategy, RankingReport, combine, normalize, select_top_n
from .semantic import HashedTfEmbedder, cosine_similarity, informalize, semantic_scores
from .standardize import (
    align_variables,
    is_numerical_goal,
    normalized_edit_distance,
    standardize_numerical,
    top_k_matchings,
)
from .statement import FormalStatement, free_variables, print_statement

__version__ = "0.1.0"
