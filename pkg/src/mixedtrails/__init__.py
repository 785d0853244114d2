"""Bayesian comparison of hypotheses about heterogeneous transition data."""

from .comparison import ComparisonResult, RankEntry, bayes_factor, grid_average, kass_raftery_label, rank_hypotheses
from .core import (
    BeliefMatrix,
    GroupAssignment,
    GroupAssignmentProbabilities,
    Hypothesis,
    StateSpace,
    Transition,
    TransitionDataset,
    transition_counts,
    validate_hypothesis,
)
from .elicitation import DEFAULT_KAPPAS, DirichletPriorSet, elicit, elicit_deterministic, elicit_probabilistic
from .evidence import (
    EnumerationTooLarge,
    EvidenceCurve,
    EvidencePoint,
    evidence_curve,
    log_ml_deterministic,
    log_ml_enumerate,
    log_ml_sampled,
    log_multivariate_beta,
)

__version__ = "0.1.0"
