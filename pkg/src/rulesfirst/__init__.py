"""Rules-first classifiers: a few single-feature rules backed by a norm-bounded linear model."""

from .core import (
    DataError,
    Dataset,
    Example,
    LinearModel,
    NormKind,
    NormRegime,
    Rule,
    RuleSet,
    RulesFirstModel,
    accuracy,
    empirical_loss,
    loss_hinge,
    loss_margin,
    loss_mis,
    loss_ramp,
    predict,
)
from .boost import BoostedModel, boost_rule
from .datagen import LowerBoundSpec, SyntheticSpec, gen_lower_bound, gen_synthetic
from .linear import (
    TrainConfig,
    min_norm_margin_solver,
    project_l1,
    project_l2,
    train_constrained_hinge,
    train_convex_relaxation,
    train_penalized_logistic,
)
from .rules import GreedyConfig, NearRuleConfig, find_perfect_rules, greedy_eval_loss, greedy_rule, select_near_rules

__version__ = "0.1.0"
