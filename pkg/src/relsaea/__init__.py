"""Pairwise-relation surrogates for expensive evolutionary optimization."""

__version__ = "0.1.0"

from .backends import BackendConfig, LLMBackend, OracleBackend, RandomBackend, make_backend
from .exceptions import (
    BackendError,
    BalanceError,
    BudgetExceeded,
    ConfigError,
    DomainError,
    RelsaeaError,
)
from .metrics import binary_acc, element_acc, igd, rank_acc, spearman_rho
from .offline import build_offline_suite, evaluate_backend
from .problems import get_problem, list_problems
from .prompting import build_anchor_prompts, parse_response, render_prompt, serialize_labels
from .relation_data import MinMaxNormalizer, normalize_global, normalize_local
from .rlkit import RewardParams, gen_rl_dataset, group_advantage, reward, score_response_file
from .saea import RelationSAEA, RunConfig, RunResult, run, run_ga
from .surrogate import RelationSurrogate
from .voting import score_c1, score_c2, select_top, vote

__all__ = [
    "BackendConfig", "LLMBackend", "OracleBackend", "RandomBackend", "make_backend",
    "BackendError", "BalanceError", "BudgetExceeded", "ConfigError", "DomainError", "RelsaeaError",
    "binary_acc", "element_acc", "igd", "rank_acc", "spearman_rho",
    "build_offline_suite", "evaluate_backend",
    "get_problem", "list_problems",
    "build_anchor_prompts", "parse_response", "render_prompt", "serialize_labels",
    "MinMaxNormalizer", "normalize_global", "normalize_local",
    "RewardParams", "gen_rl_dataset", "group_advantage", "reward", "score_response_file",
    "RelationSAEA", "RunConfig", "RunResult", "run", "run_ga",
    "RelationSurrogate",
    "score_c1", "score_c2", "select_top", "vote",
]
