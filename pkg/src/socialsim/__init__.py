"""Deterministic social-feed engagement simulator with a factorial experiment
harness and a two-stage (threshold + allocation) logistic analysis pipeline."""

from .core import (
    ActionKind,
    ExposureRecord,
    LoadLevel,
    NormRegime,
    PopularityCounters,
    Post,
    PostCreation,
    PostKind,
    RunConfig,
    popularity_composite,
    reshares,
)
from .engine import EventLog, WorldState, initialize, recount_counters, run, step
from .harness import (
    ExperimentPlan,
    cell_seed,
    descriptive_shares,
    load_experiment,
    log_digest,
    read_log,
    realized_load_audit,
    run_experiment,
    write_log,
)
from .policy import (
    Decision,
    DecisionContext,
    LlmSpec,
    ParametricLogitPolicy,
    ParametricLogitSpec,
    ScriptedPolicy,
    ScriptedSpec,
    build_policy,
    build_prompt,
    decide,
    mock_policy_spec,
    parse_response,
)
from .population import (
    AgentProfile,
    FollowGraph,
    generate_population,
    generate_seed_corpus,
    load_corpus,
    load_population,
    save_corpus,
    save_population,
    top_influencers,
)
from .recommender import FeedEntry, realized_algorithmic_count, score_post, select_feed
from .stats import (
    FittedModel,
    Scenario,
    build_design_matrix,
    design_columns,
    design_row,
    fit_binary_logistic,
    fit_multinomial_logistic,
    fit_statistics,
    predicted_probabilities,
    table_consistency_check,
)

__version__ = "0.1.0"
