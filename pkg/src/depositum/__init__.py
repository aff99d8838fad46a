"""Decentralized composite optimization with gradient tracking and momentum.

A numpy simulator and library for networks of clients that each hold a shard
of data and a copy of the model, take proximal stochastic-gradient steps with
heavy-ball or lookahead momentum, track the global gradient through
difference accumulation, and gossip both iterates and trackers every T0
iterations over a doubly stochastic mixing matrix.
"""

from .regularizers import (
    Box,
    L1,
    MCP,
    Regularizer,
    RegularizerSpec,
    SCAD,
    StepTooLarge,
    Zero,
    eval_h,
    h_pointwise,
    prox,
    prox_grad_map,
    weak_modulus,
)
from .topology import (
    DimensionMismatch,
    DisconnectedGraph,
    InadmissibleStep,
    MixingMatrix,
    NonDoublyStochastic,
    NotStochastic,
    TopologySpec,
    build_mixing,
    delta_params,
    is_comm_round,
    mix,
    spectral_gap,
)
from .problems import (
    Dataset,
    IndexOutOfRange,
    NonMonotoneIndex,
    ParseError,
    Partition,
    Problem,
    dirichlet_partition,
    estimate_L,
    full_grad,
    iid_partition,
    load_libsvm,
    loss_and_grad,
    make_problem,
    parse_libsvm,
    serialize_libsvm,
    synth_logistic,
)
from .optimizer import (
    BudgetTooSmall,
    HyperParams,
    StepLog,
    SwarmState,
    baseline_prox_dsgd_step,
    init_state,
    linear_speedup_params,
    momentum_update,
    run,
    step,
)
from .metrics import (
    MetricsRecord,
    TooFewPoints,
    Trace,
    evaluate_iteration,
    fit_decay_rate,
    running_average,
    stationarity_measure,
)
from .seeding import rng_stream
from .harness import (
    ConfigError,
    config_digest,
    load_config,
    partition_report,
    run_experiment,
    run_speedup,
    run_sweep,
    spectral_report,
    validate_config,
)

__version__ = "0.1.0"
