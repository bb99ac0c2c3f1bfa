"""Structural causal hypothesis testing with masked neural networks.

Compare competing DAG hypotheses for tabular data by approximating each
hypothesis's functional relationships with small masked networks and ranking
hypotheses by out-of-distribution generalization error; use the winning model
to synthesize causally-informed data.
"""

__version__ = "0.1.0"

from .datatable import NormStats, SplitSpec, Table, normalize, read_csv, split, write_csv
from .graph import (
    Adjacency,
    ExoMask,
    HammingTuple,
    StructuralPrior,
    default_exo,
    hamming,
    perturb,
    prior_from_json,
    prior_to_json,
    random_dag,
    topological_order,
)
from .harness import (
    ProbTable,
    RunRecord,
    SimConfig,
    TrainConfig,
    compare_report,
    evaluate,
    prob_table,
    run_hypothesis_battery,
    run_simulation_sweep,
    train,
)
from .models import (
    BaselineVae,
    CshModel,
    CsvhModel,
    csh_forward,
    csh_loss,
    csvh_forward,
    csvh_loss,
    load_checkpoint,
    save_checkpoint,
    synthesize,
)
from .synthgen import (
    LinearSem,
    NoiseSpec,
    NonlinearSem,
    PendulumScene,
    noise_variance,
    pendulum_prior,
    pendulum_shadow,
    pendulum_table,
    sample_linear,
    sample_nonlinear,
)

__all__ = [name for name in dir() if not name.startswith("_")]
