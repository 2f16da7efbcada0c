"""Mutually exciting point-process graphs.

Dyadic event streams are modelled by per-edge conditional intensities built
additively from node-specific source, destination and latent-interaction
components with scaled-exponential excitation. The package covers exact
simulation by thinning, maximum-likelihood fitting (adaptive-moment gradient
ascent on log-parameters, or EM through the branching structure) over a
linear-time recursive likelihood, and time-rescaling p-value scoring for
anomaly detection, including events on previously unseen edges.
"""

from .errors import (
    FittingError,
    IngestError,
    MegError,
    NumericError,
    SimulationTruncated,
    UndefinedIntensityError,
    UnsupportedSpecError,
    ValidationError,
)
from .events import EdgeEvents, EventIndex, EventLog, GraphShape, build_event_index
from .fit_adam import AdamConfig, FitReport, adam_fit, default_init
from .fit_em import Responsibilities, TildeParams, e_step, em_fit, m_step
from .gradient import finite_difference_gradient, grad_log_likelihood
from .intensity import (
    EdgeRecursion,
    compensator,
    compensator_increments,
    intensity,
)
from .io import (
    IngestResult,
    LabelTable,
    SplitResult,
    ingest,
    load_params,
    save_params,
    split,
    write_events_csv,
)
from .likelihood import log_likelihood, log_likelihood_and_gradient
from .model import (
    Kind,
    ModelSpec,
    Params,
    TauMatrix,
    estimate_tau,
    n_free_params,
    pack_params,
    unpack_params,
)
from .score import ScoreReport, ks_statistic, per_edge_ks, qq_points, score_events
from .simulate import SimConfig, simulate, simulate_n_events

__version__ = "0.1.0"

__all__ = [
    "AdamConfig", "EdgeEvents", "EdgeRecursion", "EventIndex", "EventLog",
    "FitReport", "FittingError", "GraphShape", "IngestError", "IngestResult",
    "Kind", "LabelTable", "MegError", "ModelSpec", "NumericError", "Params",
    "Responsibilities", "ScoreReport", "SimConfig", "SimulationTruncated",
    "SplitResult", "TauMatrix", "TildeParams", "UndefinedIntensityError",
    "UnsupportedSpecError", "ValidationError", "adam_fit", "build_event_index",
    "compensator", "compensator_increments", "default_init", "e_step", "em_fit",
    "estimate_tau", "finite_difference_gradient", "grad_log_likelihood",
    "ingest", "intensity", "ks_statistic", "load_params", "log_likelihood",
    "log_likelihood_and_gradient", "m_step", "n_free_params", "pack_params",
    "per_edge_ks", "qq_points", "save_params", "score_events", "simulate",
    "simulate_n_events", "split", "unpack_params", "write_events_csv",
]
