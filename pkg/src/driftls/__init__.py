"""driftls: streaming least-squares trackers with drifting targets,
phased-exploration and UCB bandit policies built on them, and the
bound/benchmark harness that validates their guarantees."""

from .bandits import (
    LinUcbConfig,
    LinUcbPolicy,
    PegeConfig,
    RegretLedger,
    best_action,
    linucb_step,
    run_linucb,
    run_pege,
    run_replay,
    ucb_value,
)
from .bounds import BoundParams, beta_of, h_of, k1_of, k2_of, k_mu_c, pege_bound
from .buffer import DataBuffer
from .environments import (
    ArmSpec,
    ArmStream,
    Ellipsoid,
    EventRecord,
    FinitePool,
    LinearEnv,
    NoiseSpec,
    SynthStreamConfig,
    UnitBall,
    gen_arm_set,
    read_event_log,
    sample_arms,
    synth_news_stream,
    write_event_log,
)
from .exceptions import (
    ConfigError,
    DegenerateUpdateError,
    EventLogError,
    NotReadyError,
    SingularMatrixError,
)
from .linalg import (
    SpdCert,
    certify_spd,
    inverse_spd,
    min_eigenvalue,
    sherman_morrison,
    solve_spd,
)
from .metrics import (
    TrackingRecord,
    ctr_score,
    cumulative_regret,
    slope_fit,
    tracking_error,
)
from .rng import make_rng, split_rng
from .schedules import RegSchedule, StepSchedule
from .solvers import IncrementalOLS, IncrementalRidge
from .trackers import (
    ConfidenceTracker,
    LeastSquaresTracker,
    RidgeTracker,
    SagTracker,
    SvrgTracker,
)

__version__ = "0.1.0"

__all__ = [
    "ArmSpec",
    "ArmStream",
    "BoundParams",
    "ConfidenceTracker",
    "ConfigError",
    "DataBuffer",
    "DegenerateUpdateError",
    "Ellipsoid",
    "EventRecord",
    "EventLogError",
    "FinitePool",
    "IncrementalOLS",
    "IncrementalRidge",
    "LeastSquaresTracker",
    "LinearEnv",
    "LinUcbConfig",
    "LinUcbPolicy",
    "NoiseSpec",
    "NotReadyError",
    "PegeConfig",
    "RegSchedule",
    "RegretLedger",
    "RidgeTracker",
    "SagTracker",
    "SingularMatrixError",
    "SpdCert",
    "StepSchedule",
    "SvrgTracker",
    "SynthStreamConfig",
    "TrackingRecord",
    "UnitBall",
    "best_action",
    "beta_of",
    "certify_spd",
    "ctr_score",
    "cumulative_regret",
    "gen_arm_set",
    "h_of",
    "inverse_spd",
    "k1_of",
    "k2_of",
    "k_mu_c",
    "linucb_step",
    "make_rng",
    "min_eigenvalue",
    "pege_bound",
    "read_event_log",
    "run_linucb",
    "run_pege",
    "run_replay",
    "sample_arms",
    "sherman_morrison",
    "slope_fit",
    "solve_spd",
    "split_rng",
    "synth_news_stream",
    "tracking_error",
    "ucb_value",
    "write_event_log",
]
