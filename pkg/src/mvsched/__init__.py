"""Correlation-aware packet scheduling of multiview video over a TDMA
bottleneck channel: rate-distortion model, synthetic correlation scenes,
trellis/greedy/exhaustive schedulers, baselines, and a rolling-horizon
simulator."""

from .model import (
    DataUnit,
    FrameRef,
    RateVector,
    RdParams,
    Region,
    ViewWeights,
    frame_distortion,
    policy_distortion,
    policy_rate,
    psi,
    psnr_db,
    rd_distortion,
    scene_distortion,
)
from .correlation import (
    CameraLayout,
    CorrelationSpec,
    MovingObject,
    SceneTrace,
    build_dynamic_trace,
    build_static_trace,
    mask_trace,
    step_dynamic,
    trace_from_json,
    trace_to_json,
)
from .scheduler import (
    Policy,
    SchedulerConfig,
    TrellisPath,
    branch_reward,
    candidate_dus,
    effective_budget,
    exhaustive_search,
    expand_and_prune,
    greedy_search,
    slot_feasible,
    trellis_search,
)
from .baselines import (
    CameraPriority,
    akyildiz_priority,
    akyildiz_schedule,
    random_schedule,
)
from .simulator import (
    Aggregate,
    FrameResult,
    RunResult,
    ScenarioConfig,
    SweepRow,
    ValidationReport,
    monte_carlo,
    run,
    sweep,
    validate_oracle_gap,
)

__version__ = "0.1.0"
