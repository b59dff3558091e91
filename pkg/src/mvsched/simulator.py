"""Rolling-horizon transmission simulator.

The timeline starts at slot 1. At each opportunity the configured
scheduler plans over the next K slots, only the first decision is
committed: a scheduled DU occupies the channel for ``ceil(B / C_slot)``
slots and the next opportunity follows right after; an idle first slot
advances time by one. The run ends when the deadline of the last acquired
frame has passed, and every frame is then scored against the final
delivered history.

Monte Carlo replication derives run ``i`` from seed ``base + i`` and is
reproducible regardless of worker count; parameter sweeps hold everything
but one axis fixed.
"""

from __future__ import annotations

import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import baselines
from .correlation import (
    CorrelationSpec,
    MovingObject,
    SceneTrace,
    build_dynamic_trace,
    build_static_trace,
    mask_trace,
)
from .model import RdParams, ViewWeights, frame_distortion, psi, psnr_db
from .scheduler import (
    DEFAULT_ORACLE_CAP,
    SchedulerConfig,
    exhaustive_search,
    greedy_search,
    trellis_search,
)

__all__ = [
    "ScenarioConfig",
    "FrameResult",
    "RunResult",
    "Aggregate",
    "SweepRow",
    "run",
    "monte_carlo",
    "sweep",
    "SWEEP_AXES",
]

SCHEDULERS = ("trellis", "greedy", "exhaustive", "random", "akyildiz")
VIEWS = ("full", "spatial", "temporal", "none")
MODES = ("static", "dynamic")
SWEEP_AXES = ("rho_s", "rho_t", "K", "rate", "capacity", "scheduler")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete experiment description; every field has a sensible default.

    Rates are megabits per second per camera; the DU size follows from
    rate / frame_rate, and the acquisition period in slots from
    floor(1 / (frame_rate * t_tdma_s)).
    """

    mode: str = "static"
    M: int = 8
    N_f: int = 30
    rho_s: int = 0
    rho_t: int = 0
    overlap_at_distance: dict[int, float] | None = None
    background_fraction: float = 0.8
    objects: tuple[MovingObject, ...] = ()
    rate_mbps: float = 11.75
    capacity_mbps: float = 23.5
    frame_rate: float = 15.0
    pixels_per_frame: int = 768 * 1024
    t_tdma_s: float = 1.0 / 60.0
    T_D: int = 5
    scheduler: str = "greedy"
    K: int = 1
    N_s: int = 2
    correlation_view: str = "full"
    mu: float = 1.0
    sigma2: float = 1600.0
    peak: float = 255.0
    weights: tuple[float, ...] | None = None
    seed: int = 0
    runs: int = 1
    oracle_cap: int = DEFAULT_ORACLE_CAP

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(
                f"scheduler must be one of {SCHEDULERS}, got {self.scheduler!r}"
            )
        if self.correlation_view not in VIEWS:
            raise ValueError(
                f"correlation_view must be one of {VIEWS}, got {self.correlation_view!r}"
            )
        if self.M < 1 or self.N_f < 1:
            raise ValueError("M and N_f must be >= 1")
        if self.rho_s < 0 or self.rho_s % 2 != 0:
            raise ValueError(f"rho_s must be even and >= 0, got {self.rho_s}")
        if self.rho_t < 0:
            raise ValueError(f"rho_t must be >= 0, got {self.rho_t}")
        if not 0.0 <= self.background_fraction <= 1.0:
            raise ValueError("background_fraction must lie in [0, 1]")
        if self.rate_mbps <= 0 or self.capacity_mbps <= 0:
            raise ValueError("rates must be positive")
        if self.frame_rate <= 0 or self.t_tdma_s <= 0:
            raise ValueError("frame_rate and t_tdma_s must be positive")
        if self.frame_rate * self.t_tdma_s > 1.0 + 1e-12:
            raise ValueError("acquisition period must span at least one slot")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.weights is not None and len(self.weights) != self.M:
            raise ValueError("weights must list one value per camera")

    # -- derived quantities -----------------------------------------------

    @property
    def rate_bpp(self) -> float:
        return self.rate_mbps * 1e6 / (self.pixels_per_frame * self.frame_rate)

    @property
    def capacity_bits_per_slot(self) -> float:
        return self.capacity_mbps * 1e6 * self.t_tdma_s

    @property
    def acq_period(self) -> int:
        return int(math.floor(1.0 / (self.frame_rate * self.t_tdma_s)))

    def rd_params(self) -> RdParams:
        return RdParams(mu=self.mu, sigma2=self.sigma2, peak=self.peak)

    def view_weights(self) -> ViewWeights:
        if self.weights is None:
            return ViewWeights.uniform(self.M)
        return ViewWeights(w=self.weights)

    def scheduler_config(self) -> SchedulerConfig:
        return SchedulerConfig(
            capacity_bits_per_slot=self.capacity_bits_per_slot,
            K=self.K,
            N_s=self.N_s,
            T_D=self.T_D,
        )

    def correlation_spec(self) -> CorrelationSpec:
        return CorrelationSpec(
            rho_s=self.rho_s,
            rho_t=self.rho_t,
            overlap_at_distance=self.overlap_at_distance,
            background_fraction=self.background_fraction,
            objects=self.objects,
        )

    def build_trace(self, seed: int) -> SceneTrace:
        spec = self.correlation_spec()
        if self.mode == "static":
            return build_static_trace(
                spec, self.M, self.N_f, self.rate_bpp, self.T_D,
                acq_period=self.acq_period,
                pixels_per_frame=self.pixels_per_frame,
            )
        rng = np.random.default_rng([seed, 0])
        return build_dynamic_trace(
            spec, self.M, self.N_f, self.rate_bpp, self.T_D, rng,
            acq_period=self.acq_period,
            pixels_per_frame=self.pixels_per_frame,
        )


@dataclass(frozen=True)
class FrameResult:
    camera: int
    acq_slot: int
    delivered: bool
    mse: float
    psnr_db: float


@dataclass(frozen=True)
class RunResult:
    frames: tuple[FrameResult, ...]
    mean_psnr_db: float
    mean_mse: float
    psnr_of_mean_mse_db: float
    delivered: tuple[tuple[int, int, int], ...]  # (start slot, du id, T_u)
    opportunity_seconds: tuple[tuple[int, float], ...]
    delivered_fraction: float


def _transmission_slots(size_bits: float, capacity_bits_per_slot: float) -> int:
    return max(1, math.ceil(size_bits / capacity_bits_per_slot - 1e-12))


def _make_dispatch(scenario: ScenarioConfig, view: SceneTrace, seed: int):
    """Bind the configured scheduler to a (t, history) callable."""
    params = scenario.rd_params()
    weights = scenario.view_weights()
    kind = scenario.scheduler
    if kind == "random":
        rng = np.random.default_rng([seed, 1])
        return lambda t, hist, cfg: baselines.random_schedule(t, hist, view, cfg, rng)
    if kind == "akyildiz":
        priority = baselines.akyildiz_priority(view, params, weights)
        return lambda t, hist, cfg: baselines.akyildiz_schedule(
            t, hist, view, cfg, priority
        )
    if kind == "greedy":
        return lambda t, hist, cfg: greedy_search(
            t, hist, view, cfg, params=params, weights=weights
        )
    if kind == "exhaustive":
        return lambda t, hist, cfg: exhaustive_search(
            t, hist, view, cfg,
            max_paths=scenario.oracle_cap, params=params, weights=weights,
        )
    return lambda t, hist, cfg: trellis_search(
        t, hist, view, cfg, params=params, weights=weights
    )


def evaluate_history(
    trace: SceneTrace, history: frozenset[int], params: RdParams
) -> tuple[FrameResult, ...]:
    """Score every frame of the trace against a delivered set."""
    out = []
    for slot in trace.acq_slots():
        vector = psi(history, trace, slot, trace.rho_t)
        for du in trace.dus_at_slot(slot):
            delivered = du.id in history
            mse = frame_distortion(du, vector, delivered, params)
            out.append(
                FrameResult(
                    camera=du.frame.camera,
                    acq_slot=slot,
                    delivered=delivered,
                    mse=mse,
                    psnr_db=psnr_db(mse, params.peak),
                )
            )
    return tuple(out)


def run(scenario: ScenarioConfig, *, seed: int | None = None) -> RunResult:
    """Simulate one full sequence transmission and score it."""
    base = scenario.seed if seed is None else seed
    trace = scenario.build_trace(base)
    view = mask_trace(trace, scenario.correlation_view)
    config = scenario.scheduler_config()
    dispatch = _make_dispatch(scenario, view, base)
    params = scenario.rd_params()

    history: set[int] = set()
    delivered: list[tuple[int, int, int]] = []
    timings: list[tuple[int, float]] = []
    t = 1
    last = trace.last_deadline
    while t <= last:
        tic = time.perf_counter()
        policy = dispatch(t, frozenset(history), config)
        timings.append((t, time.perf_counter() - tic))
        first = policy.first_du
        if first is None:
            t += 1
            continue
        du = trace.du_by_id(first)
        t_u = _transmission_slots(du.size_bits, config.capacity_bits_per_slot)
        history.add(first)
        delivered.append((t, first, t_u))
        t += t_u

    frames = evaluate_history(trace, frozenset(history), params)
    psnrs = [f.psnr_db for f in frames]
    mses = [f.mse for f in frames]
    mean_mse = statistics.fmean(mses)
    return RunResult(
        frames=frames,
        mean_psnr_db=statistics.fmean(psnrs),
        mean_mse=mean_mse,
        psnr_of_mean_mse_db=psnr_db(mean_mse, params.peak),
        delivered=tuple(delivered),
        opportunity_seconds=tuple(timings),
        delivered_fraction=len(history) / len(trace.dus),
    )


@dataclass(frozen=True)
class Aggregate:
    n_runs: int
    mean_psnr_db: float
    std_psnr_db: float
    psnr_of_mean_mse_db: float
    delivered_fraction: float
    runtime_ms: float
    per_run: tuple[tuple[float, float, float], ...]


def _mc_one(args: tuple[ScenarioConfig, int]) -> tuple[float, float, float]:
    scenario, seed = args
    result = run(scenario, seed=seed)
    return (
        result.mean_psnr_db,
        result.psnr_of_mean_mse_db,
        result.delivered_fraction,
    )


def monte_carlo(
    scenario: ScenarioConfig,
    n_runs: int | None = None,
    *,
    workers: int = 1,
) -> Aggregate:
    """Replicate a scenario under seeds base, base+1, ... and aggregate.

    Results are merged in seed order, so the aggregate does not depend on
    the worker count.
    """
    n = scenario.runs if n_runs is None else n_runs
    if n < 1:
        raise ValueError("n_runs must be >= 1")
    jobs = [(scenario, scenario.seed + i) for i in range(n)]
    tic = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_run = list(pool.map(_mc_one, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        per_run = [_mc_one(job) for job in jobs]
    runtime_ms = (time.perf_counter() - tic) * 1e3
    psnrs = [r[0] for r in per_run]
    return Aggregate(
        n_runs=n,
        mean_psnr_db=statistics.fmean(psnrs),
        std_psnr_db=statistics.stdev(psnrs) if n > 1 else 0.0,
        psnr_of_mean_mse_db=statistics.fmean(r[1] for r in per_run),
        delivered_fraction=statistics.fmean(r[2] for r in per_run),
        runtime_ms=runtime_ms,
        per_run=tuple(per_run),
    )


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: object
    scheduler: str
    aggregate: Aggregate


def _apply_axis(scenario: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "rho_s":
        return replace(scenario, rho_s=int(value))
    if axis == "rho_t":
        return replace(scenario, rho_t=int(value))
    if axis == "K":
        return replace(scenario, K=int(value))
    if axis == "rate":
        return replace(scenario, rate_mbps=float(value))
    if axis == "capacity":
        return replace(scenario, capacity_mbps=float(value))
    if axis == "scheduler":
        return replace(scenario, scheduler=str(value))
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def sweep(
    scenario: ScenarioConfig,
    axis: str,
    values: Sequence,
    n_runs: int | None = None,
    *,
    workers: int = 1,
) -> list[SweepRow]:
    """One aggregate per axis value, everything else held fixed."""
    rows = []
    for value in values:
        cell = _apply_axis(scenario, axis, value)
        agg = monte_carlo(cell, n_runs, workers=workers)
        rows.append(
            SweepRow(axis=axis, value=value, scheduler=cell.scheduler, aggregate=agg)
        )
    return rows


# ---------------------------------------------------------------------------
# pruned-search vs oracle validation


@dataclass(frozen=True)
class OracleInstance:
    seed: int
    t: int
    history_size: int
    d_trellis: float
    d_exhaustive: float

    @property
    def gap(self) -> float:
        if self.d_exhaustive == 0.0:
            return 0.0
        return (self.d_trellis - self.d_exhaustive) / self.d_exhaustive


@dataclass(frozen=True)
class ValidationReport:
    instances: tuple[OracleInstance, ...]
    mean_gap: float
    max_gap: float
    runtime_ms: float

    def passed(self, mean_tol: float, max_tol: float) -> bool:
        return self.mean_gap <= mean_tol and self.max_gap <= max_tol


def random_history_instance(
    scenario: ScenarioConfig, seed: int
) -> tuple[SceneTrace, int, frozenset[int]]:
    """A trace plus a uniformly drawn opportunity with the history the
    random baseline accumulated up to that point."""
    trace = scenario.build_trace(seed)
    config = scenario.scheduler_config()
    rng = np.random.default_rng([seed, 1])
    states: list[tuple[int, frozenset[int]]] = []
    history: set[int] = set()
    t = 1
    while t <= trace.last_deadline:
        states.append((t, frozenset(history)))
        policy = baselines.random_schedule(t, frozenset(history), trace, config, rng)
        first = policy.first_du
        if first is None:
            t += 1
            continue
        du = trace.du_by_id(first)
        history.add(first)
        t += _transmission_slots(du.size_bits, config.capacity_bits_per_slot)
    pick = np.random.default_rng([seed, 2])
    t_star, hist = states[int(pick.integers(len(states)))]
    return trace, t_star, hist


def validate_oracle_gap(
    scenario: ScenarioConfig, n_instances: int
) -> ValidationReport:
    """Relative distortion gap of the pruned trellis against the exhaustive
    oracle over randomly drawn (trace, opportunity, history) instances."""
    from .model import policy_distortion

    params = scenario.rd_params()
    weights = scenario.view_weights()
    config = scenario.scheduler_config()
    out = []
    tic = time.perf_counter()
    for i in range(n_instances):
        seed = scenario.seed + i
        trace, t, hist = random_history_instance(scenario, seed)
        pol_tr = trellis_search(t, hist, trace, config, params=params, weights=weights)
        pol_ex = exhaustive_search(
            t, hist, trace, config,
            max_paths=scenario.oracle_cap, params=params, weights=weights,
        )
        d_tr = policy_distortion(pol_tr, hist, trace, weights, params)
        d_ex = policy_distortion(pol_ex, hist, trace, weights, params)
        out.append(
            OracleInstance(
                seed=seed, t=t, history_size=len(hist),
                d_trellis=d_tr, d_exhaustive=d_ex,
            )
        )
    runtime_ms = (time.perf_counter() - tic) * 1e3
    gaps = [inst.gap for inst in out]
    return ValidationReport(
        instances=tuple(out),
        mean_gap=statistics.fmean(gaps) if gaps else 0.0,
        max_gap=max(gaps) if gaps else 0.0,
        runtime_ms=runtime_ms,
    )
