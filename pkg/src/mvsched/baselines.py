"""Reference schedulers the optimized search is compared against.

``random_schedule`` allocates a uniformly drawn feasible DU at every
opportunity (it never idles while something fits). ``akyildiz_schedule``
follows a camera priority fixed once per scenario from the spatial
correlation structure alone: the camera whose sole delivery yields the
lowest scene distortion ranks first, and each further rank goes to the
camera sharing the least reconstructable area with those already picked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .correlation import SceneTrace, mask_trace
from .model import RdParams, ViewWeights, scene_distortion
from .scheduler import (
    Policy,
    SchedulerConfig,
    all_null_policy,
    candidate_dus,
    effective_budget,
    slot_feasible,
)

__all__ = [
    "CameraPriority",
    "random_schedule",
    "akyildiz_priority",
    "akyildiz_schedule",
]


@dataclass(frozen=True)
class CameraPriority:
    """Permutation of camera indices, highest priority first."""

    order: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.order) != list(range(1, len(self.order) + 1)):
            raise ValueError(f"not a permutation of 1..M: {self.order}")


def _first_slot_pool(
    t: int, history: Iterable[int], trace: SceneTrace, config: SchedulerConfig
):
    candidates = candidate_dus(t, history, trace, config)
    budget = effective_budget(config, candidates)
    return [
        du
        for du in candidates
        if slot_feasible(du, 1, t, config) and du.size_bits <= budget
    ], candidates


def _single_du_policy(du_id: int | None, candidates, horizon: int) -> Policy:
    cand_ids = tuple(du.id for du in candidates)
    if du_id is None:
        return all_null_policy(cand_ids, horizon)
    actions = {
        i: ((1,) + (0,) * (horizon - 1)) if i == du_id else (0,) * horizon
        for i in cand_ids
    }
    return Policy(horizon=horizon, candidate_ids=cand_ids, actions=actions)


def random_schedule(
    t: int,
    history: Iterable[int],
    trace: SceneTrace,
    config: SchedulerConfig,
    rng: np.random.Generator,
) -> Policy:
    """Uniform choice among the DUs transmittable right now; idle only
    when nothing fits."""
    pool, candidates = _first_slot_pool(t, history, trace, config)
    if not pool:
        return _single_du_policy(None, candidates, config.K)
    pick = pool[int(rng.integers(len(pool)))]
    return _single_du_policy(pick.id, candidates, config.K)


def akyildiz_priority(
    trace: SceneTrace,
    params: RdParams | None = None,
    weights: ViewWeights | None = None,
) -> CameraPriority:
    """Static camera ranking from spatial correlation only (temporal
    information is deliberately ignored). Greedy: best single-delivery
    distortion first, then minimum shared-coverage overlap with the
    already selected cameras; ties fall to the smaller camera index."""
    params = params or RdParams()
    weights = weights or ViewWeights.uniform(trace.M)
    spatial = mask_trace(trace, "spatial")
    instants = spatial.acq_slots()

    def single_delivery_cost(camera: int) -> float:
        total = 0.0
        for t in instants:
            du = spatial.du_by_frame(camera, t)
            total += scene_distortion(t, {du.id}, spatial, weights, params)
        return total / len(instants)

    def covers(camera: int, du, region) -> bool:
        return camera == du.frame.camera or (camera, 0) in region.contributors

    def overlap_mass(camera: int, chosen: list[int]) -> float:
        total = 0.0
        for du in spatial.dus:
            for region in du.regions:
                if covers(camera, du, region) and any(
                    covers(c, du, region) for c in chosen
                ):
                    total += region.area
        return total / len(instants)

    first = min(range(1, trace.M + 1), key=lambda c: (single_delivery_cost(c), c))
    order = [first]
    remaining = [c for c in range(1, trace.M + 1) if c != first]
    while remaining:
        nxt = min(remaining, key=lambda c: (overlap_mass(c, order), c))
        order.append(nxt)
        remaining.remove(nxt)
    return CameraPriority(order=tuple(order))


def akyildiz_schedule(
    t: int,
    history: Iterable[int],
    trace: SceneTrace,
    config: SchedulerConfig,
    priority: CameraPriority,
) -> Policy:
    """Send the newest live DU of the best-ranked camera that has one;
    walk down the priority list, idle when nothing fits."""
    pool, candidates = _first_slot_pool(t, history, trace, config)
    by_camera: dict[int, list] = {}
    for du in pool:
        by_camera.setdefault(du.frame.camera, []).append(du)
    for camera in priority.order:
        mine = by_camera.get(camera)
        if mine:
            newest = max(mine, key=lambda du: du.acq_slot)
            return _single_du_policy(newest.id, candidates, config.K)
    return _single_du_policy(None, candidates, config.K)
