"""Finite-horizon schedulers for the bottleneck channel.

At an opportunity ``t`` the scheduler sees every unscheduled DU acquired in
``[t - T_D + 1, t + K - 1]`` (the acquisition pipeline runs K slots ahead
of the transmission clock) and plans binary send actions for the next K
slots. Three searches share that contract:

* ``trellis_search`` expands one branch per feasible DU plus an always-kept
  idle branch, prunes to the ``N_s`` highest-reward survivors per path
  after the unpruned first stage, and finally returns the bandwidth-
  feasible full path of minimum distortion.
* ``exhaustive_search`` enumerates every deliverable DU set (slot
  assignment does not change the distortion of a set, so sets plus a
  deadline-ordered slot check cover all policies) and serves as the
  optimality oracle.
* ``greedy_search`` is the horizon-1 special case.

Branch reward is the newly reconstructable area mass a DU adds given
everything already delivered or planned (the history plus the DUs
scheduled along the path): regions count 0/1 as reconstructable, weighted
by area, averaged over the L candidates.

All searches are pure functions of (t, history, trace, config); ties are
broken toward smaller DU ids so identical inputs give identical policies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .model import DataUnit, RdParams, ViewWeights
from .correlation import SceneTrace

__all__ = [
    "SchedulerConfig",
    "Policy",
    "TrellisPath",
    "candidate_dus",
    "slot_feasible",
    "effective_budget",
    "branch_reward",
    "expand_and_prune",
    "trellis_search",
    "exhaustive_search",
    "greedy_search",
]

DEFAULT_ORACLE_CAP = 1_000_000

# sort key for an idle choice; orders after every real DU id
_NULL_KEY = math.inf


@dataclass(frozen=True)
class SchedulerConfig:
    """Horizon K, survivor count N_s, per-slot channel bits, playback delay."""

    capacity_bits_per_slot: float
    K: int = 1
    N_s: int = 2
    T_D: int = 5

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.N_s < 1:
            raise ValueError(f"N_s must be >= 1, got {self.N_s}")
        if self.capacity_bits_per_slot <= 0:
            raise ValueError("capacity must be positive")
        if self.T_D < 1:
            raise ValueError(f"T_D must be >= 1, got {self.T_D}")

    @property
    def horizon_budget_bits(self) -> float:
        return self.capacity_bits_per_slot * self.K


@dataclass(frozen=True)
class Policy:
    """Binary action vectors over the K-slot horizon for the L candidates."""

    horizon: int
    candidate_ids: tuple[int, ...]
    actions: Mapping[int, tuple[int, ...]]

    def __post_init__(self) -> None:
        for du_id, vec in self.actions.items():
            if len(vec) != self.horizon:
                raise ValueError(f"action vector of DU {du_id} has wrong length")
            if sum(vec) > 1:
                raise ValueError(f"DU {du_id} scheduled more than once")

    def scheduled_ids(self) -> frozenset[int]:
        return frozenset(i for i, vec in self.actions.items() if any(vec))

    def du_at_slot(self, k: int) -> int | None:
        """DU sent at horizon slot k (1-based), or None for idle."""
        for du_id, vec in self.actions.items():
            if vec[k - 1]:
                return du_id
        return None

    @property
    def first_du(self) -> int | None:
        return self.du_at_slot(1)


def _policy_from_choices(
    choices: Sequence[int | None], candidate_ids: Sequence[int]
) -> Policy:
    horizon = len(choices)
    actions = {}
    for du_id in candidate_ids:
        vec = [0] * horizon
        for k, chosen in enumerate(choices):
            if chosen == du_id:
                vec[k] = 1
        actions[du_id] = tuple(vec)
    return Policy(
        horizon=horizon, candidate_ids=tuple(candidate_ids), actions=actions
    )


def all_null_policy(candidate_ids: Sequence[int], horizon: int) -> Policy:
    return _policy_from_choices([None] * horizon, candidate_ids)


@dataclass(frozen=True)
class TrellisPath:
    """Partial schedule: per-slot choices (DU id or None), the scheduled
    set, and the bits claimed so far. A DU appears at most once."""

    choices: tuple[int | None, ...]
    scheduled: frozenset[int]
    used_bits: float

    def extend(self, du: DataUnit | None) -> "TrellisPath":
        if du is None:
            return TrellisPath(self.choices + (None,), self.scheduled, self.used_bits)
        if du.id in self.scheduled:
            raise ValueError(f"DU {du.id} already on path")
        return TrellisPath(
            self.choices + (du.id,),
            self.scheduled | {du.id},
            self.used_bits + du.size_bits,
        )

    def sort_key(self) -> tuple[float, ...]:
        return tuple(_NULL_KEY if c is None else float(c) for c in self.choices)


# ---------------------------------------------------------------------------
# candidate window and feasibility


def candidate_dus(
    t: int, history: Iterable[int], trace: SceneTrace, config: SchedulerConfig
) -> list[DataUnit]:
    """Unscheduled DUs acquired in [t - T_D + 1, t + K - 1], capped at the
    latest instant the trace has acquired, ordered by (acq_slot, camera)."""
    if t < 1:
        raise ValueError(f"opportunity slot must be >= 1, got {t}")
    hist = frozenset(history)
    lo = t - config.T_D + 1
    hi = min(t + config.K - 1, trace.last_acq_slot)
    out = [
        du
        for du in trace.dus
        if lo <= du.acq_slot <= hi and du.id not in hist
    ]
    out.sort(key=lambda du: (du.acq_slot, du.frame.camera))
    return out


def slot_feasible(du: DataUnit, k: int, t: int, config: SchedulerConfig) -> bool:
    """Whether the DU may occupy horizon slot k (transmission at t + k - 1):
    it must still be alive there and already covered by the lookahead."""
    if not 1 <= k <= config.K:
        raise ValueError(f"slot index {k} outside horizon 1..{config.K}")
    return t - config.T_D + k <= du.acq_slot <= t + config.K - 1


def effective_budget(config: SchedulerConfig, candidates: Sequence[DataUnit]) -> float:
    """Bandwidth budget for one optimization: the K-slot bit budget, but
    never below the largest single candidate. A lone DU is always
    physically transmittable (the channel simply stays busy T_u slots), so
    a horizon must not deadlock when one DU outweighs C*K*T_TDMA."""
    budget = config.horizon_budget_bits
    if candidates:
        budget = max(budget, max(du.size_bits for du in candidates))
    return budget


# ---------------------------------------------------------------------------
# branch reward (coverage gain)


def _frame_key(du: DataUnit) -> tuple[int, int]:
    return (du.frame.camera, du.acq_slot)


def _covered(
    du: DataUnit,
    region,
    delivered_frames: frozenset[tuple[int, int]],
    acq_period: int,
) -> bool:
    if _frame_key(du) in delivered_frames:
        return True
    for camera, offset in region.contributors:
        if (camera, du.acq_slot - offset * acq_period) in delivered_frames:
            return True
    return False


def branch_reward(
    q: DataUnit,
    scheduled: Iterable[int],
    candidates: Sequence[DataUnit],
    trace: SceneTrace,
) -> float:
    """Innovation the DU q offers: area mass over all candidate regions
    that becomes reconstructable with q scheduled and was not before,
    divided by the candidate count."""
    sched = frozenset(scheduled)
    if q.id in sched:
        raise ValueError(f"DU {q.id} is already scheduled")
    if not candidates:
        return 0.0
    period = trace.acq_period
    before = frozenset(_frame_key(trace.du_by_id(i)) for i in sched)
    after = before | {_frame_key(q)}
    gain = 0.0
    for du in candidates:
        for region in du.regions:
            if _covered(du, region, after, period) and not _covered(
                du, region, before, period
            ):
                gain += region.area
    return gain / len(candidates)


# ---------------------------------------------------------------------------
# fast per-opportunity evaluator
#
# Candidates are assigned bit positions; a path's scheduled set becomes an
# int mask. Region contributor sets are folded to masks over those bits
# plus a precomputed rate contribution from the (fixed) history, which
# makes path distortion and coverage cheap, memoizable set functions.


class _OpportunityEval:
    def __init__(
        self,
        t: int,
        history: Iterable[int],
        trace: SceneTrace,
        config: SchedulerConfig,
        candidates: Sequence[DataUnit],
        params: RdParams,
        weights: ViewWeights,
    ) -> None:
        self.trace = trace
        self.candidates = list(candidates)
        self.L = len(self.candidates)
        hist = frozenset(history)
        period = trace.acq_period
        bit_of = {du.id: i for i, du in enumerate(self.candidates)}
        self._bit_of = bit_of
        hist_frames = {}
        for i in hist:
            du = trace.du_by_id(i)
            hist_frames[_frame_key(du)] = du.rate_bpp

        self._recv_d = []
        self._inv_w = []
        self._rates = [du.rate_bpp for du in self.candidates]
        self._frames = []  # per candidate: list of (area, cand_mask, hist_rate)
        uniform = trace.uniform_rate()
        rate = trace.rate_bpp
        for du in self.candidates:
            self._recv_d.append(params.mu * params.sigma2 * 2.0 ** (-2.0 * du.rate_bpp))
            self._inv_w.append(1.0 / weights.of(du.frame.camera))
            regions = []
            for region in du.regions:
                mask = 0
                hist_rate = 0.0
                for camera, offset in region.contributors:
                    slot = du.acq_slot - offset * period
                    if slot < 1:
                        continue
                    other = trace.du_by_frame(camera, slot)
                    if other is None:
                        continue
                    bit = bit_of.get(other.id)
                    if bit is not None:
                        mask |= 1 << bit
                    hist_rate += hist_frames.get((camera, slot), 0.0)
                regions.append((region.area, mask, hist_rate))
            self._frames.append(regions)

        # Region coverage masks for the reward: a region is reconstructable
        # under a scheduled set iff any contributor bit (own frame included;
        # its own bit is folded in above) intersects the set.
        self._d0 = params.mu * params.sigma2
        self._uniform = uniform and all(
            hr == 0.0 or abs(hr / rate - round(hr / rate)) < 1e-9
            for regs in self._frames
            for _, _, hr in regs
        )
        if self._uniform:
            max_n = max(
                (
                    m.bit_count() + int(round(hr / rate))
                    for regs in self._frames
                    for _, m, hr in regs
                ),
                default=0,
            )
            self._dtable = [
                self._d0 * 2.0 ** (-2.0 * rate * n) for n in range(max_n + 1)
            ]
        self._d_memo: dict[int, float] = {}
        self._g_memo: dict[int, float] = {}

    def distortion(self, sched_mask: int) -> float:
        """Candidate-window distortion with the history folded in."""
        got = self._d_memo.get(sched_mask)
        if got is not None:
            return got
        total = 0.0
        if self._uniform:
            rate = self.trace.rate_bpp
            dtable = self._dtable
            for i in range(self.L):
                if (sched_mask >> i) & 1:
                    d = self._recv_d[i]
                else:
                    d = 0.0
                    for area, mask, hist_rate in self._frames[i]:
                        n = (mask & sched_mask).bit_count() + int(
                            round(hist_rate / rate)
                        )
                        d += area * dtable[n]
                total += d * self._inv_w[i]
        else:
            rates = self._rates
            for i in range(self.L):
                if (sched_mask >> i) & 1:
                    d = self._recv_d[i]
                else:
                    d = 0.0
                    for area, mask, hist_rate in self._frames[i]:
                        r = hist_rate
                        bits = mask & sched_mask
                        while bits:
                            low = bits & -bits
                            r += rates[low.bit_length() - 1]
                            bits ^= low
                        d += area * self._d0 * 2.0 ** (-2.0 * r)
                total += d * self._inv_w[i]
        self._d_memo[sched_mask] = total
        return total

    def coverage(self, sched_mask: int) -> float:
        """Total area mass reconstructable given the history plus the
        scheduled set; the reward is its marginal gain."""
        got = self._g_memo.get(sched_mask)
        if got is not None:
            return got
        total = 0.0
        for i in range(self.L):
            if (sched_mask >> i) & 1:
                total += 1.0
                continue
            for area, mask, hist_rate in self._frames[i]:
                if hist_rate > 0.0 or mask & sched_mask:
                    total += area
        self._g_memo[sched_mask] = total
        return total

    def reward(self, q_bit: int, sched_mask: int) -> float:
        if self.L == 0:
            return 0.0
        gain = self.coverage(sched_mask | (1 << q_bit)) - self.coverage(sched_mask)
        return gain / self.L

    def mask_of(self, scheduled: frozenset[int]) -> int:
        mask = 0
        for du_id in scheduled:
            mask |= 1 << self._bit_of[du_id]
        return mask


# ---------------------------------------------------------------------------
# trellis search


def expand_and_prune(
    path: TrellisPath,
    k: int,
    t: int,
    candidates: Sequence[DataUnit],
    config: SchedulerConfig,
    trace: SceneTrace,
    history: frozenset[int] = frozenset(),
) -> list[TrellisPath]:
    """Successors of a depth-k path at slot k+1: the idle branch plus the
    N_s highest-reward feasible DUs. The idle successor is always retained
    on top of the survivors so under-budget paths survive tight horizons;
    rewards are conditioned on everything already delivered or planned
    (history plus the path)."""
    budget = effective_budget(config, candidates)
    feasible = [
        du
        for du in candidates
        if du.id not in path.scheduled
        and slot_feasible(du, k + 1, t, config)
        and path.used_bits + du.size_bits <= budget
    ]
    ranked = sorted(
        feasible,
        key=lambda du: (
            -branch_reward(du, path.scheduled | history, candidates, trace),
            du.id,
        ),
    )
    out = [path.extend(None)]
    out.extend(path.extend(du) for du in ranked[: config.N_s])
    return out


def trellis_search(
    t: int,
    history: Iterable[int],
    trace: SceneTrace,
    config: SchedulerConfig,
    *,
    params: RdParams | None = None,
    weights: ViewWeights | None = None,
) -> Policy:
    """Pruned trellis optimization of the K-slot schedule at opportunity t.

    Depth-1 branches are all kept; deeper expansions go through the N_s
    survivor rule (idle always retained). Among full paths the bandwidth-
    feasible one of minimum candidate-window distortion wins, ties broken
    toward smaller DU ids (idle ordering last). Paths sharing a scheduled
    set are merged: distortion and every later expansion depend on the set
    alone, so one representative stands for all of them.
    """
    params = params or RdParams()
    hist = frozenset(history)
    candidates = candidate_dus(t, hist, trace, config)
    weights = weights or ViewWeights.uniform(trace.M)
    cand_ids = [du.id for du in candidates]
    if not candidates:
        return all_null_policy([], config.K)

    ev = _OpportunityEval(t, hist, trace, config, candidates, params, weights)
    budget = effective_budget(config, candidates)
    sizes = [du.size_bits for du in candidates]
    ids = [float(du.id) for du in candidates]
    # last horizon slot each candidate may occupy (feasible slots are a prefix)
    k_cap = [min(config.K, du.acq_slot + config.T_D - t) for du in candidates]
    n_s = config.N_s

    # internal path: (choices tuple, set mask, used bits); idle = inf so
    # tuple comparison matches the smaller-DU-id-first tie-break
    paths = [((_NULL_KEY,), 0, 0.0)]
    for i in range(len(candidates)):
        if k_cap[i] >= 1 and sizes[i] <= budget:
            paths.append(((ids[i],), 1 << i, sizes[i]))

    for k in range(1, config.K):
        target = k + 1
        best: dict[int, tuple[tuple[float, ...], float]] = {}
        for choices, mask, used in paths:
            null_choice = choices + (_NULL_KEY,)
            cur = best.get(mask)
            if cur is None or null_choice < cur[0]:
                best[mask] = (null_choice, used)
            scored = []
            for i in range(len(candidates)):
                if (mask >> i) & 1 or target > k_cap[i]:
                    continue
                grown = used + sizes[i]
                if grown > budget:
                    continue
                scored.append((-ev.reward(i, mask), ids[i], i, grown))
            scored.sort()
            for _, du_id, i, grown in scored[:n_s]:
                m2 = mask | (1 << i)
                c2 = choices + (du_id,)
                cur = best.get(m2)
                if cur is None or c2 < cur[0]:
                    best[m2] = (c2, grown)
        paths = [(c, m, u) for m, (c, u) in best.items()]

    best_key: tuple[float, tuple[float, ...]] | None = None
    for choices, mask, _ in paths:
        key = (ev.distortion(mask), choices)
        if best_key is None or key < best_key:
            best_key = key
    assert best_key is not None
    final = [None if c == _NULL_KEY else int(c) for c in best_key[1]]
    return _policy_from_choices(final, cand_ids)


def greedy_search(
    t: int,
    history: Iterable[int],
    trace: SceneTrace,
    config: SchedulerConfig,
    *,
    params: RdParams | None = None,
    weights: ViewWeights | None = None,
) -> Policy:
    """Myopic special case: the horizon collapses to the next slot."""
    return trellis_search(
        t, history, trace, replace(config, K=1), params=params, weights=weights
    )


# ---------------------------------------------------------------------------
# exhaustive oracle


def _edf_assignment(
    dus: Sequence[DataUnit], t: int, config: SchedulerConfig
) -> list[int] | None:
    """Slots for the chosen set, earliest deadline first; None when no
    valid assignment exists. Each DU's feasible slots form the prefix
    1..k_max, so greedy assignment is exact."""
    k_caps = sorted(
        (min(config.K, du.acq_slot + config.T_D - t), du.id) for du in dus
    )
    slots_by_id: dict[int, int] = {}
    for k, (cap, du_id) in enumerate(k_caps, start=1):
        if k > cap:
            return None
        slots_by_id[du_id] = k
    return [slots_by_id[du.id] for du in dus]


def exhaustive_search(
    t: int,
    history: Iterable[int],
    trace: SceneTrace,
    config: SchedulerConfig,
    *,
    max_paths: int = DEFAULT_ORACLE_CAP,
    params: RdParams | None = None,
    weights: ViewWeights | None = None,
) -> Policy:
    """Ground-truth minimum-distortion policy by enumerating deliverable
    DU sets (set distortion is assignment-invariant; a deadline-ordered
    slot check certifies schedulability). Refuses oversized instances."""
    params = params or RdParams()
    hist = frozenset(history)
    candidates = candidate_dus(t, hist, trace, config)
    weights = weights or ViewWeights.uniform(trace.M)
    cand_ids = [du.id for du in candidates]
    L = len(candidates)
    if (L + 1) ** config.K > max_paths:
        raise ValueError(
            f"exhaustive search cap exceeded: ({L}+1)^{config.K} > {max_paths}"
        )
    if not candidates:
        return all_null_policy([], config.K)

    ev = _OpportunityEval(t, hist, trace, config, candidates, params, weights)
    budget = effective_budget(config, candidates)

    best_choice: tuple[tuple[DataUnit, ...], list[int]] | None = None
    best_d = math.inf
    max_size = min(config.K, L)
    for size in range(0, max_size + 1):
        for combo in itertools.combinations(candidates, size):
            if sum(du.size_bits for du in combo) > budget:
                continue
            slots = _edf_assignment(combo, t, config)
            if slots is None:
                continue
            d = ev.distortion(ev.mask_of(frozenset(du.id for du in combo)))
            if d < best_d - 1e-15:
                best_d = d
                best_choice = (combo, slots)
    assert best_choice is not None
    combo, slots = best_choice
    choices: list[int | None] = [None] * config.K
    for du, k in zip(combo, slots):
        choices[k - 1] = du.id
    return _policy_from_choices(choices, cand_ids)
