"""Synthetic correlation-structure generator for multiview scene traces.

Real deployments derive per-frame region decompositions from depth maps and
view projection; here a 1-D geometric stand-in produces the same region
topology with controllable fractions. Each frame is the unit interval
[0, 1]. A spatial neighbor on the left covers ``[0, f]`` and one on the
right covers ``[1 - f, 1]``, where f is the overlap fraction for the
inter-camera distance. A past frame of the same camera covers the
background strip ``[0, background_fraction]`` minus the footprints of any
moving foreground objects in either frame of the pair. Intersecting and
differencing all coverage masks yields disjoint regions, each labeled by
the unique set of frames able to reconstruct it; cells with identical
contributor sets are merged and their fractions summed.

Dynamic scenes place the cameras on a line of 2M discrete positions and
move one randomly chosen camera per acquisition instant to a free
neighboring position. Spatial overlap then follows the current
inter-camera distances, and a camera that moved loses temporal correlation
into its new frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import DataUnit, FrameRef, Region

__all__ = [
    "CameraLayout",
    "MovingObject",
    "CorrelationSpec",
    "SceneTrace",
    "build_static_trace",
    "build_dynamic_trace",
    "step_dynamic",
    "mask_trace",
    "trace_to_json",
    "trace_from_json",
]

DEFAULT_ACQ_PERIOD = 4
DEFAULT_PIXELS_PER_FRAME = 768 * 1024

_ROUND = 12  # interval endpoints rounded to avoid float-sliver cells

Interval = tuple[float, float]


@dataclass(frozen=True)
class CameraLayout:
    """Camera positions on the 1..2M line; positions are pairwise distinct."""

    positions: tuple[int, ...]

    def __post_init__(self) -> None:
        m = len(self.positions)
        if m == 0:
            raise ValueError("layout needs at least one camera")
        if len(set(self.positions)) != m:
            raise ValueError(f"camera positions must be distinct: {self.positions}")
        for p in self.positions:
            if not 1 <= p <= 2 * m:
                raise ValueError(f"position {p} outside [1, {2 * m}]")

    @property
    def M(self) -> int:
        return len(self.positions)

    def position_of(self, camera: int) -> int:
        return self.positions[camera - 1]


@dataclass(frozen=True)
class MovingObject:
    """Foreground object sliding across one camera's frame.

    Its footprint occludes the temporal background: a past frame cannot
    reconstruct pixels the object covers in either frame of the pair.
    Frame-index i (1-based) footprint: [start + (i-1)*speed, ... + width],
    clipped to [0, 1].
    """

    camera: int
    start: float
    width: float
    speed: float

    def footprint(self, frame_index: int) -> Interval | None:
        lo = self.start + (frame_index - 1) * self.speed
        hi = lo + self.width
        lo, hi = max(0.0, lo), min(1.0, hi)
        if hi <= lo:
            return None
        return (lo, hi)


@dataclass(frozen=True)
class CorrelationSpec:
    """Correlation-structure knobs.

    rho_s: total spatially correlated neighbor count, split rho_s/2 per side.
    rho_t: number of past frames usable in temporal reconstruction.
    overlap_at_distance: optional map from inter-camera distance to overlap
        fraction. Signed keys address one side only (negative = left
        neighbor); unsigned keys apply to both sides. Missing distances use
        the default law 1 - d/(rho_s/2 + 1), clamped to [0, 1].
    background_fraction: portion of each frame reconstructable from a past
        frame when nothing moves.
    objects: moving foreground objects (content motion; default none).
    """

    rho_s: int = 0
    rho_t: int = 0
    overlap_at_distance: Mapping[int, float] | None = None
    background_fraction: float = 0.8
    objects: tuple[MovingObject, ...] = ()

    def __post_init__(self) -> None:
        if self.rho_s < 0 or self.rho_s % 2 != 0:
            raise ValueError(f"rho_s must be even and >= 0, got {self.rho_s}")
        if self.rho_t < 0:
            raise ValueError(f"rho_t must be >= 0, got {self.rho_t}")
        if not 0.0 <= self.background_fraction <= 1.0:
            raise ValueError("background_fraction must lie in [0, 1]")
        if self.overlap_at_distance is not None:
            for d, f in self.overlap_at_distance.items():
                if d == 0:
                    raise ValueError("overlap map may not contain distance 0")
                if not 0.0 <= f <= 1.0:
                    raise ValueError(f"overlap fraction for distance {d} outside [0, 1]")

    def overlap(self, signed_distance: int) -> float:
        """Overlap fraction for a neighbor at the given signed position
        distance (negative = left of the frame's camera)."""
        if signed_distance == 0:
            raise ValueError("distance 0 is the camera itself")
        omap = self.overlap_at_distance
        if omap is not None:
            if signed_distance in omap:
                return omap[signed_distance]
            if abs(signed_distance) in omap:
                return omap[abs(signed_distance)]
            return 0.0
        if self.rho_s == 0:
            return 0.0
        half = self.rho_s // 2
        return max(0.0, 1.0 - abs(signed_distance) / (half + 1))


class SceneTrace:
    """Immutable result of scene generation: M*N_f data units with their
    region decompositions, plus the per-instant camera layouts and motion
    flags that produced them."""

    def __init__(
        self,
        *,
        M: int,
        N_f: int,
        acq_period: int,
        rate_bpp: float,
        pixels_per_frame: int,
        T_D: int,
        rho_s: int,
        rho_t: int,
        dus: Sequence[DataUnit],
        layouts: Sequence[CameraLayout],
        moved: Sequence[int | None],
    ) -> None:
        if M < 1 or N_f < 1:
            raise ValueError("scene needs at least one camera and one frame")
        if len(dus) != M * N_f:
            raise ValueError(f"expected {M * N_f} DUs, got {len(dus)}")
        if len(layouts) != N_f or len(moved) != N_f:
            raise ValueError("need one layout and one motion flag per instant")
        self.M = M
        self.N_f = N_f
        self.acq_period = acq_period
        self.rate_bpp = rate_bpp
        self.pixels_per_frame = pixels_per_frame
        self.T_D = T_D
        self.rho_s = rho_s
        self.rho_t = rho_t
        self.dus = tuple(dus)
        self.layouts = tuple(layouts)
        self.moved = tuple(moved)
        self._by_frame = {(du.frame.camera, du.frame.slot): du for du in self.dus}
        grouped: dict[int, list[DataUnit]] = {}
        for du in self.dus:
            grouped.setdefault(du.acq_slot, []).append(du)
        self._by_slot = {slot: tuple(group) for slot, group in grouped.items()}
        self._ids = frozenset(du.id for du in self.dus)

    # -- lookups ---------------------------------------------------------

    def du_by_id(self, du_id: int) -> DataUnit:
        return self.dus[du_id]

    def du_by_frame(self, camera: int, slot: int) -> DataUnit | None:
        return self._by_frame.get((camera, slot))

    def dus_at_slot(self, slot: int) -> tuple[DataUnit, ...]:
        return self._by_slot.get(slot, ())

    def du_ids(self) -> frozenset[int]:
        return self._ids

    def acq_slots(self) -> tuple[int, ...]:
        return tuple(sorted(self._by_slot))

    @property
    def last_acq_slot(self) -> int:
        return 1 + (self.N_f - 1) * self.acq_period

    @property
    def last_deadline(self) -> int:
        return self.last_acq_slot + self.T_D

    @property
    def du_size_bits(self) -> float:
        return self.rate_bpp * self.pixels_per_frame

    def uniform_rate(self) -> bool:
        rates = {du.rate_bpp for du in self.dus}
        return len(rates) == 1


# ---------------------------------------------------------------------------
# interval algebra


def _subtract(intervals: list[Interval], hole: Interval) -> list[Interval]:
    lo_h, hi_h = hole
    out: list[Interval] = []
    for lo, hi in intervals:
        if hi_h <= lo or lo_h >= hi:
            out.append((lo, hi))
            continue
        if lo < lo_h:
            out.append((lo, lo_h))
        if hi_h < hi:
            out.append((hi_h, hi))
    return out


def _build_regions(
    own_camera: int, masks: Sequence[tuple[tuple[int, int], Sequence[Interval]]]
) -> tuple[Region, ...]:
    """Partition the unit interval by every mask endpoint and merge cells
    sharing a contributor set. Region order follows the first covered cell."""
    points = {0.0, 1.0}
    for _, intervals in masks:
        for lo, hi in intervals:
            points.add(round(lo, _ROUND))
            points.add(round(hi, _ROUND))
    cuts = sorted(p for p in points if 0.0 <= p <= 1.0)
    merged: dict[frozenset[tuple[int, int]], float] = {}
    order: list[frozenset[tuple[int, int]]] = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0.0:
            continue
        mid = 0.5 * (lo + hi)
        contribs = {(own_camera, 0)}
        for pair, intervals in masks:
            if any(a <= mid < b for a, b in intervals):
                contribs.add(pair)
        key = frozenset(contribs)
        if key not in merged:
            merged[key] = 0.0
            order.append(key)
        merged[key] += hi - lo
    return tuple(Region(area=merged[key], contributors=key) for key in order)


# ---------------------------------------------------------------------------
# mask construction


def _spatial_masks(
    spec: CorrelationSpec, layout: CameraLayout, camera: int
) -> list[tuple[tuple[int, int], list[Interval]]]:
    """Coverage intervals contributed by up to rho_s/2 nearest neighbors on
    each side, ordered by position. Zero overlap drops the neighbor."""
    if spec.rho_s == 0:
        return []
    half = spec.rho_s // 2
    pos = layout.position_of(camera)
    by_side: dict[int, list[tuple[int, int]]] = {-1: [], +1: []}
    for other in range(1, layout.M + 1):
        if other == camera:
            continue
        delta = layout.position_of(other) - pos
        by_side[-1 if delta < 0 else +1].append((abs(delta), other))
    masks: list[tuple[tuple[int, int], list[Interval]]] = []
    for side in (-1, +1):
        neighbors = sorted(by_side[side])[:half]
        for dist, other in neighbors:
            f = spec.overlap(side * dist)
            if f <= 0.0:
                continue
            iv: Interval = (0.0, f) if side < 0 else (1.0 - f, 1.0)
            masks.append(((other, 0), [iv]))
    return masks


def _temporal_masks(
    spec: CorrelationSpec,
    camera: int,
    frame_index: int,
    moved: Sequence[int | None],
) -> list[tuple[tuple[int, int], list[Interval]]]:
    """Coverage from the same camera's past frames. A camera movement at
    any instant between the pair severs the correlation; moving objects
    punch holes where they sit in either frame."""
    masks: list[tuple[tuple[int, int], list[Interval]]] = []
    if spec.background_fraction <= 0.0:
        return masks
    own_objects = [o for o in spec.objects if o.camera == camera]
    for offset in range(1, spec.rho_t + 1):
        past = frame_index - offset
        if past < 1:
            break
        if any(moved[i - 1] == camera for i in range(past + 1, frame_index + 1)):
            continue
        intervals: list[Interval] = [(0.0, spec.background_fraction)]
        for obj in own_objects:
            for idx in (frame_index, past):
                hole = obj.footprint(idx)
                if hole is not None:
                    intervals = _subtract(intervals, hole)
        intervals = [(lo, hi) for lo, hi in intervals if hi - lo > 0.0]
        if intervals:
            masks.append(((camera, offset), intervals))
    return masks


def _make_du(
    du_id: int,
    camera: int,
    frame_index: int,
    acq_period: int,
    rate_bpp: float,
    pixels_per_frame: int,
    T_D: int,
    regions: tuple[Region, ...],
) -> DataUnit:
    slot = 1 + (frame_index - 1) * acq_period
    return DataUnit(
        id=du_id,
        frame=FrameRef(camera=camera, slot=slot),
        size_bits=rate_bpp * pixels_per_frame,
        rate_bpp=rate_bpp,
        acq_slot=slot,
        deadline_slot=slot + T_D,
        regions=regions,
    )


def _build_trace(
    spec: CorrelationSpec,
    M: int,
    N_f: int,
    rate_bpp: float,
    T_D: int,
    layouts: Sequence[CameraLayout],
    moved: Sequence[int | None],
    acq_period: int,
    pixels_per_frame: int,
) -> SceneTrace:
    if M < 1 or N_f < 1:
        raise ValueError("scene dimensions must be positive")
    dus: list[DataUnit] = []
    du_id = 0
    for frame_index in range(1, N_f + 1):
        layout = layouts[frame_index - 1]
        for camera in range(1, M + 1):
            masks = _spatial_masks(spec, layout, camera)
            masks += _temporal_masks(spec, camera, frame_index, moved)
            regions = _build_regions(camera, masks)
            dus.append(
                _make_du(
                    du_id, camera, frame_index, acq_period, rate_bpp,
                    pixels_per_frame, T_D, regions,
                )
            )
            du_id += 1
    return SceneTrace(
        M=M, N_f=N_f, acq_period=acq_period, rate_bpp=rate_bpp,
        pixels_per_frame=pixels_per_frame, T_D=T_D,
        rho_s=spec.rho_s, rho_t=spec.rho_t,
        dus=dus, layouts=layouts, moved=moved,
    )


def build_static_trace(
    spec: CorrelationSpec,
    M: int,
    N_f: int,
    rate_bpp: float,
    T_D: int,
    *,
    acq_period: int = DEFAULT_ACQ_PERIOD,
    pixels_per_frame: int = DEFAULT_PIXELS_PER_FRAME,
) -> SceneTrace:
    """Scene with cameras fixed at adjacent positions 1..M; deterministic."""
    layout = CameraLayout(positions=tuple(range(1, M + 1)))
    layouts = [layout] * N_f
    moved: list[int | None] = [None] * N_f
    return _build_trace(
        spec, M, N_f, rate_bpp, T_D, layouts, moved, acq_period, pixels_per_frame
    )


def step_dynamic(
    layout: CameraLayout, rng: np.random.Generator
) -> tuple[CameraLayout, int | None]:
    """One random-walk step: a uniformly chosen camera proposes a uniformly
    chosen neighboring position and moves there only if it is free."""
    m = int(rng.integers(1, layout.M + 1))
    pos = layout.position_of(m)
    options = [p for p in (pos - 1, pos + 1) if 1 <= p <= 2 * layout.M]
    target = options[int(rng.integers(len(options)))]
    if target in layout.positions:
        return layout, None
    positions = list(layout.positions)
    positions[m - 1] = target
    return CameraLayout(positions=tuple(positions)), m


def build_dynamic_trace(
    spec: CorrelationSpec,
    M: int,
    N_f: int,
    rate_bpp: float,
    T_D: int,
    rng: np.random.Generator,
    *,
    acq_period: int = DEFAULT_ACQ_PERIOD,
    pixels_per_frame: int = DEFAULT_PIXELS_PER_FRAME,
) -> SceneTrace:
    """Scene with a camera random walk over 2M line positions, one step per
    acquisition instant. A camera that moved acquires its next frame with
    no temporal contributors."""
    start = rng.choice(2 * M, size=M, replace=False)
    layout = CameraLayout(positions=tuple(int(p) + 1 for p in start))
    layouts = [layout]
    moved: list[int | None] = [None]
    for _ in range(2, N_f + 1):
        layout, who = step_dynamic(layout, rng)
        layouts.append(layout)
        moved.append(who)
    return _build_trace(
        spec, M, N_f, rate_bpp, T_D, layouts, moved, acq_period, pixels_per_frame
    )


# ---------------------------------------------------------------------------
# scheduler-facing views


def mask_trace(trace: SceneTrace, view: str) -> SceneTrace:
    """Return a copy of the trace with contributor bits hidden from the
    scheduler: 'full' keeps everything, 'spatial' drops temporal pairs,
    'temporal' drops same-instant neighbors, 'none' leaves only the frame
    itself. Regions collapsing to the same mask are merged."""
    if view == "full":
        return trace
    if view not in ("spatial", "temporal", "none"):
        raise ValueError(f"unknown correlation view {view!r}")

    def keep(own: int, pair: tuple[int, int]) -> bool:
        camera, offset = pair
        if camera == own and offset == 0:
            return True
        if view == "spatial":
            return offset == 0
        if view == "temporal":
            return camera == own
        return False

    dus = []
    for du in trace.dus:
        own = du.frame.camera
        merged: dict[frozenset[tuple[int, int]], float] = {}
        order: list[frozenset[tuple[int, int]]] = []
        for region in du.regions:
            key = frozenset(p for p in region.contributors if keep(own, p))
            if key not in merged:
                merged[key] = 0.0
                order.append(key)
            merged[key] += region.area
        regions = tuple(Region(area=merged[k], contributors=k) for k in order)
        dus.append(
            DataUnit(
                id=du.id, frame=du.frame, size_bits=du.size_bits,
                rate_bpp=du.rate_bpp, acq_slot=du.acq_slot,
                deadline_slot=du.deadline_slot, regions=regions,
            )
        )
    return SceneTrace(
        M=trace.M, N_f=trace.N_f, acq_period=trace.acq_period,
        rate_bpp=trace.rate_bpp, pixels_per_frame=trace.pixels_per_frame,
        T_D=trace.T_D, rho_s=trace.rho_s, rho_t=trace.rho_t,
        dus=dus, layouts=trace.layouts, moved=trace.moved,
    )


# ---------------------------------------------------------------------------
# serialization


def trace_to_json(trace: SceneTrace) -> str:
    """Serialize a trace (regions included) so measured correlation
    structures can be fed in from external pipelines."""
    doc = {
        "version": 1,
        "M": trace.M,
        "N_f": trace.N_f,
        "acq_period": trace.acq_period,
        "rate_bpp": trace.rate_bpp,
        "pixels_per_frame": trace.pixels_per_frame,
        "T_D": trace.T_D,
        "rho_s": trace.rho_s,
        "rho_t": trace.rho_t,
        "layouts": [list(l.positions) for l in trace.layouts],
        "moved": [m for m in trace.moved],
        "frames": [
            {
                "id": du.id,
                "camera": du.frame.camera,
                "slot": du.frame.slot,
                "rate_bpp": du.rate_bpp,
                "size_bits": du.size_bits,
                "deadline_slot": du.deadline_slot,
                "regions": [
                    {
                        "area": r.area,
                        "contributors": sorted([c, o] for c, o in r.contributors),
                    }
                    for r in du.regions
                ],
            }
            for du in trace.dus
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def trace_from_json(text: str) -> SceneTrace:
    doc = json.loads(text)
    if doc.get("version") != 1:
        raise ValueError(f"unsupported trace version {doc.get('version')!r}")
    dus = []
    for f in doc["frames"]:
        regions = tuple(
            Region(
                area=r["area"],
                contributors=frozenset((c, o) for c, o in r["contributors"]),
            )
            for r in f["regions"]
        )
        dus.append(
            DataUnit(
                id=f["id"],
                frame=FrameRef(camera=f["camera"], slot=f["slot"]),
                size_bits=f["size_bits"],
                rate_bpp=f["rate_bpp"],
                acq_slot=f["slot"],
                deadline_slot=f["deadline_slot"],
                regions=regions,
            )
        )
    dus.sort(key=lambda du: du.id)
    layouts = [CameraLayout(positions=tuple(p)) for p in doc["layouts"]]
    moved = [m for m in doc["moved"]]
    return SceneTrace(
        M=doc["M"], N_f=doc["N_f"], acq_period=doc["acq_period"],
        rate_bpp=doc["rate_bpp"], pixels_per_frame=doc["pixels_per_frame"],
        T_D=doc["T_D"], rho_s=doc["rho_s"], rho_t=doc["rho_t"],
        dus=dus, layouts=layouts, moved=moved,
    )
