"""Rate-distortion model for multiview scene reconstruction.

A scene is acquired by M cameras; each encoded frame travels as one data
unit (DU). A frame that is delivered is decoded directly at its encoding
rate; a missing frame is reconstructed region by region from whichever
correlated frames (spatial neighbors at the same instant, same-camera
frames from past instants) did arrive. Every operation here is a pure
function of immutable values, so it is safe to call from any number of
workers.

Distortion is mean squared error in pixel-intensity units. The intra-frame
law is ``mu * sigma2 * 2**(-2 * rate_bpp)``; a region with no delivered
contributor falls back to the zero-rate value ``mu * sigma2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

__all__ = [
    "RdParams",
    "FrameRef",
    "Region",
    "DataUnit",
    "RateVector",
    "ViewWeights",
    "rd_distortion",
    "psnr_db",
    "psi",
    "frame_distortion",
    "scene_distortion",
    "policy_rate",
    "policy_distortion",
]

AREA_TOL = 1e-9


@dataclass(frozen=True)
class RdParams:
    """Intra-coding distortion constants: mu (source-dependent), sigma2
    (spatial variance), peak (peak pixel intensity for PSNR)."""

    mu: float = 1.0
    sigma2: float = 1600.0
    peak: float = 255.0

    def __post_init__(self) -> None:
        for name in ("mu", "sigma2", "peak"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ValueError(f"RdParams.{name} must be finite and > 0, got {v!r}")

    @property
    def zero_rate_mse(self) -> float:
        """Distortion of a frame region nothing was received for."""
        return self.mu * self.sigma2


@dataclass(frozen=True)
class FrameRef:
    """One camera at one acquisition slot (TDMA slot index, 1-based)."""

    camera: int
    slot: int

    def __post_init__(self) -> None:
        if self.camera < 1:
            raise ValueError(f"camera index must be >= 1, got {self.camera}")
        if self.slot < 1:
            raise ValueError(f"acquisition slot must be >= 1, got {self.slot}")


@dataclass(frozen=True)
class Region:
    """A maximal frame area sharing one exact contributor set.

    ``contributors`` holds (camera, offset) pairs: offset 0 is a spatial
    neighbor acquired at the same instant, offset d > 0 the frame the same
    number of acquisition periods in the past. The pair (own camera, 0) is
    always present: a frame trivially covers all of its own regions.
    """

    area: float
    contributors: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if not (0.0 < self.area <= 1.0 + AREA_TOL):
            raise ValueError(f"region area must be in (0, 1], got {self.area}")
        for camera, offset in self.contributors:
            if camera < 1 or offset < 0:
                raise ValueError(f"bad contributor pair {(camera, offset)}")


@dataclass(frozen=True)
class DataUnit:
    """One packetized camera frame (texture + depth together)."""

    id: int
    frame: FrameRef
    size_bits: float
    rate_bpp: float
    acq_slot: int
    deadline_slot: int
    regions: tuple[Region, ...]

    def __post_init__(self) -> None:
        if self.size_bits <= 0:
            raise ValueError(f"DU size must be positive, got {self.size_bits}")
        if self.rate_bpp <= 0:
            raise ValueError(f"DU rate must be positive, got {self.rate_bpp}")
        if self.acq_slot != self.frame.slot:
            raise ValueError("acq_slot must equal frame.slot")
        if self.deadline_slot <= self.acq_slot:
            raise ValueError("deadline must lie after acquisition")
        total = sum(r.area for r in self.regions)
        if abs(total - 1.0) > AREA_TOL:
            raise ValueError(f"region areas must sum to 1, got {total!r}")
        own = (self.frame.camera, 0)
        masks = [r.contributors for r in self.regions]
        if any(own not in m for m in masks):
            raise ValueError("every region must list its own frame as contributor")
        if len(set(masks)) != len(masks):
            raise ValueError("region contributor masks must be pairwise distinct")


@dataclass(frozen=True)
class RateVector:
    """Received rate (bpp) per frame over the reconstruction window.

    An entry is either 0 or the frame's full encoding rate: the channel is
    lossless and DUs are sent entirely or not at all. ``acq_period`` is the
    slot distance between consecutive acquisition instants and is used to
    resolve temporal contributor offsets.
    """

    entries: Mapping[FrameRef, float]
    acq_period: int = 1

    def rate_of(self, ref: FrameRef) -> float:
        return self.entries.get(ref, 0.0)

    def contributor_rate(self, du: DataUnit, region: Region) -> float:
        """Dot product of the region's contributor mask with this vector."""
        total = 0.0
        for camera, offset in region.contributors:
            slot = du.acq_slot - offset * self.acq_period
            if slot >= 1:
                total += self.entries.get(FrameRef(camera, slot), 0.0)
        return total


@dataclass(frozen=True)
class ViewWeights:
    """Per-camera positive weights; view m enters the scene sum as 1/w_m."""

    w: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.w or any(x <= 0 for x in self.w):
            raise ValueError("all view weights must be positive")

    @classmethod
    def uniform(cls, m: int) -> "ViewWeights":
        return cls(w=(1.0,) * m)

    def of(self, camera: int) -> float:
        return self.w[camera - 1]


def rd_distortion(rate_bpp: float, params: RdParams) -> float:
    """Intra-frame MSE at the given rate: mu * sigma2 * 2**(-2*rate)."""
    if not math.isfinite(rate_bpp) or rate_bpp < 0:
        raise ValueError(f"rate must be finite and >= 0, got {rate_bpp!r}")
    return params.mu * params.sigma2 * 2.0 ** (-2.0 * rate_bpp)


def psnr_db(mse: float, peak: float = 255.0) -> float:
    """PSNR = 10*log10(peak^2 / mse); infinite for zero distortion."""
    if mse < 0:
        raise ValueError(f"mse must be >= 0, got {mse!r}")
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def psi(history: Iterable[int], trace, t: int, rho_t: int) -> RateVector:
    """Received-rate vector of the M views over the last rho_t instants.

    Each window entry is the frame's rate_bpp if its DU is in ``history``
    and 0 otherwise. Unknown DU ids are a hard error.
    """
    hist = frozenset(history)
    known = trace.du_ids()
    unknown = hist - known
    if unknown:
        raise KeyError(f"unknown DU ids in history: {sorted(unknown)}")
    period = trace.acq_period
    entries: dict[FrameRef, float] = {}
    for offset in range(rho_t + 1):
        slot = t - offset * period
        if slot < 1:
            break
        for du in trace.dus_at_slot(slot):
            entries[du.frame] = du.rate_bpp if du.id in hist else 0.0
    return RateVector(entries=entries, acq_period=period)


def frame_distortion(
    du: DataUnit, received: RateVector, received_self: bool, params: RdParams
) -> float:
    """Distortion of one view: direct decode if delivered, else the
    area-weighted sum over regions of the RD law at each region's summed
    contributor rate. A region with no delivered contributor costs the
    full zero-rate distortion (it cannot be reconstructed)."""
    if received_self:
        return rd_distortion(du.rate_bpp, params)
    total_area = sum(r.area for r in du.regions)
    if abs(total_area - 1.0) > AREA_TOL:
        raise ValueError(f"region areas of DU {du.id} sum to {total_area!r}, not 1")
    mse = 0.0
    for region in du.regions:
        mse += region.area * rd_distortion(received.contributor_rate(du, region), params)
    return mse


def scene_distortion(
    t: int,
    received: Iterable[int],
    trace,
    weights: ViewWeights,
    params: RdParams,
) -> float:
    """Overall scene distortion at instant t: sum over views of
    (1/w_m) * frame distortion given the delivered set."""
    frames = trace.dus_at_slot(t)
    if not frames:
        raise ValueError(f"no frames acquired at slot {t}")
    hist = frozenset(received)
    vector = psi(hist, trace, t, trace.rho_t)
    total = 0.0
    for du in frames:
        d = frame_distortion(du, vector, du.id in hist, params)
        total += d / weights.of(du.frame.camera)
    return total


def policy_rate(policy, dus: Mapping[int, DataUnit]) -> float:
    """Total bits claimed by a policy: sum of B_l over scheduled DUs.

    Each DU may be scheduled at most once over the horizon; a vector with
    more than a single 1 is rejected.
    """
    total = 0.0
    for du_id, actions in policy.actions.items():
        hits = sum(actions)
        if hits > 1:
            raise ValueError(f"DU {du_id} scheduled {hits} times; at most once allowed")
        if hits:
            total += dus[du_id].size_bits
    return total


def policy_distortion(
    policy,
    history: Iterable[int],
    trace,
    weights: ViewWeights,
    params: RdParams,
) -> float:
    """Distortion of the candidate window under a policy: every candidate
    DU evaluated against the union of the history and the scheduled set.

    Only delivered frames take part in reconstruction; frames that were
    themselves reconstructed never do.
    """
    delivered = frozenset(history) | policy.scheduled_ids()
    total = 0.0
    for du_id in policy.candidate_ids:
        du = trace.du_by_id(du_id)
        vector = psi(delivered, trace, du.acq_slot, trace.rho_t)
        d = frame_distortion(du, vector, du.id in delivered, params)
        total += d / weights.of(du.frame.camera)
    return total
