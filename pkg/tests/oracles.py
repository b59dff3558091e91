"""Independent brute-force evaluators the library is checked against.

Everything here recomputes results from first principles without touching
the library's evaluation paths (no RateVector/psi, no bitmask evaluator,
no set-based oracle shortcuts), so agreement is meaningful.
"""

from __future__ import annotations

import itertools


def frame_key(du):
    return (du.frame.camera, du.acq_slot)


def delivered_rate_map(trace, delivered_ids):
    return {frame_key(trace.du_by_id(i)): trace.du_by_id(i).rate_bpp for i in delivered_ids}


def frame_mse(du, rates_by_frame, acq_period, mu, sigma2):
    """Direct evaluation of the per-view distortion rule."""
    if frame_key(du) in rates_by_frame:
        return mu * sigma2 * 2.0 ** (-2.0 * du.rate_bpp)
    total = 0.0
    for region in du.regions:
        r = 0.0
        for camera, offset in region.contributors:
            r += rates_by_frame.get((camera, du.acq_slot - offset * acq_period), 0.0)
        total += region.area * mu * sigma2 * 2.0 ** (-2.0 * r)
    return total


def scene_mse(t, delivered_ids, trace, weights, mu, sigma2):
    rates = delivered_rate_map(trace, delivered_ids)
    total = 0.0
    for du in trace.dus_at_slot(t):
        total += frame_mse(du, rates, trace.acq_period, mu, sigma2) / weights[
            du.frame.camera - 1
        ]
    return total


def window_mse(candidate_ids, delivered_ids, trace, weights, mu, sigma2):
    """Distortion of a candidate window given the full delivered set."""
    rates = delivered_rate_map(trace, delivered_ids)
    total = 0.0
    for du_id in candidate_ids:
        du = trace.du_by_id(du_id)
        total += frame_mse(du, rates, trace.acq_period, mu, sigma2) / weights[
            du.frame.camera - 1
        ]
    return total


def region_reconstructable(du, region, delivered_frames, acq_period):
    if frame_key(du) in delivered_frames:
        return True
    return any(
        (camera, du.acq_slot - offset * acq_period) in delivered_frames
        for camera, offset in region.contributors
    )


def coverage_mass(scheduled_ids, candidates, trace):
    frames = {frame_key(trace.du_by_id(i)) for i in scheduled_ids}
    total = 0.0
    for du in candidates:
        for region in du.regions:
            if region_reconstructable(du, region, frames, trace.acq_period):
                total += region.area
    return total


def reward(q, scheduled_ids, candidates, trace):
    """Innovation of q: newly reconstructable area over L."""
    if not candidates:
        return 0.0
    before = coverage_mass(scheduled_ids, candidates, trace)
    after = coverage_mass(set(scheduled_ids) | {q.id}, candidates, trace)
    return (after - before) / len(candidates)


def brute_force_best_mse(t, history, trace, config, weights, mu, sigma2, budget):
    """Minimum window distortion over ALL slot-level assignments: every way
    of placing distinct feasible DUs (or idle) into the K slots, subject to
    the at-most-once rule and the bit budget. Exponential; tiny inputs only.
    """
    from mvsched.scheduler import candidate_dus, slot_feasible

    candidates = candidate_dus(t, history, trace, config)
    cand_ids = [du.id for du in candidates]
    best = window_mse(cand_ids, set(history), trace, weights, mu, sigma2)
    options = [None] + candidates
    for assignment in itertools.product(options, repeat=config.K):
        chosen = [du for du in assignment if du is not None]
        ids = [du.id for du in chosen]
        if len(set(ids)) != len(ids):
            continue
        if any(
            du is not None and not slot_feasible(du, k + 1, t, config)
            for k, du in enumerate(assignment)
        ):
            continue
        if sum(du.size_bits for du in chosen) > budget:
            continue
        mse = window_mse(cand_ids, set(history) | set(ids), trace, weights, mu, sigma2)
        if mse < best:
            best = mse
    return best
