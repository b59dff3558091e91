"""Correlation-generator tests: the two worked reference fixtures, the
camera random walk, masking views, serialization, and 1000-case
structural properties."""

import numpy as np
import pytest
from scipy import stats

from mvsched import (
    CameraLayout,
    CorrelationSpec,
    MovingObject,
    build_dynamic_trace,
    build_static_trace,
    mask_trace,
    step_dynamic,
    trace_from_json,
    trace_to_json,
)

# Appendix-style reference matrix for a camera-1 frame with one right
# neighbor and two past frames: rows are contributor sets (beyond self).
SEVEN_REGION_ROWS = {
    frozenset({(1, 0), (1, 2), (1, 1)}),
    frozenset({(1, 0), (1, 1)}),
    frozenset({(1, 0), (2, 0), (1, 2)}),
    frozenset({(1, 0), (2, 0), (1, 2), (1, 1)}),
    frozenset({(1, 0)}),
    frozenset({(1, 0), (2, 0), (1, 1)}),
    frozenset({(1, 0), (2, 0)}),
}

SEVEN_REGION_SPEC = CorrelationSpec(
    rho_s=2,
    rho_t=2,
    background_fraction=1.0,
    objects=(
        MovingObject(camera=1, start=0.61, width=0.04, speed=0.12),
        MovingObject(camera=1, start=0.15, width=0.20, speed=0.05),
    ),
)


def test_no_correlation_single_region():
    trace = build_static_trace(CorrelationSpec(), M=3, N_f=2, rate_bpp=1.0, T_D=5)
    for du in trace.dus:
        assert len(du.regions) == 1
        region = du.regions[0]
        assert region.area == pytest.approx(1.0)
        assert region.contributors == frozenset({(du.frame.camera, 0)})


def test_two_neighbor_interpolation_fractions():
    # middle view of three, asymmetric overlaps 0.84+0.09 and 0.84+0.07
    spec = CorrelationSpec(rho_s=2, rho_t=0, overlap_at_distance={-1: 0.93, 1: 0.91})
    trace = build_static_trace(spec, M=3, N_f=1, rate_bpp=1.0, T_D=5)
    du = trace.du_by_frame(2, 1)
    by_mask = {r.contributors: r.area for r in du.regions}
    left_only = frozenset({(2, 0), (1, 0)})
    both = frozenset({(2, 0), (1, 0), (3, 0)})
    right_only = frozenset({(2, 0), (3, 0)})
    assert by_mask[left_only] == pytest.approx(0.09)
    assert by_mask[both] == pytest.approx(0.84)
    assert by_mask[right_only] == pytest.approx(0.07)
    assert len(du.regions) == 3


def test_seven_region_reference_matrix():
    trace = build_static_trace(SEVEN_REGION_SPEC, M=2, N_f=3, rate_bpp=1.0, T_D=5)
    du = trace.du_by_frame(1, trace.acq_slots()[-1])
    assert len(du.regions) == 7
    assert {r.contributors for r in du.regions} == SEVEN_REGION_ROWS
    assert sum(r.area for r in du.regions) == pytest.approx(1.0, abs=1e-12)
    # the region reconstructable from both past frames but not the neighbor
    by_mask = {r.contributors: r.area for r in du.regions}
    assert by_mask[frozenset({(1, 0), (1, 1), (1, 2)})] == pytest.approx(0.20)


# ---------------------------------------------------------------------------
# random walk


def test_step_single_camera_always_free():
    layout = CameraLayout(positions=(1,))
    rng = np.random.default_rng(0)
    new, moved = step_dynamic(layout, rng)
    assert moved == 1
    assert new.positions == (2,)


def test_step_blocked_returns_same_layout():
    layout = CameraLayout(positions=(1, 2))
    # camera 1's only neighbor position is 2, always occupied
    hits = 0
    rng = np.random.default_rng(1)
    for _ in range(200):
        new, moved = step_dynamic(layout, rng)
        if moved is None:
            hits += 1
            assert new is layout
    assert hits > 0


def test_step_distribution_matches_proposal_model():
    # layout (1, 3) on the 4-position line:
    #   cam1 -> pos2 (free), prob 1/2
    #   cam2 -> pos2 (free) 1/4, pos4 (free) 1/4
    layout = CameraLayout(positions=(1, 3))
    rng = np.random.default_rng(42)
    counts = {(2, 3): 0, (1, 2): 0, (1, 4): 0}
    n = 100_000
    for _ in range(n):
        new, moved = step_dynamic(layout, rng)
        assert moved is not None
        counts[new.positions] += 1
    observed = [counts[(2, 3)], counts[(1, 2)], counts[(1, 4)]]
    expected = [n / 2, n / 4, n / 4]
    chi2, p = stats.chisquare(observed, expected)
    assert p > 1e-3, (observed, p)


def test_dynamic_trace_deterministic_given_seed():
    spec = CorrelationSpec(rho_s=2, rho_t=1)
    t1 = build_dynamic_trace(spec, 3, 4, 1.0, 5, np.random.default_rng(9))
    t2 = build_dynamic_trace(spec, 3, 4, 1.0, 5, np.random.default_rng(9))
    assert trace_to_json(t1) == trace_to_json(t2)


class _BlockedRng:
    """Deterministic stand-in: cameras start at 1..M and camera 1 keeps
    proposing its occupied right neighbor, so nothing ever moves."""

    def choice(self, n, size, replace):
        return np.arange(size)

    def integers(self, a, b=None):
        if b is None:  # index into the proposal options
            return 0
        return 1  # always pick camera 1


def test_dynamic_without_movement_equals_static():
    spec = CorrelationSpec(rho_s=2, rho_t=2)
    dyn = build_dynamic_trace(spec, 3, 3, 1.0, 5, _BlockedRng())
    sta = build_static_trace(spec, 3, 3, 1.0, 5)
    assert trace_to_json(dyn) == trace_to_json(sta)


def test_motion_kills_temporal_contributors():
    spec = CorrelationSpec(rho_s=2, rho_t=2)
    rng = np.random.default_rng(0)
    trace = build_dynamic_trace(spec, 4, 6, 1.0, 5, rng)
    assert sum(m is not None for m in trace.moved) >= 2
    period = trace.acq_period
    for idx, mover in enumerate(trace.moved):
        if mover is None:
            continue
        slot = 1 + idx * period
        du = trace.du_by_frame(mover, slot)
        for region in du.regions:
            assert all(o == 0 for _, o in region.contributors), (idx, region)


def test_motion_severs_older_pairs_too():
    # a camera that moved between frames i-d and i must not claim the
    # offset-d contributor at frame i either
    spec = CorrelationSpec(rho_s=0, rho_t=3)
    rng = np.random.default_rng(23)
    trace = build_dynamic_trace(spec, 3, 8, 1.0, 5, rng)
    period = trace.acq_period
    for i in range(1, trace.N_f + 1):
        for du in trace.dus_at_slot(1 + (i - 1) * period):
            cam = du.frame.camera
            for region in du.regions:
                for _, offset in region.contributors:
                    if offset == 0:
                        continue
                    window = range(i - offset + 1, i + 1)
                    assert not any(trace.moved[j - 1] == cam for j in window)


def test_empty_overlap_map_means_self_only():
    spec = CorrelationSpec(rho_s=4, rho_t=0, overlap_at_distance={})
    trace = build_static_trace(spec, 4, 2, 1.0, 5)
    for du in trace.dus:
        assert len(du.regions) == 1
        assert du.regions[0].contributors == frozenset({(du.frame.camera, 0)})


# ---------------------------------------------------------------------------
# structural properties


def _random_spec(rng):
    rho_s = int(rng.choice([0, 2, 4]))
    rho_t = int(rng.integers(0, 3))
    omap = None
    if rng.random() < 0.5 and rho_s:
        omap = {
            d: float(rng.uniform(0, 1))
            for d in range(1, rho_s // 2 + 1)
        }
    objects = ()
    if rng.random() < 0.3:
        objects = (
            MovingObject(
                camera=1,
                start=float(rng.uniform(0, 0.8)),
                width=float(rng.uniform(0.02, 0.2)),
                speed=float(rng.uniform(-0.15, 0.15)),
            ),
        )
    return CorrelationSpec(
        rho_s=rho_s,
        rho_t=rho_t,
        overlap_at_distance=omap,
        background_fraction=float(rng.uniform(0.0, 1.0)),
        objects=objects,
    )


def test_generated_traces_respect_invariants_1000():
    rng = np.random.default_rng(77)
    for case in range(1000):
        spec = _random_spec(rng)
        m = int(rng.integers(1, 5))
        n_f = int(rng.integers(1, 4))
        if case % 2 == 0:
            trace = build_static_trace(spec, m, n_f, 1.0, 5)
        else:
            trace = build_dynamic_trace(
                spec, m, n_f, 1.0, 5, np.random.default_rng(case)
            )
        half = spec.rho_s // 2
        for du in trace.dus:
            total = sum(r.area for r in du.regions)
            assert abs(total - 1.0) <= 1e-9
            masks = [r.contributors for r in du.regions]
            assert len(set(masks)) == len(masks)
            for region in du.regions:
                assert (du.frame.camera, 0) in region.contributors
                for camera, offset in region.contributors:
                    assert offset <= spec.rho_t
                    if offset == 0 and camera != du.frame.camera:
                        assert abs(camera - du.frame.camera) <= 2 * m  # sane index
                    if offset > 0:
                        assert camera == du.frame.camera


def test_spatial_contributors_within_rho_s_half():
    # static layout: neighbor index distance bounded by rho_s/2
    for rho_s in (2, 4):
        spec = CorrelationSpec(rho_s=rho_s, rho_t=0)
        trace = build_static_trace(spec, 6, 1, 1.0, 5)
        for du in trace.dus:
            for region in du.regions:
                for camera, offset in region.contributors:
                    assert offset == 0
                    assert abs(camera - du.frame.camera) <= rho_s // 2


def test_overlap_monotonicity_1000():
    # pointwise-larger overlaps never shrink the non-self-covered mass
    rng = np.random.default_rng(99)

    def covered_mass(trace):
        total = 0.0
        for du in trace.dus:
            for region in du.regions:
                if any(p != (du.frame.camera, 0) for p in region.contributors):
                    total += region.area
        return total

    for _ in range(1000):
        lo = {1: float(rng.uniform(0, 1)), 2: float(rng.uniform(0, 1))}
        hi = {d: min(1.0, v + float(rng.uniform(0, 1 - v + 1e-12))) for d, v in lo.items()}
        base = dict(rho_s=4, rho_t=0)
        t_lo = build_static_trace(
            CorrelationSpec(overlap_at_distance=lo, **base), 4, 1, 1.0, 5
        )
        t_hi = build_static_trace(
            CorrelationSpec(overlap_at_distance=hi, **base), 4, 1, 1.0, 5
        )
        assert covered_mass(t_hi) >= covered_mass(t_lo) - 1e-9


def test_static_trace_deterministic():
    spec = CorrelationSpec(rho_s=2, rho_t=1)
    a = build_static_trace(spec, 3, 3, 1.0, 5)
    b = build_static_trace(spec, 3, 3, 1.0, 5)
    assert trace_to_json(a) == trace_to_json(b)


# ---------------------------------------------------------------------------
# views and serialization


def test_mask_trace_views():
    trace = build_static_trace(SEVEN_REGION_SPEC, M=2, N_f=3, rate_bpp=1.0, T_D=5)
    spatial = mask_trace(trace, "spatial")
    temporal = mask_trace(trace, "temporal")
    blind = mask_trace(trace, "none")
    for view, pred in (
        (spatial, lambda own, c, o: o == 0),
        (temporal, lambda own, c, o: c == own),
        (blind, lambda own, c, o: (c, o) == (own, 0)),
    ):
        for du in view.dus:
            own = du.frame.camera
            assert abs(sum(r.area for r in du.regions) - 1.0) <= 1e-9
            masks = [r.contributors for r in du.regions]
            assert len(set(masks)) == len(masks)
            for region in du.regions:
                for camera, offset in region.contributors:
                    assert pred(own, camera, offset)
    du = blind.du_by_frame(1, trace.acq_slots()[-1])
    assert len(du.regions) == 1  # everything collapses without correlation


def test_mask_trace_full_is_identity():
    trace = build_static_trace(CorrelationSpec(rho_s=2), 2, 2, 1.0, 5)
    assert mask_trace(trace, "full") is trace


def test_mask_trace_rejects_unknown_view():
    trace = build_static_trace(CorrelationSpec(), 2, 1, 1.0, 5)
    with pytest.raises(ValueError):
        mask_trace(trace, "sideways")


def test_trace_json_roundtrip():
    spec = CorrelationSpec(rho_s=2, rho_t=2, objects=SEVEN_REGION_SPEC.objects)
    rng = np.random.default_rng(3)
    trace = build_dynamic_trace(spec, 3, 4, 0.5, 5, rng)
    text = trace_to_json(trace)
    back = trace_from_json(text)
    assert trace_to_json(back) == text
    assert back.dus == trace.dus
    assert back.layouts == trace.layouts
    assert back.moved == trace.moved


def test_spec_validation():
    with pytest.raises(ValueError):
        CorrelationSpec(rho_s=3)
    with pytest.raises(ValueError):
        CorrelationSpec(rho_t=-1)
    with pytest.raises(ValueError):
        CorrelationSpec(overlap_at_distance={0: 0.5})
    with pytest.raises(ValueError):
        CorrelationSpec(overlap_at_distance={1: 1.5})
    with pytest.raises(ValueError):
        CameraLayout(positions=(1, 1))
    with pytest.raises(ValueError):
        CameraLayout(positions=(9,))
