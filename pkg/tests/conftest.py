import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mvsched import CorrelationSpec, RdParams, ViewWeights, build_static_trace


@pytest.fixture
def unit_params():
    return RdParams(mu=1.0, sigma2=1.0, peak=255.0)


@pytest.fixture
def two_camera_trace():
    """2 cameras, 3 frames, one spatial neighbor each side, 2-frame
    temporal window, default background strip; rate 1 bpp."""
    spec = CorrelationSpec(rho_s=2, rho_t=2)
    return build_static_trace(
        spec, M=2, N_f=3, rate_bpp=1.0, T_D=5, acq_period=4, pixels_per_frame=1000
    )


@pytest.fixture
def uniform_weights():
    return ViewWeights.uniform(2)
