"""共用 fixture：標準氣體常數、凸塊邊界、遠場與粗網格"""

import pytest

from common.functions import Constant, Poly
from farfield.state import build_farfield
from farfield.stream_limit import build_stream_limit
from geometry.domain import truncate
from geometry.grid import generate_grid
from geometry.profile import build_profile

GAS = dict(gamma=1.4, p0=1.0, rho0=1.0, m_star=0.5, m0=0.1, eps=1e-3)
SHEAR = {"family": "exp-decay", "amplitude": 1.0, "rate": 1.0}  # 強剪切；遠場範數超過 eps * m0


def bump_pieces(height: float = 0.1) -> dict:
    return {"minus": Constant(0.0), "arc": Poly((height, 0.0, -height)), "plus": Constant(0.0)}


def flat_pieces() -> dict:
    return {"minus": Constant(0.0), "arc": Constant(0.0), "plus": Constant(0.0)}


@pytest.fixture(scope="session")
def far():
    return build_farfield(**GAS)


@pytest.fixture(scope="session")
def stream(far):
    return build_stream_limit(far)


@pytest.fixture(scope="session")
def sheared_far():
    return build_farfield(**GAS, m_spec=SHEAR)


@pytest.fixture(scope="session")
def sheared_stream(sheared_far):
    return build_stream_limit(sheared_far)


@pytest.fixture(scope="session")
def bump_profile():
    return build_profile(bump_pieces(), delta=0.1, D0=2.0)


@pytest.fixture(scope="session")
def flat_profile():
    return build_profile(flat_pieces(), delta=0.1, D0=2.0, allow_flat_corners=True)


@pytest.fixture(scope="session")
def bump_domain(bump_profile):
    return truncate(bump_profile, 8.0, 8.0)


@pytest.fixture(scope="session")
def flat_domain(flat_profile):
    return truncate(flat_profile, 8.0, 8.0)


@pytest.fixture(scope="session")
def coarse_grid(bump_domain):
    return generate_grid(bump_domain, 33, 17)
