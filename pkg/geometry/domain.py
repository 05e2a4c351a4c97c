from __future__ import annotations

from dataclasses import dataclass

from common.errors import TruncationTooSmall
from geometry.profile import BoundaryProfile


@dataclass(frozen=True)
class TruncatedDomain:
    """[-R, R] x [f(x1), H]；以矩形取代 B_R 截斷"""

    profile: BoundaryProfile
    R: float
    H: float

    @property
    def corner_set(self) -> tuple[tuple[float, float], ...]:
        """P~ = {A_-, A_+, S^R_-, S^R_+}"""
        return (
            self.profile.corner_minus,
            self.profile.corner_plus,
            (-self.R, float(self.profile(-self.R))),
            (self.R, float(self.profile(self.R))),
        )

    @property
    def profile_corners(self) -> tuple[tuple[float, float], ...]:
        """P = {A_-, A_+}"""
        return (self.profile.corner_minus, self.profile.corner_plus)


def truncate(profile: BoundaryProfile, R: float, H: float) -> TruncatedDomain:
    limit = profile.D0 + 1.0
    if not R > limit:
        raise TruncationTooSmall(f"R = {R:g} must exceed D0 + 1 = {limit:g}")
    if not H > limit:
        raise TruncationTooSmall(f"H = {H:g} must exceed D0 + 1 = {limit:g}")
    domain = TruncatedDomain(profile=profile, R=float(R), H=float(H))
    if len(set(domain.corner_set)) != 4:
        raise TruncationTooSmall(f"weight corners are not distinct: {domain.corner_set}")
    return domain
