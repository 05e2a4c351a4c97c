from .profile import (
    BoundaryProfile,
    build_profile,
    corner_angles,
    discrete_weighted_fnorm,
    fnorm_terms,
    tail_samples,
)
from .domain import TruncatedDomain, truncate
from .grid import (
    TAG_BOTTOM,
    TAG_INTERIOR,
    TAG_LEFT,
    TAG_RIGHT,
    TAG_TOP,
    CurvilinearGrid,
    Grading,
    Metrics,
    generate_grid,
    grid_over,
)
