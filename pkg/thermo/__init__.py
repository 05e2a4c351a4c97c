from .density import (
    DensityState,
    chi_from_gradient,
    chi_max,
    chi_max_of,
    h,
    max_density,
    solve_density,
    sonic_density,
)
from .coefficients import (
    CoefficientBundle,
    background_ellipticity,
    coefficients,
    energy,
    mach,
    pressure,
    sound_speed,
)
