"""mpsim: pseudospectral simulator and verification library for the
regularized Maxwell-Pauli(-Coulomb) equations on a periodic box.

Units: lengths in half Bohr radii, energies in units of 4 Rydbergs, so the
hydrogenic ground energy is -Z^2/4 and the electromagnetic wave speed is
1/alpha.
"""

__version__ = "0.1.0"

from .errors import (
    BlowupError,
    ConfigurationError,
    FormatError,
    GaugeError,
    MpsimError,
    NonconvergenceError,
)
from .spectral import Grid
from .state import (
    SimParams,
    SimState,
    default_dt,
    make_divfree_random_field,
    make_gaussian_packet,
    make_hydrogen_ground_state,
    read_checkpoint,
    write_checkpoint,
)
from .dynamics import Stepper, run
from .diagnostics import (
    SeriesCollector,
    continuity_residual,
    energy_report,
    linear_fit,
    scaling_curve,
    scaling_fit,
    uniform_bound_monitor,
)
from .zeromode import (
    ZeroModeSpec,
    certificate,
    dirac_residual,
    gauge_fix,
    pair_energy,
    sobol_ball_samples,
    zc_lower_bound,
    zc_ratio,
    zero_mode_A_from_psi,
)

__all__ = [
    "__version__",
    "MpsimError",
    "ConfigurationError",
    "GaugeError",
    "BlowupError",
    "NonconvergenceError",
    "FormatError",
    "Grid",
    "SimParams",
    "SimState",
    "default_dt",
    "make_gaussian_packet",
    "make_hydrogen_ground_state",
    "make_divfree_random_field",
    "read_checkpoint",
    "write_checkpoint",
    "Stepper",
    "run",
    "SeriesCollector",
    "energy_report",
    "continuity_residual",
    "scaling_curve",
    "scaling_fit",
    "linear_fit",
    "uniform_bound_monitor",
    "ZeroModeSpec",
    "dirac_residual",
    "gauge_fix",
    "zc_ratio",
    "zc_lower_bound",
    "pair_energy",
    "zero_mode_A_from_psi",
    "sobol_ball_samples",
    "certificate",
]
