"""Transfer-operator ergodic theory for noisy dynamical systems.

Finite-partition kernels, the averaging operator and its dual, stationary
and periodic measures, and every main statement about them packaged as an
executable check. See the README for the CLI and file formats.
"""

from ._backend import BACKEND, GENERATOR_NAME
from .errors import (
    ConvergenceError,
    DimensionError,
    ErgodynError,
    InvalidArgumentError,
    InvalidKernelError,
    InvalidMeasureError,
    InvalidObservableError,
    NotStationaryError,
    PreconditionError,
)
from .kernel import (
    NoisySystem,
    TransitionKernel,
    kernel_from_rows,
    kernel_power,
    ulam_discretize,
)
from .measures import (
    ErgodicDecomposition,
    InvariantSetReport,
    closed_classes,
    ergodic_decomposition,
    invariance_violation,
    invariant_sets,
    is_ergodic,
    periodic_measures,
    stationary_measures,
    support,
)
from .mc import Estimate, Trajectory, empirical_time_average, estimate_Lj_phi, sample_trajectory
from .space import (
    Measure,
    Observable,
    Partition,
    discretize_observable,
    integrate,
    make_uniform_partition,
)
from .theorems import (
    CheckReport,
    birkhoff_average,
    birkhoff_limit,
    check_corollary_b,
    check_corollary_c,
    check_corollary_inequalities,
    check_duality,
    check_ergodic_limit,
    check_lemma1,
    check_lemma2,
    check_levelset_invariance,
    check_localization,
    check_maximal_inequality,
    check_nonconvergence_set_empty,
    check_periodic_pointwise,
    maximal_function,
    maximal_set,
    sublevel_sets,
)
from .transfer import (
    apply_L,
    apply_L_star,
    duality_gap,
    negative_part,
    positive_part,
    stationarity_residual,
    total_variation,
)

__version__ = "0.1.0"
