"""Cavity light scattering from atoms in a 1D optical lattice.

Closed-form field, intensity, noise and photon-statistics moments for Mott
insulator, superfluid and coherent atomic states, with an exact enumeration
oracle to check them against.
"""

from .geometry import (
    CouplingSet,
    LatticeGeometry,
    ModeKind,
    ModeSpec,
    alpha_minus,
    couplings,
    mode_value,
    structure_function,
)
from .observables import (
    CavityParams,
    ObservablesReport,
    expected_D,
    expected_D2,
    expected_DstarD,
    fourth_moment_absD4,
    incoherent_intensity,
    noise_R,
    noise_R_traveling,
    observe,
    photon_stats,
    preset_self_organized,
    preset_transverse,
    quadrature_variance,
)
from .oracle import CapExceeded, OracleReport, config_weight, exact_expectations, mc_expectations
from .states import (
    Coherent,
    MomentPattern,
    MottInsulator,
    Superfluid,
    Table1Report,
    joint_factorial_moment,
    make_state,
    mean_filling,
    ordinary_joint_moment,
    pair_covariance,
    table1,
    variance,
)

__version__ = "0.1.0"
