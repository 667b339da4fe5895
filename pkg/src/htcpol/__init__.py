"""Exact diagonalization and spectroscopy of the Holstein-Tavis-Cummings model.

Builds the truncated one-excitation and ground manifolds of N vibronically
coupled emitters in a single-mode cavity, diagonalizes, classifies dark
vibronic polaritons, locates critical couplings, and computes leakage
photoluminescence, conventional absorption and bound-mode absorption spectra.
"""

from .model import (
    Basis,
    BasisSizeError,
    BasisState,
    Manifold,
    ModelParams,
    StateKind,
    enumerate_excitation_basis,
    enumerate_ground_basis,
    excitation_basis_size,
    fc_matrix,
    fc_overlap,
    ground_basis_size,
)
from .hamiltonian import HtcMatrix, JumpMatrices, build_hamiltonian, build_jump_matrices, dump_matrix
from .eigen import (
    BracketError,
    ClassifyThresholds,
    CriticalCoupling,
    EigenSystem,
    NumericalError,
    TrackingError,
    classify,
    derive_observables,
    diagonalize,
    find_critical_coupling,
    solve,
    write_eigen_report,
)
from .spectra import (
    PopulationKind,
    PopulationModel,
    SpectralSeries,
    SpectrumShapeError,
    Stick,
    absorption_spectrum,
    bound_absorption,
    default_grid,
    ilp_curve,
    lineshape,
    lp_blueshift,
    lpl_spectrum,
    write_series_csv,
    write_series_json,
    write_sticks_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "BasisSizeError",
    "BasisState",
    "BracketError",
    "ClassifyThresholds",
    "CriticalCoupling",
    "EigenSystem",
    "HtcMatrix",
    "JumpMatrices",
    "Manifold",
    "ModelParams",
    "NumericalError",
    "PopulationKind",
    "PopulationModel",
    "SpectralSeries",
    "SpectrumShapeError",
    "StateKind",
    "Stick",
    "TrackingError",
    "absorption_spectrum",
    "bound_absorption",
    "build_hamiltonian",
    "build_jump_matrices",
    "classify",
    "default_grid",
    "derive_observables",
    "diagonalize",
    "dump_matrix",
    "enumerate_excitation_basis",
    "enumerate_ground_basis",
    "excitation_basis_size",
    "fc_matrix",
    "fc_overlap",
    "find_critical_coupling",
    "ground_basis_size",
    "ilp_curve",
    "lineshape",
    "lp_blueshift",
    "lpl_spectrum",
    "solve",
    "write_eigen_report",
    "write_series_csv",
    "write_series_json",
    "write_sticks_csv",
]
