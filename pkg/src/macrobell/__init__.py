"""Simulations of macroscopic Bell tests with bosonic modes.

Two protocols are covered: CH tests on N-boson NOON states split by
Josephson-type nonlinear beam splitters, and CHSH tests on entangled cat
states measured by Kerr evolution followed by sign-binned quadratures.
"""
from .errors import (DegenerateBasisError, DomainError, MacroBellError, NoOscillationError,
                     TruncationError)
from .fock import (FockVector, HalfLineOverlap, QuadratureTable, coherent_amplitudes,
                   halfline_overlap, hermite_table)
from .josephson import (NbsParams, NbsTrace, SectorHamiltonian, build_sector_hamiltonian,
                        evolve, nbs_trace, scaled_frequency)
from .kerr import (CatBasis, ChshReport, KerrParams, KerrSettings, TwoModeState,
                   build_cat_basis, chsh_kerr, joint_quadrature_density, kerr_evolve,
                   prepare_bell_cat, sign_correlation)
from .noon import (ChReport, TimeSettings, TwoSiteState, apply_local_nbs, ch_statistic,
                   ideal_chsh, joint_number_distribution, prepare_two_noon)
from .search import NbsObjective, nbs_quality, optimize_nbs

__all__ = [
    "DegenerateBasisError", "DomainError", "MacroBellError", "NoOscillationError",
    "TruncationError", "FockVector", "HalfLineOverlap", "QuadratureTable",
    "coherent_amplitudes", "halfline_overlap", "hermite_table", "NbsParams", "NbsTrace",
    "SectorHamiltonian", "build_sector_hamiltonian", "evolve", "nbs_trace", "scaled_frequency",
    "CatBasis", "ChshReport", "KerrParams", "KerrSettings", "TwoModeState", "build_cat_basis",
    "chsh_kerr", "joint_quadrature_density", "kerr_evolve", "prepare_bell_cat",
    "sign_correlation", "ChReport", "TimeSettings", "TwoSiteState", "apply_local_nbs",
    "ch_statistic", "ideal_chsh", "joint_number_distribution", "prepare_two_noon",
    "NbsObjective", "nbs_quality", "optimize_nbs",
]

__version__ = "0.1.0"
