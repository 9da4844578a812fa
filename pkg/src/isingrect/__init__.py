"""Exact 2D Ising partition functions on finite rectangles and cylinders.

Four independent computation paths over arbitrary-precision arithmetic:
brute-force enumeration, the dimer/Pfaffian determinant, a column
transfer-matrix product for arbitrary couplings on the cylinder, and the
fully factorized spectral form for the homogeneous open rectangle, plus the
thermodynamic decompositions built on top (strip residual free energy,
Casimir force, corner free energy, q-product limits).
"""

from .brute_force import OracleResult, brute_force_logZ
from .cylinder import build_factors, logZ_cylinder
from .effspin import EffModel, build_eff_model, magnetization_eff, z_eff
from .lattice import (
    CouplingGrid,
    HomogeneousCouplings,
    LatticeSpec,
    ReducedCouplings,
    constants,
    critical_coupling_isotropic,
    dual,
    pm,
)
from .numerics import (
    ConsistencyError,
    DomainError,
    PrecisionError,
    bracketed_root,
    log_abs_det,
    set_precision,
)
from .pfaffian import build_A, logZ_pfaffian, schur_check
from .qseries import (
    FreeEnergyPieces,
    PeriodicCoeffMatrix,
    free_energy_pieces,
    pi_product,
    q_of_t,
    t_of_q,
)
from .spectral import (
    Mode,
    ResidualSystem,
    Spectrum,
    T2System,
    build_T2,
    char_poly,
    eigvec_matrix,
    find_modes,
    log_zsres,
    log_zsres_closed_L0,
    logZ_spectral,
    logZ_via_detM,
    residual_system,
)
from .thermo import (
    CornerExtraction,
    ThermoReport,
    casimir_force_strip,
    extract_corner,
    report,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
