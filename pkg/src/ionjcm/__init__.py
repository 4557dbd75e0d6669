"""Trapped-ion laser-interaction spectra and exact eigenstates.

Library layout:

- :mod:`ionjcm.fock` -- truncated Fock-space operators, displacement matrices,
  displaced number states, Hermitian eigendecomposition;
- :mod:`ionjcm.model` -- the laser-ion Hamiltonian, its driven Jaynes-Cummings
  picture, and the unitary transform connecting them;
- :mod:`ionjcm.ansatz` -- the finite-expansion exact eigenstates and the
  tridiagonal compatibility condition selecting them;
- :mod:`ionjcm.spectrum` -- parameter scans, level tracking, crossing and
  avoided-crossing detection, asymptotic levels and states;
- :mod:`ionjcm.cli` -- the ``ionjcm`` command-line front end.
"""

from .ansatz import (
    AnsatzSolution,
    Branch,
    ReducedParams,
    TridiagonalSystem,
    build_ion_eigenstate,
    closed_form_roots,
    degeneracy_partner_check,
    det_M,
    det_M_scale,
    epsilon,
    find_roots,
    map_to_jcm,
    null_vector,
)
from .errors import (
    DimensionMismatch,
    EmptyRange,
    IonJcmError,
    KernelNotFound,
    NonConvergence,
    NotAtRoot,
    OmegaZero,
    TruncationTooSmall,
)
from .fock import (
    BosonOperator,
    DisplacedNumberState,
    FockBasis,
    annihilation,
    basis_for_displacement,
    default_buffer,
    displaced_number_state,
    displacement,
    hermitian_eigendecomposition,
    number,
)
from .model import (
    IonParams,
    JcmParams,
    SpinFockOperator,
    build_T,
    build_h_ion,
    build_h_jcm_driven,
    conjugate,
    interior_norm_diff,
)
from .spectrum import (
    AsymptoteSet,
    CrossingEvent,
    ScanGrid,
    SpectrumScan,
    asymptotic_convergence,
    asymptotic_energy,
    asymptotic_levels,
    asymptotic_state,
    basis_for_scan,
    crossvalidate_roots,
    detect_events,
    parity_commutator,
    scan_spectrum,
    track_levels,
)

__version__ = "0.1.0"
