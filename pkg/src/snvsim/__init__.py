"""Electronic structure, magneto-optical spectra, and spin dynamics of
group-IV color centers in diamond, parameterized for the tin-vacancy."""

from .defect import (
    KELVIN_PER_GHZ,
    DefectParameters,
    EigenSystem,
    FieldConfig,
    build_hamiltonian,
    lab_to_defect_frame,
    manifold_eigensystem,
    spin_expectation,
    zero_field_splitting,
)
from .numerics import FitResult, hermitian_eigensystem, integrate_ode, nlls_fit

__version__ = "0.1.0"
