"""Four-level manifold model of an inversion-symmetric group-IV defect.

Each electronic manifold (ground or excited) is an orbital doublet times a
spin-1/2, ordered as (e_x up, e_x down, e_y up, e_y down). The Hamiltonian
combines spin-orbit coupling, a Jahn-Teller-plus-strain term (the two share
one coupling pair since their operators coincide), a quenched orbital Zeeman
term, and an isotropic spin Zeeman term. Defaults are parameterized for the
tin-vacancy center: 850 GHz ground and 3000 GHz excited zero-field
splittings with spin-orbit fractions 0.99 and 0.80.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnnormalizedState, ZeroAxis
from .numerics import hermitian_eigensystem

__all__ = [
    "KELVIN_PER_GHZ",
    "DefectParameters",
    "FieldConfig",
    "EigenSystem",
    "lab_to_defect_frame",
    "build_hamiltonian",
    "manifold_eigensystem",
    "spin_expectation",
    "zero_field_splitting",
]

# h/k_B for frequencies in GHz: 1 GHz of splitting corresponds to 0.047992 K.
KELVIN_PER_GHZ = 0.047992

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# spin operators on the 4-dimensional manifold (identity on the orbital part)
SPIN_X = np.kron(_I2, _SX)
SPIN_Y = np.kron(_I2, _SY)
SPIN_Z = np.kron(_I2, _SZ)

GROUND_SPLITTING_GHZ = 850.0
EXCITED_SPLITTING_GHZ = 3000.0
GROUND_SO_FRACTION = 0.99
EXCITED_SO_FRACTION = 0.80


def _jt_from_splitting(splitting, so_fraction):
    """Coupling magnitude that closes the gap between lambda and the total
    zero-field splitting: splitting = sqrt(lambda^2 + (2 jt)^2)."""
    lam = so_fraction * splitting
    return math.sqrt(splitting * splitting - lam * lam) / 2.0


DEFAULT_LAMBDA_G = GROUND_SO_FRACTION * GROUND_SPLITTING_GHZ
DEFAULT_LAMBDA_E = EXCITED_SO_FRACTION * EXCITED_SPLITTING_GHZ
DEFAULT_JT_G = _jt_from_splitting(GROUND_SPLITTING_GHZ, GROUND_SO_FRACTION)
DEFAULT_JT_E = _jt_from_splitting(EXCITED_SPLITTING_GHZ, EXCITED_SO_FRACTION)

AXIS_111 = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)


def zero_field_splitting(lam, jt):
    """Zero-field manifold splitting sqrt(lambda^2 + 4 ux^2 + 4 uy^2) in GHz."""
    ux, uy = jt
    return math.sqrt(lam * lam + 4.0 * (ux * ux + uy * uy))


@dataclass(frozen=True)
class DefectParameters:
    """Physical constants of one ground/excited manifold pair.

    Couplings are in GHz, gyromagnetic ratios in GHz/T, quenching factors
    dimensionless in [0, 1]. ``jt_g``/``jt_e`` hold the (ux, uy)
    Jahn-Teller-plus-strain components; only their magnitude affects the
    energies. ``zpl_offset`` shifts all transition frequencies; 0 means
    detuning units.
    """

    lambda_g: float = DEFAULT_LAMBDA_G
    lambda_e: float = DEFAULT_LAMBDA_E
    jt_g: tuple[float, float] = (DEFAULT_JT_G, 0.0)
    jt_e: tuple[float, float] = (DEFAULT_JT_E, 0.0)
    quench_g: float = 0.1
    quench_e: float = 0.1
    gamma_s: float = 27.99
    gamma_l: float = 13.996
    zpl_offset: float = 0.0

    def __post_init__(self):
        if self.lambda_g <= 0 or self.lambda_e <= 0:
            raise ValueError("spin-orbit couplings must be positive")
        if not (0.0 <= self.quench_g <= 1.0 and 0.0 <= self.quench_e <= 1.0):
            raise ValueError("quenching factors must lie in [0, 1]")
        if self.gamma_s <= 0 or self.gamma_l <= 0:
            raise ValueError("gyromagnetic ratios must be positive")
        object.__setattr__(self, "jt_g", (float(self.jt_g[0]), float(self.jt_g[1])))
        object.__setattr__(self, "jt_e", (float(self.jt_e[0]), float(self.jt_e[1])))

    def manifold_terms(self, manifold):
        """(lambda, (ux, uy), quench) for the requested manifold."""
        if manifold == "ground":
            return self.lambda_g, self.jt_g, self.quench_g
        if manifold == "excited":
            return self.lambda_e, self.jt_e, self.quench_e
        raise ValueError(f"unknown manifold {manifold!r}")

    def to_json_dict(self):
        return {
            "lambda_g": self.lambda_g,
            "lambda_e": self.lambda_e,
            "jt_g": list(self.jt_g),
            "jt_e": list(self.jt_e),
            "quench_g": self.quench_g,
            "quench_e": self.quench_e,
            "gamma_s": self.gamma_s,
            "gamma_l": self.gamma_l,
            "zpl_offset": self.zpl_offset,
        }

    @classmethod
    def from_json_dict(cls, obj):
        known = {
            "lambda_g",
            "lambda_e",
            "jt_g",
            "jt_e",
            "quench_g",
            "quench_e",
            "gamma_s",
            "gamma_l",
            "zpl_offset",
        }
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown defect parameter keys: {sorted(unknown)}")
        kwargs = dict(obj)
        for key in ("jt_g", "jt_e"):
            if key in kwargs:
                pair = kwargs[key]
                if len(pair) != 2:
                    raise ValueError(f"{key} must be a (ux, uy) pair")
                kwargs[key] = (float(pair[0]), float(pair[1]))
        return cls(**kwargs)


def lab_to_defect_frame(b_lab, axis):
    """Rotate a lab-frame field vector into the defect frame.

    The defect z axis lies along ``axis``; x is chosen in the plane spanned
    by ``axis`` and ``b_lab`` so the output y component vanishes. A field
    parallel to the axis (or zero) maps to (0, 0, b.axis).
    """
    b = np.asarray(b_lab, dtype=float)
    ax = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(ax)
    if norm < 1e-12:
        raise ZeroAxis("high-symmetry axis must be a nonzero vector")
    ax = ax / norm
    z = float(b @ ax)
    perp = b - z * ax
    x = float(np.linalg.norm(perp))
    return np.array([x, 0.0, z])


@dataclass(frozen=True)
class FieldConfig:
    """Magnetic field in the lab (crystal) frame plus the defect axis.

    ``axis`` is normally one of the four <111> unit vectors; any nonzero
    vector is accepted and normalized.
    """

    b_lab: np.ndarray
    axis: np.ndarray = field(default_factory=lambda: AXIS_111.copy())

    def __post_init__(self):
        b = np.asarray(self.b_lab, dtype=float).copy()
        ax = np.asarray(self.axis, dtype=float).copy()
        norm = np.linalg.norm(ax)
        if norm < 1e-12:
            raise ZeroAxis("high-symmetry axis must be a nonzero vector")
        object.__setattr__(self, "b_lab", b)
        object.__setattr__(self, "axis", ax / norm)

    @property
    def b_defect(self):
        return lab_to_defect_frame(self.b_lab, self.axis)


def build_hamiltonian(p, manifold, b_defect):
    """4x4 manifold Hamiltonian in GHz for a defect-frame field in Tesla.

    Basis order is (e_x up, e_x down, e_y up, e_y down); tau operators act
    on the orbital doublet and sigma on the spin, all with eigenvalues +-1:

        H = -(lambda/2) tau_y sigma_z           spin-orbit
            + ux tau_z + uy tau_x               Jahn-Teller / strain
            + quench gamma_l B_z tau_y          quenched orbital Zeeman
            + (gamma_s/2) B . sigma             spin Zeeman

    The result is Hermitian and traceless by construction.
    """
    lam, (ux, uy), quench = p.manifold_terms(manifold)
    bx, by, bz = np.asarray(b_defect, dtype=float)
    h = -(lam / 2.0) * np.kron(_SY, _SZ)
    h = h + ux * np.kron(_SZ, _I2) + uy * np.kron(_SX, _I2)
    h = h + quench * p.gamma_l * bz * np.kron(_SY, _I2)
    h = h + (p.gamma_s / 2.0) * np.kron(_I2, bx * _SX + by * _SY + bz * _SZ)
    return h


_GROUND_LABELS = ("1", "2", "3", "4")
_EXCITED_LABELS = ("A", "B", "C", "D")


@dataclass(frozen=True)
class EigenSystem:
    """Energies and eigenstates of one manifold at one field point.

    ``energies`` are ascending in GHz; ``states`` holds the matching
    orthonormal column vectors in the (e_x up, e_x down, e_y up, e_y down)
    basis. ``labels`` follow the 1/2/3/4 (ground) and A/B/C/D (excited)
    energy-order convention; ``degenerate`` flags Kramers pairs at zero
    field, where individual eigenvectors are basis-dependent.
    """

    manifold: str
    energies: np.ndarray
    states: np.ndarray
    labels: tuple[str, ...]
    b_defect: np.ndarray
    zpl_offset: float
    degenerate: bool


def manifold_eigensystem(p, manifold, field_config):
    """Diagonalize one manifold of ``p`` at the given field."""
    b_defect = field_config.b_defect
    h = build_hamiltonian(p, manifold, b_defect)
    energies, states = hermitian_eigensystem(h)
    labels = _GROUND_LABELS if manifold == "ground" else _EXCITED_LABELS
    scale = max(1.0, float(np.linalg.norm(h)))
    gaps = np.diff(energies)
    degenerate = bool((gaps < 1e-9 * scale).any())
    return EigenSystem(
        manifold=manifold,
        energies=energies,
        states=states,
        labels=labels,
        b_defect=b_defect,
        zpl_offset=p.zpl_offset,
        degenerate=degenerate,
    )


def spin_expectation(state):
    """Expectation values (<sigma_x>, <sigma_y>, <sigma_z>) of a manifold state."""
    psi = np.asarray(state, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-6:
        raise UnnormalizedState(f"state norm {norm:.8f} deviates from 1")
    return np.array(
        [
            float(np.real(psi.conj() @ (op @ psi)))
            for op in (SPIN_X, SPIN_Y, SPIN_Z)
        ]
    )
