"""Optical transitions between the two manifolds.

Transition intensities follow Fermi's golden rule with electric-dipole
operators that act on the orbital doublet only; the detector is
polarization-unresolved, so intensities sum over the three dipole
components. Emission weights assume full Boltzmann equilibrium within the
excited manifold before decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .defect import KELVIN_PER_GHZ, FieldConfig, manifold_eigensystem
from .errors import EmptyGrid, MismatchedField

__all__ = [
    "TransitionLine",
    "SpectrumTrace",
    "dipole_operators",
    "transition_table",
    "field_sweep",
    "synthesize_spectrum",
    "line_group",
]

_I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class TransitionLine:
    """One optical line between an excited and a ground sublevel.

    ``freq_offset`` is in GHz relative to the zero-phonon-line center;
    ``intensity`` is the golden-rule dipole strength in relative units;
    ``spin_overlap`` is the squared overlap of the reduced spin states
    (diagnostic only); ``thermal_weight`` is the Boltzmann occupation of the
    emitting level within its manifold.
    """

    from_label: str
    to_label: str
    freq_offset: float
    intensity: float
    spin_overlap: float
    thermal_weight: float

    @property
    def label(self) -> str:
        return self.from_label + self.to_label


@dataclass(frozen=True)
class SpectrumTrace:
    """Sampled non-negative intensity versus an ascending coordinate."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if x.size > 1 and not (np.diff(x) > 0).all():
            raise ValueError("x must be strictly ascending")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def dipole_operators(c=1.0):
    """The three electric-dipole operators on a manifold, plus their sum rule.

    Each operator maps excited-orbital kets to ground-orbital bras and is
    the identity on spin:

        d_x = (|x><x| - |y><y|) (x) 1
        d_y = -(|x><y| + |y><x|) (x) 1
        d_z = c (|x><x| + |y><y|) (x) 1

    ``c`` sets the relative z-dipole strength; the operators satisfy
    sum_p d_p^dag d_p = (2 + c^2) identity.
    """
    px = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    py = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    xy = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    d_x = np.kron(px - py, _I2)
    d_y = -np.kron(xy + xy.T, _I2)
    d_z = c * np.kron(px + py, _I2)
    return d_x, d_y, d_z


def _spin_density(state):
    """2x2 reduced spin density matrix after tracing out the orbital doublet."""
    psi = np.asarray(state, dtype=complex).reshape(2, 2)  # rows orbital, cols spin
    return np.einsum("os,ot->st", psi, psi.conj())


def thermal_weights(energies, temperature_k):
    """Boltzmann occupations of a manifold, normalized to sum to 1."""
    energies = np.asarray(energies, dtype=float)
    if temperature_k <= 0:
        raise ValueError("temperature must be positive")
    x = (energies - energies.min()) * KELVIN_PER_GHZ / temperature_k
    w = np.exp(-x)
    return w / w.sum()


def transition_table(gs, es, temperature_k, c=1.0):
    """All optical lines between two eigensystems at one field point.

    ``gs`` and ``es`` must come from the same parameters and field.
    Frequencies are E_excited - E_ground + zpl_offset; intensities sum the
    squared dipole matrix elements over the three polarization components.
    """
    if gs.manifold != "ground" or es.manifold != "excited":
        raise MismatchedField("expected a (ground, excited) eigensystem pair")
    if not np.allclose(gs.b_defect, es.b_defect, rtol=0.0, atol=1e-12):
        raise MismatchedField(
            f"eigensystems built at different fields: {gs.b_defect} vs {es.b_defect}"
        )
    if gs.zpl_offset != es.zpl_offset:
        raise MismatchedField("eigensystems carry different ZPL offsets")

    dipoles = dipole_operators(c)
    weights = thermal_weights(es.energies, temperature_k)
    spins_g = [_spin_density(gs.states[:, f]) for f in range(4)]
    spins_e = [_spin_density(es.states[:, i]) for i in range(4)]

    lines = []
    for i in range(4):
        ket_e = es.states[:, i]
        for f in range(4):
            bra_g = gs.states[:, f].conj()
            intensity = float(
                sum(abs(bra_g @ (d @ ket_e)) ** 2 for d in dipoles)
            )
            overlap = float(np.real(np.trace(spins_g[f] @ spins_e[i])))
            lines.append(
                TransitionLine(
                    from_label=es.labels[i],
                    to_label=gs.labels[f],
                    freq_offset=float(
                        es.energies[i] - gs.energies[f] + gs.zpl_offset
                    ),
                    intensity=intensity,
                    spin_overlap=overlap,
                    thermal_weight=float(weights[i]),
                )
            )
    return lines


def line_group(line):
    """Zero-field group name of a line: alpha/beta from the upper excited
    branch, gamma/delta from the lower; gamma and alpha end on the lower
    ground branch."""
    upper_excited = line.from_label in ("C", "D")
    upper_ground = line.to_label in ("3", "4")
    if upper_excited:
        return "beta" if upper_ground else "alpha"
    return "delta" if upper_ground else "gamma"


def _relabel(eigensystem, reference):
    """Adiabatic label tracking: give each state the label of the reference
    state it overlaps most; ties and leftovers fall back to energy order."""
    overlap = np.abs(reference.states.conj().T @ eigensystem.states) ** 2
    n = overlap.shape[0]
    labels = [None] * n
    taken_ref = set()
    # visit new states by descending best-overlap so clear matches assign first
    order = np.argsort(-overlap.max(axis=0), kind="stable")
    for k in order:
        ranked = np.argsort(-overlap[:, k], kind="stable")
        for r in ranked:
            if r not in taken_ref:
                labels[k] = reference.labels[r]
                taken_ref.add(int(r))
                break
    return replace(eigensystem, labels=tuple(labels))


def field_sweep(p, b_magnitudes, lab_direction, axis, temperature_k, c=1.0):
    """Transition tables along a magnetic-field magnitude sweep.

    The field points along ``lab_direction`` (lab frame) with the given
    magnitudes in Tesla. Level labels track adiabatically between
    consecutive points by maximum eigenvector overlap, so branch identities
    stay stable for plotting and fitting. Returns a list of
    (magnitude, lines) pairs.
    """
    direction = np.asarray(lab_direction, dtype=float)
    norm = np.linalg.norm(direction)
    if norm < 1e-12:
        raise ValueError("lab_direction must be a nonzero vector")
    direction = direction / norm

    magnitudes = [float(b) for b in b_magnitudes]
    if any(b < 0 for b in magnitudes):
        raise ValueError("field magnitudes must be non-negative")

    results = []
    prev = {}
    for b in magnitudes:
        config = FieldConfig(b_lab=b * direction, axis=axis)
        systems = {}
        for manifold in ("ground", "excited"):
            eig = manifold_eigensystem(p, manifold, config)
            if manifold in prev and not eig.degenerate:
                eig = _relabel(eig, prev[manifold])
            systems[manifold] = eig
            prev[manifold] = eig
        results.append(
            (b, transition_table(systems["ground"], systems["excited"], temperature_k, c=c))
        )
    return results


def synthesize_spectrum(lines, fwhm, grid):
    """Lorentzian-broadened spectrum of a transition table.

    Each line contributes intensity * thermal_weight times a unit-area
    Lorentzian of the given FWHM (GHz), so the integrated spectrum matches
    the summed line strengths up to grid truncation.
    """
    if fwhm <= 0:
        raise ValueError("fwhm must be positive")
    x = np.asarray(grid, dtype=float)
    if x.size == 0:
        raise EmptyGrid("frequency grid is empty")
    half = fwhm / 2.0
    y = np.zeros_like(x)
    for line in lines:
        strength = line.intensity * line.thermal_weight
        if strength == 0.0:
            continue
        y += strength * (half / math.pi) / ((x - line.freq_offset) ** 2 + half * half)
    return SpectrumTrace(x=x, y=y)
