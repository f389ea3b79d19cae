"""Time-domain observables of the emitter.

Optical spin pumping and readout on a four-level truncation (two ground
spin states, two lower-branch excited states), phonon-limited spin
relaxation with Bose-Einstein temperature scaling, resonantly driven
photon correlations from the two-level optical Bloch equations, and ODMR
lineshapes with their coherence-time conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .defect import KELVIN_PER_GHZ
from .errors import LengthMismatch, UnknownLine
from .numerics import integrate_ode, nlls_fit
from .spectra import SpectrumTrace

__all__ = [
    "RateModel",
    "PumpingResult",
    "build_pumping_model",
    "pumping_trace",
    "t1_recovery_curve",
    "bose_einstein_occupation",
    "t1_phonon_model",
    "activation_slope_kelvin",
    "g2_curve",
    "lifetime_limited_linewidth",
    "t2star_from_fwhm",
    "odmr_spectrum",
]

PUMPING_LEVELS = ("1", "2", "A", "B")


@dataclass(frozen=True)
class RateModel:
    """Classical rate-equation model over a fixed level set.

    ``rates[i][j]`` is the transition rate from level j to level i in 1/ns
    for i != j; diagonal entries are minus the column sums so every column
    sums to zero and total population is conserved. ``emission`` holds the
    spontaneous-emission rate of each level used for fluorescence readout.
    ``pumped`` names the optically driven line when the model came from
    build_pumping_model.
    """

    n_levels: int
    rates: np.ndarray
    labels: tuple[str, ...] = ()
    emission: np.ndarray | None = None
    pumped: str | None = None

    def __post_init__(self):
        rates = np.array(self.rates, dtype=float)
        if rates.shape != (self.n_levels, self.n_levels):
            raise ValueError("rates must be n_levels x n_levels")
        off = rates - np.diag(np.diag(rates))
        if (off < 0).any():
            raise ValueError("off-diagonal rates must be non-negative")
        if not np.allclose(rates.sum(axis=0), 0.0, atol=1e-12):
            raise ValueError("rate-matrix columns must sum to zero")
        object.__setattr__(self, "rates", rates)
        if self.emission is not None:
            emission = np.asarray(self.emission, dtype=float)
            if emission.shape != (self.n_levels,):
                raise ValueError("emission must have one rate per level")
            object.__setattr__(self, "emission", emission)

    def level_index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLine(f"no level {label!r} in {self.labels}") from None


@dataclass(frozen=True)
class PumpingResult:
    """Fluorescence trace with the derived polarization figures."""

    trace: SpectrumTrace
    steady_polarization: float
    pump_time_constant: float


def _line_lookup(lines):
    table = {}
    for line in lines:
        table[line.from_label + line.to_label] = line
    return table


def build_pumping_model(
    lines,
    pumped_line,
    pump_rate,
    radiative_rate,
    spin_flip_rate,
    temperature_k=4.0,
):
    """Four-level rate model {1, 2, A, B} for resonant spin pumping.

    ``lines`` is a transition table from the working field point; only the
    A1/A2/B1/B2 lines enter (the upper branches are thermally and optically
    inert at the fields modeled). The pump drives the chosen line in both
    directions (stimulated), radiative decay from each excited level splits
    over the ground levels in proportion to the table intensities, and
    ``spin_flip_rate`` couples the ground levels with detailed balance at
    ``temperature_k`` (the downhill 2->1 rate is ``spin_flip_rate``; the
    Zeeman splitting is read off the line frequencies).
    """
    if pump_rate < 0 or radiative_rate < 0 or spin_flip_rate < 0:
        raise ValueError("rates must be non-negative")
    table = _line_lookup(lines)
    needed = ("A1", "A2", "B1", "B2")
    missing = [k for k in needed if k not in table]
    if missing:
        raise UnknownLine(f"transition table lacks lines {missing}")
    if pumped_line not in needed:
        raise UnknownLine(
            f"pumped line {pumped_line!r} is not one of {needed}"
        )

    idx = {label: i for i, label in enumerate(PUMPING_LEVELS)}
    rates = np.zeros((4, 4))

    for excited in ("A", "B"):
        i1 = table[excited + "1"].intensity
        i2 = table[excited + "2"].intensity
        total = i1 + i2
        if total > 0:
            rates[idx["1"], idx[excited]] += radiative_rate * i1 / total
            rates[idx["2"], idx[excited]] += radiative_rate * i2 / total
        else:
            rates[idx["1"], idx[excited]] += radiative_rate / 2.0
            rates[idx["2"], idx[excited]] += radiative_rate / 2.0

    e_label, g_label = pumped_line[0], pumped_line[1]
    rates[idx[e_label], idx[g_label]] += pump_rate
    rates[idx[g_label], idx[e_label]] += pump_rate

    # ground 1 <-> 2 thermalization; splitting from the line frequencies
    delta_e = table[e_label + "1"].freq_offset - table[e_label + "2"].freq_offset
    boltzmann = math.exp(-abs(delta_e) * KELVIN_PER_GHZ / temperature_k)
    rates[idx["1"], idx["2"]] += spin_flip_rate
    rates[idx["2"], idx["1"]] += spin_flip_rate * boltzmann

    np.fill_diagonal(rates, 0.0)
    rates -= np.diag(rates.sum(axis=0))
    emission = np.array([0.0, 0.0, radiative_rate, radiative_rate])
    return RateModel(
        n_levels=4,
        rates=rates,
        labels=PUMPING_LEVELS,
        emission=emission,
        pumped=pumped_line,
    )


def _fit_decay_constant(t, f):
    """Exponential time constant of the tail of a fluorescence trace."""
    start = int(np.argmax(f))
    t_fit = t[start:] - t[start]
    f_fit = f[start:]
    span = f_fit.max() - f_fit.min()
    if span <= 1e-12 * max(f_fit.max(), 1e-300):
        return math.inf
    tail = f_fit[-1]
    drop = np.nonzero(np.abs(f_fit - tail) < abs(f_fit[0] - tail) / math.e)[0]
    tau0 = t_fit[drop[0]] if drop.size and drop[0] > 0 else t_fit[-1] / 3.0
    init = np.array([f_fit[0] - tail, tau0, tail])

    def model(params, x):
        a, tau, c = params
        return a * np.exp(-x / np.maximum(tau, 1e-12)) + c

    result = nlls_fit(
        model, init, t_fit, f_fit, bounds=[(None, None), (1e-12, None), (None, None)]
    )
    return float(result.params[1])


def pumping_trace(model, initial, duration, readout_line=None, n_points=400):
    """Integrate a rate model and read out fluorescence versus time (ns).

    ``initial`` is the population vector (non-negative, summing to one).
    Fluorescence is the emission rate of the readout line's excited level
    times its population; ``readout_line`` defaults to the pumped line.
    The steady polarization is the final population of the dark ground
    level (the one the pump does not address) normalized over the ground
    levels; the pump time constant is an exponential fit of the trace.
    """
    pop0 = np.asarray(initial, dtype=float)
    if pop0.shape != (model.n_levels,):
        raise ValueError(f"initial must have {model.n_levels} entries")
    if (pop0 < 0).any() or abs(pop0.sum() - 1.0) > 1e-9:
        raise ValueError("initial populations must be >= 0 and sum to 1")
    if duration <= 0:
        raise ValueError("duration must be positive")

    if readout_line is None:
        readout_line = model.pumped
    if readout_line is not None:
        readout_level = model.level_index(readout_line[0])
    elif model.emission is not None:
        readout_level = int(np.argmax(model.emission))
    else:
        readout_level = model.n_levels - 1

    t = np.linspace(0.0, float(duration), int(n_points))
    fastest = float(np.max(-np.diag(model.rates)))
    max_step = 0.5 / fastest if fastest > 0 else None
    rates = model.rates
    traj = integrate_ode(lambda _t, pop: rates @ pop, pop0, t, max_step=max_step)

    emission = (
        model.emission
        if model.emission is not None
        else np.zeros(model.n_levels)
    )
    fluor = emission[readout_level] * traj[:, readout_level]

    if model.pumped is not None:
        bright = model.level_index(model.pumped[1])
        dark = model.level_index("2" if model.pumped[1] == "1" else "1")
    else:
        bright, dark = 0, 1
    ground = traj[-1, bright] + traj[-1, dark]
    polarization = float(traj[-1, dark] / ground) if ground > 0 else 0.0

    return PumpingResult(
        trace=SpectrumTrace(x=t, y=fluor),
        steady_polarization=polarization,
        pump_time_constant=_fit_decay_constant(t, fluor),
    )


def t1_recovery_curve(t1, dark_times, floor=0.02):
    """Readout ratio I(tau)/I(0) after a dark interval of each length (ms).

    Single-exponential recovery from the polarized floor toward thermal
    equilibrium: ratio = 1 - (1 - floor) exp(-tau/t1).
    """
    if t1 <= 0:
        raise ValueError("t1 must be positive")
    tau = np.asarray(dark_times, dtype=float)
    return 1.0 - (1.0 - floor) * np.exp(-tau / t1)


def bose_einstein_occupation(delta_ghz, temperature_k):
    """Occupation of a phonon mode at ``delta_ghz`` for the given temperature."""
    if temperature_k <= 0:
        raise ValueError("temperature must be positive")
    if delta_ghz <= 0:
        raise ValueError("mode frequency must be positive")
    return 1.0 / math.expm1(delta_ghz * KELVIN_PER_GHZ / temperature_k)


def t1_phonon_model(temperature_k, delta_g, gamma0):
    """Spin lifetime (ms) limited by single-phonon orbital excitation.

    The decay rate is gamma0 times the Bose-Einstein occupation of the
    phonon mode resonant with the orbital splitting ``delta_g`` (GHz), so
    log(T1) grows linearly in 1/T while the mode is frozen out.
    """
    if gamma0 <= 0:
        raise ValueError("gamma0 must be positive")
    rate = gamma0 * bose_einstein_occupation(delta_g, temperature_k)
    return 1.0 / rate


def activation_slope_kelvin(delta_ghz):
    """Slope of log(T1) versus 1/T in Kelvin for an orbital splitting in GHz."""
    return KELVIN_PER_GHZ * delta_ghz


def g2_curve(rabi, gamma, extra_dephasing=0.0, irf_sigma=0.0, tau_grid=None):
    """Second-order photon correlation under resonant drive.

    Solves the driven two-level optical Bloch equations from the ground
    state; g2(tau) is the excited population normalized to its steady-state
    value, optionally convolved with a Gaussian instrument response of
    standard deviation ``irf_sigma`` (ns). ``rabi`` is the angular Rabi
    frequency in rad/ns (2 pi times the frequency in GHz), ``gamma`` the
    spontaneous decay rate in 1/ns, ``extra_dephasing`` an additional pure
    dephasing rate.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if rabi <= 0:
        raise ValueError("rabi must be positive")
    if extra_dephasing < 0 or irf_sigma < 0:
        raise ValueError("extra_dephasing and irf_sigma must be non-negative")
    tau = np.asarray(tau_grid, dtype=float)
    if tau.size == 0:
        raise ValueError("tau_grid must be non-empty")
    if tau.size > 1 and not (np.diff(tau) > 0).all():
        raise ValueError("tau_grid must be strictly ascending")
    if abs(tau[0]) > 1e-12 or tau[0] < 0:
        raise ValueError("tau_grid must start at 0")

    gamma2 = gamma / 2.0 + extra_dephasing

    def bloch(_t, s):
        u, v, w = s
        return np.array(
            [
                -gamma2 * u,
                -gamma2 * v - rabi * w,
                rabi * v - gamma * (w + 1.0),
            ]
        )

    pad = 5.0 * irf_sigma
    t_end = float(tau[-1]) + pad
    rate_scale = max(rabi, gamma + extra_dephasing)
    step = min(0.05 / rate_scale, t_end / 400.0)
    n_fine = int(math.ceil(t_end / step)) + 1
    t_fine = np.linspace(0.0, t_end, n_fine)
    traj = integrate_ode(bloch, np.array([0.0, 0.0, -1.0]), t_fine, max_step=step)
    rho_ee = 0.5 * (1.0 + traj[:, 2])
    rho_ss = rabi * rabi / (2.0 * (rabi * rabi + gamma2 * gamma))
    g2_fine = rho_ee / rho_ss

    if irf_sigma == 0.0:
        return SpectrumTrace(x=tau, y=np.interp(tau, t_fine, g2_fine))

    # Gaussian smearing with the physical even extension g2(-t) = g2(t)
    s = np.linspace(-pad, pad, 201)
    kernel = np.exp(-0.5 * (s / irf_sigma) ** 2)
    kernel /= kernel.sum()
    shifted = np.abs(tau[:, None] - s[None, :])
    y = (np.interp(shifted, t_fine, g2_fine) * kernel[None, :]).sum(axis=1)
    return SpectrumTrace(x=tau, y=y)


def lifetime_limited_linewidth(tau):
    """Transform-limited linewidth in MHz for a lifetime ``tau`` in ns."""
    if tau <= 0:
        raise ValueError("lifetime must be positive")
    return 1000.0 / (2.0 * math.pi * tau)


def t2star_from_fwhm(fwhm):
    """Spin dephasing time in ns from a Lorentzian ODMR FWHM in MHz."""
    if fwhm <= 0:
        raise ValueError("fwhm must be positive")
    return 1000.0 / (2.0 * math.pi * fwhm)


def odmr_spectrum(centers, fwhms, amplitudes, grid, baseline=0.0):
    """Sum of Lorentzian peaks on a flat baseline (frequencies in MHz).

    Peaks are height-normalized: each contributes ``amplitude`` at its
    center and half of it one half-width away, so a two-center call models
    the double-peaked hyperfine structure directly.
    """
    centers = np.asarray(centers, dtype=float)
    fwhms = np.asarray(fwhms, dtype=float)
    amplitudes = np.asarray(amplitudes, dtype=float)
    if not (centers.shape == fwhms.shape == amplitudes.shape):
        raise LengthMismatch(
            f"centers/fwhms/amplitudes lengths differ: "
            f"{centers.size}/{fwhms.size}/{amplitudes.size}"
        )
    if (fwhms <= 0).any():
        raise ValueError("fwhms must be positive")
    x = np.asarray(grid, dtype=float)
    y = np.full_like(x, float(baseline))
    for c, w, a in zip(centers, fwhms, amplitudes):
        half = w / 2.0
        y += a * half * half / ((x - c) ** 2 + half * half)
    return SpectrumTrace(x=x, y=y)
