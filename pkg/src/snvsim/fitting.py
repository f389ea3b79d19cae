"""Parameter extraction from spectroscopy data.

Peak fits, decay fits, phonon-limited T1 fits, and full Hamiltonian fits to
field-dependent line positions. All fits are deterministic given the data
and initialization; stochastic multi-start is opted into with an explicit
seed and restart count and merges by lowest residual norm (earliest restart
wins ties).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .defect import AXIS_111, DefectParameters, FieldConfig, manifold_eigensystem
from .dynamics import bose_einstein_occupation
from .errors import (
    AssignmentAmbiguous,
    FitDiverged,
    InsufficientData,
    SingularNormalEquations,
    SnvsimError,
)
from .numerics import FitResult, nlls_fit

__all__ = [
    "DataSeries",
    "FIELD_FIT_PARAMS",
    "fit_lorentzian_multi",
    "fit_exponential_decay",
    "fit_t1_vs_temperature",
    "fit_field_dependence",
    "fitted_defect",
    "lorentzian_sum",
]


@dataclass(frozen=True)
class DataSeries:
    """One measured curve: x, y, and optional positive 1-sigma errors."""

    x: np.ndarray
    y: np.ndarray
    y_err: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.y_err is not None:
            err = np.asarray(self.y_err, dtype=float)
            if err.shape != y.shape:
                raise ValueError("y_err must match y")
            if not (err > 0).all():
                raise ValueError("y_err must be positive")
            object.__setattr__(self, "y_err", err)

    @property
    def weights(self):
        return None if self.y_err is None else 1.0 / self.y_err


def _run_fit(run, init, bounds, restarts, seed):
    """Deterministic multi-start wrapper; the unperturbed fit always runs."""
    best = run(np.asarray(init, dtype=float))
    if restarts:
        rng = np.random.default_rng(seed)
        lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds])
        hi = np.array([np.inf if b[1] is None else b[1] for b in bounds])
        for _ in range(int(restarts)):
            jitter = 1.0 + 0.05 * rng.standard_normal(len(init))
            start = np.clip(np.asarray(init, dtype=float) * jitter, lo, hi)
            try:
                candidate = run(start)
            except SnvsimError:
                continue
            if candidate.residual_norm < best.residual_norm:
                best = candidate
    return best


def lorentzian_sum(params, x):
    """Sum of height-normalized Lorentzians plus a flat baseline.

    ``params`` is (center, fwhm, amplitude) per peak followed by the
    baseline.
    """
    x = np.asarray(x, dtype=float)
    y = np.full_like(x, params[-1])
    for k in range(len(params) // 3):
        c, w, a = params[3 * k : 3 * k + 3]
        half = abs(w) / 2.0
        y += a * half * half / ((x - c) ** 2 + half * half)
    return y


def _smooth3(y):
    s = y.copy()
    s[1:-1] = (y[:-2] + y[1:-1] + y[2:]) / 3.0
    return s


def _auto_peak_init(data, n_peaks):
    """Peak seeds from the n largest local maxima after 3-point smoothing."""
    s = _smooth3(data.y)
    maxima = [
        i
        for i in range(1, s.size - 1)
        if s[i] > s[i - 1] and s[i] >= s[i + 1]
    ]
    if len(maxima) < n_peaks:
        raise InsufficientData(
            f"auto-initialization found {len(maxima)} local maxima, "
            f"need {n_peaks}"
        )
    maxima.sort(key=lambda i: -s[i])
    chosen = sorted(maxima[:n_peaks], key=lambda i: data.x[i])
    baseline = float(data.y.min())
    fwhm0 = (data.x[-1] - data.x[0]) / 20.0
    init = []
    for i in chosen:
        init.extend([float(data.x[i]), fwhm0, float(s[i] - baseline)])
    init.append(baseline)
    return np.array(init)


def fit_lorentzian_multi(data, n_peaks, init=None, restarts=0, seed=0):
    """Fit ``n_peaks`` Lorentzians plus a flat baseline to a spectrum.

    Returns a FitResult whose parameters are (center, fwhm, amplitude) per
    peak, sorted by center, followed by the baseline. When ``init`` is
    absent, peaks are seeded from the largest local maxima after a light
    smoothing pass, which keeps the fit deterministic.
    """
    if n_peaks < 1:
        raise ValueError("n_peaks must be at least 1")
    n_params = 3 * n_peaks + 1
    if data.y.size < n_params:
        raise InsufficientData(
            f"{data.y.size} points cannot constrain {n_params} parameters"
        )
    init = _auto_peak_init(data, n_peaks) if init is None else np.asarray(init, float)
    if init.size != n_params:
        raise ValueError(f"init must have {n_params} entries")
    bounds = []
    for _ in range(n_peaks):
        bounds.extend([(None, None), (1e-12, None), (None, None)])
    bounds.append((None, None))

    def run(start):
        try:
            result = nlls_fit(
                lorentzian_sum,
                start,
                data.x,
                data.y,
                weights=data.weights,
                bounds=bounds,
            )
        except SingularNormalEquations as exc:
            raise FitDiverged(str(exc)) from exc
        if not np.isfinite(result.params).all():
            raise FitDiverged("fit produced non-finite parameters")
        return result

    result = _run_fit(run, init, bounds, restarts, seed)
    order = np.argsort(result.params[:-1:3], kind="stable")
    perm = np.concatenate([np.arange(3) + 3 * k for k in order] + [[3 * n_peaks]])
    names = []
    for k in range(n_peaks):
        names.extend([f"center_{k + 1}", f"fwhm_{k + 1}", f"amplitude_{k + 1}"])
    names.append("baseline")
    return replace(
        result,
        params=result.params[perm],
        std_errors=result.std_errors[perm],
        names=tuple(names),
    )


def fit_exponential_decay(data, with_floor=True, restarts=0, seed=0):
    """Fit amplitude * exp(-x / time_constant) (+ floor) to a trace.

    ``x`` must be ascending; units follow ``x`` (lifetime fits pass ns,
    recovery fits ms). Callers fitting lifetime data are expected to drop
    points inside the instrument-response window beforehand.
    """
    if data.x.size > 1 and not (np.diff(data.x) > 0).all():
        raise ValueError("x must be strictly ascending")
    floor0 = float(data.y[-1]) if with_floor else 0.0
    amp0 = float(data.y[0]) - floor0
    inside = np.nonzero(np.abs(data.y - floor0) < abs(amp0) / math.e)[0]
    span = float(data.x[-1] - data.x[0])
    tau0 = float(data.x[inside[0]] - data.x[0]) if inside.size else span / 3.0
    if tau0 <= 0:
        tau0 = span / 3.0

    if with_floor:
        init = np.array([amp0, tau0, floor0])
        bounds = [(None, None), (1e-12, None), (None, None)]
        names = ("amplitude", "time_constant", "floor")

        def model(params, x):
            return params[0] * np.exp(-x / params[1]) + params[2]

    else:
        init = np.array([amp0, tau0])
        bounds = [(None, None), (1e-12, None)]
        names = ("amplitude", "time_constant")

        def model(params, x):
            return params[0] * np.exp(-x / params[1])

    def run(start):
        try:
            result = nlls_fit(
                model, start, data.x, data.y, weights=data.weights, bounds=bounds
            )
        except SingularNormalEquations as exc:
            raise FitDiverged(str(exc)) from exc
        if not np.isfinite(result.params).all() or result.params[1] <= 0:
            raise FitDiverged("decay fit produced an unusable time constant")
        return result

    result = _run_fit(run, init, bounds, restarts, seed)
    return replace(result, names=names)


def fit_t1_vs_temperature(data, delta_g=850.0, fit_delta=False, restarts=0, seed=0):
    """Fit T1(T) = 1 / (gamma0 n_BE(delta_g, T)) to (Kelvin, ms) points.

    ``gamma0`` is in 1/ms. With ``fit_delta`` the orbital splitting (GHz)
    floats as a second parameter, otherwise it stays fixed. Points are
    weighted relatively (1/y) unless the series carries errors, since T1
    spans decades over a few Kelvin.
    """
    if data.x.size < 2:
        raise InsufficientData("need at least two temperature points")
    if (data.x <= 0).any() or (data.y <= 0).any():
        raise ValueError("temperatures and lifetimes must be positive")

    def t1_model(params, temps):
        gamma0 = params[0]
        delta = params[1] if fit_delta else delta_g
        occ = np.array(
            [bose_einstein_occupation(delta, float(t)) for t in temps]
        )
        return 1.0 / (gamma0 * occ)

    gamma0_init = 1.0 / (
        float(data.y[0]) * bose_einstein_occupation(delta_g, float(data.x[0]))
    )
    weights = data.weights if data.y_err is not None else 1.0 / data.y
    if fit_delta:
        init = np.array([gamma0_init, delta_g])
        bounds = [(1e-12, None), (1e-6, None)]
        names = ("gamma0", "delta_g")
    else:
        init = np.array([gamma0_init])
        bounds = [(1e-12, None)]
        names = ("gamma0",)

    def run(start):
        try:
            result = nlls_fit(
                t1_model, start, data.x, data.y, weights=weights, bounds=bounds
            )
        except SingularNormalEquations as exc:
            raise FitDiverged(str(exc)) from exc
        if not np.isfinite(result.params).all():
            raise FitDiverged("T1 fit produced non-finite parameters")
        return result

    result = _run_fit(run, init, bounds, restarts, seed)
    return replace(result, names=names)


FIELD_FIT_PARAMS = (
    "lambda_g",
    "lambda_e",
    "jt_g",
    "jt_e",
    "quench_g",
    "quench_e",
    "gamma_s",
    "gamma_l",
)

_FIELD_FIT_BOUNDS = {
    "lambda_g": (1e-6, None),
    "lambda_e": (1e-6, None),
    "jt_g": (0.0, None),
    "jt_e": (0.0, None),
    "quench_g": (0.0, 1.0),
    "quench_e": (0.0, 1.0),
    "gamma_s": (1e-6, None),
    "gamma_l": (1e-6, None),
}


def _jt_direction(pair):
    mag = math.hypot(pair[0], pair[1])
    if mag == 0.0:
        return (1.0, 0.0)
    return (pair[0] / mag, pair[1] / mag)


def fitted_defect(init, free_names, values):
    """Defect parameters with the named free values substituted into ``init``.

    ``jt_g``/``jt_e`` values are magnitudes; the orientation of the coupling
    pair is inherited from ``init`` (it is not identifiable from line
    positions alone).
    """
    updates = {}
    for name, value in zip(free_names, values):
        if name in ("jt_g", "jt_e"):
            direction = _jt_direction(getattr(init, name))
            updates[name] = (direction[0] * value, direction[1] * value)
        else:
            updates[name] = float(value)
    return replace(init, **updates)


def _free_names(free_mask):
    if isinstance(free_mask, dict):
        unknown = set(free_mask) - set(FIELD_FIT_PARAMS)
        if unknown:
            raise ValueError(f"unknown fit parameters: {sorted(unknown)}")
        return tuple(n for n in FIELD_FIT_PARAMS if free_mask.get(n, False))
    names = tuple(free_mask)
    unknown = set(names) - set(FIELD_FIT_PARAMS)
    if unknown:
        raise ValueError(f"unknown fit parameters: {sorted(unknown)}")
    return tuple(n for n in FIELD_FIT_PARAMS if n in names)


def _initial_value(init, name):
    if name in ("jt_g", "jt_e"):
        pair = getattr(init, name)
        return math.hypot(pair[0], pair[1])
    return float(getattr(init, name))


def fit_field_dependence(
    observed,
    init,
    free_mask,
    lab_direction=(0.0, 0.0, 1.0),
    axis=None,
    temperature_k=4.0,
    restarts=0,
    seed=0,
    max_rounds=10,
):
    """Fit defect parameters to field-dependent line positions.

    ``observed`` is a sequence of (B_tesla, [frequency offsets in GHz])
    pairs. Each observed line is matched to the nearest of the 16 predicted
    transition frequencies at that field; the assignment is recomputed
    between damping rounds from the current model and two observed lines
    claiming the same prediction raise AssignmentAmbiguous rather than
    being silently resolved. Free parameters are selected by ``free_mask``
    (booleans keyed by FIELD_FIT_PARAMS, or an iterable of names);
    Jahn-Teller entries fit as magnitudes.
    """
    axis = AXIS_111 if axis is None else axis
    direction = np.asarray(lab_direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    points = [(float(b), np.asarray(freqs, dtype=float)) for b, freqs in observed]
    if not points:
        raise InsufficientData("need at least one field point")
    free = _free_names(free_mask)
    if not free:
        raise ValueError("free_mask selects no parameters")
    y_obs = np.concatenate([freqs for _, freqs in points])
    if y_obs.size < len(free):
        raise InsufficientData(
            f"{y_obs.size} observed lines cannot constrain {len(free)} parameters"
        )
    bounds = [_FIELD_FIT_BOUNDS[name] for name in free]
    init_vector = np.array([_initial_value(init, name) for name in free])

    def predictions(values):
        p = fitted_defect(init, free, values)
        out = []
        for b, _ in points:
            config = FieldConfig(b_lab=b * direction, axis=axis)
            gs = manifold_eigensystem(p, "ground", config)
            es = manifold_eigensystem(p, "excited", config)
            freqs = (
                es.energies[:, None] - gs.energies[None, :] + p.zpl_offset
            ).ravel()
            out.append(freqs)
        return out

    def assign(values):
        table = predictions(values)
        assignment = []
        for k, (b, freqs) in enumerate(points):
            if freqs.size > table[k].size:
                raise AssignmentAmbiguous(
                    f"{freqs.size} observed lines at B={b} T exceed the "
                    f"{table[k].size} predicted transitions; at least two "
                    "observed lines must share one prediction"
                )
            # greedy one-to-one matching, globally closest pair first
            dist = np.abs(freqs[:, None] - table[k][None, :])
            order = np.argsort(dist, axis=None, kind="stable")
            matched_obs = {}
            used_pred = set()
            for flat in order:
                i, j = divmod(int(flat), table[k].size)
                if i in matched_obs or j in used_pred:
                    continue
                matched_obs[i] = j
                used_pred.add(j)
                if len(matched_obs) == freqs.size:
                    break
            assignment.extend((k, matched_obs[i]) for i in range(freqs.size))
        return tuple(assignment)

    def run(start):
        values = start.copy()
        result = None
        assignment = assign(values)
        for _ in range(max_rounds):
            frozen = assignment

            def model(params, _x):
                table = predictions(params)
                return np.array([table[k][j] for k, j in frozen])

            try:
                result = nlls_fit(
                    model,
                    values,
                    np.arange(y_obs.size),
                    y_obs,
                    bounds=bounds,
                )
            except SingularNormalEquations as exc:
                raise FitDiverged(str(exc)) from exc
            values = result.params
            new_assignment = assign(values)
            if new_assignment == assignment:
                break
            assignment = new_assignment
        if result is None or not np.isfinite(result.params).all():
            raise FitDiverged("field fit produced non-finite parameters")
        return result

    result = _run_fit(run, init_vector, bounds, restarts, seed)
    return replace(result, names=free)
