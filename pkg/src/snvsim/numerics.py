"""Self-contained numerical kernels.

Hermitian eigendecomposition (cyclic complex Jacobi), damped nonlinear
least squares (Levenberg-style additive damping), and fixed-step 4th-order
Runge-Kutta integration. No physics knowledge lives here; callers own all
units. Everything is a pure function of its inputs and safe to call from
multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionOutOfRange,
    NonFiniteState,
    NotHermitian,
    SingularNormalEquations,
)

__all__ = ["FitResult", "hermitian_eigensystem", "nlls_fit", "integrate_ode"]


@dataclass
class FitResult:
    """Outcome of a least-squares fit.

    ``params`` and ``std_errors`` are in the caller's units; ``names``, when
    set, gives one label per parameter for serialization.
    """

    params: np.ndarray
    std_errors: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    names: tuple[str, ...] | None = None

    def as_dict(self):
        """Flat JSON-ready mapping: name -> {value, std_error}, plus status."""
        names = self.names or tuple(f"p{i}" for i in range(len(self.params)))
        out = {
            name: {"value": float(v), "std_error": float(s)}
            for name, v, s in zip(names, self.params, self.std_errors)
        }
        out["residual_norm"] = float(self.residual_norm)
        out["converged"] = bool(self.converged)
        return out


def _offdiag_norm(a):
    return np.linalg.norm(a - np.diag(np.diag(a)))


def hermitian_eigensystem(m, hermitian_tol=1e-9):
    """Eigenvalues (ascending) and orthonormal eigenvector columns of ``m``.

    Cyclic complex Jacobi rotations, swept until the off-diagonal Frobenius
    norm drops below 1e-12 times the matrix norm; simple and adequate for
    2 <= dim <= 8. Each eigenvector is re-phased so its largest-magnitude
    component is real and non-negative. Within a degenerate eigenvalue
    cluster only the eigenvalues and the subspace span are meaningful;
    callers must sum over degenerate sets.

    Raises NotHermitian if ``m`` deviates from its conjugate transpose by
    more than ``hermitian_tol`` in relative Frobenius norm, and
    DimensionOutOfRange outside 2 <= dim <= 8.
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionOutOfRange(f"expected a square matrix, got shape {a.shape}")
    dim = a.shape[0]
    if not 2 <= dim <= 8:
        raise DimensionOutOfRange(f"dim={dim} outside supported range [2, 8]")

    norm = np.linalg.norm(a)
    deviation = np.linalg.norm(a - a.conj().T)
    if deviation > hermitian_tol * max(norm, 1e-300):
        raise NotHermitian(
            f"relative deviation {deviation / max(norm, 1e-300):.3e} "
            f"exceeds tolerance {hermitian_tol:.1e}"
        )
    a = 0.5 * (a + a.conj().T)
    v = np.eye(dim, dtype=complex)

    if norm > 0.0:
        target = 1e-12 * norm
        skip = target / (dim * dim)
        for _sweep in range(100):
            if _offdiag_norm(a) < target:
                break
            for p in range(dim - 1):
                for q in range(p + 1, dim):
                    apq = a[p, q]
                    mag = abs(apq)
                    if mag <= skip:
                        continue
                    phase = apq / mag
                    theta = 0.5 * math.atan2(2.0 * mag, a[p, p].real - a[q, q].real)
                    c = math.cos(theta)
                    s = math.sin(theta)
                    r = np.eye(dim, dtype=complex)
                    r[p, p] = c
                    r[p, q] = -s
                    r[q, p] = np.conj(phase) * s
                    r[q, q] = np.conj(phase) * c
                    a = r.conj().T @ a @ r
                    v = v @ r
            a = 0.5 * (a + a.conj().T)
        else:
            raise NotHermitian("Jacobi sweeps failed to converge")

    eigenvalues = np.diag(a).real.copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = v[:, order]
    for k in range(dim):
        col = vectors[:, k]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        if abs(pivot) > 0.0:
            vectors[:, k] = col * (np.conj(pivot) / abs(pivot))
    return eigenvalues, vectors


_DAMPING_INIT = 1e-3
_DAMPING_MAX = 1e12


def _fd_jacobian(residual, p, r0_size):
    """Central-difference Jacobian of the residual, relative step 1e-6."""
    npar = p.size
    jac = np.empty((r0_size, npar))
    for j in range(npar):
        h = 1e-6 * abs(p[j]) if p[j] != 0.0 else 1e-6
        pp = p.copy()
        pm = p.copy()
        pp[j] += h
        pm[j] -= h
        jac[:, j] = (residual(pp) - residual(pm)) / (2.0 * h)
    return jac


def nlls_fit(model, params0, x, y, weights=None, bounds=None, max_iter=200, tol=1e-8):
    """Weighted nonlinear least squares with Levenberg-style damping.

    ``model(params, x)`` must return predictions matching ``y``. Residuals
    are ``weights * (y - model)``; the returned ``residual_norm`` is their
    Euclidean norm and never exceeds its value at ``params0``. ``bounds``,
    when given, is a per-parameter sequence of (lo, hi) intervals; candidate
    steps are clipped into them. The damping factor starts at 1e-3, grows
    tenfold on a rejected step and shrinks tenfold on an accepted one.
    Convergence requires the relative step and the relative residual-norm
    change to both fall below ``tol``; hitting ``max_iter`` first returns
    best-so-far with ``converged=False``.

    Raises SingularNormalEquations (with the damping history) if the damped
    normal equations stay unsolvable even at the damping cap.
    """
    p = np.asarray(params0, dtype=float).copy()
    x = np.asarray(x)
    y = np.asarray(y, dtype=float)
    if p.ndim != 1:
        raise ValueError("params0 must be a 1-d vector")
    if y.size < p.size:
        raise ValueError(f"need at least {p.size} data points, got {y.size}")
    if weights is None:
        w = np.ones(y.size)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape:
            raise ValueError("weights must match y")
        if not (w > 0).all():
            raise ValueError("weights must be positive")

    if bounds is not None:
        lo = np.array([b[0] if b[0] is not None else -np.inf for b in bounds])
        hi = np.array([b[1] if b[1] is not None else np.inf for b in bounds])
        if len(bounds) != p.size:
            raise ValueError("one (lo, hi) pair per parameter required")
        if not ((p >= lo) & (p <= hi)).all():
            raise ValueError("params0 outside bounds")
    else:
        lo = None
        hi = None

    def clip(q):
        return q if lo is None else np.clip(q, lo, hi)

    def residual(q):
        f = np.asarray(model(q, x), dtype=float)
        return w * (y - f)

    r = residual(p)
    if not np.isfinite(r).all():
        raise ValueError("model is not finite at params0")
    s = float(np.linalg.norm(r))

    lam = _DAMPING_INIT
    history = [lam]
    iterations = 0
    converged = s == 0.0

    while not converged and iterations < max_iter:
        iterations += 1
        jac = _fd_jacobian(residual, p, r.size)
        if not np.isfinite(jac).all():
            raise SingularNormalEquations(
                "non-finite Jacobian", damping_history=history
            )
        a = jac.T @ jac
        g = jac.T @ r
        while True:
            try:
                delta = np.linalg.solve(a + lam * np.eye(p.size), -g)
            except np.linalg.LinAlgError:
                delta = None
            if delta is None or not np.isfinite(delta).all():
                lam *= 10.0
                history.append(lam)
                if lam > _DAMPING_MAX:
                    raise SingularNormalEquations(
                        f"normal equations unsolvable after {len(history)} "
                        "damping increases",
                        damping_history=history,
                    )
                continue
            candidate = clip(p + delta)
            step = float(np.linalg.norm(candidate - p))
            r_new = residual(candidate)
            s_new = (
                float(np.linalg.norm(r_new))
                if np.isfinite(r_new).all()
                else math.inf
            )
            if s_new <= s:
                rel_step = step / max(float(np.linalg.norm(p)), tol)
                rel_change = (s - s_new) / max(s, tol)
                p = candidate
                r = r_new
                s = s_new
                lam = max(lam / 10.0, 1e-15)
                history.append(lam)
                if rel_step < tol and rel_change < tol:
                    converged = True
                break
            # rejected: a vanishing proposed step means no improvement exists
            if step < tol * max(float(np.linalg.norm(p)), tol):
                converged = True
                break
            lam *= 10.0
            history.append(lam)
            if lam > _DAMPING_MAX:
                raise SingularNormalEquations(
                    f"no acceptable step below damping cap "
                    f"(residual norm {s:.6e})",
                    damping_history=history,
                )

    jac = _fd_jacobian(residual, p, r.size)
    a = jac.T @ jac
    dof = max(y.size - p.size, 1)
    variance = s * s / dof
    try:
        cov = np.linalg.inv(a) * variance
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(a) * variance
    std = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(
        params=p,
        std_errors=std,
        residual_norm=s,
        iterations=iterations,
        converged=converged,
    )


def integrate_ode(generator, state0, t_grid, max_step=None):
    """Integrate ``d state / dt = generator(t, state)`` over ``t_grid``.

    Classical fixed-step 4th-order Runge-Kutta. Each grid interval is split
    into equal substeps no longer than min(grid spacing)/4, further capped
    by ``max_step`` when given (callers with stiff generators should pass
    one). Returns the trajectory as a len(t_grid) x dim array whose first
    row is ``state0``.

    Raises NonFiniteState as soon as the state picks up a NaN or infinity.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d vector")
    state = np.asarray(state0, dtype=float).copy()
    out = np.empty((t.size, state.size))
    out[0] = state
    if t.size == 1:
        return out

    dt = np.diff(t)
    if not (dt > 0).all():
        raise ValueError("t_grid must be strictly ascending")
    h_cap = float(dt.min()) / 4.0
    if max_step is not None:
        h_cap = min(h_cap, float(max_step))

    for k in range(t.size - 1):
        span = float(dt[k])
        nsub = max(1, int(math.ceil(span / h_cap - 1e-12)))
        h = span / nsub
        t0 = float(t[k])
        for i in range(nsub):
            ti = t0 + i * h
            k1 = np.asarray(generator(ti, state), dtype=float)
            k2 = np.asarray(generator(ti + 0.5 * h, state + 0.5 * h * k1), dtype=float)
            k3 = np.asarray(generator(ti + 0.5 * h, state + 0.5 * h * k2), dtype=float)
            k4 = np.asarray(generator(ti + h, state + h * k3), dtype=float)
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(state).all():
            raise NonFiniteState(f"generator produced NaN/Inf near t={t[k + 1]}")
        out[k + 1] = state
    return out
