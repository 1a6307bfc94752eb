"""Decay timescale from the spectrum and the spectral weights.

Pipeline for an equally spaced bath:

1. regress the sorted eigenfrequencies on their 1-based index,
   ``omega_j ~ omega0 + beta * j``;
2. fit the weights with ``A * gamma / ((j - x0)^2 + gamma^2)``;
3. the Lorentzian in index space becomes a Lorentzian in frequency with half
   width ``gamma * beta``, whose Fourier transform gives the envelope
   ``E1(t) ~ pi^2 A^2 exp(-2 gamma beta |t|)``, i.e. ``tau_d = 1 / (2 gamma beta)``.

:func:`fit_exponential_decay` measures the same rate directly on a trace.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import EnergyTrace
from .eigensolver import SpectralDecomposition
from .errors import (
    DegenerateInput,
    InsufficientData,
    NonConvergence,
    NonPositiveRate,
    NonPositiveSamples,
    WindowEmpty,
)

__all__ = [
    "LinearFit",
    "LorentzianFit",
    "DecayModel",
    "fit_linear",
    "fit_spectrum_linear",
    "lorentzian",
    "lorentzian_jacobian",
    "fit_lorentzian",
    "fit_weights_lorentzian",
    "decay_timescale",
    "exponential_envelope",
    "fit_exponential_decay",
    "forward_running_max",
    "fit_report",
]


@dataclass(frozen=True)
class LinearFit:
    intercept: float
    slope: float
    rms_residual: float

    def __call__(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)


@dataclass(frozen=True)
class LorentzianFit:
    amplitude: float
    half_width: float
    center: float
    rms_residual: float
    converged: bool
    iterations: int = 0

    def __call__(self, x):
        return lorentzian(x, self.amplitude, self.half_width, self.center)


@dataclass(frozen=True)
class DecayModel:
    tau_d: float
    rate: float
    prefactor: float


def fit_linear(x, y) -> LinearFit:
    """Ordinary least-squares line through ``(x, y)``."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise DegenerateInput(f"{x.size} abscissae but {y.size} values")
    if np.unique(x).size < 2:
        raise DegenerateInput("linear fit needs at least two distinct abscissae")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    slope = float(np.dot(dx, y - ym) / np.dot(dx, dx))
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    return LinearFit(intercept, slope, float(np.sqrt(np.mean(resid**2))))


def fit_spectrum_linear(dec: SpectralDecomposition) -> LinearFit:
    """Regress ``omega_j`` on ``j = 1 ... N``."""
    return fit_linear(np.arange(1, dec.size + 1), dec.eigenvalues)


def lorentzian(x, amplitude, half_width, center):
    x = np.asarray(x, dtype=float)
    return amplitude * half_width / ((x - center) ** 2 + half_width**2)


def lorentzian_jacobian(x, amplitude, half_width, center) -> np.ndarray:
    """Columns d/dA, d/dgamma, d/dx0 of :func:`lorentzian`."""
    x = np.asarray(x, dtype=float)
    u = x - center
    den = u**2 + half_width**2
    return np.column_stack([
        half_width / den,
        amplitude * (u**2 - half_width**2) / den**2,
        2 * amplitude * half_width * u / den**2,
    ])


def _initial_guess(x, y):
    i = int(np.argmax(y))
    peak = y[i]
    half = 0.5 * peak
    widths = []
    # first half-maximum crossing on each side, linearly interpolated
    left = np.flatnonzero(y[:i] < half)
    if left.size:
        k = left[-1]
        widths.append(x[i] - (x[k] + (half - y[k]) * (x[k + 1] - x[k]) / (y[k + 1] - y[k])))
    right = np.flatnonzero(y[i + 1:] < half)
    if right.size:
        k = i + 1 + right[0]
        widths.append((x[k - 1] + (half - y[k - 1]) * (x[k] - x[k - 1]) / (y[k] - y[k - 1]))
                      - x[i])
    gamma = float(np.mean(widths)) if widths else 0.25 * float(np.ptp(x))
    if not gamma > 0:
        gamma = float(np.min(np.diff(np.sort(x))))
    return np.array([peak * gamma, gamma, float(x[i])])


def fit_lorentzian(x, y, init: Optional[Sequence[float]] = None, *,
                   max_iter: int = 200, step_tol: float = 1e-10) -> LorentzianFit:
    """Unweighted least-squares Lorentzian ``A gamma / ((x - x0)^2 + gamma^2)``.

    Damped Gauss-Newton (Levenberg-Marquardt) with the analytic Jacobian.
    Converged once an accepted step changes the parameters by less than
    ``step_tol`` relative. On hitting ``max_iter`` the best iterate is
    returned with ``converged=False`` and a :class:`NonConvergence` warning.

    ``init`` is ``(A, gamma, x0)``; by default ``x0`` is the location of the
    largest value, ``gamma`` the interpolated half width at half maximum and
    ``A = peak * gamma``.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise DegenerateInput(f"{x.size} abscissae but {y.size} values")
    if x.size < 4:
        raise DegenerateInput("Lorentzian fit needs at least 4 points")
    if np.any(y < 0):
        raise DegenerateInput("weights must be nonnegative")
    if np.ptp(y) == 0:
        raise DegenerateInput("all values are equal")
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]

    p = np.array(init, dtype=float) if init is not None else _initial_guess(x, y)
    r = lorentzian(x, *p) - y
    cost = float(r @ r)
    damping = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = lorentzian_jacobian(x, *p)
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.diag(JtJ).copy()
        diag[diag == 0] = 1.0
        accepted = False
        while damping < 1e16:
            try:
                step = np.linalg.solve(JtJ + damping * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                damping *= 10
                continue
            trial = p + step
            r_new = lorentzian(x, *trial) - y
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                p, r, cost = trial, r_new, cost_new
                damping = max(damping / 10, 1e-12)
                break
            damping *= 10
        if not accepted:
            # no descent direction left at working precision
            converged = True
            break
        if np.linalg.norm(step) <= step_tol * np.linalg.norm(p):
            converged = True
            break
    if not converged:
        warnings.warn(f"Lorentzian fit stopped after {max_iter} iterations",
                      NonConvergence, stacklevel=2)
    A, gamma, x0 = p
    if gamma < 0:
        # the model is invariant under (A, gamma) -> (-A, -gamma)
        A, gamma = -A, -gamma
    rms = float(np.sqrt(cost / x.size))
    return LorentzianFit(float(A), float(gamma), float(x0), rms,
                         bool(converged and gamma > 0), it)


def fit_weights_lorentzian(dec: SpectralDecomposition, **kw) -> LorentzianFit:
    """Lorentzian fit of the weights against the 1-based eigenvalue index."""
    return fit_lorentzian(np.arange(1, dec.size + 1), dec.weights, **kw)


def decay_timescale(fit_l: LorentzianFit, fit_lin: LinearFit) -> DecayModel:
    """``rate = 2 gamma beta``, ``tau_d = 1 / rate``, ``prefactor = pi^2 A^2``."""
    gamma, beta = fit_l.half_width, fit_lin.slope
    if not gamma > 0:
        raise NonPositiveRate(f"half width must be positive, got {gamma}")
    if not beta > 0:
        raise NonPositiveRate(f"spectral slope must be positive, got {beta}")
    rate = 2 * gamma * beta
    return DecayModel(1.0 / rate, rate, float(np.pi**2 * fit_l.amplitude**2))


def exponential_envelope(model: DecayModel, times) -> np.ndarray:
    return model.prefactor * np.exp(-model.rate * np.abs(np.asarray(times, dtype=float)))


def forward_running_max(times: np.ndarray, values: np.ndarray, width: float) -> np.ndarray:
    """``max(values[s])`` over samples ``s`` with ``t <= times[s] <= t + width``."""
    out = np.empty_like(values)
    # indices with decreasing values from left to right; scanned right to left
    dq: deque[int] = deque()
    for i in range(values.size - 1, -1, -1):
        while dq and values[dq[-1]] <= values[i]:
            dq.pop()
        dq.append(i)
        while times[dq[0]] > times[i] + width:
            dq.popleft()
        out[i] = values[dq[0]]
    return out


def _local_maxima(e: np.ndarray) -> np.ndarray:
    if e.size < 3:
        return np.zeros(0, dtype=int)
    return 1 + np.flatnonzero((e[1:-1] > e[:-2]) & (e[1:-1] >= e[2:]))


def _auto_width(t: np.ndarray, e: np.ndarray) -> float:
    peaks = _local_maxima(e)
    if peaks.size < 2:
        return 0.0
    return float(np.max(np.diff(t[peaks])))


def fit_exponential_decay(trace: EnergyTrace, window=None,
                          width: Optional[float] = None) -> tuple[float, float]:
    """Fit ``prefactor * exp(-rate * t)`` to the envelope of ``trace``.

    The envelope is the forward running maximum over ``width``; ``log`` of it
    is then regressed on ``t``. By default ``width`` is the widest gap
    between successive local maxima in the window, so a monotone trace is
    fitted as is. Pass ``width=0`` to disable envelope extraction.

    Returns
    -------
    rate, prefactor : float
    """
    mask = np.ones(len(trace), dtype=bool) if window is None else trace.select(window)
    t = trace.times[mask]
    e = trace.energy[mask]
    if t.size == 0:
        raise WindowEmpty(f"no samples in window {window}")
    n_max = _local_maxima(e).size
    if t.size < 20 and n_max < 5:
        raise InsufficientData(f"window holds {t.size} samples and {n_max} local maxima")
    if width is None:
        width = _auto_width(t, e)
    env = forward_running_max(t, e, width) if width > 0 else e
    keep = env > 0
    if np.count_nonzero(keep) < 2:
        raise NonPositiveSamples("fewer than two positive envelope samples")
    line = fit_linear(t[keep], np.log(env[keep]))
    return -line.slope, float(np.exp(line.intercept))


def fit_report(linear: Optional[LinearFit] = None,
               lorentz: Optional[LorentzianFit] = None,
               decay: Optional[DecayModel] = None,
               extra: Optional[dict] = None) -> list[tuple[str, object]]:
    """Key-value pairs in a fixed order for serialization."""
    items: list[tuple[str, object]] = []
    if linear is not None:
        items += [("linear.intercept", linear.intercept),
                  ("linear.slope", linear.slope),
                  ("linear.rms_residual", linear.rms_residual)]
    if lorentz is not None:
        items += [("lorentzian.amplitude", lorentz.amplitude),
                  ("lorentzian.half_width", lorentz.half_width),
                  ("lorentzian.center", lorentz.center),
                  ("lorentzian.rms_residual", lorentz.rms_residual),
                  ("lorentzian.converged", lorentz.converged)]
    if decay is not None:
        items += [("decay.rate", decay.rate),
                  ("decay.tau_d", decay.tau_d),
                  ("decay.prefactor", decay.prefactor)]
    if extra:
        items += list(extra.items())
    return items
