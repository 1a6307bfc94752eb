"""Exact coherent-state dynamics and the energy of the system oscillator.

With every oscillator in a coherent state the state stays coherent, and
all dynamics is carried by the amplitudes::

    alpha_k(t) = sum_{j,l} alpha_j(0) M_jl M_kl exp(-i omega_l t)

For ``alpha(0) = (1, 0, ..., 0)`` the system energy is ``E1 = |sigma(t)|^2``
with the survival amplitude ``sigma(t) = sum_k M_1k^2 exp(-i omega_k t)``.
The same expression holds when the system starts in the one-excitation
Fock state, so energy traces serve both initial conditions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .eigensolver import SpectralDecomposition
from .errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    EmptyGrid,
    IndexOutOfRange,
    WindowEmpty,
)

__all__ = [
    "AmplitudeState",
    "EnergyTrace",
    "RevivalPeak",
    "PairApproximation",
    "TripletApproximation",
    "uniform_grid",
    "default_initial_state",
    "survival_and_energy",
    "normal_mode_amplitudes",
    "evolve_amplitudes",
    "revival_time",
    "few_mode_energy",
    "pair_approximation",
    "triplet_approximation",
    "detect_revival",
    "fluctuation_rms",
    "trace_table",
]

# caps the (times x modes) phase block evaluated at once
_BLOCK_ELEMENTS = 1 << 21


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AmplitudeState:
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "amplitudes",
                           _frozen(np.ravel(self.amplitudes), complex))
        object.__setattr__(self, "time", float(self.time))

    def excitation(self) -> float:
        """Total excitation ``sum_k |alpha_k|^2``."""
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True, eq=False)
class EnergyTrace:
    """Sampled survival amplitude and system energy (units hbar * v1)."""

    times: np.ndarray
    sigma: np.ndarray
    energy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen(self.times, float))
        object.__setattr__(self, "sigma", _frozen(self.sigma, complex))
        object.__setattr__(self, "energy", _frozen(self.energy, float))

    def __len__(self):
        return self.times.size

    def select(self, window) -> np.ndarray:
        """Boolean mask of samples with ``window[0] <= t <= window[1]``."""
        lo, hi = window
        return (self.times >= lo) & (self.times <= hi)


@dataclass(frozen=True)
class RevivalPeak:
    time: float
    height: float


def uniform_grid(t_end: float, step: float, t_start: float = 0.0) -> np.ndarray:
    """Uniform grid from ``t_start`` to ``t_end`` with spacing close to ``step``.

    The end point is always included; the spacing is adjusted down so the
    interval divides evenly.
    """
    if not step > 0:
        raise EmptyGrid(f"step must be positive, got {step}")
    if t_end < t_start:
        raise EmptyGrid(f"t_end={t_end} precedes t_start={t_start}")
    n = int(np.ceil((t_end - t_start) / step - 1e-9)) + 1
    return np.linspace(t_start, t_end, max(n, 1))


def default_initial_state(n: int) -> AmplitudeState:
    """System in the coherent state alpha = 1, bath in vacuum."""
    a = np.zeros(n, dtype=complex)
    a[0] = 1.0
    return AmplitudeState(a, 0.0)


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0:
        raise EmptyGrid("time grid is empty")
    if t.size > 1 and np.any(np.diff(t) < 0):
        raise ValueError("times must be ascending")
    return t


def _sigma(omega: np.ndarray, weights: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.empty(t.size, dtype=complex)
    block = max(1, _BLOCK_ELEMENTS // max(omega.size, 1))
    for s in range(0, t.size, block):
        ts = t[s:s + block]
        out[s:s + block] = np.exp(-1j * np.outer(ts, omega)) @ weights
    return out


def survival_and_energy(dec: SpectralDecomposition, times) -> EnergyTrace:
    """``sigma(t) = sum_k w_k exp(-i omega_k t)`` and ``E1 = |sigma|^2``.

    Direct summation, so arbitrary (non-uniform) spectra are handled exactly.
    """
    t = _check_times(times)
    sigma = _sigma(dec.eigenvalues, dec.weights, t)
    return EnergyTrace(t, sigma, np.abs(sigma) ** 2)


def few_mode_energy(dec: SpectralDecomposition, mode_indices: Sequence[int],
                    times) -> EnergyTrace:
    """Energy trace keeping only the listed normal modes (0-based indices).

    Passing every index in order reproduces :func:`survival_and_energy`
    exactly.
    """
    idx = np.asarray(mode_indices, dtype=int).ravel()
    if idx.size == 0:
        raise IndexOutOfRange("mode_indices is empty")
    if np.any(idx < 0) or np.any(idx >= dec.size):
        raise IndexOutOfRange(
            f"mode indices must lie in [0, {dec.size - 1}], got {idx.tolist()}")
    if np.unique(idx).size != idx.size:
        raise IndexOutOfRange(f"duplicate mode indices {idx.tolist()}")
    t = _check_times(times)
    sigma = _sigma(dec.eigenvalues[idx], dec.weights[idx], t)
    return EnergyTrace(t, sigma, np.abs(sigma) ** 2)


def normal_mode_amplitudes(M, alpha) -> np.ndarray:
    """``Lambda_k = sum_j alpha_j M_jk``."""
    a = alpha.amplitudes if isinstance(alpha, AmplitudeState) else np.asarray(alpha, complex)
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != a.size:
        raise DimensionMismatch(f"matrix {M.shape} vs {a.size} amplitudes")
    return a @ M


def evolve_amplitudes(dec: SpectralDecomposition, alpha0, t: float) -> AmplitudeState:
    """Propagate coherent amplitudes to time ``t``.

    ``alpha0`` may be an :class:`AmplitudeState` (evolved from its own time)
    or a plain sequence taken at time 0. Needs ``dec.full_matrix``. Zero
    elapsed time returns the input amplitudes unchanged.
    """
    if dec.full_matrix is None:
        raise DimensionMismatch("decomposition carries no full matrix; "
                                "use solve_dense or solve_arrowhead(vectors=True)")
    if isinstance(alpha0, AmplitudeState):
        t0, a0 = alpha0.time, alpha0.amplitudes
    else:
        t0, a0 = 0.0, np.asarray(alpha0, dtype=complex).ravel()
    M = dec.full_matrix
    if a0.size != M.shape[0]:
        raise DimensionMismatch(f"matrix {M.shape} vs {a0.size} amplitudes")
    if float(t) == t0:
        return AmplitudeState(a0, t0)
    lam = normal_mode_amplitudes(M, a0)
    phase = np.exp(-1j * dec.eigenvalues * (float(t) - t0))
    return AmplitudeState(M @ (lam * phase), float(t))


def revival_time(dec: SpectralDecomposition) -> float:
    """``2 pi (N - 1) / (omega_N - omega_1)``: when neighbouring phases realign."""
    if dec.size < 2:
        raise DegenerateSpectrum("revival time needs at least two modes")
    width = dec.bandwidth
    if width <= 0:
        raise DegenerateSpectrum("omega_N equals omega_1")
    return 2 * np.pi * (dec.size - 1) / width


@dataclass(frozen=True)
class PairApproximation:
    """``E1 ~ |w_i e^{-i w_i t} + w_j e^{-i w_j t}|^2 = mean + amplitude cos(frequency t)``."""

    modes: tuple
    mean: float
    amplitude: float
    frequency: float

    def __call__(self, t):
        return self.mean + self.amplitude * np.cos(self.frequency * np.asarray(t))


@dataclass(frozen=True)
class TripletApproximation:
    """``E1 ~ (center + sides cos(frequency t))^2`` around a dominant mode.

    Assumes the two side weights and the two side splittings are nearly
    equal; ``sides`` is the summed side weight and ``frequency`` the mean
    splitting.
    """

    modes: tuple
    center: float
    sides: float
    frequency: float

    def __call__(self, t):
        return (self.center + self.sides * np.cos(self.frequency * np.asarray(t))) ** 2


def pair_approximation(dec: SpectralDecomposition, i: int, j: int) -> PairApproximation:
    for k in (i, j):
        if not 0 <= k < dec.size:
            raise IndexOutOfRange(f"mode index {k} outside [0, {dec.size - 1}]")
    if i == j:
        raise IndexOutOfRange("pair approximation needs two distinct modes")
    wi, wj = dec.weights[i], dec.weights[j]
    return PairApproximation(
        (i, j), float(wi**2 + wj**2), float(2 * wi * wj),
        float(abs(dec.eigenvalues[j] - dec.eigenvalues[i])))


def triplet_approximation(dec: SpectralDecomposition,
                          center: int) -> TripletApproximation:
    if not 1 <= center <= dec.size - 2:
        raise IndexOutOfRange(
            f"center must have neighbours on both sides, got {center} of {dec.size}")
    w, e = dec.weights, dec.eigenvalues
    split = 0.5 * (e[center + 1] - e[center - 1])
    return TripletApproximation(
        (center - 1, center, center + 1), float(w[center]),
        float(w[center - 1] + w[center + 1]), float(split))


def detect_revival(trace: EnergyTrace, window) -> RevivalPeak:
    """Largest energy sample inside ``window`` with parabolic refinement.

    Refinement uses the sample and its two neighbours and is applied only when
    the sample is a genuine local maximum with both neighbours in the window;
    otherwise the raw sample is returned.
    """
    mask = trace.select(window)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise WindowEmpty(f"no samples in window {tuple(window)}")
    i = int(idx[np.argmax(trace.energy[idx])])
    t, e = trace.times, trace.energy
    if idx[0] < i < idx[-1] and e[i] >= e[i - 1] and e[i] >= e[i + 1]:
        x0, x1, x2 = t[i - 1], t[i], t[i + 1]
        y0, y1, y2 = e[i - 1], e[i], e[i + 1]
        # vertex of the interpolating parabola, in coordinates centred on x1
        h0, h2 = x0 - x1, x2 - x1
        d0, d2 = (y0 - y1) / h0, (y2 - y1) / h2
        curv = (d2 - d0) / (h2 - h0)
        if curv < 0:
            slope = d0 - curv * h0
            dx = -slope / (2 * curv)
            if h0 <= dx <= h2:
                return RevivalPeak(float(x1 + dx), float(y1 + slope * dx + curv * dx * dx))
    return RevivalPeak(float(t[i]), float(e[i]))


def fluctuation_rms(trace: EnergyTrace, window=None) -> float:
    """RMS deviation of E1 about its mean over ``window`` (whole trace if None)."""
    e = trace.energy if window is None else trace.energy[trace.select(window)]
    if e.size == 0:
        raise WindowEmpty(f"no samples in window {window}")
    return float(np.sqrt(np.mean((e - e.mean()) ** 2)))


def trace_table(trace: EnergyTrace) -> tuple[list[str], list[tuple]]:
    """Rows ``(t, re_sigma, im_sigma, E1)``."""
    rows = [(float(t), float(s.real), float(s.imag), float(e))
            for t, s, e in zip(trace.times, trace.sigma, trace.energy)]
    return ["t", "re_sigma", "im_sigma", "E1"], rows
