"""Named scenarios: preset baths, time windows, sweeps and ensembles.

Each preset fixes a bath and two time windows (``short`` and ``long``).
Window kinds:

* ``("decay", f)``   -- ``[0, f * tau_d]`` sampled every ``tau_d / 200``
* ``("revival", f)`` -- ``[0, f * tau_r]`` sampled every ``tau_r / 2000``
* ``("fixed", T)``   -- ``[0, T]`` sampled finely enough to resolve the
  fastest beat ``2 pi / (omega_N - omega_1)`` (20 samples per beat, and at
  least 2000 samples overall)
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import bath as bathmod
from .bath import ArrowheadHamiltonian, BathSpec
from .dynamics import (
    EnergyTrace,
    RevivalPeak,
    detect_revival,
    fluctuation_rms,
    revival_time,
    survival_and_energy,
    uniform_grid,
)
from .eigensolver import SpectralDecomposition, solve_arrowhead
from .errors import DegenerateInput, DegenerateSpectrum, FiniteBathError, NonConvergence
from .fitting import (
    DecayModel,
    LinearFit,
    LorentzianFit,
    decay_timescale,
    fit_exponential_decay,
    fit_report,
    fit_spectrum_linear,
    fit_weights_lorentzian,
)

__all__ = [
    "Preset",
    "PRESETS",
    "SWEEP_PRESETS",
    "ScenarioResult",
    "SweepResult",
    "EnsembleResult",
    "default_g_grid",
    "resolve_window",
    "run_scenario",
    "run_preset",
    "fit_bundle",
    "scenario_report",
    "sweep_weights_vs_coupling",
    "ensemble_fluctuations",
]

REVIVAL_WINDOW = (0.8, 1.2)


@dataclass(frozen=True)
class Preset:
    spec: BathSpec
    short: tuple
    long: tuple
    description: str = ""


PRESETS: dict[str, Preset] = {
    "M02100": Preset(bathmod.EquallySpaced(102, 1.0, 0.2), ("decay", 2.0), ("revival", 1.5),
                     "equally spaced, N=102, p=1, g=0.2: decay and first revival"),
    "M08100": Preset(bathmod.EquallySpaced(102, 1.0, 0.8), ("fixed", 50.0), ("revival", 1.5),
                     "equally spaced, N=102, p=1, g=0.8: two-mode oscillation"),
    "DP208100": Preset(bathmod.EquallySpaced(102, 2.0, 0.8, band_edge=True), ("fixed", 50.0), ("revival", 1.5),
                       "equally spaced, N=102, p=2 (lowest mode at 0), g=0.8:"
                       " wider band, weaker oscillation"),
    "M001100": Preset(bathmod.EquallySpaced(102, 1.0, 0.01), ("fixed", 50.0), ("fixed", 4000.0),
                      "equally spaced, N=102, p=1, g=0.01: slow resonant exchange"),
    "M00100NR": Preset(bathmod.EquallySpacedNoResonant(102, 1.0, 0.01), ("fixed", 50.0),
                       ("fixed", 1500.0),
                       "resonant bath mode removed, 101 oscillators, p=1, g=0.01: freeze"),
    "DR02a": Preset(bathmod.RandomUniform(102, 0.5, 1.5, 0.2, 0), ("fixed", 50.0),
                    ("fixed", 100.0), "random bath on [0.5, 1.5], N=102, g=0.2"),
    "DR02b": Preset(bathmod.RandomUniform(1002, 0.5, 1.5, 0.2, 0), ("fixed", 50.0),
                    ("fixed", 100.0), "random bath on [0.5, 1.5], N=1002, g=0.2"),
}

# weight-versus-coupling sweeps (N, p); the grid is g = u/400, u = 1..400
SWEEP_PRESETS: dict[str, tuple[int, float]] = {
    "Mvar100": (102, 1.0),
    "Mvar1000": (1002, 1.0),
}


def default_g_grid() -> np.ndarray:
    return np.arange(1, 401) / 400.0


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    label: str
    spec: BathSpec
    hamiltonian: ArrowheadHamiltonian
    decomposition: SpectralDecomposition
    trace_short: EnergyTrace
    trace_long: EnergyTrace
    linear: Optional[LinearFit]
    lorentzian: Optional[LorentzianFit]
    decay: Optional[DecayModel]
    envelope: Optional[tuple]
    tau_r: Optional[float]
    revival: Optional[RevivalPeak]
    windows: dict = field(default_factory=dict)

    def scalars(self) -> list[tuple[str, object]]:
        """Derived quantities in a fixed order (``None`` when unavailable)."""
        env = self.envelope or (None, None)
        rev = self.revival
        return [
            ("scenario.N", self.hamiltonian.size),
            ("scenario.tau_r", self.tau_r),
            ("revival.peak_time", rev.time if rev else None),
            ("revival.peak_height", rev.height if rev else None),
            ("envelope.rate", env[0]),
            ("envelope.prefactor", env[1]),
            ("window.short_end", self.windows.get("short")),
            ("window.long_end", self.windows.get("long")),
        ]


def _beat_period(dec: SpectralDecomposition) -> float:
    width = dec.bandwidth
    return 2 * np.pi / width if width > 0 else np.inf


def resolve_window(view: tuple, dec: SpectralDecomposition,
                   decay: Optional[DecayModel], tau_r: Optional[float]) -> np.ndarray:
    """Time grid for a window specification (see module docstring)."""
    kind, value = view
    if kind == "decay":
        if decay is None:
            raise DegenerateInput("decay window requested but no decay model is available")
        return uniform_grid(value * decay.tau_d, decay.tau_d / 200)
    if kind == "revival":
        if tau_r is None:
            raise DegenerateSpectrum("revival window requested but tau_r is undefined")
        return uniform_grid(value * tau_r, tau_r / 2000)
    if kind == "fixed":
        step = min(value / 2000, _beat_period(dec) / 20)
        return uniform_grid(value, step)
    raise ValueError(f"unknown window kind {kind!r}")


def fit_bundle(dec: SpectralDecomposition):
    """Linear, Lorentzian and decay fits; each is None when it cannot be formed."""
    linear = lorentz = decay = None
    try:
        linear = fit_spectrum_linear(dec)
    except DegenerateInput:
        pass
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergence)
            lorentz = fit_weights_lorentzian(dec)
    except DegenerateInput:
        pass
    if linear is not None and lorentz is not None and lorentz.converged:
        try:
            decay = decay_timescale(lorentz, linear)
        except FiniteBathError:
            pass
    return linear, lorentz, decay


def run_scenario(spec: BathSpec, short: tuple = ("decay", 2.0),
                 long: tuple = ("revival", 1.5), *, label: str = "custom",
                 tol: float = 1e-13) -> ScenarioResult:
    """Solve, fit and propagate one bath.

    A ``decay`` short window falls back to ``("fixed", 50)`` when the fits
    give no decay model (e.g. for a bath with fewer than four modes).
    """
    h = spec.build()
    dec = solve_arrowhead(h, tol)
    linear, lorentz, decay = fit_bundle(dec)
    try:
        tau_r = revival_time(dec)
    except DegenerateSpectrum:
        tau_r = None
    if short[0] == "decay" and decay is None:
        short = ("fixed", 50.0)
    t_short = resolve_window(short, dec, decay, tau_r)
    t_long = resolve_window(long, dec, decay, tau_r)
    tr_short = survival_and_energy(dec, t_short)
    tr_long = survival_and_energy(dec, t_long)

    envelope = None
    if decay is not None:
        try:
            envelope = fit_exponential_decay(tr_short, (0.0, 2 * decay.tau_d),
                                             width=_beat_period(dec))
        except FiniteBathError:
            envelope = None
    revival = None
    if tau_r is not None:
        lo, hi = REVIVAL_WINDOW
        if t_long[-1] >= hi * tau_r:
            revival = detect_revival(tr_long, (lo * tau_r, hi * tau_r))
    return ScenarioResult(label, spec, h, dec, tr_short, tr_long, linear, lorentz,
                          decay, envelope, tau_r, revival,
                          {"short": float(t_short[-1]), "long": float(t_long[-1])})


def run_preset(name: str, tol: float = 1e-13) -> ScenarioResult:
    try:
        p = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return run_scenario(p.spec, p.short, p.long, label=name, tol=tol)


def scenario_report(res: ScenarioResult) -> list[tuple[str, object]]:
    """Fit parameters then derived scalars, in a stable order."""
    return fit_report(res.linear, res.lorentzian, res.decay) + res.scalars()


@dataclass(frozen=True, eq=False)
class SweepResult:
    N: int
    p: float
    g_grid: np.ndarray
    eigenvalues: np.ndarray   # (len(g_grid), N)
    weights: np.ndarray       # (len(g_grid), N)

    def rows(self):
        """``(g, k, weight)`` with 1-based k, g-major order."""
        for gi, g in enumerate(self.g_grid):
            for k in range(self.weights.shape[1]):
                yield float(g), k + 1, float(self.weights[gi, k])


def sweep_weights_vs_coupling(N: int, p: float, g_grid: Optional[Sequence[float]] = None,
                              tol: float = 1e-13) -> SweepResult:
    """Spectral weights of the equally spaced bath for each coupling scale."""
    g = default_g_grid() if g_grid is None else np.asarray(g_grid, dtype=float).ravel()
    if g.size == 0:
        raise DegenerateInput("g_grid is empty")
    if g.size > 1 and np.any(np.diff(g) <= 0):
        raise DegenerateInput("g_grid must be strictly ascending")
    eig = np.empty((g.size, N))
    w = np.empty((g.size, N))
    for i, gi in enumerate(g):
        dec = solve_arrowhead(bathmod.build_equally_spaced(N, p, gi), tol)
        eig[i], w[i] = dec.eigenvalues, dec.weights
    return SweepResult(int(N), float(p), g, eig, w)


@dataclass(frozen=True)
class EnsembleResult:
    window: tuple
    seeds: tuple
    per_seed: tuple           # (N, seed, mean E1, rms E1)
    summary: tuple            # (N, mean of per-seed means, mean of per-seed rms)

    def mean_rms(self, N: int) -> float:
        for n, _, rms in self.summary:
            if n == N:
                return rms
        raise KeyError(N)


def _member(N, lo, hi, g, seed, grid, window, tol):
    dec = solve_arrowhead(bathmod.build_random(N, lo, hi, g, seed), tol)
    tr = survival_and_energy(dec, grid)
    return N, seed, float(tr.energy.mean()), fluctuation_rms(tr, window)


def ensemble_fluctuations(N_values: Sequence[int], lo: float, hi: float, g: float,
                          seeds: Sequence[int], window=(50.0, 100.0), *,
                          step: float = 0.05, tol: float = 1e-13,
                          workers: int = 1) -> EnsembleResult:
    """RMS fluctuation of E1 about its window mean, per N, averaged over seeds.

    Members are independent and may run on ``workers`` threads; results are
    ordered by (N, seed) regardless.
    """
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) < 2:
        raise DegenerateInput("ensemble needs at least two seeds")
    t0, t1 = float(window[0]), float(window[1])
    grid = uniform_grid(t1, step, t0)
    jobs = [(int(N), s) for N in N_values for s in seeds]
    call = lambda job: _member(job[0], lo, hi, g, job[1], grid, (t0, t1), tol)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(call, jobs))
    else:
        per_seed = [call(j) for j in jobs]
    summary = []
    for N in dict.fromkeys(int(n) for n in N_values):
        rows = [r for r in per_seed if r[0] == N]
        summary.append((N, float(np.mean([r[2] for r in rows])),
                        float(np.mean([r[3] for r in rows]))))
    return EnsembleResult((t0, t1), seeds, tuple(per_seed), tuple(summary))
