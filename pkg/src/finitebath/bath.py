"""Finite oscillator baths as arrowhead Hamiltonians.

One system oscillator (frequency ``v1``) couples to ``N - 1`` bath
oscillators through excitation-exchanging terms, so the single-particle
Hamiltonian is the symmetric arrowhead matrix::

    [[v1, g2, g3, ..., gN],
     [g2, v2,  0, ...,  0],
     [g3,  0, v3, ...,  0],
     ...
     [gN,  0,  0, ..., vN]]

All quantities are dimensionless, in units where hbar * v1 = 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    InvalidBandwidth,
    InvalidCount,
    InvalidCoupling,
    InvalidHamiltonian,
    InvalidInterval,
    InvalidSeed,
)

__all__ = [
    "ArrowheadHamiltonian",
    "EquallySpaced",
    "RandomUniform",
    "EquallySpacedNoResonant",
    "Explicit",
    "BathSpec",
    "build_equally_spaced",
    "build_random",
    "build_without_resonant",
    "build",
    "hamiltonian_table",
]

_SEED_MAX = 2**64


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ArrowheadHamiltonian:
    """System frequency, bath frequencies and system-bath couplings.

    Bath modes are stored sorted by frequency (ascending, stable), with the
    couplings permuted alongside. Arrays are read-only.
    """

    system_freq: float
    bath_freqs: np.ndarray
    couplings: np.ndarray
    allow_zero_freq: bool = field(default=False, repr=False)

    def __post_init__(self):
        d = np.asarray(self.bath_freqs, dtype=float).ravel()
        c = np.asarray(self.couplings, dtype=float).ravel()
        v1 = float(self.system_freq)
        if d.size < 1:
            raise InvalidHamiltonian("at least one bath oscillator is required")
        if d.size != c.size:
            raise InvalidHamiltonian(
                f"{d.size} bath frequencies but {c.size} couplings")
        if not (np.isfinite(v1) and v1 > 0):
            raise InvalidHamiltonian(f"system frequency must be positive, got {v1}")
        floor_ok = (d >= 0) if self.allow_zero_freq else (d > 0)
        if not np.all(np.isfinite(d)) or not np.all(floor_ok):
            raise InvalidHamiltonian("bath frequencies must be finite and positive")
        if not np.all(np.isfinite(c)):
            raise InvalidHamiltonian("couplings must be finite")
        order = np.argsort(d, kind="stable")
        object.__setattr__(self, "system_freq", v1)
        object.__setattr__(self, "bath_freqs", _frozen(d[order]))
        object.__setattr__(self, "couplings", _frozen(c[order]))

    @property
    def size(self) -> int:
        """Total number of oscillators N (system plus bath)."""
        return self.bath_freqs.size + 1

    @property
    def diagonal(self) -> np.ndarray:
        return np.concatenate(([self.system_freq], self.bath_freqs))

    def total_coupling(self) -> float:
        """sqrt(sum g_k^2)."""
        return float(np.sqrt(np.sum(self.couplings**2)))

    def matrix(self) -> np.ndarray:
        """Dense symmetric N x N realization."""
        h = np.diag(self.diagonal)
        h[0, 1:] = self.couplings
        h[1:, 0] = self.couplings
        return h

    def __eq__(self, other):
        if not isinstance(other, ArrowheadHamiltonian):
            return NotImplemented
        return (self.system_freq == other.system_freq
                and np.array_equal(self.bath_freqs, other.bath_freqs)
                and np.array_equal(self.couplings, other.couplings))

    __hash__ = None


def _check_equally_spaced(N, p, g, band_edge=False):
    if int(N) != N or N < 4 or N % 2:
        raise InvalidCount(f"N must be an even integer >= 4, got {N}")
    if band_edge and p == 2:
        pass
    elif not (0 < p < 2):
        raise InvalidBandwidth(f"bandwidth p must lie in (0, 2), got {p}")
    if not (np.isfinite(g) and g >= 0):
        raise InvalidCoupling(f"coupling scale g must be >= 0, got {g}")


def build_equally_spaced(N: int, p: float, g: float, *,
                         band_edge: bool = False) -> ArrowheadHamiltonian:
    """Resonant system plus ``N - 1`` equally spaced bath modes.

    Bath frequencies are ``1 + k * mu`` for ``k = -(N-2)/2 ... (N-2)/2`` with
    ``mu = p / (N - 2)``, covering ``[1 - p/2, 1 + p/2]``; every coupling is
    ``g / sqrt(N - 1)``.

    ``band_edge=True`` additionally admits ``p = 2``, whose lowest bath mode
    sits at frequency exactly 0.

    >>> h = build_equally_spaced(4, 1.0, 0.2)
    >>> h.bath_freqs.tolist()
    [0.5, 1.0, 1.5]
    """
    _check_equally_spaced(N, p, g, band_edge)
    N = int(N)
    half = (N - 2) // 2
    mu = p / (N - 2)
    freqs = 1.0 + np.arange(-half, half + 1) * mu
    couplings = np.full(N - 1, g / np.sqrt(N - 1))
    return ArrowheadHamiltonian(1.0, freqs, couplings, allow_zero_freq=band_edge)


def _check_random(N, lo, hi, g, seed):
    if int(N) != N or N < 2:
        raise InvalidCount(f"N must be an integer >= 2, got {N}")
    if not lo < hi:
        raise InvalidInterval(f"need lo < hi, got [{lo}, {hi}]")
    if lo <= 0:
        raise InvalidInterval(f"frequencies must be positive, got lo={lo}")
    if not (np.isfinite(g) and g >= 0):
        raise InvalidCoupling(f"coupling scale g must be >= 0, got {g}")
    if int(seed) != seed or not 0 <= seed < _SEED_MAX:
        raise InvalidSeed(f"seed must be a 64-bit unsigned integer, got {seed}")


def build_random(N: int, lo: float, hi: float, g: float,
                 seed: int) -> ArrowheadHamiltonian:
    """Resonant system plus ``N - 1`` bath modes drawn uniformly on [lo, hi].

    Draws come from a Philox counter-based generator keyed by ``seed``, so the
    same arguments always give the same bath.
    """
    _check_random(N, lo, hi, g, seed)
    N = int(N)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    freqs = np.sort(rng.uniform(lo, hi, size=N - 1))
    return ArrowheadHamiltonian(1.0, freqs, np.full(N - 1, g / np.sqrt(N - 1)))


def build_without_resonant(N_even: int, p: float, g: float) -> ArrowheadHamiltonian:
    """Equally spaced bath with the mode at frequency exactly 1 removed.

    Spacing and couplings are inherited from the ``N_even`` parent, leaving
    ``N_even - 1`` oscillators in total.
    """
    parent = build_equally_spaced(N_even, p, g)
    keep = parent.bath_freqs != 1.0
    return ArrowheadHamiltonian(1.0, parent.bath_freqs[keep], parent.couplings[keep])


# -- declarative specs --------------------------------------------------------

@dataclass(frozen=True)
class EquallySpaced:
    N: int
    p: float
    g: float
    band_edge: bool = False

    def __post_init__(self):
        _check_equally_spaced(self.N, self.p, self.g, self.band_edge)

    def build(self) -> ArrowheadHamiltonian:
        return build_equally_spaced(self.N, self.p, self.g, band_edge=self.band_edge)


@dataclass(frozen=True)
class RandomUniform:
    N: int
    lo: float
    hi: float
    g: float
    seed: int = 0

    def __post_init__(self):
        _check_random(self.N, self.lo, self.hi, self.g, self.seed)

    def build(self) -> ArrowheadHamiltonian:
        return build_random(self.N, self.lo, self.hi, self.g, self.seed)


@dataclass(frozen=True)
class EquallySpacedNoResonant:
    N_even: int
    p: float
    g: float

    def __post_init__(self):
        _check_equally_spaced(self.N_even, self.p, self.g)

    def build(self) -> ArrowheadHamiltonian:
        return build_without_resonant(self.N_even, self.p, self.g)


@dataclass(frozen=True)
class Explicit:
    system_freq: float
    bath_freqs: tuple = field(default=())
    couplings: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "bath_freqs", tuple(float(x) for x in self.bath_freqs))
        object.__setattr__(self, "couplings", tuple(float(x) for x in self.couplings))
        self.build()

    def build(self) -> ArrowheadHamiltonian:
        return ArrowheadHamiltonian(self.system_freq, self.bath_freqs, self.couplings)


BathSpec = Union[EquallySpaced, RandomUniform, EquallySpacedNoResonant, Explicit]


def build(spec: BathSpec) -> ArrowheadHamiltonian:
    return spec.build()


def hamiltonian_table(h: ArrowheadHamiltonian) -> tuple[list[str], list[tuple]]:
    """Rows ``(index, frequency, coupling)``; index 1 is the system (coupling 0)."""
    rows = [(1, h.system_freq, 0.0)]
    rows += [(k + 2, float(v), float(c))
             for k, (v, c) in enumerate(zip(h.bath_freqs, h.couplings))]
    return ["index", "frequency", "coupling"], rows

