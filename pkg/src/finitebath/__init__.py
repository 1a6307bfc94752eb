"""Exact dynamics of a harmonic oscillator coupled to a finite oscillator bath."""
__version__ = "0.1.0"

from .bath import (  # noqa: E402
    ArrowheadHamiltonian,
    EquallySpaced,
    EquallySpacedNoResonant,
    Explicit,
    RandomUniform,
    build_equally_spaced,
    build_random,
    build_without_resonant,
)
from .eigensolver import SpectralDecomposition, jacobi_eigh, solve_arrowhead, solve_dense  # noqa: E402
from .dynamics import survival_and_energy, evolve_amplitudes, revival_time  # noqa: E402

__all__ = [
    "__version__",
    "ArrowheadHamiltonian",
    "EquallySpaced",
    "EquallySpacedNoResonant",
    "Explicit",
    "RandomUniform",
    "build_equally_spaced",
    "build_random",
    "build_without_resonant",
    "SpectralDecomposition",
    "jacobi_eigh",
    "solve_arrowhead",
    "solve_dense",
    "survival_and_energy",
    "evolve_amplitudes",
    "revival_time",
]
