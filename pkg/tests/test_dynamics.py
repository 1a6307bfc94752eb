import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finitebath.bath import ArrowheadHamiltonian, build_equally_spaced, build_random
from finitebath.dynamics import (
    AmplitudeState,
    EnergyTrace,
    default_initial_state,
    detect_revival,
    evolve_amplitudes,
    few_mode_energy,
    fluctuation_rms,
    normal_mode_amplitudes,
    pair_approximation,
    revival_time,
    survival_and_energy,
    trace_table,
    triplet_approximation,
    uniform_grid,
)
from finitebath.eigensolver import SpectralDecomposition, solve_arrowhead, solve_dense
from finitebath.errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    EmptyGrid,
    IndexOutOfRange,
    WindowEmpty,
)


@pytest.fixture(scope="module")
def m02():
    return solve_arrowhead(build_equally_spaced(102, 1.0, 0.2))


def pair(g):
    return solve_arrowhead(ArrowheadHamiltonian(1.0, [1.0], [g]))


def test_uniform_grid():
    t = uniform_grid(1.0, 0.3)
    assert t[0] == 0.0 and t[-1] == 1.0
    assert np.diff(t).max() <= 0.3
    assert uniform_grid(2.0, 0.5).size == 5
    assert uniform_grid(3.0, 1.0, 3.0).tolist() == [3.0]
    with pytest.raises(EmptyGrid):
        uniform_grid(1.0, 0.0)
    with pytest.raises(EmptyGrid):
        uniform_grid(0.0, 0.1, 1.0)


def test_energy_at_zero(m02):
    tr = survival_and_energy(m02, [0.0])
    assert abs(tr.energy[0] - 1) < 1e-12


def test_empty_grid(m02):
    with pytest.raises(EmptyGrid):
        survival_and_energy(m02, [])


def test_resonant_pair_cos2():
    g = 0.3
    t = np.linspace(0, 40, 801)
    tr = survival_and_energy(pair(g), t)
    np.testing.assert_allclose(tr.energy, np.cos(g * t) ** 2, atol=1e-14)


def test_energy_is_modulus_squared(m02):
    tr = survival_and_energy(m02, np.linspace(0, 700, 3001))
    np.testing.assert_allclose(tr.energy, np.abs(tr.sigma) ** 2, atol=1e-14)
    assert tr.energy.min() >= 0 and tr.energy.max() <= 1 + 1e-10


def test_time_reversal(m02):
    t = np.linspace(0, 30, 61)
    a = survival_and_energy(m02, t).energy
    b = survival_and_energy(m02, -t[::-1]).energy[::-1]
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_matches_dense_oracle_propagation():
    h = build_equally_spaced(102, 1.0, 0.2)
    dense = solve_dense(h)
    st_ = evolve_amplitudes(dense, default_initial_state(h.size), 10.0)
    tr = survival_and_energy(solve_arrowhead(h), [10.0])
    assert abs(st_.amplitudes[0] - tr.sigma[0]) < 1e-10
    assert abs(abs(st_.amplitudes[0]) ** 2 - tr.energy[0]) < 1e-10


def test_normal_mode_amplitudes_identity():
    a = np.array([1 + 2j, 0.5, -1j])
    np.testing.assert_array_equal(normal_mode_amplitudes(np.eye(3), a), a)


def test_normal_mode_amplitudes_first_row():
    dec = solve_dense(build_random(12, 0.5, 1.5, 0.4, 1))
    lam = normal_mode_amplitudes(dec.full_matrix, default_initial_state(12))
    np.testing.assert_allclose(lam, dec.full_matrix[0], atol=0)


def test_normal_mode_amplitudes_norm():
    rng = np.random.default_rng(3)
    dec = solve_dense(build_random(30, 0.5, 1.5, 0.4, 2))
    a = rng.normal(size=30) + 1j * rng.normal(size=30)
    lam = normal_mode_amplitudes(dec.full_matrix, a)
    assert np.sum(np.abs(lam) ** 2) == pytest.approx(np.sum(np.abs(a) ** 2), rel=1e-13)
    with pytest.raises(DimensionMismatch):
        normal_mode_amplitudes(dec.full_matrix, a[:5])


def test_evolve_zero_time_exact():
    dec = solve_dense(build_random(10, 0.5, 1.5, 0.4, 2))
    a0 = AmplitudeState(np.arange(10) * (1 + 0.5j))
    out = evolve_amplitudes(dec, a0, 0.0)
    np.testing.assert_array_equal(out.amplitudes, a0.amplitudes)


def test_evolve_first_amplitude_matches_trace():
    h = build_random(40, 0.5, 1.5, 0.3, 5)
    dense = solve_dense(h)
    dec = solve_arrowhead(h)
    for t in (0.5, 7.0, 33.3):
        s = evolve_amplitudes(dense, default_initial_state(h.size), t)
        assert abs(s.amplitudes[0]) ** 2 == pytest.approx(
            survival_and_energy(dec, [t]).energy[0], abs=1e-12)


def test_evolve_composes():
    dec = solve_arrowhead(build_random(20, 0.5, 1.5, 0.3, 6), vectors=True)
    a0 = default_initial_state(20)
    mid = evolve_amplitudes(dec, a0, 3.0)
    end = evolve_amplitudes(dec, mid, 8.0)
    np.testing.assert_allclose(end.amplitudes, evolve_amplitudes(dec, a0, 8.0).amplitudes,
                               atol=1e-13)
    assert end.time == 8.0


def test_evolve_requires_matrix(m02):
    with pytest.raises(DimensionMismatch):
        evolve_amplitudes(m02, default_initial_state(102), 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 60))
def test_excitation_conserved(seed, N):
    rng = np.random.default_rng(seed)
    h = build_random(N, 0.3, 1.7, float(rng.uniform(0, 1)), seed)
    dec = solve_arrowhead(h, vectors=True)
    a0 = AmplitudeState(rng.normal(size=N) + 1j * rng.normal(size=N))
    for t in rng.uniform(0, 1000, 4):
        assert evolve_amplitudes(dec, a0, t).excitation() == pytest.approx(
            a0.excitation(), rel=1e-12)


def test_revival_time():
    g = 0.25
    assert revival_time(pair(g)) == pytest.approx(np.pi / g, rel=1e-14)
    single = SpectralDecomposition([1.0], [1.0])
    with pytest.raises(DegenerateSpectrum):
        revival_time(single)
    with pytest.raises(DegenerateSpectrum):
        revival_time(SpectralDecomposition([1.0, 1.0], [0.5, 0.5]))


def test_revival_time_doubles_with_n():
    omega = np.linspace(0.5, 1.5, 101)
    a = SpectralDecomposition(omega, np.full(101, 1 / 101))
    omega2 = np.linspace(0.5, 1.5, 201)
    b = SpectralDecomposition(omega2, np.full(201, 1 / 201))
    assert revival_time(b) == pytest.approx(2 * revival_time(a), rel=1e-12)


def test_arithmetic_spectrum_is_periodic():
    omega = 0.5 + 0.01 * np.arange(101)
    w = np.exp(-((omega - 1) / 0.1) ** 2)
    dec = SpectralDecomposition(omega, w / w.sum())
    tau = revival_time(dec)
    t = np.linspace(0, 40, 81)
    a = survival_and_energy(dec, t).energy
    b = survival_and_energy(dec, t + tau).energy
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_revival_peak_m02(m02):
    tau = revival_time(m02)
    tr = survival_and_energy(m02, uniform_grid(1.5 * tau, tau / 2000))
    peak = detect_revival(tr, (0.8 * tau, 1.2 * tau))
    assert abs(peak.time / tau - 1) < 0.05
    # finer-grid oracle around the detected sample; with ~20 samples per
    # carrier period the parabola is good to a few 1e-5
    fine = survival_and_energy(m02, np.linspace(peak.time - 1, peak.time + 1, 20001))
    assert peak.height == pytest.approx(fine.energy.max(), abs=1e-4)
    i = int(np.argmax(fine.energy))
    assert peak.time == pytest.approx(fine.times[i], abs=1e-2)


def test_detect_revival_cos2():
    g = 0.2
    t = np.linspace(0, 30, 1201)
    tr = survival_and_energy(pair(g), t)
    peak = detect_revival(tr, (0.8 * np.pi / g, 1.2 * np.pi / g))
    assert peak.height == pytest.approx(1.0, abs=1e-6)
    assert peak.time == pytest.approx(np.pi / g, abs=1e-3)


def test_detect_revival_monotone_tail():
    t = np.linspace(0, 10, 101)
    e = np.exp(-t)
    tr = EnergyTrace(t, np.sqrt(e), e)
    peak = detect_revival(tr, (5.0, 10.0))
    assert peak.time == 5.0 and peak.height == pytest.approx(np.exp(-5.0))
    with pytest.raises(WindowEmpty):
        detect_revival(tr, (20.0, 30.0))


def test_few_mode_all_indices(m02):
    t = np.linspace(0, 50, 201)
    full = survival_and_energy(m02, t)
    part = few_mode_energy(m02, range(m02.size), t)
    np.testing.assert_array_equal(part.energy, full.energy)


def test_few_mode_errors(m02):
    with pytest.raises(IndexOutOfRange):
        few_mode_energy(m02, [], [0.0])
    with pytest.raises(IndexOutOfRange):
        few_mode_energy(m02, [0, 102], [0.0])
    with pytest.raises(IndexOutOfRange):
        few_mode_energy(m02, [1, 1], [0.0])


def test_pair_approximation_strong():
    dec = solve_arrowhead(build_equally_spaced(102, 1.0, 0.8))
    approx = pair_approximation(dec, 0, dec.size - 1)
    assert approx.frequency == pytest.approx(1.714, rel=0.02)
    assert approx.amplitude == pytest.approx(0.367, rel=0.02)
    # frozen solver values
    assert approx.frequency == pytest.approx(1.714322, abs=2e-6)
    assert approx.amplitude == pytest.approx(0.367122, abs=2e-6)
    t = np.linspace(0, 50, 501)
    np.testing.assert_allclose(few_mode_energy(dec, [0, dec.size - 1], t).energy,
                               approx(t), atol=1e-12)


def test_pair_approximation_weak():
    dec = solve_arrowhead(build_equally_spaced(102, 1.0, 0.01))
    c = dec.size // 2
    approx = pair_approximation(dec, c - 1, c)
    assert approx.frequency == pytest.approx(0.002, rel=0.1)
    assert approx.amplitude == pytest.approx(0.469, rel=0.02)


def test_triplet_approximation_no_resonant():
    from finitebath.bath import build_without_resonant
    dec = solve_arrowhead(build_without_resonant(102, 1.0, 0.01))
    c = int(np.argmax(dec.weights))
    assert c == 50
    tri = triplet_approximation(dec, c)
    assert tri.center == pytest.approx(0.968, rel=0.01)
    assert tri.sides == pytest.approx(0.019, rel=0.15)
    assert tri.frequency == pytest.approx(0.010, rel=0.1)
    t = np.linspace(0, 1500, 3001)
    three = few_mode_energy(dec, tri.modes, t).energy
    np.testing.assert_allclose(three, tri(t), atol=1e-3)
    with pytest.raises(IndexOutOfRange):
        triplet_approximation(dec, 0)


def test_fluctuation_rms_cos2():
    g = 0.2
    t = np.linspace(0, np.pi / g, 4001)
    tr = survival_and_energy(pair(g), t)
    # cos^2 has mean 1/2 and standard deviation 1/sqrt(8)
    assert fluctuation_rms(tr) == pytest.approx(1 / np.sqrt(8), rel=1e-3)
    with pytest.raises(WindowEmpty):
        fluctuation_rms(tr, (100.0, 200.0))


def test_trace_table():
    tr = survival_and_energy(pair(0.3), [0.0, 1.0])
    header, rows = trace_table(tr)
    assert header == ["t", "re_sigma", "im_sigma", "E1"]
    assert rows[0] == (0.0, 1.0, 0.0, 1.0)
