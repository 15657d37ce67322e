import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holowaves import spectral as sp
from holowaves.spectral import ConfigurationError, HolomorphyError, MeanModeError, PeriodicGrid

from conftest import random_complex
from oracles import dft, modes, synth


def test_modes_of_small_grid():
    g = PeriodicGrid(8)
    assert sorted(g.k.tolist()) == list(range(-4, 4))
    assert np.array_equal(g.modes, np.arange(-4, 4))


def test_bad_size_rejected():
    with pytest.raises(ConfigurationError):
        PeriodicGrid(6)
    with pytest.raises(ConfigurationError):
        sp.make_grid(4)


def test_nodes_span_period():
    g = PeriodicGrid(256)
    assert len(g.nodes) == 256
    assert g.nodes[0] == 0.0 and g.nodes[-1] < 2 * np.pi
    assert np.allclose(np.diff(g.nodes), 2 * np.pi / 256)


def test_constant_and_single_mode_coefficients():
    g = PeriodicGrid(16)
    c = sp.transform(g, np.ones(16))
    assert c[g.k == 0][0] == pytest.approx(1.0)
    assert np.allclose(c[g.k != 0], 0)
    f = sp.SpectralField.from_values(g, np.exp(-1j * g.nodes))
    assert f.coeff(-1) == pytest.approx(1.0)
    assert np.allclose(f.coeffs[g.k != -1], 0, atol=1e-15)


def test_transform_matches_direct_sum(rng):
    g = PeriodicGrid(64)
    v = random_complex(rng, 64)
    fast = sp.transform(g, v)
    assert np.allclose([fast[k % 64] for k in modes(64)], dft(v), atol=1e-14)
    assert np.max(np.abs(sp.inverse_transform(g, sp.transform(g, v)) - v)) < 1e-13


def test_derivative_and_fractional_examples():
    g = PeriodicGrid(32)
    e1 = np.exp(-1j * g.nodes)
    assert np.allclose(g.d(e1), -1j * e1, atol=1e-14)
    e4 = np.exp(-4j * g.nodes)
    assert np.allclose(g.absd(e4, 0.5), 2 * e4, atol=1e-14)
    assert np.allclose(g.absd(np.full(32, 3.0 + 0j), 0.5), 0)


def test_hilbert_examples():
    g = PeriodicGrid(32)
    a = g.nodes
    assert np.allclose(g.H(np.cos(a)), np.sin(a), atol=1e-14)
    assert np.allclose(g.H(np.sin(a)), -np.cos(a), atol=1e-14)
    assert np.allclose(g.H(np.ones(32)), 0)


def test_projection_examples():
    g = PeriodicGrid(32)
    a = g.nodes
    assert np.allclose(g.P(np.exp(1j * a)), 0, atol=1e-15)
    assert np.allclose(g.P(np.exp(-1j * a)), np.exp(-1j * a), atol=1e-15)
    assert np.allclose(g.P(np.ones(32)), 0.5)


def test_holo_residual_examples():
    g = PeriodicGrid(32)
    a = g.nodes
    f = lambda v: sp.holo_residual(sp.SpectralField.from_values(g, v))
    assert f(np.exp(-2j * a)) == pytest.approx(0, abs=1e-15)
    assert f(np.exp(3j * a)) == pytest.approx(1.0)
    # direct coefficient computation: positive mass 0.1 out of sqrt(1 + 0.01)
    assert f(np.exp(-1j * a) + 0.1 * np.exp(1j * a)) == pytest.approx(0.1 / np.sqrt(1.01), rel=1e-12)


def test_invert_dalpha_examples(rng):
    g = PeriodicGrid(32)
    e1 = sp.SpectralField.from_values(g, np.exp(-1j * g.nodes))
    assert np.allclose(sp.invert_dalpha(e1).values, 1j * np.exp(-1j * g.nodes))
    v = g.dealias(random_complex(rng, 32))
    dv = sp.SpectralField.from_values(g, g.d(v))
    assert np.allclose(sp.invert_dalpha(dv).values, v - v.mean())
    with pytest.raises(MeanModeError):
        sp.invert_dalpha(sp.SpectralField.from_values(g, np.ones(32)))


def test_holo_field_rejects_positive_modes():
    g = PeriodicGrid(16)
    with pytest.raises(HolomorphyError):
        sp.HoloField.from_values(g, np.exp(2j * g.nodes))
    h = sp.HoloField.from_values(g, np.exp(-2j * g.nodes))
    assert sp.holo_residual(h) < 1e-15


def test_dealias_kills_top_third():
    g = PeriodicGrid(64)
    v = synth({-30: 1.0, -21: 1.0, 5: 1.0}, 64)
    c = dft(g.dealias(v))
    k = modes(64)
    assert abs(c[k == -30][0]) < 1e-14
    assert abs(c[k == -21][0] - 1) < 1e-14
    assert abs(c[k == 5][0] - 1) < 1e-14


def test_multiplier_symbol_shape_checked():
    g = PeriodicGrid(16)
    with pytest.raises((ConfigurationError, ValueError)):
        sp.MultiplierSymbol(g, np.ones(8))


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 10), st.integers(0, 2**31 - 1))
def test_projection_algebra(log_n, seed):
    n = 2**log_n
    g = PeriodicGrid(n)
    rng = np.random.default_rng(seed)
    f = random_complex(rng, n)
    scale = np.max(np.abs(f))
    f0 = g.dealias(f) - np.mean(g.dealias(f))
    assert np.max(np.abs(g.P(f) + g.Pbar(f) - f)) <= 1e-12 * scale
    assert np.max(np.abs(g.P(g.P(f0)) - g.P(f0))) <= 1e-12 * scale
    assert np.max(np.abs(g.H(g.H(f0)) + f0)) <= 1e-12 * scale
    assert np.max(np.abs(g.ifft(g.fft(f)) - f)) <= 1e-12 * scale


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_real_fields_have_real_hilbert_transform(seed):
    g = PeriodicGrid(64)
    f = np.random.default_rng(seed).standard_normal(64)
    assert np.max(np.abs(g.H(f).imag)) < 1e-13
