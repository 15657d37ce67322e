import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holowaves import lab
from holowaves import waterwave as ww
from holowaves.paracalc import DegenerateSurfaceError
from holowaves.spectral import PeriodicGrid

from oracles import loglog_slope, quad


def _state(n=256, seed=0, amp=0.05):
    return lab.ensemble(lab.make_grid(n), 1, amp, seed)[0]


def _zero(n=64):
    g = PeriodicGrid(n)
    z = np.zeros(n, complex)
    return g, ww.FullState(g, z, z.copy())


def test_zero_state_derived_fields():
    g, st0 = _zero()
    df = ww.derived_fields(st0)
    assert np.allclose(df.J, 1)
    for name in ("Y", "F", "b", "a", "M", "X", "R"):
        assert np.max(np.abs(getattr(df, name))) == 0, name


def test_pure_velocity_state_coefficients():
    g = PeriodicGrid(64)
    eps = 0.02
    ds = ww.DiffState(g, np.zeros(64, complex), eps * np.exp(-1j * g.nodes))
    df = ww.derived_fields(ds)
    assert np.allclose(df.a, eps**2, atol=1e-16)
    assert np.allclose(df.b, 2 * eps * np.cos(g.nodes), atol=1e-16)
    Wat, Rt = ww.rhs_diff(ds)
    # the source term alone is -i eps^2; transport adds -b R_alpha
    assert np.allclose(Rt + df.b * g.d(ds.R), -1j * eps**2, atol=1e-16)
    assert np.allclose(Rt, 1j * eps**2 * np.exp(-2j * g.nodes), atol=1e-16)


def test_zero_state_rhs():
    g, st0 = _zero()
    for v in ww.rhs_full(st0) + ww.rhs_diff(st0.to_diff()):
        assert np.max(np.abs(v)) == 0


def test_degenerate_surface_rejected():
    g = PeriodicGrid(64)
    Wa = -0.9 * np.exp(-1j * g.nodes)
    with pytest.raises(DegenerateSurfaceError):
        ww.derived_fields(ww.DiffState(g, Wa, np.zeros(64, complex)))


def test_nonlinear_part_is_quadratic():
    g = lab.make_grid(256)
    base = _state(seed=3, amp=0.05)
    eps = np.array([1e-3, 2e-3, 4e-3, 1e-2])
    res = []
    for e in eps:
        s = base.scaled(e / 0.05)
        Wt, Qt = ww.rhs_full(s)
        L = ww.linear_part(g, s.W, s.Q)
        res.append(np.linalg.norm(Wt - L[0]) + np.linalg.norm(Qt - L[1]))
    assert abs(loglog_slope(eps, res) - 2.0) <= 0.1


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_structural_identities(seed):
    errs = lab.structural_identity_errors(_state(seed=seed))
    for name, tol in lab.IDENTITY_TOLERANCES.items():
        assert errs[name] <= tol, name
    assert errs["min_one_plus_a"] > 0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_rhs_is_holomorphic(seed):
    s = _state(seed=seed)
    g = s.grid
    for v in ww.rhs_full(s) + ww.rhs_diff(s.to_diff()):
        assert ww._rel_pos(g, v) <= 1e-9


def test_energy_single_mode_surface():
    g = PeriodicGrid(128)
    d = 0.05
    s = ww.FullState(g, d * np.exp(-1j * g.nodes), np.zeros(128, complex))
    # quadrature oracle of 2 (Im W)^2 (1 + Re W_alpha) with W = d e^{-i alpha}
    expect = quad(lambda a: 2 * (d * np.sin(a)) ** 2 * (1 - d * np.sin(a))).real
    assert ww.energy_full(s) == pytest.approx(expect, rel=1e-12)
    assert expect == pytest.approx(2 * np.pi * d**2, rel=1e-12)


def test_energy_single_mode_potential():
    g = PeriodicGrid(128)
    mu = 0.07
    s = ww.FullState(g, np.zeros(128, complex), mu * np.exp(-1j * g.nodes))
    expect = quad(lambda a: np.imag(mu * np.exp(-1j * a) * np.conj(-1j * mu * np.exp(-1j * a)))).real
    assert ww.energy_full(s) == pytest.approx(expect, rel=1e-12)
    assert expect == pytest.approx(2 * np.pi * mu**2, rel=1e-12)


def test_energy_zero_and_quadratic_part():
    g, st0 = _zero()
    assert ww.energy_full(st0) == 0
    g = lab.make_grid(256)
    s = lab.make_full_state(g, {"type": "random", "seed": 5}, 0.05)
    rels = []
    for e in (1e-2, 1e-3):
        small = s.scaled(e)
        e0 = ww.energy_lin0(g, small.W, small.Q)
        rels.append(abs(ww.energy_full(small) - e0) / e0)
    # the remainder is cubic, so the relative defect is linear in the scale
    assert rels[1] < 0.2 * rels[0] and rels[1] < 1e-3


def test_energy_independent_of_horizontal_and_potential_shift():
    s = _state(seed=2)
    shifted = ww.FullState(s.grid, s.W + 0.3, s.Q + 0.1)
    assert ww.energy_full(shifted) == pytest.approx(ww.energy_full(s), rel=1e-12)


def test_diagonal_variables_round_trip(rng):
    s = _state(seed=1)
    g = s.grid
    R = s.to_diff().R
    w = lab.make_diff_state(g, {"type": "random", "seed": 9}, 0.05).Wa
    q = lab.make_diff_state(g, {"type": "random", "seed": 8}, 0.05).R
    w2, q2 = ww.undiagonalize(g, *ww.diagonalize(g, w, q, R), R)
    assert np.max(np.abs(q2 - q)) < 1e-14 and np.array_equal(w2, w)


def test_diff_and_full_states_convert():
    s = _state(seed=4)
    ds = s.to_diff()
    back = ds.to_full(np.mean(s.W), np.mean(s.Q))
    assert np.max(np.abs(back.W - s.W)) < 1e-14
    assert np.max(np.abs(back.Q - s.Q)) < 1e-14
    Wa, R = ds.fields()
    assert np.allclose(Wa.values, ds.Wa)


def test_full_state_mean_convention_checked():
    g = PeriodicGrid(32)
    with pytest.raises(ValueError):
        ww.FullState(g, np.full(32, 0.5 + 0j), np.zeros(32, complex)).fields()


def test_normal_form_full_vanishes_to_second_order():
    s = _state(seed=6)
    small = s.scaled(1e-3)
    nf = ww.normal_form_full(small)
    assert np.linalg.norm(nf.W - small.W) < 1e-4 * np.linalg.norm(small.W)


def test_normal_form_diff_ratio_bounded():
    ds = _state(seed=7).to_diff()
    res = ww.normal_form_diff(ds)
    assert 0 < res.ratio < 10
    g = ds.grid
    assert ww._rel_pos(g, res.Wa_corr) < 1e-12


def test_snapshot_round_trip_is_exact(tmp_path):
    s = _state(seed=8)
    p = tmp_path / "snap.json"
    ww.write_snapshot(s, p)
    back = ww.read_snapshot(p)
    assert isinstance(back, ww.FullState)
    assert np.array_equal(back.coeff_cache["W"], s.grid.fft(s.W))
    ww.write_snapshot(back, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_text() == p.read_text()
    data = json.loads(p.read_text())
    assert data["n"] == 256 and len(data["W_coeffs"]) == 256


def test_diff_snapshot_round_trip(tmp_path):
    ds = _state(seed=8).to_diff()
    ww.write_snapshot(ds, tmp_path / "d.json")
    back = ww.read_snapshot(tmp_path / "d.json")
    assert isinstance(back, ww.DiffState)
    assert np.max(np.abs(back.R - ds.R)) < 1e-15


def test_bad_snapshot_rejected():
    with pytest.raises(ValueError):
        ww.snapshot_from_dict({"n": 8, "t": 0, "W_coeffs": [[0, 0]] * 4, "Q_coeffs": [[0, 0]] * 8})
