import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holowaves import evolve as ev
from holowaves import lab
from holowaves import paracalc as pc
from holowaves.spectral import ConfigurationError


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        lab.ExperimentSpec(kind="nope")
    with pytest.raises(ConfigurationError):
        lab.ExperimentSpec(kind="lifespan", profile={"type": "triangle"})
    with pytest.raises(ConfigurationError):
        lab.ExperimentSpec(kind="lifespan", eps_grid=(0.1, 0.01))
    with pytest.raises(ConfigurationError):
        lab.ExperimentSpec(kind="lifespan", n_grid=())


def test_spec_dict_round_trip():
    spec = lab.ExperimentSpec(kind="nf_order", eps_grid=(1e-3, 1e-2), solver={"dt": 0.01}, options={"x": 1})
    d = json.loads(json.dumps(spec.to_dict()))
    assert lab.ExperimentSpec.from_dict(d) == spec


def test_sweep_result_round_trip(tmp_path):
    res = lab.SweepResult("lifespan", [{"eps": 0.1, "T": 5.0, "capped": False, "reason": "oracle"}], {"p": 1.0}, "pass", {"p_range": [0.95, 1.05]})
    res.write(tmp_path, lab.ExperimentSpec(kind="lifespan"))
    back = lab.SweepResult.read(tmp_path)
    assert back.records == res.records and back.fit == res.fit and back.status == "pass"
    assert (tmp_path / "spec.json").exists()


def test_fit_needs_three_points():
    assert lab.loglog_fit([1, 2], [1, 4]) is None
    fit = lab.loglog_fit([1, 2, 4], [1, 4, 16])
    assert fit["slope"] == pytest.approx(2.0)


@pytest.mark.parametrize("eps", [0.01, 0.05, 0.3])
def test_ode_oracle_doubling_time(eps):
    assert lab.ode_doubling_time(eps) == pytest.approx(1 / (2 * eps), rel=1e-9)


def test_lifespan_oracle_calibration():
    spec = lab.ExperimentSpec(kind="lifespan", eps_grid=(0.02, 0.03, 0.045, 0.0675), options={"oracle": True})
    res = lab.lifespan_sweep(spec)
    assert res.passed and abs(res.fit["p"] - 1) <= 0.05


def test_lifespan_linear_flow_never_doubles():
    spec = lab.ExperimentSpec(
        kind="lifespan",
        profile={"type": "random", "seed": 1, "kmax": 16},
        eps_grid=(0.01, 0.02, 0.04),
        n_grid=(64,),
        solver=ev.SolverConfig(dt=0.05, t_max=5.0, record_every=10),
        options={"linear_only": True},
    )
    res = lab.lifespan_sweep(spec)
    assert res.status == "inconclusive"
    assert all(r["capped"] for r in res.records)
    assert all(r["max_growth"] < 1 + 1e-9 for r in res.records)


def test_profile_amplitude_conventions():
    g = lab.make_grid(128)
    s = lab.make_full_state(g, {"type": "single_mode", "k": 3}, 0.02)
    assert np.max(np.abs(s.W)) == pytest.approx(0.02, rel=1e-12)
    p = lab.make_diff_state(g, {"type": "packet", "center": 10, "width": 2}, 0.03)
    assert np.max(np.abs(p.Wa)) == pytest.approx(0.03, rel=1e-12)
    r = lab.make_diff_state(g, {"type": "random", "seed": 4}, 0.04)
    assert pc.control_params(g, r.Wa, r.R).A == pytest.approx(0.04, rel=1e-10)
    with pytest.raises(ConfigurationError):
        lab.check_amplitude(g, {"type": "random", "seed": 4}, 0.5)


def test_random_profile_independent_of_resolution():
    a = lab.shape(lab.make_grid(256), {"type": "random", "seed": 2, "kmax": 32})
    b = lab.shape(lab.make_grid(512), {"type": "random", "seed": 2, "kmax": 32})
    ca, cb = np.fft.fft(a.Wa)[-32:] / 256, np.fft.fft(b.Wa)[-32:] / 512
    # same coefficients up to the sup-norm normalization
    ratio = ca / cb
    assert np.allclose(ratio, ratio[0], rtol=1e-12)
    assert abs(ratio[0] - 1) < 1e-3


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_profiles_deterministic_and_holomorphic(seed):
    g = lab.make_grid(64)
    prof = {"type": "random", "seed": seed, "kmax": 16}
    a, b = lab.make_diff_state(g, prof, 0.05), lab.make_diff_state(g, prof, 0.05)
    assert np.array_equal(a.Wa, b.Wa) and np.array_equal(a.R, b.R)
    assert np.max(np.abs(np.fft.fft(a.Wa)[1:32])) < 1e-14


def test_energy_drift_of_zero_data():
    spec = lab.ExperimentSpec(kind="energy_drift", eps_grid=(0.0,), n_grid=(64,), solver={"dt": 0.01, "t_max": 0.1})
    res = lab.energy_drift_experiment(spec)
    assert res.records[0]["drift"] == 0 and res.passed


def test_cancellation_order_small_sweep():
    spec = lab.ExperimentSpec(kind="nf_order", profile={"type": "random", "seed": 0}, eps_grid=(1e-3, 3e-3, 1e-2), n_grid=(128,))
    res = lab.cancellation_order_experiment(spec)
    assert res.passed
    assert all(r["rho"] < r["rho0"] for r in res.records)


def test_fd_check_zero_direction():
    spec = lab.ExperimentSpec(
        kind="fd_check",
        profile={"type": "single_mode", "k": 1},
        eps_grid=(0.02,),
        h_grid=(1e-4, 1e-3, 1e-2),
        n_grid=(64,),
        solver={"dt": 0.01, "t_max": 0.05},
        options={"zero_direction": True},
    )
    res = lab.fd_linearization_check(spec)
    assert all(r["err"] == 0 for r in res.records) and res.passed


def test_ratio_suite_empty_and_single_mode():
    spec = lab.ExperimentSpec(kind="ratio_suite", options={"members": 0})
    assert lab.estimate_ratio_suite(spec).status == "inconclusive"
    g = lab.make_grid(128)
    ds = lab.make_diff_state(g, {"type": "single_mode", "k": 2}, 0.02)
    ds = type(ds)(g, ds.Wa, 0.5 * ds.Wa)
    vals = lab.ratio_values(g, ds)
    assert set(vals) == set(lab.RATIO_NAMES)
    assert all(np.isfinite(v) and v > 0 for v in vals.values())


def test_convergence_spatial_floor():
    spec = lab.ExperimentSpec(kind="convergence", profile={"type": "single_mode", "k": 4}, n_grid=(16, 32), options={"T": 0.05})
    res = lab.convergence_experiment(spec)
    spatial = [r["err"] for r in res.records if r["test"] == "spatial"]
    assert max(spatial) < 1e-12


def test_identity_suite_all_pass():
    rows = lab.identity_suite(n=128, members=2)
    assert rows and all(r["pass"] for r in rows)
    assert {r["module"] for r in rows} == {"spectral", "paracalc", "waterwave", "linearized", "evolve"}


def test_parallel_map_matches_serial():
    spec = lab.ExperimentSpec(kind="energy_drift", eps_grid=(0.01, 0.02), n_grid=(64,), solver={"dt": 0.01, "t_max": 0.05})
    a = lab.energy_drift_experiment(spec)
    b = lab.energy_drift_experiment(lab.ExperimentSpec(**{**spec.__dict__, "workers": 2}))
    assert a.records == b.records
