import numpy as np
import pytest

from stochmhd.errors import BlowUpError, ConfigurationError
from stochmhd.integrator import IntegratorConfig, simulate, simulate_ensemble, step
from stochmhd.lattice import build_lattice
from stochmhd.noise import ForcingConfig
from stochmhd.states import SpectralState


@pytest.fixture(scope="module")
def lat():
    return build_lattice(1)


@pytest.fixture(scope="module")
def no_noise(lat):
    return ForcingConfig(lat, {}, {})


def test_config_validation():
    with pytest.raises(ConfigurationError):
        IntegratorConfig(dt=0.0, t_end=1.0)
    with pytest.raises(ConfigurationError):
        IntegratorConfig(dt=0.1, t_end=0.01)
    with pytest.raises(ConfigurationError):
        IntegratorConfig(dt=0.1, t_end=1.0, scheme="milstein")


def test_single_mode_decays_exactly(lat, no_noise):
    """One lone mode has no nonlinear partners, so the exponential scheme
    reproduces e(t) = e(0) exp(-2 |k|^2 t) to round-off."""
    st = SpectralState.zeros(lat)
    st.u[lat.index[(1, 0, 0)]] = np.array([0.0, 1.0, 0.5j])
    cfg = IntegratorConfig(dt=0.01, t_end=1.0, record_every=10)
    traj = simulate(st, no_noise, cfg)
    np.testing.assert_allclose(
        traj.energies, st.energy() * np.exp(-2.0 * traj.times), rtol=1e-12
    )


def test_noiseless_energy_is_nonincreasing(lat, no_noise):
    st = SpectralState.random(lat, np.random.default_rng(0), scale=0.8)
    for scheme in ("exponential", "euler_maruyama"):
        cfg = IntegratorConfig(dt=1e-3, t_end=0.5, scheme=scheme, record_every=50)
        traj = simulate(st, no_noise, cfg)
        assert np.all(np.diff(traj.energies) <= 1e-13)


def test_schemes_converge_together(lat, no_noise):
    st = SpectralState.random(lat, np.random.default_rng(1), scale=0.5)
    finals = {}
    for scheme in ("exponential", "euler_maruyama"):
        cfg = IntegratorConfig(dt=2e-4, t_end=0.2, scheme=scheme, record_every=1000)
        finals[scheme] = simulate(st, no_noise, cfg).u[-1]
    np.testing.assert_allclose(
        finals["exponential"], finals["euler_maruyama"], atol=1e-3
    )


def test_seed_reproducibility(lat):
    f = ForcingConfig.single_mode(lat, (1, 0, 0), 1.0, 1.0)
    st = SpectralState.random(lat, np.random.default_rng(2), scale=0.3)
    cfg = IntegratorConfig(dt=1e-3, t_end=0.1, seed=11)
    a = simulate_ensemble(st.u, st.b, f, cfg, lat, n_trajectories=4)
    b = simulate_ensemble(st.u, st.b, f, cfg, lat, n_trajectories=4)
    np.testing.assert_array_equal(a.final_u, b.final_u)
    c = simulate_ensemble(
        st.u, st.b, f, IntegratorConfig(dt=1e-3, t_end=0.1, seed=12), lat, 4
    )
    assert not np.allclose(a.final_u, c.final_u)


def test_thread_count_does_not_change_results(lat):
    f = ForcingConfig.single_mode(lat, (1, 0, 0), 1.0, 1.0)
    st = SpectralState.random(lat, np.random.default_rng(3), scale=0.3)
    cfg = IntegratorConfig(dt=1e-3, t_end=0.05, seed=5)
    serial = simulate_ensemble(st.u, st.b, f, cfg, lat, n_trajectories=6, threads=1)
    threaded = simulate_ensemble(st.u, st.b, f, cfg, lat, n_trajectories=6, threads=3)
    np.testing.assert_array_equal(serial.final_u, threaded.final_u)
    np.testing.assert_array_equal(serial.energy_b, threaded.energy_b)


def test_states_stay_on_constraint(lat):
    f = ForcingConfig.single_mode(lat, (1, 1, 0), 1.0, 1.0)
    st = SpectralState.random(lat, np.random.default_rng(4), scale=0.5)
    cfg = IntegratorConfig(dt=1e-3, t_end=0.2, seed=6)
    res = simulate_ensemble(st.u, st.b, f, cfg, lat, n_trajectories=3)
    kf = lat.k_arr.astype(float)[None]
    assert np.abs((res.final_u * kf).sum(axis=2)).max() < 1e-12
    assert np.abs((res.final_b * kf).sum(axis=2)).max() < 1e-12


def test_single_step_matches_scheme(lat, no_noise):
    st = SpectralState.random(lat, np.random.default_rng(7), scale=0.4)
    cfg = IntegratorConfig(dt=0.01, t_end=0.01)
    out = step(st, no_noise, cfg, np.random.default_rng(0))
    traj = simulate(st, no_noise, cfg)
    np.testing.assert_allclose(out.u, traj.u[-1], atol=1e-12)


def test_blow_up_guard(lat, no_noise):
    st = SpectralState.random(lat, np.random.default_rng(8), scale=1.0)
    huge = st.scaled(1e7)
    cfg = IntegratorConfig(dt=0.1, t_end=1.0, scheme="euler_maruyama")
    with pytest.raises(BlowUpError) as info:
        simulate_ensemble(huge.u, huge.b, no_noise, cfg, lat, n_trajectories=2)
    assert info.value.mode in lat.representatives


def test_hit_time_detection(lat, no_noise):
    """The noiseless decay from energy 4 crosses the threshold 1 near
    t = log(4) / 2 for a lone dissipating mode."""
    st = SpectralState.zeros(lat)
    st.u[lat.index[(1, 0, 0)]] = np.array([0.0, 2.0, 0.0])
    cfg = IntegratorConfig(dt=1e-3, t_end=2.0)
    res = simulate_ensemble(
        st.u, st.b, no_noise, cfg, lat, n_trajectories=1, hit_threshold_sq=1.0
    )
    assert res.hit_times[0] == pytest.approx(np.log(4.0) / 2.0, abs=2e-3)
    assert not res.hit_censored[0]


def test_dissipation_integral_tracks_energy_loss(lat, no_noise):
    st = SpectralState.random(lat, np.random.default_rng(9), scale=0.5)
    cfg = IntegratorConfig(dt=1e-4, t_end=0.5, record_every=5000)
    traj = simulate(st, no_noise, cfg)
    resid = traj.energies[-1] + traj.dissipation_integral[-1] - st.energy()
    assert abs(resid) < 5e-3 * st.energy()


def test_csv_export(tmp_path, lat, no_noise):
    st = SpectralState.random(lat, np.random.default_rng(10), scale=0.5)
    cfg = IntegratorConfig(dt=0.01, t_end=0.1, record_every=2)
    traj = simulate(st, no_noise, cfg)
    path = tmp_path / "traj.csv"
    traj.to_csv(path, per_mode=True)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[1] == 3 + 2 * lat.D
    np.testing.assert_allclose(data[:, 0], traj.times)
