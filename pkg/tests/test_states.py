import numpy as np
import pytest

from stochmhd.lattice import build_lattice
from stochmhd.states import RealState, SpectralState, to_complex, to_real, validate


@pytest.fixture(scope="module")
def lat():
    return build_lattice(2)


def test_zero_state(lat):
    st = SpectralState.zeros(lat)
    assert st.energy() == 0.0
    assert not validate(st, lat)


def test_random_state_is_divergence_free(lat):
    st = SpectralState.random(lat, np.random.default_rng(1))
    for j, k in enumerate(lat.representatives):
        kf = np.array(k, dtype=float)
        assert abs(st.u[j] @ kf) < 1e-12
        assert abs(st.b[j] @ kf) < 1e-12
    assert not validate(st, lat)


def test_conjugation_lookup(lat):
    st = SpectralState.random(lat, np.random.default_rng(2))
    k = (1, -1, 2)
    np.testing.assert_allclose(st.get_u((-1, 1, -2)), np.conj(st.get_u(k)))
    np.testing.assert_allclose(st.get_b((-1, 1, -2)), np.conj(st.get_b(k)))


def test_energy_decomposition(lat):
    st = SpectralState.random(lat, np.random.default_rng(3))
    assert st.energy() == pytest.approx(st.energy_u() + st.energy_b())
    doubled = st.scaled(2.0)
    assert doubled.energy() == pytest.approx(4.0 * st.energy())


def test_validate_flags_divergence(lat):
    st = SpectralState.zeros(lat)
    st.u[lat.index[(1, 0, 0)]] = np.array([1.0, 0.0, 0.0])  # parallel to the mode
    diags = validate(st, lat)
    assert any(d.kind.startswith("divergence") and d.mode == (1, 0, 0) for d in diags)
    st.project()
    assert not validate(st, lat)


def test_real_complex_round_trip(lat):
    st = SpectralState.random(lat, np.random.default_rng(4))
    back = to_complex(to_real(st))
    np.testing.assert_allclose(back.u, st.u, atol=1e-13)
    np.testing.assert_allclose(back.b, st.b, atol=1e-13)


def test_real_energy_matches(lat):
    """Split coordinates carry the energy with a factor two per block pair."""
    st = SpectralState.random(lat, np.random.default_rng(5))
    re = to_real(st)
    real_sq = sum(float(np.sum(block ** 2)) for block in re.blocks())
    assert real_sq == pytest.approx(st.energy())


def test_copy_is_independent(lat):
    st = SpectralState.random(lat, np.random.default_rng(6))
    cp = st.copy()
    cp.u[0] += 1.0
    assert not np.allclose(cp.u, st.u)
