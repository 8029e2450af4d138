import math
import numpy as np
import pytest
import scipy.special
from src.analytic import (
    bourret_concurrence,
    bourret_saturation,
    bourret_steady,
    coherence_functions,
    dark_state,
    kappa_max,
    markov_steady,
    quasistatic_steady,
    scaled_exp1,
    thermal_occupation,
    upsilon,
    x_state_concurrence,
)
from src.exceptions import ParameterError, RootBracketError
from src.operators import KET_00, KET_S
from src.params import ModelParams


def test_markov_steady_at_unit_occupation():
    prediction = markov_steady(1.0)
    assert np.allclose(prediction.populations(), [4 / 9, 2 / 9, 2 / 9, 1 / 9])
    assert prediction.concurrence == 0.0
    assert prediction.to_state().trace_distance(prediction.to_state()) == 0.0


def test_markov_steady_rejects_negative_occupation():
    with pytest.raises(ParameterError):
        markov_steady(-1.0)


def test_upsilon_reference_value():
    assert upsilon(1 / 8) == pytest.approx(0.596347362323194, rel=1e-12)


def test_upsilon_array_and_limits():
    values = upsilon(np.array([1e-4, 1.0, 1e4]))
    assert values.shape == (3,)
    assert values[0] == pytest.approx(1.0, abs=1e-3)
    assert values[2] < 1e-3
    assert np.all(np.diff(values) < 0)


def test_upsilon_rejects_nonpositive():
    with pytest.raises(ParameterError):
        upsilon(0.0)


@pytest.mark.parametrize("z", [0.3, 1.0, 5.0, 40.0])
def test_scaled_exp1_matches_scipy(z):
    assert scaled_exp1(z) == pytest.approx(math.exp(z) * scipy.special.exp1(z), rel=1e-12)


def test_scaled_exp1_large_argument():
    z = 1e6
    assert scaled_exp1(z) == pytest.approx(1 / z - 1 / z ** 2, rel=1e-10)


def test_quasistatic_concurrence():
    prediction = quasistatic_steady(1 / 8)
    assert prediction.concurrence == pytest.approx(0.403652637676806, rel=1e-10)
    assert prediction.rho_T == 0.0
    assert quasistatic_steady(0.0).rho_00 == 1.0


def test_bourret_weak_bandwidth_limit():
    params = ModelParams.from_flux(0.5, 1e-9)
    assert bourret_concurrence(params) == pytest.approx(8 * 0.5 / (1 + 8 * 0.5), abs=1e-4)


@pytest.mark.parametrize("order", ["full", "lowest"])
def test_bourret_populations(order):
    params = ModelParams(kappa=0.01, n_th=10.0)
    prediction = bourret_steady(params, order=order)
    assert prediction.regime == f"bourret-{order}"
    assert prediction.rho_S > prediction.rho_T > 0
    if order == "full":
        assert sum(prediction.populations()) == pytest.approx(1.0)


def test_bourret_full_form_is_normalized():
    rng = np.random.default_rng(5)
    for gamma, kappa, phi in zip(10 ** rng.uniform(-1, 1, 1000),
                                 10 ** rng.uniform(-3, 1, 1000),
                                 10 ** rng.uniform(-3, 2, 1000)):
        params = ModelParams(gamma1=gamma, gamma2=gamma, kappa=kappa, n_th=2 * phi / kappa)
        prediction = bourret_steady(params, order="full")
        assert sum(prediction.populations()) == pytest.approx(1.0, abs=1e-12)
        assert min(prediction.populations()) >= 0.0


def test_bourret_orders_agree_for_narrow_band():
    params = ModelParams(kappa=1e-4, n_th=1000.0)
    full = bourret_steady(params, order="full").populations()
    lowest = bourret_steady(params, order="lowest").populations()
    assert np.max(np.abs(full - lowest)) < 1e-3


def test_bourret_rejects_unknown_order():
    with pytest.raises(ParameterError, match="order"):
        bourret_steady(ModelParams(kappa=0.1, n_th=1.0), order="second")


def test_bourret_needs_bandwidth():
    with pytest.raises(ParameterError):
        bourret_concurrence(ModelParams(kappa=0.0))


def test_kappa_max_bracket():
    for n_th in (1.0, 2.0, 5.0, 10.0):
        root = kappa_max(ModelParams(n_th=n_th))
        assert 0.18 <= root < 0.25


def test_kappa_max_without_sign_change():
    with pytest.raises(RootBracketError):
        kappa_max(ModelParams(n_th=1.0), lower=0.5, upper=1.0)


def test_bourret_saturation():
    assert bourret_saturation(ModelParams(kappa=0.1)) == pytest.approx(0.6)
    assert bourret_saturation(ModelParams(kappa=0.5)) == 0.0


def test_coherence_functions_at_zero_delay():
    assert coherence_functions(0.3, 0.0) == (1.0, 2.0)
    g1, g2 = coherence_functions(0.5, np.array([0.0, 2.0]))
    assert g1[1] == pytest.approx(math.exp(-1.0))
    assert g2[1] == pytest.approx(1 + math.exp(-2.0))


def test_thermal_occupation_room_temperature():
    assert thermal_occupation(293.0, 5e9) == pytest.approx(1220, rel=5e-3)
    assert thermal_occupation(300.0, 50e9) == pytest.approx(124.5, rel=5e-3)
    with pytest.raises(ParameterError):
        thermal_occupation(0.0, 5e9)


def test_x_state_concurrence():
    assert x_state_concurrence(0.0, 0.0, 1.0, 0.0) == 1.0
    assert x_state_concurrence(0.25, 0.25, 0.25, 0.25) == 0.0


def test_dark_state_weights():
    params = ModelParams(kappa=0.125)
    ket = dark_state(1.0, params)
    assert abs(np.vdot(KET_00, ket)) ** 2 == pytest.approx(0.5)
    assert abs(np.vdot(KET_S, ket)) ** 2 == pytest.approx(0.5)
