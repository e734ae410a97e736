import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rlreadout.device import (DeviceParams, calibrate_decay_model, calibrated, from_quoted_rates, preset,
                              preset_names, uncalibrated)
from rlreadout.errors import CalibrationError, InvalidParameterError, UnknownPresetError
from rlreadout.metrics import readout_metrics
from rlreadout.langevin import simulate
from rlreadout.pulses import default_square_action, to_physical


def test_quoted_rates_brisbane():
    k, c = from_quoted_rates(21.4, 0.155)
    assert k == 21.4
    assert c == pytest.approx(0.974, abs=1e-3)
    assert 21.5 <= k / c <= 22.5


def test_quoted_rates_kyoto():
    k, c = from_quoted_rates(10.4, 0.425)
    assert c == pytest.approx(2.670, abs=1e-3)
    assert 3.8 <= k / c <= 4.0


def test_quoted_rates_unit_ratio():
    assert from_quoted_rates(1.0, 1 / (2 * math.pi)) == pytest.approx((1.0, 1.0))


@pytest.mark.parametrize("args", [(0, 1), (1, 0), (-1, 1)])
def test_quoted_rates_reject_non_positive(args):
    with pytest.raises(InvalidParameterError):
        from_quoted_rates(*args)


def test_presets(kyoto, brisbane):
    assert set(preset_names()) == {"kyoto", "brisbane"}
    assert (kyoto.kappa, kyoto.n0) == (10.4, 26)
    assert (brisbane.kappa, brisbane.n0) == (21.4, 59)
    assert kyoto.gamma0 == pytest.approx(1 / 344)
    assert brisbane.gamma0 == pytest.approx(1 / 291)
    assert kyoto.mu == 2.5 and kyoto.n_target == 0.05


def test_unknown_preset():
    with pytest.raises(UnknownPresetError):
        preset("osaka")


@pytest.mark.parametrize("name", ["kyoto", "brisbane"])
def test_calibrated_square_hits_target(name):
    dev = preset(name)
    m = readout_metrics(simulate(dev, to_physical(default_square_action(), dev)), dev)
    assert m.f_max == pytest.approx(0.995, abs=1e-4)


def test_calibration_idempotent(kyoto):
    again = calibrated(kyoto)
    assert again.gammaP == pytest.approx(kyoto.gammaP, rel=1e-6)
    m = readout_metrics(simulate(again, to_physical(default_square_action(), again)), again)
    assert m.f_max == pytest.approx(0.995, abs=1e-4)


def test_calibration_near_floor_uses_large_gamma(kyoto):
    sq = to_physical(default_square_action(), kyoto)
    _, gp_low = calibrate_decay_model(0.5 + 1e-3, sq, kyoto)
    _, gp_mid = calibrate_decay_model(0.9, sq, kyoto)
    assert gp_low > 10 * gp_mid


@pytest.mark.parametrize("target", [1.0, 0.5, 1.2])
def test_calibration_rejects_unreachable(kyoto, target):
    sq = to_physical(default_square_action(), kyoto)
    with pytest.raises((CalibrationError, InvalidParameterError)):
        calibrate_decay_model(target, sq, kyoto)


@pytest.mark.parametrize("field,value", [("kappa", 0.0), ("chi", -1.0), ("n0", 0.0), ("mu", 1.0),
                                         ("f0", 1.5), ("gamma0", -0.1), ("gammaP", -1e-3),
                                         ("n_target", 30.0), ("kappa", float("nan"))])
def test_invariants_enforced(kyoto, field, value):
    with pytest.raises(InvalidParameterError):
        kyoto.replace(**{field: value})


@given(st.floats(0.5, 50), st.floats(0.1, 10), st.floats(1, 100))
def test_uncalibrated_is_valid(kappa, chi, n0):
    d = uncalibrated(kappa, chi, n0, 300.0)
    assert isinstance(d, DeviceParams)
    assert d.gammaP == 0 and d.lambda_snr > 0
