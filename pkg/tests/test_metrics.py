import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rlreadout.langevin import simulate
from rlreadout.metrics import (assignment_fidelity, assignment_infidelity, locate_extrema, qubit_fidelity,
                               readout_metrics, reset_time, snr_fidelity)
from rlreadout.pulses import default_square_action, to_physical


def test_snr_fidelity_examples():
    assert snr_fidelity(0.0, 1.0) == 0.5
    assert snr_fidelity(1e3, 1.0) == 1.0
    assert snr_fidelity(1.0, 1.0) == pytest.approx(0.9214, abs=1e-4)


def test_qubit_fidelity_examples():
    t = np.linspace(0, 1000, 1001)
    assert qubit_fidelity(np.zeros(1001), 1.0, 0.0, t)[0] == 1.0
    assert qubit_fidelity(np.zeros(1001), 1.0, 0.0, t)[-1] == pytest.approx(math.exp(-1))
    assert qubit_fidelity(np.full(1001, 10.0), 0.0, 0.01, t)[-1] == pytest.approx(math.exp(-0.1))


def test_zero_separation_gives_half(kyoto):
    f = assignment_fidelity(np.zeros(50), np.ones(50), kyoto)
    assert np.all(f == 0.5)


# separations up to twice the largest reachable field amplitude
@given(arrays(np.float64, 30, elements=st.floats(0, 30)), arrays(np.float64, 30, elements=st.floats(0, 60)))
def test_fidelity_bounds(kyoto, s, n):
    f = assignment_fidelity(s, n, kyoto)
    e = assignment_infidelity(s, n, kyoto)
    assert np.all((f >= 0.5) & (f <= 1.0))
    assert np.all(e > 0)
    assert np.allclose(f + e, 1.0)


def test_square_pulse_fidelity(kyoto):
    m = readout_metrics(simulate(kyoto, to_physical(default_square_action(), kyoto)), kyoto)
    assert m.f_max == pytest.approx(0.995, abs=1e-4)
    assert m.ordered


def test_extrema_monotone_tail():
    f = np.array([0.5, 0.7, 0.9, 0.8, 0.7])
    n = np.array([0.0, 5.0, 4.0, 3.0, 2.0])
    t = np.arange(5.0)
    assert locate_extrema(f, n, t) == (2.0, 4.0)


def test_extrema_dip():
    f = np.array([0.5, 0.9, 0.8, 0.7, 0.6, 0.6])
    n = np.array([0.0, 5.0, 1.0, 2.0, 3.0, 0.5])
    assert locate_extrema(f, n, np.arange(6.0)) == (1.0, 2.0)


def test_extrema_tie_goes_early():
    f = np.array([0.5, 0.9, 0.7, 0.9, 0.6])
    assert locate_extrema(f, np.zeros(5), np.arange(5.0))[0] == 1.0


def test_best_rule_prefers_shorter_reset():
    f = np.array([0.5, 0.9, 0.8, 0.7, 0.6, 0.6])
    n = np.array([0.0, 5.0, 1.0, 2.0, 3.0, 0.01])
    t = np.arange(6.0)
    assert locate_extrema(f, n, t, rule="best", n_target=0.05, kappa=10.0)[1] == 5.0
    with pytest.raises(ValueError):
        locate_extrema(f, n, t, rule="best")


def test_reset_time_examples(kyoto, brisbane):
    assert reset_time(250.0, kyoto.n_target, kyoto) == 250.0
    expected = 400 + (8 / 21.4) * math.log(12) * 1000
    assert reset_time(400.0, 0.6, brisbane) == pytest.approx(expected)
    assert expected == pytest.approx(1329, abs=1)


@given(st.floats(0, 1e4), st.floats(0, 0.05))
def test_reset_time_clamps_below_target(kyoto, t, n):
    assert reset_time(t, n, kyoto) == t
