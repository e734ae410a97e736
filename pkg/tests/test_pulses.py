import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rlreadout.device import uncalibrated
from rlreadout.errors import InvalidParameterError
from rlreadout.langevin import DriveWaveform
from rlreadout.pulses import (SIGMA_NS, TransformConfig, clip, default_square_action, gaussian_smooth,
                              read_waveform, smoothing_kernel, steady_state_amplitude, to_physical,
                              write_waveform)

actions = arrays(np.float64, st.integers(1, 130), elements=st.floats(-10, 10))


def test_steady_state_amplitude_examples(kyoto, brisbane):
    assert steady_state_amplitude(kyoto) == pytest.approx(29.8, abs=0.05)
    assert steady_state_amplitude(brisbane) == pytest.approx(82.6, abs=0.1)
    assert steady_state_amplitude(uncalibrated(2.0, 1e-300, 1.0, 300.0)) == pytest.approx(1.0)


def test_clip_examples():
    out = clip(np.array([1.5 * 2.5, -3 * 2.5, 0.3]), 2.5).samples
    assert list(out) == [2.5, -2.5, 0.3]


@given(actions)
def test_clip_idempotent(x):
    once = clip(x, 2.5).samples
    assert np.array_equal(clip(once, 2.5).samples, once)


def test_kernel_unit_mass_and_symmetric():
    k = smoothing_kernel(SIGMA_NS)
    assert k.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(k, k[::-1])
    assert np.all(k > 0)


def test_smoothing_preserves_interior_dc():
    out = gaussian_smooth(np.full(60, 3.7)).samples
    half = smoothing_kernel(SIGMA_NS).size // 2
    assert np.max(np.abs(out[half:-half] - 3.7)) < 1e-10


def test_impulse_returns_kernel():
    x = np.zeros(41)
    x[20] = 1.0
    out = gaussian_smooth(x).samples
    k = smoothing_kernel(SIGMA_NS)
    h = k.size // 2
    assert np.allclose(out[20 - h:21 + h], k)
    assert out.sum() == pytest.approx(1.0)


def test_smoothing_rejects_bad_sigma():
    with pytest.raises(InvalidParameterError):
        gaussian_smooth(np.ones(5), 0.0)


def test_to_physical_examples(kyoto):
    assert np.all(to_physical(np.zeros(121), kyoto).samples == 0)
    a0 = steady_state_amplitude(kyoto)
    phys = to_physical(np.ones(121), kyoto).samples
    assert np.allclose(phys[10:-10], a0)


@given(actions)
def test_physical_bounded(x):
    tconf = TransformConfig(mu=2.5, a0=30.0)
    phys = to_physical(x, tconf).samples
    assert np.all(np.abs(phys) <= 2.5 * 30.0 * (1 + 1e-12))
    assert phys.size == x.size


def test_to_physical_rejects_nan(kyoto):
    with pytest.raises(InvalidParameterError):
        to_physical(np.array([0.0, np.nan]), kyoto)


def test_default_square():
    a = default_square_action()
    assert a.size == 121 and a.sum() == 120 and a[-1] == 0


def test_waveform_file_round_trip(tmp_path, rng):
    w = DriveWaveform(rng.normal(size=17) * math.pi, dt=6.0)
    p = tmp_path / "w.txt"
    write_waveform(p, w)
    back = read_waveform(p)
    assert back.dt == 6.0 and np.array_equal(back.samples, w.samples)


def test_waveform_file_bad_header(tmp_path):
    p = tmp_path / "w.txt"
    p.write_text("1.0\n2.0\n")
    with pytest.raises(InvalidParameterError):
        read_waveform(p)
