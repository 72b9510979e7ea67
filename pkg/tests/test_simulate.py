"""Pulse synthesis, phantom builders, and the plane-wave forward model."""

import numpy as np
import pytest
import scipy.signal

import kkbeam as kb
from kkbeam.errors import ConfigError, WindowOverflowError


def test_make_pulse_peak_is_one_and_centered():
    p = kb.make_pulse(5.2e6, 0.67, 20.83e6)
    w = p.waveform
    assert w.size % 2 == 1
    assert w.max() == 1.0
    assert int(np.argmax(w)) == (w.size - 1) // 2 == p.peak_index


def test_make_pulse_spectral_peak_within_one_bin():
    fs = 20.83e6
    p = kb.make_pulse(5.2e6, 0.6, fs)
    spec = np.abs(np.fft.rfft(p.waveform))
    freqs = np.fft.rfftfreq(p.waveform.size, d=1.0 / fs)
    bin_width = fs / p.waveform.size
    assert abs(freqs[np.argmax(spec)] - 5.2e6) <= bin_width


def test_make_pulse_envelope_width_tracks_bandwidth():
    # -6 dB full width of the spectral envelope ~ bw * nu
    fs, nu, bw = 40e6, 5.2e6, 0.6
    p = kb.make_pulse(nu, bw, fs)
    n = 1 << 14
    spec = np.abs(np.fft.rfft(p.waveform, n))
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    half = spec.max() / 2  # -6 dB in amplitude
    above = freqs[spec >= half]
    width = above.max() - above.min()
    assert width == pytest.approx(bw * nu, rel=0.05)


def test_make_pulse_narrowband_is_locally_sinusoidal():
    fs, nu = 40e6, 5.2e6
    p = kb.make_pulse(nu, 0.05, fs)
    w = p.waveform
    mid = p.peak_index
    cycle = int(round(fs / nu))
    env = np.abs(scipy.signal.hilbert(w))
    # envelope nearly flat over the central two cycles, unlike a wideband pulse
    assert env[mid - 2 * cycle: mid + 2 * cycle + 1].min() > 0.95
    wide = kb.make_pulse(nu, 0.67, fs)
    env_w = np.abs(scipy.signal.hilbert(wide.waveform))
    k = wide.peak_index
    assert env_w[k - 2 * cycle: k + 2 * cycle + 1].min() < 0.5


def test_make_pulse_rejects_bad_band():
    with pytest.raises(ConfigError):
        kb.make_pulse(5.2e6, 1.4, 40e6)
    with pytest.raises(ConfigError):
        kb.make_pulse(5.2e6, 0.0, 40e6)
    with pytest.raises(ConfigError):
        kb.make_pulse(5.2e6, 0.67, 10e6)  # below band Nyquist


def test_wire_phantom_layouts():
    single = kb.wire_phantom([], 10e-3)
    assert single.x.size == 1 and single.z[0] == 10e-3

    trio = kb.wire_phantom([0.25e-3, 0.25e-3], 10e-3)
    assert trio.x.size == 3
    assert trio.x.max() - trio.x.min() == pytest.approx(0.5e-3, rel=1e-12)
    assert np.all(trio.reflectivity == 1.0)

    pair = kb.wire_phantom([0.5e-3, 1.0e-3], 10e-3)
    rel = pair.x - pair.x[0]
    assert np.allclose(rel, [0.0, 0.5e-3, 1.5e-3], atol=1e-18)
    # the row is centered on x = 0 (midpoint of the span)
    assert pair.x.min() + pair.x.max() == pytest.approx(0.0, abs=1e-18)


def test_wire_phantom_rejects_nonpositive_spacing():
    with pytest.raises(ConfigError):
        kb.wire_phantom([0.0], 10e-3)
    with pytest.raises(ConfigError):
        kb.wire_phantom([0.25e-3], -2e-3)


def test_speckle_phantom_seeded_and_carved():
    region = (-4e-3, 4e-3, 8e-3, 12e-3)
    a = kb.speckle_phantom(region, 50e6, seed=3,
                           inclusion_center=(0.0, 10e-3),
                           inclusion_radius=1.5e-3)
    b = kb.speckle_phantom(region, 50e6, seed=3,
                           inclusion_center=(0.0, 10e-3),
                           inclusion_radius=1.5e-3)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.reflectivity, b.reflectivity)
    inside = (a.x - 0.0) ** 2 + (a.z - 10e-3) ** 2 <= (1.5e-3) ** 2
    assert not inside.any()

    plain = kb.speckle_phantom(region, 50e6, seed=3)
    carved = kb.speckle_phantom(region, 50e6, seed=3,
                                inclusion_center=(0.0, 10e-3),
                                inclusion_radius=0.0)
    assert plain.x.size == carved.x.size
    # expected count = density * area
    assert plain.x.size == round(50e6 * 8e-3 * 4e-3)


def test_simulate_on_axis_round_trip(small_array, pulse52):
    params = kb.AcquisitionParams(1540.0, [0.0, 0.05], 512)
    z0 = 8e-3
    ph = kb.Phantom(np.array([0.0]), np.array([z0]), np.array([1.0]))
    rf = kb.simulate_rf(small_array, params, ph, pulse52)
    u = kb.element_positions(64, 0.23e-3)
    fs = small_array.sampling_frequency
    # nearest-to-center elements see the echo at 2 z0 / c
    for l in (31, 32, 0, 63):
        t_true = (z0 + np.hypot(u[l], z0)) / 1540.0
        assert abs(rf.data[0, l].argmax() - t_true * fs) <= 1.0


def test_simulate_empty_phantom_is_zero(small_array, pulse52):
    params = kb.AcquisitionParams(1540.0, [0.0, 0.05], 64)
    ph = kb.Phantom(np.empty(0), np.empty(0), np.empty(0))
    rf = kb.simulate_rf(small_array, params, ph, pulse52)
    assert not rf.data.any()


def test_simulate_linearity_exact(small_array, pulse52):
    params = kb.AcquisitionParams(1540.0, kb.transmit_angles(3, 0.2), 512)
    a = kb.Phantom(np.array([0.5e-3]), np.array([9e-3]), np.array([1.0]))
    b = kb.Phantom(np.array([-1e-3]), np.array([11e-3]), np.array([0.6]))
    rf_a = kb.simulate_rf(small_array, params, a, pulse52)
    rf_b = kb.simulate_rf(small_array, params, b, pulse52)
    rf_ab = kb.simulate_rf(small_array, params, kb.merge_phantoms(a, b), pulse52)
    assert np.array_equal(rf_ab.data, rf_a.data + rf_b.data)


def test_simulate_mirror_reciprocity(small_array, pulse52):
    angles = kb.transmit_angles(5, 0.21)
    params = kb.AcquisitionParams(1540.0, angles, 512)
    ph = kb.Phantom(np.array([1.3e-3, -0.4e-3]), np.array([9e-3, 11e-3]),
                    np.array([1.0, 0.8]))
    mirrored = kb.Phantom(-ph.x, ph.z, ph.reflectivity)
    rf = kb.simulate_rf(small_array, params, ph, pulse52)
    rf_m = kb.simulate_rf(small_array, params, mirrored, pulse52)
    # mirroring the scene flips both the element axis and the angle axis
    flipped = rf_m.data[::-1, ::-1, :]
    scale = np.abs(rf.data).max()
    assert np.abs(rf.data - flipped).max() <= 1e-6 * scale


def test_simulate_noise_seeded(small_array, pulse52):
    params = kb.AcquisitionParams(1540.0, [0.0, 0.05], 128)
    ph = kb.Phantom(np.empty(0), np.empty(0), np.empty(0))
    a = kb.simulate_rf(small_array, params, ph, pulse52, noise_rms=0.5, seed=11)
    b = kb.simulate_rf(small_array, params, ph, pulse52, noise_rms=0.5, seed=11)
    c = kb.simulate_rf(small_array, params, ph, pulse52, noise_rms=0.5, seed=12)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)
    assert a.data.std() == pytest.approx(0.5, rel=0.05)


def test_simulate_window_overflow_names_scatterer(small_array, pulse52):
    params = kb.AcquisitionParams(1540.0, [0.0, 0.05], 64)  # ~4.7 mm window
    ph = kb.Phantom(np.array([0.0, 0.0]), np.array([1e-3, 30e-3]),
                    np.array([1.0, 1.0]))
    with pytest.raises(WindowOverflowError) as err:
        kb.simulate_rf(small_array, params, ph, pulse52)
    assert "1" in str(err.value)  # offending scatterer index
