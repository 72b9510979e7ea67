"""Beamformer tests: LUT construction, das/kk kernels, compounding."""

import numpy as np
import pytest

import kkbeam as kb
from kkbeam.errors import ConfigError, GeometryError

DEG = np.pi / 180.0
C = 1540.0


def _rel_rms(got, ref):
    return np.linalg.norm(got - ref) / np.linalg.norm(ref)


@pytest.fixture(scope="module")
def single_point(small_array, pulse52):
    # one scatterer at (0, 10 mm), N = 15 transmits over +-12 deg
    params = kb.AcquisitionParams(C, kb.transmit_angles(15, 12 * DEG), 1024)
    phantom = kb.Phantom(np.array([0.0]), np.array([10e-3]), np.array([1.0]))
    rf = kb.simulate_rf(small_array, params, phantom, pulse52)
    an = kb.analytic_signal(rf)
    dx = 0.23e-3 / 4
    grid = kb.ImageGrid(-48 * dx + dx / 2, 9e-3, dx, 0.1e-3, 96, 24)
    return params, an, grid


# ---------------------------------------------------------------- LUTs


def test_das_lut_zero_offset_element_gives_vertical_delay():
    # 65 elements -> center element exactly at u = 0; dx = pitch keeps the
    # offset grid on exact nodes
    pitch = 0.23e-3
    arr = kb.TransducerArray(65, pitch, 5.2e6, 20.83e6, 0.67)
    params = kb.AcquisitionParams(C, [-0.1, 0.0, 0.1], 128)
    grid = kb.ImageGrid(-3 * pitch, 5e-3, pitch, 0.2e-3, 7, 5)
    luts = kb.build_das_luts(grid, arr, params)

    l0 = 32
    assert arr.positions[l0] == 0.0
    ix0 = int(np.argmin(np.abs(grid.x)))
    assert grid.x[ix0] == 0.0
    row = ix0 + int(luts.rx_base[l0])
    h0 = luts.lut_rx_hypot[row, :]
    looked_up = h0 + luts.rx_frac[l0] * (luts.lut_rx_hypot[row + 1, :] - h0)
    assert np.allclose(looked_up, grid.z / C, rtol=1e-9)


def test_das_lut_zero_transmit_angle_column_is_zero():
    arr = kb.TransducerArray(8, 0.23e-3, 5.2e6, 20.83e6, 0.67)
    params = kb.AcquisitionParams(C, [-0.2, 0.0, 0.25], 128)
    grid = kb.ImageGrid(-1e-3, 5e-3, 0.1e-3, 0.1e-3, 16, 8)
    luts = kb.build_das_luts(grid, arr, params)
    assert np.all(luts.lut_tx_x[:, 1] == 0.0)
    # and the transmit z table for theta_i = 0 is exactly z / c
    assert np.array_equal(luts.lut_tx_z[:, 1], grid.z / C)


def test_das_lut_lookup_matches_direct_hypot():
    # incommensurate pitch: every element lands between offset nodes
    arr = kb.TransducerArray(48, 0.2371e-3, 5.2e6, 20.83e6, 0.67)
    params = kb.AcquisitionParams(C, [0.0, 0.1], 64)
    grid = kb.ImageGrid(-2.9e-3, 5e-3, 0.06e-3, 0.11e-3, 100, 50)
    luts = kb.build_das_luts(grid, arr, params)

    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        ix = int(rng.integers(0, grid.nx))
        iz = int(rng.integers(0, grid.nz))
        l = int(rng.integers(0, arr.num_elements))
        r0 = ix + int(luts.rx_base[l])
        h0 = luts.lut_rx_hypot[r0, iz]
        h = h0 + luts.rx_frac[l] * (luts.lut_rx_hypot[r0 + 1, iz] - h0)
        direct = np.hypot(grid.x[ix] - arr.positions[l], grid.z[iz]) / C
        worst = max(worst, abs(h - direct) / direct)
    assert worst <= 1e-4


def test_das_lut_hypot_bounded_below_by_vertical_delay():
    arr = kb.TransducerArray(32, 0.23e-3, 5.2e6, 20.83e6, 0.67)
    params = kb.AcquisitionParams(C, [0.0, 0.1], 64)
    grid = kb.ImageGrid(-2e-3, 3e-3, 0.07e-3, 0.13e-3, 60, 40)
    luts = kb.build_das_luts(grid, arr, params)
    assert np.all(np.isfinite(luts.lut_rx_hypot))
    assert np.all(luts.lut_rx_hypot >= (grid.z / C)[None, :] * (1 - 1e-12))


def test_kk_lut_zero_receive_column_and_entry_identity():
    params = kb.AcquisitionParams(C, kb.transmit_angles(5, 10 * DEG), 128)
    rx = kb.uniform_vernier_angles(5, 5, 10 * DEG, 0)
    grid = kb.ImageGrid(-1.5e-3, 4e-3, 0.09e-3, 0.12e-3, 20, 15)
    luts = kb.build_kk_luts(grid, params, rx)

    m0 = 2  # generation order puts o = 0 in the middle
    assert rx.angles[m0] == 0.0
    assert np.all(luts.lut_rx_x[:, m0] == 0.0)
    assert np.array_equal(luts.lut_rx_z[:, m0], grid.z / C)

    # every entry is the plane-wave projection it claims to be
    s, co = np.sin(rx.angles), np.cos(rx.angles)
    assert np.array_equal(luts.lut_rx_x, grid.x[:, None] * s[None, :] / C)
    assert np.array_equal(luts.lut_rx_z, grid.z[:, None] * co[None, :] / C)


def test_cache_model_entry_counts():
    grid = kb.ImageGrid(-5e-3, 5e-3, 0.057e-3, 0.056e-3, 180, 180)
    assert kb.cache_model_entries(grid, 15, 21, "kk") == 12960
    assert kb.cache_model_entries(grid, 15, 192, "das") == 72360
    with pytest.raises(ConfigError):
        kb.cache_model_entries(grid, 15, 21, "mv")

    # the concrete kk tables realize the model count exactly
    params = kb.AcquisitionParams(C, kb.transmit_angles(15, 12 * DEG), 128)
    rx = kb.confocal_angles(15, 21, 12 * DEG)
    assert kb.build_kk_luts(grid, params, rx).entry_count == 12960


def test_das_table_uses_pixel_pitch_offset_rows(table1_array):
    # concrete das tables allocate X + ceil(aperture / dx) offset rows,
    # slightly below the (X + L) Z accounting when dx == pitch
    grid = kb.ImageGrid(-5e-3, 5e-3, 0.23e-3, 0.056e-3, 180, 180)
    params = kb.AcquisitionParams(C, kb.transmit_angles(15, 12 * DEG), 128)
    luts = kb.build_das_luts(grid, table1_array, params)
    l_eff = int(np.ceil(table1_array.aperture / grid.dx))
    assert l_eff == table1_array.num_elements - 1
    expect = (180 + 180) * 15 + (180 + l_eff) * 180
    assert luts.entry_count == expect
    assert luts.entry_count <= kb.cache_model_entries(grid, 15, 192, "das")


# ------------------------------------------------------- image formation


def test_zero_rf_gives_zero_images(small_array):
    params = kb.AcquisitionParams(C, [0.0, 0.1], 256)
    grid = kb.ImageGrid(-1e-3, 5e-3, 0.1e-3, 0.1e-3, 12, 10)
    zeros = np.zeros((2, 64, 256), dtype=np.complex64)
    an = kb.AnalyticRF(zeros, small_array, params)
    luts = kb.build_das_luts(grid, small_array, params)
    assert np.all(kb.das(an, luts).pixels == 0.0)
    assert np.all(kb.direct_das(an, grid).pixels == 0.0)

    rx = kb.explicit_angles([-0.1, 0.0, 0.1])
    rfc = kb.CompressedRF(
        np.zeros((2, 3, 256), dtype=np.complex64), rx, params, small_array
    )
    kluts = kb.build_kk_luts(grid, params, rx)
    assert np.all(kb.kk(rfc, kluts).pixels == 0.0)


def test_das_lut_path_matches_direct_das(point_dataset):
    array, params, rf, grid = point_dataset
    an = kb.analytic_signal(rf)
    luts = kb.build_das_luts(grid, array, params)
    img = kb.das(an, luts)
    ref = kb.direct_das(an, grid)
    assert _rel_rms(img.pixels, ref.pixels) <= 1e-4


def test_das_matches_direct_das_with_receive_gating(point_dataset):
    array, params, rf, grid = point_dataset
    an = kb.analytic_signal(rf)
    luts = kb.build_das_luts(grid, array, params)
    conf = kb.BeamformConfig(max_rx_angle=0.3)
    img = kb.das(an, luts, conf)
    ref = kb.direct_das(an, grid, conf)
    assert _rel_rms(img.pixels, ref.pixels) <= 1e-4
    # gating removed contributions, so the images genuinely differ
    full = kb.das(an, luts)
    assert not np.allclose(img.pixels, full.pixels)


def test_das_matches_direct_das_nearest_interpolation(point_dataset):
    array, params, rf, grid = point_dataset
    an = kb.analytic_signal(rf)
    luts = kb.build_das_luts(grid, array, params)
    conf = kb.BeamformConfig(interpolation="nearest")
    img = kb.das(an, luts, conf)
    ref = kb.direct_das(an, grid, conf)
    assert _rel_rms(img.pixels, ref.pixels) <= 1e-4


def test_das_peak_lands_on_strongest_scatterer(point_dataset):
    array, params, rf, grid = point_dataset
    an = kb.analytic_signal(rf)
    img = kb.das(an, kb.build_das_luts(grid, array, params))
    ix, iz = np.unravel_index(np.argmax(np.abs(img.pixels)), img.pixels.shape)
    assert abs(grid.x[ix] - 0.0) <= grid.dx / 2 + 1e-12
    assert abs(grid.z[iz] - 9e-3) <= grid.dz / 2 + 1e-12


def test_kk_pipeline_peak_within_one_pixel(small_array, single_point):
    params, an, grid = single_point
    rx = kb.confocal_angles(15, 21, 12 * DEG)
    rfc = kb.compress(an, rx)
    img = kb.kk(rfc, kb.build_kk_luts(grid, params, rx))
    ix, iz = np.unravel_index(np.argmax(np.abs(img.pixels)), img.pixels.shape)
    assert abs(grid.x[ix] - 0.0) <= grid.dx * 1.5
    assert abs(grid.z[iz] - 10e-3) <= grid.dz * 1.5


def test_kk_vernier_offset_sharpens_point(small_array, single_point):
    # larger j widens the receive k-space support -> narrower mainlobe
    params, an, grid = single_point
    widths = {}
    for j in (0, 6):
        rx = kb.uniform_vernier_angles(15, 5, 12 * DEG, j)
        rfc = kb.compress(an, rx)
        img = kb.kk(rfc, kb.build_kk_luts(grid, params, rx))
        widths[j] = kb.lateral_fwhm(kb.intensity(img), 0.0, 10e-3, 4e-3)
    assert widths[6] < widths[0]


def test_dense_receive_set_recovers_das_peak(small_array, single_point):
    # receive angles spanning the full element acceptance cone: kk and das
    # place the point target at the same pixel
    params, an, grid = single_point
    luts = kb.build_das_luts(grid, small_array, params)
    ref = kb.das(an, luts)

    theta_a = np.arctan((small_array.aperture / 2) / 10e-3)
    dense = kb.explicit_angles(np.linspace(-theta_a, theta_a, 64))
    rfc = kb.compress(an, dense)
    img = kb.kk(rfc, kb.build_kk_luts(grid, params, dense))

    p_ref = np.unravel_index(np.argmax(np.abs(ref.pixels)), ref.pixels.shape)
    p_img = np.unravel_index(np.argmax(np.abs(img.pixels)), img.pixels.shape)
    assert p_ref == p_img


def test_beamformers_are_deterministic(point_dataset):
    array, params, rf, grid = point_dataset
    an = kb.analytic_signal(rf)
    luts = kb.build_das_luts(grid, array, params)
    assert np.array_equal(kb.das(an, luts).pixels, kb.das(an, luts).pixels)

    rx = kb.uniform_vernier_angles(7, 5, 12 * DEG, 1)
    rfc = kb.compress(an, rx)
    kluts = kb.build_kk_luts(grid, params, rx)
    assert np.array_equal(kb.kk(rfc, kluts).pixels, kb.kk(rfc, kluts).pixels)


def test_channel_weights_scale_linearly(point_dataset):
    array, params, rf, grid = point_dataset
    an = kb.analytic_signal(rf)
    luts = kb.build_das_luts(grid, array, params)
    base = kb.das(an, luts)
    doubled = kb.das(
        an, luts, kb.BeamformConfig(channel_weights=np.full(64, 2.0))
    )
    assert np.allclose(doubled.pixels, 2.0 * base.pixels, rtol=1e-12)
    with pytest.raises(GeometryError):
        kb.das(an, luts, kb.BeamformConfig(channel_weights=np.ones(63)))


# ------------------------------------------------------------ validation


def test_beamform_config_validation():
    with pytest.raises(ConfigError):
        kb.BeamformConfig(interpolation="cubic")
    with pytest.raises(ConfigError):
        kb.BeamformConfig(max_rx_angle=0.0)
    with pytest.raises(ConfigError):
        kb.BeamformConfig(max_rx_angle=np.pi / 2)
    kb.BeamformConfig(interpolation="nearest", max_rx_angle=0.5)


def test_geometry_mismatches_are_rejected(small_array):
    params = kb.AcquisitionParams(C, [0.0, 0.1], 128)
    grid = kb.ImageGrid(-1e-3, 5e-3, 0.1e-3, 0.1e-3, 10, 10)
    an = kb.AnalyticRF(
        np.zeros((2, 64, 128), dtype=np.complex64), small_array, params
    )
    rx = kb.explicit_angles([-0.1, 0.0, 0.1])
    rfc = kb.compress(an, rx)
    dluts = kb.build_das_luts(grid, small_array, params)
    kluts = kb.build_kk_luts(grid, params, rx)

    with pytest.raises(GeometryError):
        kb.das(an, kluts)  # wrong kind
    with pytest.raises(GeometryError):
        kb.kk(rfc, dluts)

    other_c = kb.AcquisitionParams(1500.0, [0.0, 0.1], 128)
    with pytest.raises(GeometryError):
        kb.das(
            kb.AnalyticRF(an.data, small_array, other_c),
            dluts,
        )

    other_angles = kb.AcquisitionParams(C, [0.0, 0.2], 128)
    with pytest.raises(GeometryError):
        kb.das(kb.AnalyticRF(an.data, small_array, other_angles), dluts)

    narrow = kb.TransducerArray(64, 0.2e-3, 5.2e6, 20.83e6, 0.67)
    with pytest.raises(GeometryError):
        kb.das(kb.AnalyticRF(an.data, narrow, params), dluts)

    other_rx = kb.explicit_angles([-0.2, 0.0, 0.2])
    with pytest.raises(GeometryError):
        kb.kk(kb.CompressedRF(rfc.data, other_rx, params, small_array), kluts)


# ----------------------------------------------------------- compounding


def _toy_image(seed=0):
    grid = kb.ImageGrid(-1e-3, 2e-3, 0.1e-3, 0.1e-3, 8, 6)
    rng = np.random.default_rng(seed)
    pix = rng.standard_normal((8, 6)) + 1j * rng.standard_normal((8, 6))
    return kb.ComplexImage(pix, grid)


def test_compound_coherent_trivials():
    im = _toy_image()
    single = kb.compound_coherent([im])
    assert np.array_equal(single.pixels, kb.intensity(im).pixels)

    neg = kb.ComplexImage(-im.pixels, im.grid)
    assert np.all(kb.compound_coherent([im, neg]).pixels == 0.0)

    four = kb.compound_coherent([im, im])
    assert np.allclose(four.pixels, 4.0 * kb.intensity(im).pixels, rtol=1e-12)


def test_compound_incoherent_trivials():
    im = _toy_image(1)
    single = kb.compound_incoherent([im])
    assert np.array_equal(single.pixels, kb.intensity(im).pixels)

    neg = kb.ComplexImage(-im.pixels, im.grid)
    two = kb.compound_incoherent([im, neg])
    assert np.allclose(two.pixels, 2.0 * kb.intensity(im).pixels, rtol=1e-12)
    assert np.all(two.pixels >= 0.0)


def test_compound_rejects_mismatched_grids():
    im = _toy_image()
    other = kb.ComplexImage(
        np.zeros((8, 6), dtype=np.complex128),
        kb.ImageGrid(-1e-3, 3e-3, 0.1e-3, 0.1e-3, 8, 6),
    )
    with pytest.raises(GeometryError):
        kb.compound_coherent([im, other])
    with pytest.raises(GeometryError):
        kb.compound_incoherent([im, other])
    with pytest.raises(ConfigError):
        kb.compound_coherent([])

    # an equal-valued but distinct grid object is fine
    same = kb.ComplexImage(
        im.pixels.copy(), kb.ImageGrid(-1e-3, 2e-3, 0.1e-3, 0.1e-3, 8, 6)
    )
    kb.compound_coherent([im, same])


def test_intensity_trivials():
    grid = kb.ImageGrid(-1e-3, 2e-3, 0.1e-3, 0.1e-3, 4, 4)
    zero = kb.ComplexImage(np.zeros((4, 4), dtype=np.complex128), grid)
    assert np.all(kb.intensity(zero).pixels == 0.0)

    pix = np.zeros((4, 4), dtype=np.complex128)
    pix[1, 2] = 1.0
    unit = kb.intensity(kb.ComplexImage(pix, grid))
    assert unit.pixels[1, 2] == 1.0

    im = _toy_image(2)
    scaled = kb.ComplexImage(3.0 * im.pixels, im.grid)
    assert np.allclose(
        kb.intensity(scaled).pixels, 9.0 * kb.intensity(im).pixels, rtol=1e-12
    )
