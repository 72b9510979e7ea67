"""Lookup-table beamformers for element data (das) and decomposed data (kk).

Both beamformers share the transmit part: a plane wave at theta_i reaches
pixel r = (x, z) after tau_in = (x sin + z cos) / c, split into the
separable tables lut_tx_x[ix, n] = x sin(theta_i) / c and
lut_tx_z[iz, n] = z cos(theta_i) / c.

das sums element traces at tau_in + hypot(x - u_l, z) / c. The hypot term
only depends on the lateral offset x - u_l, so it is tabulated once on an
offset grid with the pixel pitch dx (nodes x0 - u_max + m dx,
m = 0 .. X + L_eff - 1, L_eff = ceil(aperture / dx)) and each element
lands on that grid at a constant shift; incommensurate pitches fall
between nodes and are linearly interpolated.

kk sums the virtual plane-wave traces at tau_in + tau_out with the
separable receive tables lut_rx_x[ix, m] = x sin(theta_o) / c and
lut_rx_z[iz, m] = z cos(theta_o) / c. A decomposed trace labeled theta_o
holds the component whose look direction is the mirrored angle (see
compress), so the kernel composes tau_out = lut_rx_z - lut_rx_x; over the
symmetric receive sets this spends the same delay budget, paired trace by
trace, and it is what focuses off-axis targets.

Sampling rules shared by all beamformers: traces are read at fractional
index (tau + pulse_delay - t0) * fs with linear (default) or nearest
interpolation; any read outside the window contributes zero; summation
order is fixed (transmit ascending, then channel ascending) so results
are bit-reproducible regardless of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .core import (
    AnalyticRF,
    ComplexImage,
    CompressedRF,
    ImageGrid,
    IntensityImage,
)
from .errors import ConfigError, GeometryError
from .sampling import ReceiveAngleSet

_NO_GATE = math.inf


@dataclass(frozen=True)
class BeamformConfig:
    """Sampling and gating knobs shared by das and kk.

    pulse_delay shifts every read time; it defaults to 0 because the
    bundled simulator centers the echo peak on the geometric delay. Set
    it to the peak offset of data whose pulse is anchored elsewhere.
    max_rx_angle (das only) limits each element's acceptance cone;
    None uses the full aperture. channel_weights, when given, multiplies
    each element (das) or each receive trace (kk).
    """

    interpolation: str = "linear"
    pulse_delay: float = 0.0
    max_rx_angle: float | None = None
    channel_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.interpolation not in ("linear", "nearest"):
            raise ConfigError(f"unknown interpolation {self.interpolation!r}")
        if self.max_rx_angle is not None and not 0 < self.max_rx_angle < math.pi / 2:
            raise ConfigError("max_rx_angle must be in (0, pi/2)")


@dataclass(frozen=True, eq=False)
class DelayLUTSet:
    """Precomputed delay tables bound to one (grid, acquisition) pair."""

    kind: str  # "das" | "kk"
    grid: ImageGrid
    sound_speed: float
    transmit_angles: np.ndarray  # (N,)
    lut_tx_x: np.ndarray  # (X, N) s
    lut_tx_z: np.ndarray  # (Z, N) s
    # das fields
    element_positions: np.ndarray | None = None  # (L,)
    lut_rx_hypot: np.ndarray | None = None  # (X + L_eff, Z) s
    rx_base: np.ndarray | None = None  # (L,) offset-grid node below each element
    rx_frac: np.ndarray | None = None  # (L,) interpolation weight toward the next node
    # kk fields
    receive_angles: np.ndarray | None = None  # (M,)
    lut_rx_x: np.ndarray | None = None  # (X, M) s
    lut_rx_z: np.ndarray | None = None  # (Z, M) s

    @property
    def entry_count(self) -> int:
        """Total delay entries actually allocated."""
        total = self.lut_tx_x.size + self.lut_tx_z.size
        for t in (self.lut_rx_hypot, self.lut_rx_x, self.lut_rx_z):
            if t is not None:
                total += t.size
        return total


def cache_model_entries(grid: ImageGrid, num_transmits: int, num_channels: int, kind: str) -> int:
    """Delay-cache size of the two methods in the nominal accounting model.

    das: (X + Z) N + (X + L) Z entries; kk: (X + Z)(N + M). The das
    figure assumes element-pitch offset nodes; the concrete das table
    uses pixel-pitch nodes (X + ceil(aperture / dx) rows), see
    build_das_luts.
    """
    x, z = grid.nx, grid.nz
    if kind == "das":
        return (x + z) * num_transmits + (x + num_channels) * z
    if kind == "kk":
        return (x + z) * (num_transmits + num_channels)
    raise ConfigError(f"unknown beamformer kind {kind!r}")


def _tx_tables(grid, angles, c):
    sin_t = np.sin(angles)
    cos_t = np.cos(angles)
    ltx = grid.x[:, None] * sin_t[None, :] / c
    ltz = grid.z[:, None] * cos_t[None, :] / c
    return ltx, ltz


def build_das_luts(grid: ImageGrid, array, params) -> DelayLUTSet:
    """Tables for das: separable transmit delays plus the shared hypot table.

    Element positions need not be commensurate with the pixel pitch; each
    element stores its offset-grid shift as an integer node plus a
    fractional interpolation weight.
    """
    c = params.sound_speed
    ltx, ltz = _tx_tables(grid, params.transmit_angles, c)
    u = array.positions
    l_eff = int(math.ceil(array.aperture / grid.dx))
    offsets = grid.x0 - u[-1] + grid.dx * np.arange(grid.nx + l_eff)
    hyp = np.sqrt(offsets[:, None] ** 2 + grid.z[None, :] ** 2) / c
    shift = (u[-1] - u) / grid.dx  # node offset of each element, >= 0
    base = np.floor(shift).astype(np.int64)
    frac = shift - base
    return DelayLUTSet(
        kind="das",
        grid=grid,
        sound_speed=c,
        transmit_angles=np.asarray(params.transmit_angles, dtype=np.float64),
        lut_tx_x=ltx,
        lut_tx_z=ltz,
        element_positions=np.asarray(u, dtype=np.float64),
        lut_rx_hypot=hyp,
        rx_base=base,
        rx_frac=frac,
    )


def build_kk_luts(grid: ImageGrid, params, receive: ReceiveAngleSet) -> DelayLUTSet:
    """Tables for kk: separable transmit and receive plane-wave delays."""
    c = params.sound_speed
    ltx, ltz = _tx_tables(grid, params.transmit_angles, c)
    sin_o = np.sin(receive.angles)
    cos_o = np.cos(receive.angles)
    return DelayLUTSet(
        kind="kk",
        grid=grid,
        sound_speed=c,
        transmit_angles=np.asarray(params.transmit_angles, dtype=np.float64),
        lut_tx_x=ltx,
        lut_tx_z=ltz,
        receive_angles=np.asarray(receive.angles, dtype=np.float64),
        lut_rx_x=grid.x[:, None] * sin_o[None, :] / c,
        lut_rx_z=grid.z[:, None] * cos_o[None, :] / c,
    )


@njit(parallel=True, cache=True)
def _das_kernel(
    data, ltx, ltz, hyp, base, frac, xcoord, zcoord, upos, tan_max, weights, fs, shift, linear, out
):  # pragma: no cover - exercised through das
    n_tx, n_el, n_t = data.shape
    nx, nz = out.shape
    for p in prange(nx * nz):
        ix = p // nz
        iz = p % nz
        acc = 0.0 + 0.0j
        for n in range(n_tx):
            tx = ltx[ix, n] + ltz[iz, n]
            for l in range(n_el):
                if abs(xcoord[ix] - upos[l]) > zcoord[iz] * tan_max:
                    continue
                r0 = ix + base[l]
                h = hyp[r0, iz]
                fr = frac[l]
                if fr > 0.0:
                    h += fr * (hyp[r0 + 1, iz] - h)
                fi = (tx + h) * fs + shift
                if linear:
                    i0 = int(math.floor(fi))
                    if 0 <= i0 and i0 + 1 <= n_t - 1:
                        d0 = data[n, l, i0]
                        d1 = data[n, l, i0 + 1]
                        acc += weights[l] * (d0 + (fi - i0) * (d1 - d0))
                else:
                    j = int(math.floor(fi + 0.5))
                    if 0 <= j <= n_t - 1:
                        acc += weights[l] * data[n, l, j]
        out[ix, iz] = acc


@njit(parallel=True, cache=True)
def _kk_kernel(
    data, ltx, ltz, lrx, lrz, weights, fs, shift, linear, out
):  # pragma: no cover - exercised through kk
    n_tx, n_rx, n_t = data.shape
    nx, nz = out.shape
    for p in prange(nx * nz):
        ix = p // nz
        iz = p % nz
        acc = 0.0 + 0.0j
        for n in range(n_tx):
            tx = ltx[ix, n] + ltz[iz, n]
            for m in range(n_rx):
                fi = (tx + lrz[iz, m] - lrx[ix, m]) * fs + shift
                if linear:
                    i0 = int(math.floor(fi))
                    if 0 <= i0 and i0 + 1 <= n_t - 1:
                        d0 = data[n, m, i0]
                        d1 = data[n, m, i0 + 1]
                        acc += weights[m] * (d0 + (fi - i0) * (d1 - d0))
                else:
                    j = int(math.floor(fi + 0.5))
                    if 0 <= j <= n_t - 1:
                        acc += weights[m] * data[n, m, j]
        out[ix, iz] = acc


def _resolve_weights(config, count, what):
    if config.channel_weights is None:
        return np.ones(count)
    w = np.asarray(config.channel_weights, dtype=np.float64)
    if w.shape != (count,):
        raise GeometryError(f"channel_weights must have shape ({count},) for {what}")
    return w


def _check_common(luts, params, kind):
    if luts.kind != kind:
        raise GeometryError(f"LUT set was built for {luts.kind!r}, not {kind!r}")
    if luts.sound_speed != params.sound_speed:
        raise GeometryError("LUT sound speed does not match the data")
    if not np.array_equal(luts.transmit_angles, params.transmit_angles):
        raise GeometryError("LUT transmit angles do not match the data")


def das(rf: AnalyticRF, luts: DelayLUTSet, config: BeamformConfig = BeamformConfig()) -> ComplexImage:
    """Delay-and-sum the analytic element data onto the LUT grid.

    Parameters
    ----------
    rf : AnalyticRF
        (N, L, T) one-sided element data.
    luts : DelayLUTSet
        From build_das_luts for the same array and acquisition.
    config : BeamformConfig
        Interpolation, pulse delay, acceptance gating, weights.

    Returns
    -------
    ComplexImage with pixels (nx, nz).
    """
    _check_common(luts, rf.params, "das")
    if not np.array_equal(luts.element_positions, rf.array.positions):
        raise GeometryError("LUT element positions do not match the array")
    weights = _resolve_weights(config, rf.array.num_elements, "das")
    tan_max = math.tan(config.max_rx_angle) if config.max_rx_angle is not None else _NO_GATE
    fs = rf.array.sampling_frequency
    shift = (config.pulse_delay - rf.params.start_time) * fs
    out = np.empty((luts.grid.nx, luts.grid.nz), dtype=np.complex128)
    _das_kernel(
        rf.data,
        luts.lut_tx_x,
        luts.lut_tx_z,
        luts.lut_rx_hypot,
        luts.rx_base,
        luts.rx_frac,
        luts.grid.x,
        luts.grid.z,
        luts.element_positions,
        tan_max,
        weights,
        fs,
        shift,
        config.interpolation == "linear",
        out,
    )
    return ComplexImage(out, luts.grid)


def direct_das(rf: AnalyticRF, grid: ImageGrid, config: BeamformConfig = BeamformConfig()) -> ComplexImage:
    """Reference delay-and-sum evaluating every delay directly.

    Same sampling, gating, and ordering rules as das but no lookup
    tables: each (pixel, transmit, element) delay is computed from the
    exact geometry. Slow; intended as an oracle for das.
    """
    params = rf.params
    u = rf.array.positions
    c = params.sound_speed
    fs = rf.array.sampling_frequency
    n_t = params.num_samples
    weights = _resolve_weights(config, rf.array.num_elements, "das")
    tan_max = math.tan(config.max_rx_angle) if config.max_rx_angle is not None else _NO_GATE
    shift = (config.pulse_delay - params.start_time) * fs
    linear = config.interpolation == "linear"
    x = grid.x[:, None]
    z = grid.z[None, :]
    acc = np.zeros((grid.nx, grid.nz), dtype=np.complex128)
    for n, theta in enumerate(params.transmit_angles):
        tau_in = (x * math.sin(theta) + z * math.cos(theta)) / c
        for l in range(u.size):
            gate = np.abs(x - u[l]) <= z * tan_max
            fi = (tau_in + np.hypot(x - u[l], z) / c) * fs + shift
            trace = rf.data[n, l]
            if linear:
                i0 = np.floor(fi).astype(np.int64)
                ok = gate & (i0 >= 0) & (i0 + 1 <= n_t - 1)
                i0c = np.clip(i0, 0, n_t - 2)
                d0 = trace[i0c]
                vals = d0 + (fi - i0) * (trace[i0c + 1] - d0)
            else:
                j = np.floor(fi + 0.5).astype(np.int64)
                ok = gate & (j >= 0) & (j <= n_t - 1)
                vals = trace[np.clip(j, 0, n_t - 1)]
            acc += weights[l] * np.where(ok, vals, 0.0)
    return ComplexImage(acc, grid)


def kk(rfc: CompressedRF, luts: DelayLUTSet, config: BeamformConfig = BeamformConfig()) -> ComplexImage:
    """Beamform decomposed plane-wave traces onto the LUT grid.

    Parameters
    ----------
    rfc : CompressedRF
        (N, M, T) virtual plane-wave traces from compress.
    luts : DelayLUTSet
        From build_kk_luts with the same transmit and receive angles.
    config : BeamformConfig
        Interpolation, pulse delay, weights (per receive trace).

    Returns
    -------
    ComplexImage with pixels (nx, nz).
    """
    _check_common(luts, rfc.params, "kk")
    if not np.array_equal(luts.receive_angles, rfc.receive_angles.angles):
        raise GeometryError("LUT receive angles do not match the data")
    weights = _resolve_weights(config, rfc.receive_angles.num_angles, "kk")
    fs = rfc.sampling_frequency
    shift = (config.pulse_delay - rfc.params.start_time) * fs
    out = np.empty((luts.grid.nx, luts.grid.nz), dtype=np.complex128)
    _kk_kernel(
        rfc.data,
        luts.lut_tx_x,
        luts.lut_tx_z,
        luts.lut_rx_x,
        luts.lut_rx_z,
        weights,
        fs,
        shift,
        config.interpolation == "linear",
        out,
    )
    return ComplexImage(out, luts.grid)


def intensity(image: ComplexImage) -> IntensityImage:
    """Squared magnitude of a single complex image."""
    return IntensityImage(np.abs(image.pixels) ** 2, image.grid)


def _common_grid(images):
    if not images:
        raise ConfigError("need at least one image to compound")
    grid = images[0].grid
    for im in images[1:]:
        if im.grid is not grid and (
            (im.grid.x0, im.grid.z0, im.grid.dx, im.grid.dz, im.grid.nx, im.grid.nz)
            != (grid.x0, grid.z0, grid.dx, grid.dz, grid.nx, grid.nz)
        ):
            raise GeometryError("cannot compound images on different grids")
    return grid


def compound_coherent(images) -> IntensityImage:
    """|sum of complex images|^2; phases interfere before detection."""
    grid = _common_grid(images)
    acc = np.zeros((grid.nx, grid.nz), dtype=np.complex128)
    for im in images:
        acc += im.pixels
    return IntensityImage(np.abs(acc) ** 2, grid)


def compound_incoherent(images) -> IntensityImage:
    """Sum of |complex image|^2; envelopes add after detection."""
    grid = _common_grid(images)
    acc = np.zeros((grid.nx, grid.nz), dtype=np.float64)
    for im in images:
        acc += np.abs(im.pixels) ** 2
    return IntensityImage(acc, grid)
