"""Synthetic plane-wave RF generation for point-scatterer media.

The forward model is single scattering with straight-ray delays: for a
transmit at angle theta the echo of a scatterer at r lands in element
trace u at tau_in + tau_out, with tau_in = (x sin + z cos) / c (wavefront
through the origin at t = 0) and tau_out = hypot(x - u, z) / c. The pulse
waveform is time centered, so its peak sits exactly at the geometric
round-trip delay; contributions are laid down by linear interpolation of
the waveform at integer sample times. Echoes that would start before the
window are clipped, echoes that would end past it raise
WindowOverflowError naming the offending scatterer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit, prange
from scipy.signal import gausspulse

from .core import RF_DTYPE, AcquisitionParams, RFVolume, TransducerArray
from .errors import ConfigError, GeometryError, WindowOverflowError


class Scatterer(NamedTuple):
    x: float
    z: float
    reflectivity: float = 1.0


@dataclass(frozen=True, eq=False)
class Phantom:
    """A cloud of point scatterers, stored as parallel coordinate arrays."""

    x: np.ndarray  # (S,) m
    z: np.ndarray  # (S,) m
    reflectivity: np.ndarray  # (S,)

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=np.float64))
        z = np.atleast_1d(np.asarray(self.z, dtype=np.float64))
        r = np.atleast_1d(np.asarray(self.reflectivity, dtype=np.float64))
        if not (x.shape == z.shape == r.shape) or x.ndim != 1:
            raise ConfigError("phantom arrays must be 1-D and equally sized")
        if x.size and z.min() <= 0:
            raise ConfigError("scatterers must lie below the array (z > 0)")
        for name, arr in (("x", x), ("z", z), ("reflectivity", r)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.x.size)

    @property
    def scatterers(self) -> list[Scatterer]:
        return [Scatterer(*t) for t in zip(self.x, self.z, self.reflectivity)]

    @classmethod
    def from_scatterers(cls, scatterers) -> "Phantom":
        pts = [Scatterer(*s) for s in scatterers]
        return cls(
            np.array([p.x for p in pts]),
            np.array([p.z for p in pts]),
            np.array([p.reflectivity for p in pts]),
        )


def merge_phantoms(a: Phantom, b: Phantom) -> Phantom:
    """Union of two phantoms; keeps a's scatterers first."""
    return Phantom(
        np.concatenate([a.x, b.x]),
        np.concatenate([a.z, b.z]),
        np.concatenate([a.reflectivity, b.reflectivity]),
    )


@dataclass(frozen=True, eq=False)
class Pulse:
    """Gaussian-enveloped cosine burst sampled at sampling_frequency.

    waveform is odd length and time centered: the peak (value 1.0) is at
    index (len - 1) / 2, which the simulator and beamformers treat as the
    pulse's time origin.
    """

    center_frequency: float
    fractional_bandwidth: float
    sampling_frequency: float
    waveform: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.waveform, dtype=np.float64)
        if w.ndim != 1 or w.size < 3 or w.size % 2 == 0:
            raise ConfigError("pulse waveform must be 1-D with odd length >= 3")
        w.setflags(write=False)
        object.__setattr__(self, "waveform", w)

    @property
    def peak_index(self) -> int:
        return (self.waveform.size - 1) // 2


def make_pulse(
    center_frequency: float,
    fractional_bandwidth: float,
    sampling_frequency: float,
    cutoff_db: float = -60.0,
) -> Pulse:
    """Build a transmit pulse whose -6 dB spectral full width is
    fractional_bandwidth * center_frequency.

    The waveform is truncated where the Gaussian envelope falls to
    cutoff_db and padded to odd length so the peak lands on a sample.
    """
    if center_frequency <= 0 or sampling_frequency <= 0:
        raise ConfigError("frequencies must be positive")
    if not 0 < fractional_bandwidth <= 1:
        raise ConfigError("fractional bandwidth must be in (0, 1]")
    band_top = center_frequency * (1.0 + fractional_bandwidth / 2.0)
    if sampling_frequency <= 2.0 * band_top:
        raise ConfigError("sampling frequency does not cover the pulse band")
    if cutoff_db >= 0:
        raise ConfigError("cutoff_db must be negative")
    t_cut = gausspulse(
        "cutoff", fc=center_frequency, bw=fractional_bandwidth, bwr=-6, tpr=cutoff_db
    )
    half = max(1, int(math.ceil(t_cut * sampling_frequency)))
    t = np.arange(-half, half + 1) / sampling_frequency
    w = gausspulse(t, fc=center_frequency, bw=fractional_bandwidth, bwr=-6)
    return Pulse(center_frequency, fractional_bandwidth, sampling_frequency, w)


def wire_phantom(spacings, depth: float, reflectivity: float = 1.0) -> Phantom:
    """A lateral row of unit wires with the given consecutive spacings.

    The row lies at the given depth and is centered about x = 0; the
    x-coordinates relative to the first wire are cumsum([0, *spacings]).
    """
    gaps = np.asarray(spacings, dtype=np.float64)
    if gaps.ndim != 1:
        raise ConfigError("spacings must be a 1-D sequence")
    if gaps.size and gaps.min() <= 0:
        raise ConfigError("wire spacings must be positive")
    if depth <= 0:
        raise ConfigError("depth must be positive")
    x = np.concatenate([[0.0], np.cumsum(gaps)])
    x = x - x[-1] / 2.0
    return Phantom(x, np.full(x.size, depth), np.full(x.size, reflectivity))


def speckle_phantom(
    region,
    density: float,
    seed: int,
    inclusion_center=None,
    inclusion_radius: float = 0.0,
) -> Phantom:
    """Uniform random scatterers with N(0, 1) reflectivity.

    region is (x_min, x_max, z_min, z_max) in meters, density in
    scatterers per square meter. Scatterers falling inside the optional
    circular inclusion are removed, leaving an anechoic void.
    """
    x0, x1, z0, z1 = (float(v) for v in region)
    if not (x1 > x0 and z1 > z0 and z0 > 0):
        raise ConfigError("speckle region must be a nonempty box below the array")
    if density <= 0:
        raise ConfigError("density must be positive")
    area = (x1 - x0) * (z1 - z0)
    count = int(round(density * area))
    if count < 1:
        raise ConfigError("density too low: no scatterers in region")
    rng = np.random.default_rng(seed)
    x = rng.uniform(x0, x1, count)
    z = rng.uniform(z0, z1, count)
    refl = rng.standard_normal(count)
    if inclusion_center is not None and inclusion_radius > 0:
        cx, cz = (float(v) for v in inclusion_center)
        keep = (x - cx) ** 2 + (z - cz) ** 2 > inclusion_radius**2
        x, z, refl = x[keep], z[keep], refl[keep]
    return Phantom(x, z, refl)


@njit(parallel=True, cache=True)
def _render_traces(
    out, sx, sz, refl, upos, sin_t, cos_t, inv_c, fs, t0, wave, half, spread
):  # pragma: no cover - exercised through simulate_rf
    n_tx, n_el, n_t = out.shape
    n_sc = sx.size
    n_w = wave.size
    for p in prange(n_tx * n_el):
        n = p // n_el
        l = p % n_el
        for s in range(n_sc):
            ddx = sx[s] - upos[l]
            dist = math.sqrt(ddx * ddx + sz[s] * sz[s])
            tau = (sx[s] * sin_t[n] + sz[s] * cos_t[n]) * inv_c + dist * inv_c
            amp = refl[s]
            if spread:
                amp /= math.sqrt(dist)
            tc = (tau - t0) * fs  # fractional index of the pulse peak
            j0 = int(math.ceil(tc - half))
            j1 = int(math.floor(tc + half))
            if j0 < 0:
                j0 = 0
            if j1 > n_t - 1:
                j1 = n_t - 1
            for j in range(j0, j1 + 1):
                q = j - tc + half  # position within the waveform
                i0 = int(math.floor(q))
                if i0 < 0 or i0 > n_w - 1:
                    continue
                v = wave[i0]
                fr = q - i0
                if fr > 0.0 and i0 + 1 < n_w:
                    v += fr * (wave[i0 + 1] - v)
                out[n, l, j] += amp * v


def simulate_rf(
    array: TransducerArray,
    params: AcquisitionParams,
    phantom: Phantom,
    pulse: Pulse,
    noise_rms: float = 0.0,
    seed: int | None = None,
    geometric_spreading: bool = False,
) -> RFVolume:
    """Render the RF volume (N transmits, L elements, T samples).

    Parameters
    ----------
    array, params : geometry and acquisition constants; the pulse must be
        sampled at the array's sampling frequency.
    phantom : point scatterers to render.
    pulse : transmit waveform from make_pulse.
    noise_rms : additive white Gaussian noise level (0 disables).
    seed : RNG seed for the noise; required reproducibility hook.
    geometric_spreading : divide each echo by sqrt(distance) when True.

    Raises
    ------
    WindowOverflowError
        If any echo would extend past the acquisition window.
    """
    if pulse.sampling_frequency != array.sampling_frequency:
        raise GeometryError("pulse and array sampling frequencies differ")
    t_tot = params.num_samples
    fs = array.sampling_frequency
    upos = array.positions
    sin_t = np.sin(params.transmit_angles)
    cos_t = np.cos(params.transmit_angles)

    if len(phantom):
        # worst-case delay per scatterer: latest transmit arrival plus the
        # echo path to the farther aperture edge
        tau_in = (
            phantom.x[:, None] * sin_t[None, :] + phantom.z[:, None] * cos_t[None, :]
        ) / params.sound_speed
        edge = np.maximum(
            np.hypot(phantom.x - upos[0], phantom.z),
            np.hypot(phantom.x - upos[-1], phantom.z),
        )
        tau_max = tau_in.max(axis=1) + edge / params.sound_speed
        last_needed = (tau_max - params.start_time) * fs + pulse.waveform.size
        worst = int(np.argmax(last_needed))
        if last_needed[worst] >= t_tot:
            raise WindowOverflowError(
                f"scatterer {worst} at ({phantom.x[worst]:.6g}, {phantom.z[worst]:.6g}) m "
                f"needs {int(math.ceil(last_needed[worst])) + 1} samples, window has {t_tot}"
            )

    data = np.zeros((params.num_transmits, array.num_elements, t_tot), dtype=RF_DTYPE)
    if len(phantom):
        _render_traces(
            data,
            phantom.x,
            phantom.z,
            phantom.reflectivity,
            upos,
            sin_t,
            cos_t,
            1.0 / params.sound_speed,
            fs,
            params.start_time,
            pulse.waveform,
            float(pulse.peak_index),
            bool(geometric_spreading),
        )
    if noise_rms > 0.0:
        rng = np.random.default_rng(seed)
        data += noise_rms * rng.standard_normal(data.shape, dtype=RF_DTYPE)
    return RFVolume(data, array, params)
