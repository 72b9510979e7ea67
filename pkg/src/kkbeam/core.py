"""Core geometry and container types.

Conventions used by every module:

- Single global frame: origin at the array center, x along the array,
  z into the medium. Element l of an L-element array sits at
  u_l = (l - (L - 1) / 2) * pitch, z = 0.
- A transmitted plane wave at steering angle theta crosses the origin at
  t = 0, so its one-way delay to r = (x, z) is (x sin + z cos) / c.
- Sample k of a trace holds time t0 + k / fs.
- Angles in radians, distances in meters, times in seconds.

Sample storage is 32-bit: float32 for raw RF, complex64 (interleaved
32-bit pairs) for analytic and compressed data. Beamformed images keep
float64/complex128 so metrics are not quantization limited. Containers
are frozen and their arrays are read-only after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, GeometryError
from .sampling import ReceiveAngleSet

RF_DTYPE = np.float32
IQ_DTYPE = np.complex64


def element_positions(num_elements: int, pitch: float) -> np.ndarray:
    """Centered element x-positions: (l - (L-1)/2) * pitch, shape (L,)."""
    if num_elements < 2:
        raise ConfigError("need at least 2 elements")
    if pitch <= 0:
        raise ConfigError("pitch must be positive")
    return (np.arange(num_elements) - (num_elements - 1) / 2.0) * pitch


def sample_index(tau, sampling_frequency: float, start_time: float = 0.0):
    """Fractional sample index of absolute time tau: (tau - t0) * fs."""
    return (np.asarray(tau) - start_time) * sampling_frequency


def _freeze(obj, name, value):
    value.setflags(write=False)
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class TransducerArray:
    """Uniform linear array at z = 0, centered on the origin."""

    num_elements: int
    pitch: float  # m
    center_frequency: float  # Hz
    sampling_frequency: float  # Hz
    fractional_bandwidth: float  # -6 dB spectral full width / center frequency

    def __post_init__(self):
        if self.num_elements < 2:
            raise ConfigError("need at least 2 elements")
        if self.pitch <= 0:
            raise ConfigError("pitch must be positive")
        if self.center_frequency <= 0 or self.sampling_frequency <= 0:
            raise ConfigError("frequencies must be positive")
        if not 0 < self.fractional_bandwidth <= 1:
            raise ConfigError("fractional bandwidth must be in (0, 1]")
        band_top = self.center_frequency * (1.0 + self.fractional_bandwidth / 2.0)
        if self.sampling_frequency <= 2.0 * band_top:
            raise ConfigError(
                f"sampling frequency {self.sampling_frequency:g} Hz does not cover "
                f"the pulse band (need > {2.0 * band_top:g} Hz)"
            )

    @property
    def positions(self) -> np.ndarray:
        return element_positions(self.num_elements, self.pitch)

    @property
    def aperture(self) -> float:
        """Span between first and last element centers, (L-1) * pitch."""
        return (self.num_elements - 1) * self.pitch


@dataclass(frozen=True, eq=False)
class AcquisitionParams:
    """Per-acquisition constants shared by simulation and beamforming."""

    sound_speed: float  # m/s
    transmit_angles: np.ndarray  # (N,) rad
    num_samples: int  # T, samples per trace
    start_time: float = 0.0  # t0, absolute time of sample 0

    def __post_init__(self):
        if self.sound_speed <= 0:
            raise ConfigError("sound speed must be positive")
        if self.num_samples < 2:
            raise ConfigError("need at least 2 samples per trace")
        angles = np.asarray(self.transmit_angles, dtype=np.float64)
        if angles.ndim != 1 or angles.size < 1:
            raise ConfigError("transmit angles must be a non-empty 1-D array")
        if angles.size > 1 and not np.all(np.diff(angles) > 0):
            raise ConfigError("transmit angles must be strictly increasing")
        _freeze(self, "transmit_angles", angles)

    @property
    def num_transmits(self) -> int:
        return int(self.transmit_angles.size)


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """Regular pixel grid; pixel (ix, iz) sits at (x0 + ix dx, z0 + iz dz)."""

    x0: float
    z0: float
    dx: float
    dz: float
    nx: int
    nz: int

    def __post_init__(self):
        if self.dx <= 0 or self.dz <= 0:
            raise ConfigError("pixel pitches must be positive")
        if self.nx < 1 or self.nz < 1:
            raise ConfigError("grid must have at least one pixel per axis")
        if self.z0 <= 0:
            raise ConfigError("grid must start below the array (z0 > 0)")

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def z(self) -> np.ndarray:
        return self.z0 + self.dz * np.arange(self.nz)


def _check_volume(data, array, params, last_dim, dtype, what):
    data = np.ascontiguousarray(data, dtype=dtype)
    if data.ndim != 3:
        raise GeometryError(f"{what} data must be 3-D (transmits, {last_dim}, samples)")
    n, mid, t = data.shape
    if n != params.num_transmits:
        raise GeometryError(
            f"{what}: {n} data transmits vs {params.num_transmits} transmit angles"
        )
    if t != params.num_samples:
        raise GeometryError(f"{what}: {t} data samples vs num_samples={params.num_samples}")
    if not np.all(np.isfinite(data)):
        raise DataError(f"{what} contains non-finite samples")
    return data


@dataclass(frozen=True, eq=False)
class RFVolume:
    """Raw element RF, float32, shape (N transmits, L elements, T samples)."""

    data: np.ndarray
    array: TransducerArray
    params: AcquisitionParams

    def __post_init__(self):
        data = _check_volume(self.data, self.array, self.params, "elements", RF_DTYPE, "RFVolume")
        if data.shape[1] != self.array.num_elements:
            raise GeometryError(
                f"RFVolume: {data.shape[1]} data elements vs array num_elements="
                f"{self.array.num_elements}"
            )
        _freeze(self, "data", data)


@dataclass(frozen=True, eq=False)
class AnalyticRF:
    """Analytic (one-sided spectrum) element data, complex64, (N, L, T)."""

    data: np.ndarray
    array: TransducerArray
    params: AcquisitionParams

    def __post_init__(self):
        data = _check_volume(self.data, self.array, self.params, "elements", IQ_DTYPE, "AnalyticRF")
        if data.shape[1] != self.array.num_elements:
            raise GeometryError(
                f"AnalyticRF: {data.shape[1]} data elements vs array num_elements="
                f"{self.array.num_elements}"
            )
        _freeze(self, "data", data)


@dataclass(frozen=True, eq=False)
class CompressedRF:
    """Receive-decomposed data, complex64, (N transmits, M receive angles, T).

    array may be None for data loaded from a container file, which does
    not record the element count of the original aperture; the sampling
    frequency is then carried explicitly.
    """

    data: np.ndarray
    receive_angles: ReceiveAngleSet
    params: AcquisitionParams
    array: TransducerArray | None = None
    sampling_frequency: float | None = None

    def __post_init__(self):
        data = _check_volume(self.data, self.array, self.params, "receive angles", IQ_DTYPE, "CompressedRF")
        if data.shape[1] != self.receive_angles.num_angles:
            raise GeometryError(
                f"CompressedRF: {data.shape[1]} data rows vs {self.receive_angles.num_angles} "
                "receive angles"
            )
        if self.sampling_frequency is None:
            if self.array is None:
                raise ConfigError("CompressedRF needs an array or a sampling frequency")
            object.__setattr__(self, "sampling_frequency", self.array.sampling_frequency)
        elif self.sampling_frequency <= 0:
            raise ConfigError("sampling frequency must be positive")
        _freeze(self, "data", data)


@dataclass(frozen=True, eq=False)
class ComplexImage:
    """Beamformed complex image, pixels shape (nx, nz)."""

    pixels: np.ndarray
    grid: ImageGrid

    def __post_init__(self):
        pixels = np.ascontiguousarray(self.pixels, dtype=np.complex128)
        if pixels.shape != (self.grid.nx, self.grid.nz):
            raise GeometryError(
                f"image shape {pixels.shape} vs grid ({self.grid.nx}, {self.grid.nz})"
            )
        _freeze(self, "pixels", pixels)


@dataclass(frozen=True, eq=False)
class IntensityImage:
    """Nonnegative real image (squared magnitude), pixels shape (nx, nz)."""

    pixels: np.ndarray
    grid: ImageGrid

    def __post_init__(self):
        pixels = np.ascontiguousarray(self.pixels, dtype=np.float64)
        if pixels.shape != (self.grid.nx, self.grid.nz):
            raise GeometryError(
                f"image shape {pixels.shape} vs grid ({self.grid.nx}, {self.grid.nz})"
            )
        if pixels.size and pixels.min() < 0:
            raise GeometryError("intensity image must be nonnegative")
        _freeze(self, "pixels", pixels)
