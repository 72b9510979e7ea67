"""Far-field receive decomposition (compression) of analytic element data.

Each receive angle theta_o turns the L element traces into one virtual
plane-wave trace by shearing in time and summing:

    RF_theta(theta_o, t) = sum_l RF_u(u_l, t + d_l sin(theta_o) / c)

with the shear referenced to the aperture edge (d_l = u_l - u_first for
theta_o > 0, d_l = u_l - u_last for theta_o < 0, so every delay is
nonnegative) and the resulting edge time offset removed so the trace is
referenced to the array center like everything else in this package. The
net per-element advance is therefore u_l sin(theta_o) / c with centered
element coordinates; theta_o = 0 degenerates to a plain sum.

A trace labeled theta_o collects the far-field echo component whose
arrival delay grows along +x with slope sin(theta_o) / c; its peak for a
scatterer at (x, z) sits at tau_in + (z cos(theta_o) - x sin(theta_o)) / c.
The beamformer pairs the traces with their mirrored look direction
accordingly (see beamform.kk).

Shearing is done in the frequency domain on the already analytic data, so
shifts are exact for band-limited signals but circular: content pushed
past either end of the window wraps around. Keep a trailing guard band of
ceil(aperture * sin(max|theta_o|) * fs / c) zero samples beyond the last
sample a beamformer will read; compress verifies this when told the read
budget.
"""

from __future__ import annotations

import math

import numpy as np

from .core import IQ_DTYPE, AnalyticRF, CompressedRF
from .errors import ConfigError, GuardBandError
from .sampling import ReceiveAngleSet


def compression_ratio(num_elements: int, num_receive: int) -> float:
    """Data reduction factor L / M of the decomposition."""
    if num_elements < 1 or num_receive < 1:
        raise ConfigError("element and receive counts must be positive")
    return num_elements / num_receive


def guard_band_samples(
    aperture: float, max_abs_angle: float, sampling_frequency: float, sound_speed: float
) -> int:
    """Trailing zero samples needed to absorb the largest shear."""
    return int(math.ceil(aperture * math.sin(abs(max_abs_angle)) * sampling_frequency / sound_speed))


def shear_and_sum(
    data: np.ndarray,
    sampling_frequency: float,
    positions: np.ndarray,
    angles: np.ndarray,
    sound_speed: float,
) -> np.ndarray:
    """Float64 reference path of the decomposition.

    data is (N, L, T) (any float or complex dtype); returns (N, M, T)
    complex128. Element l is advanced by positions[l] * sin(angle) / c via
    the Fourier shift theorem, then the element axis is summed.
    """
    data = np.asarray(data)
    if data.ndim != 3:
        raise ConfigError("expected (transmits, elements, samples) data")
    if data.shape[1] != np.asarray(positions).size:
        raise ConfigError("element count does not match positions")
    n_t = data.shape[-1]
    # np.fft keeps complex64 inputs in single precision; force the
    # double-precision reference semantics regardless of storage dtype
    spectra = np.fft.fft(data.astype(np.complex128, copy=False), axis=-1)
    freqs = np.fft.fftfreq(n_t, d=1.0 / sampling_frequency)
    out = np.empty((data.shape[0], len(angles), n_t), dtype=np.complex128)
    for m, theta in enumerate(angles):
        tau = np.asarray(positions) * (math.sin(theta) / sound_speed)  # (L,)
        ramp = np.exp(2j * np.pi * tau[:, None] * freqs[None, :])  # (L, T)
        out[:, m, :] = np.fft.ifft(np.einsum("nlt,lt->nt", spectra, ramp), axis=-1)
    return out


def compress(
    rf: AnalyticRF,
    receive: ReceiveAngleSet,
    last_used_sample: int | None = None,
) -> CompressedRF:
    """Decompose analytic element data into M virtual plane-wave traces.

    Parameters
    ----------
    rf : AnalyticRF
        One-sided element data, (N, L, T).
    receive : ReceiveAngleSet
        Decomposition angles; output row m is receive.angles[m].
    last_used_sample : int, optional
        Largest sample index any downstream beamformer will read. When
        given, the window must leave ceil(aperture * sin(max|theta_o|)
        * fs / c) samples beyond it or GuardBandError is raised with the
        missing padding count.

    Returns
    -------
    CompressedRF, (N, M, T) complex64, compression ratio L / M.
    """
    fs = rf.array.sampling_frequency
    c = rf.params.sound_speed
    max_abs = float(np.max(np.abs(receive.angles)))
    if last_used_sample is not None:
        guard = guard_band_samples(rf.array.aperture, max_abs, fs, c)
        t_tot = rf.params.num_samples
        if t_tot < last_used_sample + guard:
            raise GuardBandError(
                f"window of {t_tot} samples leaves no shear guard band: reading up to "
                f"sample {last_used_sample} needs {last_used_sample + guard - t_tot} "
                "more trailing samples"
            )
    out = shear_and_sum(rf.data, fs, rf.array.positions, receive.angles, c)
    return CompressedRF(out.astype(IQ_DTYPE), receive, rf.params, rf.array)
