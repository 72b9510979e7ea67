"""Per-trace spectral operations: analytic conversion and fractional shifts.

All time shifts in this package are applied in the frequency domain, so a
trace is transformed once, manipulated with phase ramps, and inverted
once. The helpers here work on float64/complex128 and vectorize over any
leading axes; the last axis is always time or frequency.

Circular convention: fractional_advance(g, tau) returns g(t + tau) with
periodic wrap-around. Callers that cannot tolerate wrapped content must
keep enough zero samples at the ends of the window (see compress).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IQ_DTYPE, AnalyticRF, RFVolume
from .errors import ConfigError


@dataclass(frozen=True, eq=False)
class TraceSpectrum:
    """Full complex spectrum of one or more traces, last axis frequency.

    data[..., k] is the DFT bin at signed frequency freqs[k]; the bin
    step is sampling_frequency / num_samples. Produce with
    forward_spectrum and consume with inverse_spectrum so scaling stays
    matched.
    """

    data: np.ndarray  # (..., T) complex128
    sampling_frequency: float

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.complex128)
        if data.ndim < 1 or data.shape[-1] < 1:
            raise ConfigError("spectrum needs at least one frequency bin")
        if self.sampling_frequency <= 0:
            raise ConfigError("sampling frequency must be positive")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def num_samples(self) -> int:
        return int(self.data.shape[-1])

    @property
    def freqs(self) -> np.ndarray:
        """Signed bin frequencies in Hz, shape (T,)."""
        return np.fft.fftfreq(self.num_samples, d=1.0 / self.sampling_frequency)


def forward_spectrum(data: np.ndarray, sampling_frequency: float) -> TraceSpectrum:
    """FFT along the last axis at the trace's own length (no padding)."""
    return TraceSpectrum(np.fft.fft(np.asarray(data), axis=-1), sampling_frequency)


def inverse_spectrum(spectrum: TraceSpectrum) -> np.ndarray:
    """Inverse of forward_spectrum; returns complex128 time samples."""
    return np.fft.ifft(spectrum.data, axis=-1)


def one_sided_weights(num_samples: int) -> np.ndarray:
    """Spectral weights that zero negative frequencies and double positive ones.

    DC keeps weight 1, as does the Nyquist bin when num_samples is even.
    Applying these to the spectrum of a real trace gives the spectrum of
    its analytic signal.
    """
    if num_samples < 1:
        raise ConfigError("need at least one sample")
    w = np.zeros(num_samples)
    w[0] = 1.0
    if num_samples % 2 == 0:
        w[1 : num_samples // 2] = 2.0
        w[num_samples // 2] = 1.0
    else:
        w[1 : (num_samples + 1) // 2] = 2.0
    return w


def analytic_signal(rf: RFVolume) -> AnalyticRF:
    """Convert raw RF to its analytic signal, trace by trace.

    The real part of the result equals the input (to float32 rounding)
    and the spectrum has exact zeros at strictly negative frequencies.
    """
    spec = np.fft.fft(rf.data.astype(np.float64), axis=-1)
    spec *= one_sided_weights(rf.params.num_samples)
    out = np.fft.ifft(spec, axis=-1)
    return AnalyticRF(out.astype(IQ_DTYPE), rf.array, rf.params)


def advance_phases(spectrum_freqs: np.ndarray, tau) -> np.ndarray:
    """Phase ramp exp(+2j pi f tau); tau broadcasts against a new last axis."""
    tau = np.asarray(tau, dtype=np.float64)
    return np.exp(2j * np.pi * tau[..., None] * spectrum_freqs)


def fractional_advance(spectrum: TraceSpectrum, tau) -> TraceSpectrum:
    """Advance traces by tau seconds: g(t) -> g(t + tau), circularly.

    tau is a scalar or an array broadcastable against the leading axes of
    spectrum.data. Positive tau pulls later content earlier (a left
    shift); a shift of exactly k / fs samples reproduces np.roll(g, -k).
    """
    ramp = advance_phases(spectrum.freqs, tau)
    return TraceSpectrum(spectrum.data * ramp, spectrum.sampling_frequency)
