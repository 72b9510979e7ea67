"""Staged throughput benchmark for the DAS and compressed pipelines.

Both pipelines are split into the four stages that dominate a software
implementation:

    reorg_fft        forward FFT of the raw RF along time
    hilbert_compress one-sided weighting (DAS), plus the per-angle
                     phase-and-sum over elements for the compressed path
    ifft             back to the time domain
    beamform         delay-and-sum image formation from cached tables

Each configuration runs ``repetitions + 1`` times; the first repetition
is discarded (it absorbs FFT planning and JIT compilation) and the
reported figure per stage is the median of the rest. Delay tables and
the compression phase ramps are built once outside the timed region:
both are data independent and cached in a live system. The compression
stage here runs in complex64 like the storage path, not the float64
reference path, since throughput is what is being measured.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .beamform import (
    BeamformConfig,
    DelayLUTSet,
    build_das_luts,
    build_kk_luts,
    cache_model_entries,
    das,
    kk,
)
from .compress import compression_ratio
from .core import AnalyticRF, CompressedRF, RFVolume
from .errors import ConfigError
from .sampling import ReceiveAngleSet
from .spectral import one_sided_weights

STAGES = ("reorg_fft", "hilbert_compress", "ifft", "beamform")


@dataclass(frozen=True)
class StageTimings:
    """Median per-stage wall time, in milliseconds, for one benchmark row."""

    label: str
    method: str  # das | kk
    num_channels: int  # summed channels: elements L or receive angles M
    compression_ratio: float  # L/M; 1.0 for das
    lut_entries: int  # delay table size from the cache model
    reorg_fft_ms: float
    hilbert_compress_ms: float
    ifft_ms: float
    beamform_ms: float

    @property
    def total_ms(self) -> float:
        return float(
            self.reorg_fft_ms + self.hilbert_compress_ms + self.ifft_ms + self.beamform_ms
        )

    def stage_ms(self, name: str) -> float:
        return float(getattr(self, f"{name}_ms"))


def _time_stages(stage_fns, repetitions: int) -> dict:
    """Median stage times in milliseconds, first repetition discarded."""
    if repetitions < 3:
        raise ConfigError("benchmark needs at least 3 repetitions")
    times = {name: [] for name, _ in stage_fns}
    for rep in range(repetitions + 1):
        state = {}
        for name, fn in stage_fns:
            t0 = time.perf_counter()
            fn(state)
            dt = time.perf_counter() - t0
            if rep > 0:
                times[name].append(dt)
    return {name: 1e3 * float(np.median(vals)) for name, vals in times.items()}


def _das_stage_fns(rf: RFVolume, luts: DelayLUTSet, bconf: BeamformConfig):
    weights = one_sided_weights(rf.params.num_samples).astype(np.float32)
    # container built once up front so that the timed beamform stage
    # measures image formation alone, not construction-time validation
    iq = scipy.fft.ifft(scipy.fft.fft(rf.data, axis=-1) * weights, axis=-1)
    analytic = AnalyticRF(
        data=iq.astype(np.complex64), array=rf.array, params=rf.params
    )

    def reorg_fft(state):
        state["spec"] = scipy.fft.fft(rf.data, axis=-1)

    def hilbert_compress(state):
        state["spec"] = state["spec"] * weights

    def ifft(state):
        state["iq"] = scipy.fft.ifft(state["spec"], axis=-1).astype(np.complex64)

    def beamform(state):
        state["image"] = das(analytic, luts, bconf)

    return list(zip(STAGES, (reorg_fft, hilbert_compress, ifft, beamform)))


def _kk_stage_fns(
    rf: RFVolume,
    receive: ReceiveAngleSet,
    luts: DelayLUTSet,
    bconf: BeamformConfig,
):
    t = rf.params.num_samples
    fs = rf.array.sampling_frequency
    weights = one_sided_weights(t).astype(np.float32)
    freqs = np.fft.fftfreq(t, d=1.0 / fs)
    tau = rf.array.positions[:, None] * np.sin(receive.angles)[None, :] / rf.params.sound_speed
    # (M, L, T) phase ramps, data independent, cached like the delay tables
    ramps = np.exp(2j * np.pi * tau.T[:, :, None] * freqs).astype(np.complex64)

    def reorg_fft(state):
        state["spec"] = scipy.fft.fft(rf.data, axis=-1)

    def hilbert_compress(state):
        spec = state["spec"] * weights
        out = np.empty((rf.params.num_transmits, receive.num_angles, t), np.complex64)
        for m in range(receive.num_angles):
            out[:, m, :] = np.einsum("nlt,lt->nt", spec, ramps[m])
        state["spec"] = out

    def ifft(state):
        state["iq"] = scipy.fft.ifft(state["spec"], axis=-1).astype(np.complex64)

    # run the chain once untimed to build the container the timed
    # beamform stage consumes (same rationale as the das path)
    prepared = {}
    reorg_fft(prepared)
    hilbert_compress(prepared)
    ifft(prepared)
    container = CompressedRF(
        data=prepared["iq"], receive_angles=receive, params=rf.params, array=rf.array
    )

    def beamform(state):
        state["image"] = kk(container, luts, bconf)

    return list(zip(STAGES, (reorg_fft, hilbert_compress, ifft, beamform)))


def bench_das(rf, grid, repetitions=3, bconf=BeamformConfig()) -> StageTimings:
    """Benchmark the conventional per-element pipeline."""
    luts = build_das_luts(grid, rf.array, rf.params)
    stages = _time_stages(_das_stage_fns(rf, luts, bconf), repetitions)
    return StageTimings(
        label="das",
        method="das",
        num_channels=rf.array.num_elements,
        compression_ratio=1.0,
        lut_entries=cache_model_entries(
            grid, rf.params.num_transmits, rf.array.num_elements, "das"
        ),
        **{f"{name}_ms": stages[name] for name in STAGES},
    )


def bench_kk(rf, grid, receive, repetitions=3, bconf=BeamformConfig()) -> StageTimings:
    """Benchmark the compressed pipeline for one receive angle set."""
    luts = build_kk_luts(grid, rf.params, receive)
    stages = _time_stages(_kk_stage_fns(rf, receive, luts, bconf), repetitions)
    return StageTimings(
        label=f"kk_m{receive.num_angles}",
        method="kk",
        num_channels=receive.num_angles,
        compression_ratio=compression_ratio(rf.array.num_elements, receive.num_angles),
        lut_entries=cache_model_entries(
            grid, rf.params.num_transmits, receive.num_angles, "kk"
        ),
        **{f"{name}_ms": stages[name] for name in STAGES},
    )


def noise_volume(array, params, seed: int = 0) -> RFVolume:
    """Seeded white-noise RF volume for throughput measurements."""
    rng = np.random.default_rng(seed)
    shape = (params.num_transmits, array.num_elements, params.num_samples)
    return RFVolume(
        data=rng.standard_normal(shape, dtype=np.float32), array=array, params=params
    )


def write_bench_csv(rows, stream) -> None:
    """Write benchmark rows as CSV to an open text stream."""
    writer = csv.writer(stream)
    writer.writerow(
        [
            "label",
            "method",
            "channels",
            "compression_ratio",
            "lut_entries",
            *[f"{name}_ms" for name in STAGES],
            "total_ms",
        ]
    )
    for row in rows:
        writer.writerow(
            [
                row.label,
                row.method,
                row.num_channels,
                repr(row.compression_ratio),
                row.lut_entries,
                *[repr(row.stage_ms(name)) for name in STAGES],
                repr(row.total_ms),
            ]
        )


def bench_csv_text(rows) -> str:
    buf = io.StringIO()
    write_bench_csv(rows, buf)
    return buf.getvalue()


def format_bench_table(rows) -> str:
    """Fixed-width console table, times in milliseconds."""
    header = (
        f"{'label':<10} {'chan':>5} {'ratio':>7} {'lut':>10} "
        + " ".join(f"{name + '_ms':>19}" for name in STAGES)
        + f" {'total_ms':>12}"
    )
    lines = [header, "-" * len(header)]
    for row in rows:
        cells = " ".join(f"{row.stage_ms(name):>19.3f}" for name in STAGES)
        lines.append(
            f"{row.label:<10} {row.num_channels:>5} {row.compression_ratio:>7.2f} "
            f"{row.lut_entries:>10} {cells} {row.total_ms:>12.3f}"
        )
    return "\n".join(lines)
