"""Binary container for RF data at its three processing stages.

Layout (all little-endian):

    offset  size  field
    0       4     magic  b"KKRF"
    4       2     u16    format version (currently 1)
    6       1     u8     kind: 0 real RF, 1 analytic RF, 2 compressed RF
    7       4     u32    num_transmits N
    11      4     u32    num_channels  (elements L for kinds 0/1, angles M for 2)
    15      4     u32    num_samples T
    19      8     f64    sampling frequency [Hz]
    27      8     f64    center frequency [Hz]
    35      8     f64    sound speed [m/s]
    43      8     f64    element pitch [m]
    51      8     f64    start time t0 [s]
    59      8*N   f64    transmit angles [rad]
    --      8*M   f64    receive angles [rad]   (kind 2 only)
    --      ...          payload, C order [N, channels, T]:
                         float32 for kind 0, complex64 for kinds 1 and 2

Payload bytes are the numpy buffer verbatim, so a write/read cycle is
bit-exact. The header does not record the transducer bandwidth, so kind
0/1 reads reconstruct the array with a placeholder fractional bandwidth
of min(1, (fs/fc - 2)/2), the widest value consistent with the sampling
rate. Kind 2 reads return a container with no array attached; the
receive angles come back as an explicit set.
"""

from __future__ import annotations

import struct

import numpy as np

from .core import (
    AcquisitionParams,
    AnalyticRF,
    CompressedRF,
    RFVolume,
    TransducerArray,
)
from .errors import ConfigError, FileFormatError
from .sampling import explicit_angles

MAGIC = b"KKRF"
VERSION = 1
KIND_REAL = 0
KIND_ANALYTIC = 1
KIND_COMPRESSED = 2

_HEAD = struct.Struct("<4sHB3I5d")


def _placeholder_bandwidth(fs: float, fc: float) -> float:
    bw = 0.5 * (fs / fc - 2.0)
    if bw <= 0:
        raise FileFormatError(
            f"sampling frequency {fs} cannot support center frequency {fc}"
        )
    return min(1.0, bw)


def _kind_of(container) -> int:
    if isinstance(container, RFVolume):
        return KIND_REAL
    if isinstance(container, AnalyticRF):
        return KIND_ANALYTIC
    if isinstance(container, CompressedRF):
        return KIND_COMPRESSED
    raise FileFormatError(f"cannot serialize {type(container).__name__}")


def write_container(path, container) -> None:
    """Serialize an RF container to *path* (see module docstring)."""
    kind = _kind_of(container)
    data = container.data
    n, channels, t = data.shape
    params = container.params
    if kind == KIND_COMPRESSED:
        fs = container.sampling_frequency
        if container.array is not None:
            fc = container.array.center_frequency
            pitch = container.array.pitch
        else:
            fc = 0.0
            pitch = 0.0
    else:
        fs = container.array.sampling_frequency
        fc = container.array.center_frequency
        pitch = container.array.pitch
    head = _HEAD.pack(
        MAGIC,
        VERSION,
        kind,
        n,
        channels,
        t,
        fs,
        fc,
        params.sound_speed,
        pitch,
        params.start_time,
    )
    with open(path, "wb") as f:
        f.write(head)
        f.write(np.asarray(params.transmit_angles, dtype="<f8").tobytes())
        if kind == KIND_COMPRESSED:
            angles = np.asarray(container.receive_angles.angles, dtype="<f8")
            f.write(angles.tobytes())
        f.write(np.ascontiguousarray(data).tobytes())


def read_container(path):
    """Load an RF container written by write_container.

    Returns an RFVolume, AnalyticRF, or CompressedRF according to the
    kind byte. Raises FileFormatError for anything malformed.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEAD.size:
        raise FileFormatError(f"{path}: truncated header")
    magic, version, kind, n, channels, t, fs, fc, c, pitch, t0 = _HEAD.unpack_from(blob)
    if magic != MAGIC:
        raise FileFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FileFormatError(f"{path}: unsupported format version {version}")
    if kind not in (KIND_REAL, KIND_ANALYTIC, KIND_COMPRESSED):
        raise FileFormatError(f"{path}: unknown kind byte {kind}")
    if min(n, channels, t) <= 0:
        raise FileFormatError(f"{path}: bad dimensions {(n, channels, t)}")
    if fs <= 0 or c <= 0:
        raise FileFormatError(f"{path}: nonpositive sampling frequency or sound speed")
    if kind != KIND_COMPRESSED and (pitch <= 0 or fc <= 0):
        raise FileFormatError(f"{path}: nonpositive pitch or center frequency")
    pos = _HEAD.size
    tx = np.frombuffer(blob, dtype="<f8", count=n, offset=pos)
    pos += 8 * n
    rx = None
    if kind == KIND_COMPRESSED:
        if len(blob) < pos + 8 * channels:
            raise FileFormatError(f"{path}: truncated receive angle table")
        rx = np.frombuffer(blob, dtype="<f8", count=channels, offset=pos)
        pos += 8 * channels
    dtype = np.dtype("<f4") if kind == KIND_REAL else np.dtype("<c8")
    expected = pos + n * channels * t * dtype.itemsize
    if len(blob) != expected:
        raise FileFormatError(
            f"{path}: payload size mismatch (have {len(blob)}, expected {expected})"
        )
    data = np.frombuffer(blob, dtype=dtype, offset=pos).reshape(n, channels, t)

    params = AcquisitionParams(
        sound_speed=c, transmit_angles=tx, num_samples=t, start_time=t0
    )
    if kind == KIND_COMPRESSED:
        dthi = float(tx[1] - tx[0]) if n > 1 else 0.0
        try:
            receive = explicit_angles(rx, dthi)
        except ConfigError as exc:
            raise FileFormatError(f"{path}: bad receive angle table ({exc})") from exc
        return CompressedRF(
            data=data.copy(),
            receive_angles=receive,
            params=params,
            array=None,
            sampling_frequency=fs,
        )
    array = TransducerArray(
        num_elements=channels,
        pitch=pitch,
        center_frequency=fc,
        sampling_frequency=fs,
        fractional_bandwidth=_placeholder_bandwidth(fs, fc),
    )
    cls = RFVolume if kind == KIND_REAL else AnalyticRF
    return cls(data=data.copy(), array=array, params=params)
