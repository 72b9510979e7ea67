"""Transmit and receive angle sets for plane-wave imaging.

Transmit angles are the physical steering angles of the compounding
sequence. Receive angles parameterize the far-field decomposition of the
echo data into virtual receive plane waves. Each (transmit, receive) pair
contributes one sample to the lateral k-space support of the image, at
kx = nu * (sin(theta_out) - sin(theta_in)) / c.

Angle units are radians everywhere. Generated receive sets keep their
generation order (symmetric index o = -floor(M/2) .. +floor(M/2)); use
``ReceiveAngleSet.sorted_angles`` for an ascending view.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError

SCHEME_UNIFORM_VERNIER = "uniform_vernier"
SCHEME_CONFOCAL = "confocal"
SCHEME_EXPLICIT = "explicit"


class SupportSample(NamedTuple):
    """One (transmit, receive) pair of the k-space support."""

    delta_theta: float  # theta_out - theta_in, rad
    kx: float  # lateral spatial frequency, cycles/m


@dataclass(frozen=True, eq=False)
class ReceiveAngleSet:
    """A symmetric multiset of receive decomposition angles.

    angles keeps generation order. delta_theta_i is the transmit angle
    spacing the set was derived from (0.0 for explicit sets without one).
    """

    angles: np.ndarray  # (M,) rad, generation order
    scheme: str
    delta_theta_i: float
    vernier_offset: int | None = None  # j parameter, uniform vernier only

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        if angles.ndim != 1 or angles.size < 1:
            raise ConfigError("receive angle set must be a non-empty 1-D array")
        if self.scheme not in (SCHEME_UNIFORM_VERNIER, SCHEME_CONFOCAL, SCHEME_EXPLICIT):
            raise ConfigError(f"unknown receive sampling scheme {self.scheme!r}")
        # symmetric multiset: sorted(angles) == -sorted(angles) reversed
        s = np.sort(angles)
        if not np.allclose(s, -s[::-1], atol=1e-12):
            raise ConfigError("receive angle set must be symmetric about zero")
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)

    @property
    def num_angles(self) -> int:
        return int(self.angles.size)

    @property
    def sorted_angles(self) -> np.ndarray:
        return np.sort(self.angles)


def transmit_angles(num_angles: int, max_angle: float) -> np.ndarray:
    """Uniform transmit steering angles on [-max_angle, +max_angle].

    Parameters
    ----------
    num_angles : int
        Number of transmits N (>= 2 so the spacing is defined).
    max_angle : float
        Half range in radians; the sequence spans 2 * max_angle.

    Returns
    -------
    (N,) float64 array, ascending, endpoints exactly +-max_angle.
    """
    if num_angles < 2:
        raise ConfigError("need at least 2 transmit angles")
    if max_angle <= 0:
        raise ConfigError("max transmit angle must be positive")
    return np.linspace(-max_angle, max_angle, num_angles)


def _signed_indices(num_angles: int) -> np.ndarray:
    """Generation-order index o for a receive set of M angles.

    Odd M: o = -floor(M/2) .. floor(M/2), including 0.
    Even M: o = -M/2 .. M/2 with 0 removed (M values). The even case is
    an interpretation (the vernier construction is stated for sets that
    pair +o with -o); it keeps the set symmetric.
    """
    half = num_angles // 2
    o = np.arange(-half, half + 1)
    if num_angles % 2 == 0:
        o = o[o != 0]
    return o


def uniform_vernier_angles(
    num_transmits: int,
    num_receive: int,
    max_angle: float,
    vernier_offset: int,
) -> ReceiveAngleSet:
    """Vernier receive set: theta_o = sgn(o) * dthi * (2|o|/M + j).

    dthi = 2 * max_angle / (N - 1) is the transmit spacing. j = 0 packs
    the receive angles densely around broadside; larger j pushes them
    outward in steps of one transmit spacing, widening the k-space
    support at the cost of sparser sampling.

    Parameters
    ----------
    num_transmits : int
        N, used for the transmit spacing and the valid j range.
    num_receive : int
        M, number of receive angles.
    max_angle : float
        Transmit half range, radians.
    vernier_offset : int
        j, integer in [0, floor(N/2)].
    """
    if num_transmits < 2:
        raise ConfigError("need at least 2 transmit angles")
    if num_receive < 1:
        raise ConfigError("need at least 1 receive angle")
    j = int(vernier_offset)
    if j != vernier_offset or not 0 <= j <= num_transmits // 2:
        raise ConfigError(
            f"vernier offset j={vernier_offset} outside 0..floor(N/2)="
            f"{num_transmits // 2}"
        )
    dthi = 2.0 * max_angle / (num_transmits - 1)
    o = _signed_indices(num_receive)
    theta = np.sign(o) * dthi * (2.0 * np.abs(o) / num_receive + j)
    return ReceiveAngleSet(theta, SCHEME_UNIFORM_VERNIER, dthi, j)


def confocal_angles(
    num_transmits: int, num_receive: int, max_angle: float
) -> ReceiveAngleSet:
    """Confocal receive set: theta_o = sgn(o) * dthi * (2|o|/M + mod(|o|, floor(N/2))).

    Cycles the vernier offset with |o| so a single receive set spreads
    its angles over all offsets, trading per-offset density for support
    coverage in one shot. Requires N >= 3 so floor(N/2) >= 1.
    """
    if num_transmits < 3:
        raise ConfigError("confocal sampling needs at least 3 transmit angles")
    if num_receive < 1:
        raise ConfigError("need at least 1 receive angle")
    dthi = 2.0 * max_angle / (num_transmits - 1)
    half_n = num_transmits // 2
    o = _signed_indices(num_receive)
    theta = np.sign(o) * dthi * (2.0 * np.abs(o) / num_receive + np.mod(np.abs(o), half_n))
    return ReceiveAngleSet(theta, SCHEME_CONFOCAL, dthi)


def explicit_angles(angles, delta_theta_i: float = 0.0) -> ReceiveAngleSet:
    """Wrap a user-supplied symmetric angle list as a receive set."""
    return ReceiveAngleSet(np.asarray(angles, dtype=np.float64), SCHEME_EXPLICIT, delta_theta_i)


def support(
    transmit: np.ndarray,
    receive: ReceiveAngleSet,
    center_frequency: float,
    sound_speed: float,
) -> list[SupportSample]:
    """All N*M (transmit, receive) support samples.

    kx uses exact sines, no small-angle approximation. Order: transmit
    index ascending, then receive generation order.
    """
    if center_frequency <= 0 or sound_speed <= 0:
        raise ConfigError("center frequency and sound speed must be positive")
    ti = np.asarray(transmit, dtype=np.float64)
    samples = []
    for theta_i in ti:
        for theta_o in receive.angles:
            dth = theta_o - theta_i
            kx = center_frequency * (np.sin(theta_o) - np.sin(theta_i)) / sound_speed
            samples.append(SupportSample(float(dth), float(kx)))
    return samples


def support_histogram(
    samples: list[SupportSample], num_bins: int
) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of delta_theta over uniform bins spanning min..max.

    Returns (bin_edges (num_bins+1,), counts (num_bins,)); counts sum to
    len(samples).
    """
    if num_bins < 3:
        raise ConfigError("need at least 3 histogram bins")
    if not samples:
        raise ConfigError("cannot histogram an empty support")
    dth = np.array([s.delta_theta for s in samples])
    counts, edges = np.histogram(dth, bins=num_bins, range=(dth.min(), dth.max()))
    return edges, counts
