"""Image quality metrics: generalized contrast, lateral width, display matching.

All metrics operate on IntensityImage (squared magnitude). gCNR compares
the histogram overlap of two regions and is invariant to any monotonic
remapping of the pixel values; lateral_fwhm measures the half-maximum
width of a point target's lateral intensity profile; gamma_match finds
the power-law display exponent that makes an image's normalized mean
brightness track a square-root-compressed reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ImageGrid, IntensityImage
from .errors import ConfigError, MetricError, RoiError


@dataclass(frozen=True)
class Roi:
    """Circle or axis-aligned rectangle region, in meters.

    Use Roi.circle(cx, cz, radius) or Roi.rect(x0, z0, x1, z1).
    """

    kind: str
    p0: tuple
    p1: tuple

    @classmethod
    def circle(cls, cx: float, cz: float, radius: float) -> "Roi":
        if radius <= 0:
            raise ConfigError("circle radius must be positive")
        return cls("circle", (float(cx), float(cz)), (float(radius), 0.0))

    @classmethod
    def rect(cls, x0: float, z0: float, x1: float, z1: float) -> "Roi":
        if not (x1 > x0 and z1 > z0):
            raise ConfigError("rectangle must have positive extent")
        return cls("rect", (float(x0), float(z0)), (float(x1), float(z1)))

    def mask(self, grid: ImageGrid) -> np.ndarray:
        """Boolean pixel mask, shape (nx, nz)."""
        x = grid.x[:, None]
        z = grid.z[None, :]
        if self.kind == "circle":
            (cx, cz), (r, _) = self.p0, self.p1
            return (x - cx) ** 2 + (z - cz) ** 2 <= r * r
        if self.kind == "rect":
            (x0, z0), (x1, z1) = self.p0, self.p1
            return (x >= x0) & (x <= x1) & (z >= z0) & (z <= z1)
        raise ConfigError(f"unknown ROI kind {self.kind!r}")


def gcnr(
    image: IntensityImage,
    inside: Roi,
    outside: Roi,
    num_bins: int = 256,
) -> float:
    """Generalized contrast-to-noise ratio between two regions.

    Both regions' values are histogrammed over shared uniform bins
    spanning their combined range; the result is 1 minus the overlap
    of the two normalized histograms. 1 means perfectly separable
    distributions, 0 means identical ones.

    Each region must cover at least 100 pixels and they must not overlap.
    """
    if num_bins < 2:
        raise ConfigError("need at least 2 histogram bins")
    m_in = inside.mask(image.grid)
    m_out = outside.mask(image.grid)
    if m_in.sum() < 100 or m_out.sum() < 100:
        raise RoiError("each gCNR region must cover at least 100 pixels")
    if (m_in & m_out).any():
        raise RoiError("gCNR regions overlap")
    v_in = image.pixels[m_in]
    v_out = image.pixels[m_out]
    lo = min(v_in.min(), v_out.min())
    hi = max(v_in.max(), v_out.max())
    h_in, _ = np.histogram(v_in, bins=num_bins, range=(lo, hi))
    h_out, _ = np.histogram(v_out, bins=num_bins, range=(lo, hi))
    p_in = h_in / h_in.sum()
    p_out = h_out / h_out.sum()
    return float(1.0 - np.minimum(p_in, p_out).sum())


def peak_position(image: IntensityImage) -> tuple[float, float]:
    """(x, z) of the brightest pixel."""
    ix, iz = np.unravel_index(int(np.argmax(image.pixels)), image.pixels.shape)
    return float(image.grid.x[ix]), float(image.grid.z[iz])


def _half_crossing(x, profile, i_peak, half, step):
    """Walk from the peak in +-1 steps to the first sample below half."""
    i = i_peak
    while 0 <= i + step < profile.size:
        j = i + step
        if profile[j] < half:
            # linear interpolation between samples j-step (>= half) and j
            frac = (profile[i] - half) / (profile[i] - profile[j])
            return x[i] + frac * (x[j] - x[i])
        i = j
    return None


def lateral_fwhm(
    image: IntensityImage,
    target_x: float,
    target_z: float,
    search_window: float,
) -> float:
    """Full width at half maximum of the lateral profile through a peak.

    The peak is located inside a square window of full side search_window
    centered on (target_x, target_z); the lateral profile through the
    peak row is then traced outward to the two half-maximum crossings,
    which are interpolated linearly between pixels.

    Raises MetricError if no positive peak lies strictly inside the
    window or if the profile has not fallen below half maximum before the
    window edges (unresolved peak).
    """
    grid = image.grid
    half_w = search_window / 2.0
    if half_w <= 0:
        raise ConfigError("search window must be positive")
    ix_ok = np.nonzero(np.abs(grid.x - target_x) <= half_w)[0]
    iz_ok = np.nonzero(np.abs(grid.z - target_z) <= half_w)[0]
    if ix_ok.size < 3 or iz_ok.size < 1:
        raise MetricError("search window covers too few pixels")
    sub = image.pixels[np.ix_(ix_ok, iz_ok)]
    if sub.max() <= 0:
        raise MetricError("no positive peak in the search window")
    si, sj = np.unravel_index(int(np.argmax(sub)), sub.shape)
    ix_peak = int(ix_ok[si])
    iz_peak = int(iz_ok[sj])
    if ix_peak == ix_ok[0] or ix_peak == ix_ok[-1]:
        raise MetricError("peak sits on the lateral window edge")
    profile = image.pixels[ix_ok, iz_peak]
    half = profile[si] / 2.0
    if profile[0] >= half or profile[-1] >= half:
        raise MetricError("profile not below half maximum at the window edges")
    x_sub = grid.x[ix_ok]
    left = _half_crossing(x_sub, profile, si, half, -1)
    right = _half_crossing(x_sub, profile, si, half, +1)
    if left is None or right is None:
        raise MetricError("half-maximum crossing not found inside the window")
    return float(right - left)


def _golden_min(fun, lo, hi, tol):
    """Golden-section search for the minimum of a unimodal function."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def gamma_match(
    image: IntensityImage,
    reference: IntensityImage,
    lo: float = 0.1,
    hi: float = 1.0,
    tol: float = 1e-3,
) -> tuple[float, np.ndarray]:
    """Exponent matching an image's display brightness to a reference.

    The reference is normalized to its maximum and compressed with the
    fixed exponent 0.5; the image's exponent gamma is then found by
    golden-section search on [lo, hi] (tolerance tol) so that the mean of
    (image / max)^gamma matches the mean of the compressed reference.

    Returns (gamma, mapped image in [0, 1]).
    """
    img_max = image.pixels.max()
    ref_max = reference.pixels.max()
    if img_max <= 0 or ref_max <= 0:
        raise MetricError("gamma matching needs nonzero images")
    norm = image.pixels / img_max
    target = float(np.mean((reference.pixels / ref_max) ** 0.5))

    def objective(g):
        return abs(float(np.mean(norm**g)) - target)

    gamma = _golden_min(objective, lo, hi, tol)
    return float(gamma), norm**gamma
