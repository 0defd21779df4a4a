"""Geometry conversions and simulated range profiles.

A frame's point cloud is mapped to a range profile: each point contributes a
unit-height Gaussian centered at its fractional range bin, and the profile is
the superposition sampled at integer bins 0..W-1. Unit height (rather than a
normalized density) keeps every point's peak comparable regardless of how
many points a frame has, and any common positive scale cancels out of the
sign tests used for intersection detection.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import math

import numpy as np

from ._backend import get_kernels, kernels as _active_kernels
from .errors import OutOfRangeError


@dataclass(frozen=True)
class ProfileConfig:
    """Discretization of the simulated range axis.

    Defaults model a de-chirp window of 512 bins at 3.75 cm per bin, i.e. a
    maximum detectable range of 19.2 m. `sigma` is the per-point Gaussian
    std in bin units; at the defaults the +-1.5 sigma main lobe spans about
    11 cm, on the order of a human joint.
    """

    window_size: int = 512
    range_resolution: float = 0.0375
    sigma: float = 1.0

    def __post_init__(self):
        if self.window_size < 2:
            raise ValueError("window_size must be >= 2")
        if not self.range_resolution > 0:
            raise ValueError("range_resolution must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def max_range(self) -> float:
        return self.window_size * self.range_resolution

    @property
    def main_lobe_extent_m(self) -> float:
        """Width of the +-1.5 sigma main lobe in meters."""
        return 3.0 * self.sigma * self.range_resolution


class SphericalPoint(NamedTuple):
    range: float
    azimuth: float
    elevation: float


def cart_to_spherical(p) -> SphericalPoint:
    """Convert an (x, y, z) point to (range, azimuth, elevation).

    Boresight is +y: azimuth = atan2(x, y); elevation is the angle above the
    horizontal plane, computed as atan2(z, hypot(x, y)), which is equivalent
    to asin(z / range) but stays accurate near the poles. The origin maps to
    (0, 0, 0) by convention.
    """
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        return SphericalPoint(0.0, 0.0, 0.0)
    return SphericalPoint(r, math.atan2(x, y), math.atan2(z, math.hypot(x, y)))


def spherical_to_cart(s: SphericalPoint):
    """Inverse of cart_to_spherical for range > 0."""
    r, az, el = float(s[0]), float(s[1]), float(s[2])
    cos_el = math.cos(el)
    return np.array(
        [r * math.sin(az) * cos_el, r * math.cos(az) * cos_el, r * math.sin(el)],
        dtype=np.float64,
    )


def range_to_bin(rng_m: float, cfg: ProfileConfig) -> float:
    """Fractional bin index of a range in meters."""
    bin_pos = rng_m / cfg.range_resolution
    if bin_pos >= cfg.window_size:
        raise OutOfRangeError(
            f"range {rng_m:.4f} m maps to bin {bin_pos:.2f}, beyond window "
            f"[0, {cfg.window_size}) (max detectable range {cfg.max_range:.4f} m)"
        )
    return bin_pos


@dataclass(frozen=True)
class RangeProfile:
    """Sampled Gaussian superposition plus its contributing sources.

    `values[k]` holds the superposed amplitudes at integer bin k. The source
    arrays record, per contributing point and in frame order: fractional bin,
    azimuth, elevation, and (for 5D datasets) doppler/intensity extras.
    `tag` identifies which input frame of a mixing pair this profile is.
    """

    values: np.ndarray
    bins: np.ndarray
    azimuths: np.ndarray
    elevations: np.ndarray
    extras: Optional[np.ndarray]  # (n, 2) doppler, intensity; None for 3D
    tag: int
    config: ProfileConfig

    @property
    def sources(self):
        """Iterate (bin, azimuth, elevation, tag) per contributing point."""
        return [
            (float(b), float(az), float(el), self.tag)
            for b, az, el in zip(self.bins, self.azimuths, self.elevations)
        ]


def build_profile(frame, cfg: ProfileConfig, tag: int = 0, backend=None) -> RangeProfile:
    """Simulate the range profile of one frame's point cloud.

    Raises OutOfRangeError when any point lies at or beyond the maximum
    detectable range. An empty frame yields an all-zero profile.
    """
    pts = np.asarray(frame.points, dtype=np.float64)
    n = pts.shape[0] if pts.ndim == 2 else 0
    if n == 0:
        return RangeProfile(
            values=np.zeros(cfg.window_size),
            bins=np.empty(0),
            azimuths=np.empty(0),
            elevations=np.empty(0),
            extras=None,
            tag=tag,
            config=cfg,
        )
    bins = np.empty(n)
    azimuths = np.empty(n)
    elevations = np.empty(n)
    for i in range(n):
        r, az, el = cart_to_spherical(pts[i, :3])
        bins[i] = range_to_bin(r, cfg)
        azimuths[i] = az
        elevations[i] = el
    extras = pts[:, 3:5].copy() if pts.shape[1] >= 5 else None
    kern = _active_kernels if backend is None else get_kernels(backend)
    values = kern.profile_accumulate(bins, cfg.window_size, cfg.sigma)
    return RangeProfile(
        values=values,
        bins=bins,
        azimuths=azimuths,
        elevations=elevations,
        extras=extras,
        tag=tag,
        config=cfg,
    )
