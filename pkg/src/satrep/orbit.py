"""Satellite pass geometry over two equatorial ground stations.

A satellite on a circular orbit at altitude ``h`` passes over the midpoint of two
ground stations separated by the great-circle distance ``L0``.  The model yields
the time-dependent slant distance from either station (both see the same distance
by symmetry), the corresponding zenith angle, and the flyby window during which
the satellite is simultaneously visible from both stations (zenith angle below
``theta_max`` at each).  Earth's rotation is neglected; time ``t = 0`` is the
instant the satellite enters visibility, ``t = t0`` the closest approach.

All functions are pure and accept numpy arrays in the time/distance arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import EARTH_MU_M3_PER_S2, EARTH_RADIUS_M

__all__ = [
    "GeometryError",
    "OrbitGeometry",
    "PassTiming",
    "angular_speed",
    "half_flyby_time",
    "pass_timing",
    "slant_distance",
    "zenith_angle",
]

# Tolerance for arccos arguments that exceed 1 by floating-point noise only.
_COS_SLACK = 1e-12


class GeometryError(ValueError):
    """Raised when a requested configuration is geometrically impossible."""


@dataclass(frozen=True)
class OrbitGeometry:
    """Static geometry of one elementary link served by a passing satellite.

    Parameters
    ----------
    altitude_m:
        Satellite altitude above the surface, ``h`` (m).
    link_length_m:
        Ground-station great-circle separation, ``L0`` (m).
    earth_radius_m, mu_m3_per_s2:
        Earth radius and gravitational parameter; overridable for tests.
    max_zenith_rad:
        Largest usable zenith angle ``theta_max`` at either station (rad),
        strictly between 0 and pi/2.
    """

    altitude_m: float
    link_length_m: float
    earth_radius_m: float = EARTH_RADIUS_M
    mu_m3_per_s2: float = EARTH_MU_M3_PER_S2
    max_zenith_rad: float = math.radians(80.0)

    def __post_init__(self) -> None:
        if self.altitude_m <= 0:
            raise ValueError(f"altitude must be positive, got {self.altitude_m}")
        if self.link_length_m < 0:
            raise ValueError(f"link length must be >= 0, got {self.link_length_m}")
        if self.earth_radius_m <= 0 or self.mu_m3_per_s2 <= 0:
            raise ValueError("Earth radius and mu must be positive")
        if not 0.0 < self.max_zenith_rad < math.pi / 2:
            raise ValueError(
                f"max zenith angle must lie in (0, pi/2), got {self.max_zenith_rad}"
            )

    @property
    def orbit_radius_m(self) -> float:
        return self.altitude_m + self.earth_radius_m


@dataclass(frozen=True)
class PassTiming:
    """Visibility window of one pass: half-flyby time ``t0`` and ``T_FB = 2 t0``."""

    t0_s: float

    def __post_init__(self) -> None:
        if self.t0_s < 0:
            raise ValueError("t0 must be >= 0")

    @property
    def flyby_duration_s(self) -> float:
        return 2.0 * self.t0_s

    @property
    def visible(self) -> bool:
        return self.t0_s > 0.0


def angular_speed(geom: OrbitGeometry) -> float:
    """Orbital angular speed sqrt(mu / (h + R_E)^3) in rad/s."""
    return math.sqrt(geom.mu_m3_per_s2 / geom.orbit_radius_m**3)


def half_flyby_time(geom: OrbitGeometry) -> float:
    """Half of the joint-visibility window (s); 0 when the stations never both see
    the satellite below ``theta_max``.

    Closed form: the satellite sits at zenith angle ``theta_max`` (from each
    station) when the central angle from the stations' midpoint equals the value
    whose cosine appears below; dividing by the angular speed gives the time from
    closest approach back to the visibility edge.
    """
    r_e = geom.earth_radius_m
    h = geom.altitude_m
    cos_tm = math.cos(geom.max_zenith_rad)
    numer = r_e * (1.0 - cos_tm**2) + cos_tm * math.sqrt(
        h * h + 2.0 * h * r_e + r_e**2 * cos_tm**2
    )
    denom = geom.orbit_radius_m * math.cos(geom.link_length_m / (2.0 * r_e))
    if denom <= 0.0:
        # Stations more than a quarter great-circle apart: never jointly visible.
        return 0.0
    arg = numer / denom
    if arg > 1.0:
        return 0.0
    if arg < -1.0:
        # Unreachable for positive altitude/radius; guard against silent nonsense.
        raise RuntimeError(f"visibility cosine {arg} < -1; inputs are inconsistent")
    return math.acos(arg) / angular_speed(geom)


def pass_timing(geom: OrbitGeometry) -> PassTiming:
    """Convenience wrapper bundling t0 and T_FB."""
    return PassTiming(t0_s=half_flyby_time(geom))


def slant_distance(geom: OrbitGeometry, timing: PassTiming, t_s):
    """Station-to-satellite distance d(t) (m) for t within the flyby window.

    d^2 = R_E^2 + (R_E + h)^2
          - 2 R_E (R_E + h) cos(L0 / 2 R_E) cos(omega (t0 - t))

    Accepts scalar or array ``t_s``; values outside [0, T_FB] are rejected.
    """
    t = np.asarray(t_s, dtype=float)
    if np.any(t < 0.0) or np.any(t > timing.flyby_duration_s):
        raise ValueError(
            f"time outside the flyby window [0, {timing.flyby_duration_s}]"
        )
    r_e = geom.earth_radius_m
    r_o = geom.orbit_radius_m
    omega = angular_speed(geom)
    cos_half = math.cos(geom.link_length_m / (2.0 * r_e))
    d_sq = r_e**2 + r_o**2 - 2.0 * r_e * r_o * cos_half * np.cos(
        omega * (timing.t0_s - t)
    )
    d = np.sqrt(d_sq)
    return float(d) if np.isscalar(t_s) else d


def zenith_angle(geom: OrbitGeometry, d_m):
    """Zenith angle (rad) at a ground station for slant distance d.

    cos(theta) = h/d - (d^2 - h^2) / (2 R_E d)

    Valid on the visible branch only: configurations whose cosine falls outside
    (0, 1] (satellite at or beyond the local horizon, or d below the physical
    minimum) raise :class:`GeometryError`.
    """
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0.0):
        raise GeometryError("slant distance must be positive")
    h = geom.altitude_m
    r_e = geom.earth_radius_m
    cos_theta = h / d - (d * d - h * h) / (2.0 * r_e * d)
    if np.any(cos_theta > 1.0 + _COS_SLACK):
        raise GeometryError(
            "slant distance below the physical minimum for this altitude"
        )
    if np.any(cos_theta <= 0.0):
        raise GeometryError("satellite at or beyond the horizon (zenith >= pi/2)")
    theta = np.arccos(np.minimum(cos_theta, 1.0))
    return float(theta) if np.isscalar(d_m) else theta
