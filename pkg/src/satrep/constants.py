"""Physical constants shared across the simulator.

Values that are genuinely universal live here; anything a scenario may want to
override (Earth radius, gravitational parameter) also appears as a default on the
relevant parameter dataclass.
"""

EARTH_RADIUS_M = 6.378e6
"""Mean Earth radius (m)."""

EARTH_MU_M3_PER_S2 = 3.986004418e14
"""Geocentric gravitational constant GM (m^3 s^-2), WGS-84 convention."""

PLANCK_J_S = 6.62607015e-34
"""Planck constant (J s), exact SI value."""

SPEED_OF_LIGHT_M_PER_S = 2.99792458e8
"""Speed of light in vacuum (m/s), exact SI value."""
