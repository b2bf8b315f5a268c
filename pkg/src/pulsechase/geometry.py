"""Coordinate frames, pulse-box construction and the receiver direction-cosine transform.

All lengths are kilometres in a north-east-down frame, times are seconds and
angles are radians. The transmitter sits at ``[-L/2, 0, 0]`` and the receiver at
``[L/2, 0, 0]``; neither frame is rotated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import speed_of_light

from .errors import DomainError

C_KM_S = speed_of_light / 1000.0
"""Speed of light in km/s."""

CENTER_CONVENTIONS = ("offset", "midpoint")


@dataclass(frozen=True)
class Vec3:
    """Cartesian position in km (north, east, down)."""

    x: float
    y: float
    z: float

    @classmethod
    def of(cls, p) -> "Vec3":
        a = np.asarray(p, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return float(np.hypot(np.hypot(self.x, self.y), self.z))

    def __array__(self, dtype=None, copy=None):
        return self.array if dtype is None else self.array.astype(dtype)


@dataclass(frozen=True)
class SphericalDirection:
    """Range (km), azimuth and elevation (radians)."""

    r: float
    phi: float
    beta: float

    def __post_init__(self):
        if self.r < 0:
            raise DomainError(f"negative range {self.r}")
        if abs(self.beta) > np.pi / 2 + 1e-12:
            raise DomainError(f"elevation {self.beta} outside [-pi/2, pi/2]")


@dataclass(frozen=True)
class BistaticGeometry:
    """Transmitter/receiver pair separated by ``baseline`` km along x."""

    baseline: float

    def __post_init__(self):
        if not np.isfinite(self.baseline) or self.baseline < 0:
            raise DomainError(f"baseline must be >= 0, got {self.baseline}")

    @property
    def tx(self) -> np.ndarray:
        return np.array([-self.baseline / 2, 0.0, 0.0])

    @property
    def rx(self) -> np.ndarray:
        return np.array([self.baseline / 2, 0.0, 0.0])

    @property
    def tx_position(self) -> Vec3:
        return Vec3.of(self.tx)

    @property
    def rx_position(self) -> Vec3:
        return Vec3.of(self.rx)


@dataclass(frozen=True)
class BeamSpec:
    """Beamwidths and inaccuracy paddings.

    Attributes:
        bw_t_az, bw_t_el: Transmit 3 dB beamwidths (rad).
        bw_r_az, bw_r_el: Receive 3 dB beamwidths (rad).
        dpsi_az, dpsi_el: Pointing inaccuracy padding (rad).
        dt: Timing inaccuracy (s).
        tau_p: Pulse length (s).
    """

    bw_t_az: float = np.radians(2.0)
    bw_t_el: float = np.radians(2.0)
    bw_r_az: float = np.radians(2.0)
    bw_r_el: float = np.radians(2.0)
    dpsi_az: float = np.radians(1.0)
    dpsi_el: float = np.radians(1.0)
    dt: float = 0.5e-6
    tau_p: float = 10e-6

    def __post_init__(self):
        for name in ("bw_t_az", "bw_t_el", "bw_r_az", "bw_r_el"):
            v = getattr(self, name)
            if not 0 < v < np.pi / 2:
                raise DomainError(f"{name} must lie in (0, pi/2), got {v}")
        for name in ("dpsi_az", "dpsi_el", "dt"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0")
        if self.tau_p <= 0:
            raise DomainError("tau_p must be > 0")

    @property
    def half_az(self) -> float:
        """Azimuth half-width of the pulse box."""
        return self.bw_t_az / 2 + self.dpsi_az

    @property
    def half_el(self) -> float:
        return self.bw_t_el / 2 + self.dpsi_el


@dataclass(frozen=True, eq=False)
class PulseBox:
    """Eight vertices (origin frame, km); rows 0-3 trailing face, rows 4-7 leading face."""

    vertices: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.shape != (8, 3):
            raise DomainError(f"pulse box needs 8x3 vertices, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __eq__(self, other):
        return isinstance(other, PulseBox) and np.array_equal(self.vertices, other.vertices)

    def __hash__(self):
        return hash(self.vertices.tobytes())


@dataclass(frozen=True)
class UvwPoint:
    """Direction cosines of a receiver-frame point."""

    u: float
    v: float
    w: float


# Azimuth/elevation sign and face (0 trailing, 1 leading) of each vertex, in
# row order. Row k holds vertex i = k + 1 with exponents g = floor(i/2 - 1)
# and h = floor((i + 1)/2).
_I = np.arange(1, 9)
VERTEX_AZ_SIGN = (-1.0) ** np.floor(_I / 2 - 1)
VERTEX_EL_SIGN = (-1.0) ** np.floor((_I + 1) / 2)
VERTEX_LEADING = (_I > 4).astype(int)


def _cart(r, phi, beta):
    cb = np.cos(beta)
    return np.stack(np.broadcast_arrays(r * np.cos(phi) * cb, r * np.sin(phi) * cb, -r * np.sin(beta)), axis=-1)


def spherical_to_cartesian(s: SphericalDirection) -> Vec3:
    """Convert range/azimuth/elevation to NED Cartesian coordinates."""
    return Vec3.of(_cart(s.r, s.phi, s.beta))


def cartesian_to_spherical(p) -> SphericalDirection:
    """Inverse of :func:`spherical_to_cartesian`.

    At the poles the azimuth is reported as 0.

    Raises:
        DomainError: for the zero vector.
    """
    x, y, z = np.asarray(p, dtype=float).reshape(3)
    r = float(np.sqrt(x * x + y * y + z * z))
    if r == 0.0:
        raise DomainError("cannot convert the zero vector")
    horiz = np.hypot(x, y)
    beta = float(np.arctan2(-z, horiz))
    phi = float(np.arctan2(y, x)) if horiz > 0 else 0.0
    if phi == -np.pi:
        phi = np.pi
    return SphericalDirection(r, phi, beta)


def pulse_radii(beams: BeamSpec, t: float) -> tuple[float, float]:
    """Trailing and leading ranges from the transmitter at time ``t``."""
    return C_KM_S * (t - beams.tau_p - beams.dt), C_KM_S * (t + beams.dt)


def box_vertices(tx, phi_t, beta_t, r_trail, r_lead, half_az, half_el) -> np.ndarray:
    """Vertex array of a pulse box with arbitrary trailing/leading ranges."""
    r = np.where(VERTEX_LEADING == 1, r_lead, r_trail)
    return np.asarray(tx) + _cart(r, phi_t + VERTEX_AZ_SIGN * half_az, beta_t + VERTEX_EL_SIGN * half_el)


def pulse_box(geom: BistaticGeometry, beams: BeamSpec, phi_t: float, beta_t: float, t: float) -> PulseBox:
    """Eight-vertex transmit pulse polyhedron at time ``t``.

    Raises:
        DomainError: if ``t < tau_p``.
    """
    if t < beams.tau_p:
        raise DomainError(f"t={t} precedes the end of pulse emission ({beams.tau_p})")
    r_trail, r_lead = pulse_radii(beams, t)
    return PulseBox(box_vertices(geom.tx, phi_t, beta_t, max(r_trail, 0.0), r_lead, beams.half_az, beams.half_el))


def center_range(beams: BeamSpec, t, convention: str = "offset"):
    """Range of the pulse centre from the transmitter.

    ``"offset"`` uses ``c (t + dt/2)``; ``"midpoint"`` uses the mean of the trailing
    and leading ranges, ``c (t - tau_p/2)``.
    """
    if convention == "offset":
        return C_KM_S * (t + beams.dt / 2)
    if convention == "midpoint":
        return C_KM_S * (t - beams.tau_p / 2)
    raise DomainError(f"unknown centre convention {convention!r}")


def time_for_center_range(beams: BeamSpec, r, convention: str = "offset"):
    """Inverse of :func:`center_range`."""
    if convention == "offset":
        return r / C_KM_S - beams.dt / 2
    if convention == "midpoint":
        return r / C_KM_S + beams.tau_p / 2
    raise DomainError(f"unknown centre convention {convention!r}")


def pulse_center(geom: BistaticGeometry, beams: BeamSpec, phi_t: float, beta_t: float, t: float,
                 convention: str = "offset") -> Vec3:
    """Centre of the pulse box along the transmit direction."""
    if t < beams.tau_p:
        raise DomainError(f"t={t} precedes the end of pulse emission ({beams.tau_p})")
    return Vec3.of(geom.tx + _cart(center_range(beams, t, convention), phi_t, beta_t))


def uvw_array(q) -> np.ndarray:
    """Vectorised direction cosines for receiver-frame points of shape (..., 3)."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1)
    if np.any(n == 0):
        raise DomainError("direction cosines undefined at the receiver")
    return np.stack([-q[..., 1] / n, -q[..., 2] / n, q[..., 0] / n], axis=-1)


def to_uvw(p_rx_frame) -> UvwPoint:
    """Direction cosines ``(-y, -z, x)/|p|`` of a receiver body-frame point."""
    u, v, w = uvw_array(np.asarray(p_rx_frame, dtype=float).reshape(3))
    return UvwPoint(float(u), float(v), float(w))


def rotate_about_z(p, quarter_turns: int):
    """Rotate by ``quarter_turns * 90`` degrees about z using sign swaps only.

    Accepts a :class:`Vec3` (returns a :class:`Vec3`) or an array of shape (..., 3).
    """
    k = int(quarter_turns) % 4
    a = np.asarray(p, dtype=float)
    x, y, z = a[..., 0], a[..., 1], a[..., 2]
    for _ in range(k):
        x, y = -y, x
    out = np.stack([x, y, z], axis=-1)
    return Vec3.of(out) if isinstance(p, Vec3) else out
