"""Bistatic detection, eclipsing and PRF geometry.

The constant-SNR contour of a bistatic pair is a Cassini oval of revolution
about the baseline (``R_T * R_R = const``). Eclipsing and the PRF limits are
prolate ellipsoids with the two sites as foci (``R_T + R_R = const``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import Boltzmann

from .errors import DomainError, GeometryError
from .geometry import C_KM_S, BistaticGeometry

MONOSTATIC_EPS_KM = 1e-9
"""Baselines shorter than this use the coincident-site (sphere) formulas."""


@dataclass(frozen=True)
class CassiniSurface:
    """Cassini oval of revolution ``R_T * R_R = range_product`` about the baseline.

    Raises:
        GeometryError: if the oval would split into two lobes (``L > 2 sqrt(range_product)``).
    """

    range_product: float
    baseline: float

    def __post_init__(self):
        if self.range_product <= 0 or self.baseline < 0:
            raise DomainError("range_product must be > 0 and baseline >= 0")
        if self.baseline > 2 * np.sqrt(self.range_product) * (1 + 1e-12):
            raise GeometryError(
                f"baseline {self.baseline} km exceeds 2*sqrt(range_product) = "
                f"{2 * np.sqrt(self.range_product):.6g} km; the oval splits into two lobes"
            )

    @classmethod
    def from_range(cls, r_bi: float, baseline: float) -> "CassiniSurface":
        return cls(r_bi * r_bi, baseline)

    @property
    def r_bi(self) -> float:
        return float(np.sqrt(self.range_product))

    @property
    def is_monostatic(self) -> bool:
        return self.baseline < MONOSTATIC_EPS_KM

    def contains(self, p, rtol: float = 1e-9):
        """True where ``R_T * R_R`` does not exceed the range product."""
        p = np.asarray(p, dtype=float)
        half = self.baseline / 2
        rt = np.sqrt((p[..., 0] + half) ** 2 + p[..., 1] ** 2 + p[..., 2] ** 2)
        rr = np.sqrt((p[..., 0] - half) ** 2 + p[..., 1] ** 2 + p[..., 2] ** 2)
        return rt * rr <= self.range_product * (1 + rtol)


@dataclass(frozen=True)
class ProlateEllipsoid:
    """Surface ``R_T + R_R = range_sum`` with foci ``focus_separation`` apart, centred at the origin."""

    focus_separation: float
    range_sum: float

    def __post_init__(self):
        if not self.range_sum > self.focus_separation:
            raise DomainError(
                f"range sum {self.range_sum} must exceed focus separation {self.focus_separation}"
            )

    @property
    def semi_major(self) -> float:
        return self.range_sum / 2

    @property
    def semi_minor(self) -> float:
        a = self.semi_major
        return float(np.sqrt(a * a - (self.focus_separation / 2) ** 2))

    def range_sum_of(self, p):
        p = np.asarray(p, dtype=float)
        half = self.focus_separation / 2
        rt = np.sqrt((p[..., 0] + half) ** 2 + p[..., 1] ** 2 + p[..., 2] ** 2)
        rr = np.sqrt((p[..., 0] - half) ** 2 + p[..., 1] ** 2 + p[..., 2] ** 2)
        return rt + rr

    def contains(self, p, rtol: float = 0.0):
        return self.range_sum_of(p) <= self.range_sum * (1 + rtol)


@dataclass(frozen=True)
class RadarConstantParams:
    """Parameters of the bistatic radar constant (SI units).

    Attributes:
        p_t: Transmit power (W).
        g_t, g_r: Antenna gains.
        wavelength: Carrier wavelength (m).
        sigma_bi: Bistatic radar cross section (m^2).
        f_t, f_r: Pattern propagation factors.
        t_s: System noise temperature (K).
        b_n: Noise bandwidth (Hz).
        l_t, l_r: Transmit and receive losses (> 1).
    """

    p_t: float
    g_t: float
    g_r: float
    wavelength: float
    sigma_bi: float
    f_t: float
    f_r: float
    t_s: float
    b_n: float
    l_t: float
    l_r: float


def radar_constant(p: RadarConstantParams) -> float:
    """Bistatic radar constant ``k`` so that ``SNR = k / (R_T^2 R_R^2)``."""
    vals = [p.p_t, p.g_t, p.g_r, p.wavelength, p.sigma_bi, p.f_t, p.f_r, p.t_s, p.b_n]
    if min(vals) <= 0:
        raise DomainError("radar constant parameters must be positive")
    if p.l_t <= 1 or p.l_r <= 1:
        raise DomainError("losses must exceed 1")
    num = p.p_t * p.g_t * p.g_r * p.wavelength**2 * p.sigma_bi * p.f_t**2 * p.f_r**2
    return num / ((4 * np.pi) ** 3 * Boltzmann * p.t_s * p.b_n * p.l_t * p.l_r)


def snr(k: float, r_t, r_r):
    """Linear SNR of a target at ranges ``r_t``, ``r_r`` (same length unit as ``k``)."""
    r_t = np.asarray(r_t, dtype=float)
    r_r = np.asarray(r_r, dtype=float)
    if np.any(r_t <= 0) or np.any(r_r <= 0):
        raise DomainError("ranges must be positive")
    out = k / (r_t**2 * r_r**2)
    return float(out) if out.ndim == 0 else out


def cassini_c(theta, surf: CassiniSurface):
    """Squared radial coordinate of the oval in units of ``(L/2)^2``.

    Raises:
        DomainError: for a zero baseline, where the expression is singular.
    """
    if surf.is_monostatic:
        raise DomainError("cassini_c is singular for a zero baseline; use the sphere branch")
    theta = np.asarray(theta, dtype=float)
    s2 = np.sin(2 * theta) ** 2
    ratio = 16 * surf.range_product**2 / surf.baseline**4
    out = np.cos(2 * theta) + np.sqrt(np.maximum(ratio - s2, 0.0))
    return float(out) if out.ndim == 0 else out


def cassini_radius(theta, surf: CassiniSurface):
    """Distance of the oval from the baseline midpoint in direction ``theta`` from +x."""
    if surf.is_monostatic:
        return np.sqrt(surf.range_product) + 0 * np.asarray(theta, dtype=float)
    return surf.baseline / 2 * np.sqrt(np.maximum(cassini_c(theta, surf), 0.0))


def cassini_point(theta, varpi, surf: CassiniSurface) -> np.ndarray:
    """Point on the oval of revolution; ``theta`` from +x, ``varpi`` rotates about x.

    Broadcasts over array arguments; the trailing axis holds (x, y, z).
    """
    theta, varpi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(varpi, float))
    rad = cassini_radius(theta, surf)
    st = np.sin(theta)
    return np.stack([rad * np.cos(theta), rad * np.cos(varpi) * st, -rad * np.sin(varpi) * st], axis=-1)


def delta_r_bi(surf: CassiniSurface) -> float:
    """Distance from the receiver to the far edge of the oval along +x."""
    if surf.is_monostatic:
        return float(np.sqrt(surf.range_product))
    return float(surf.baseline / 2 * (np.sqrt(cassini_c(0.0, surf)) - 1))


def eclipsing_ellipsoid(geom: BistaticGeometry, tau_p: float) -> ProlateEllipsoid:
    """Region where the echo overlaps the direct-path pulse."""
    return ProlateEllipsoid(geom.baseline, geom.baseline + C_KM_S * tau_p)


def is_eclipsed(p, geom: BistaticGeometry, tau_p: float):
    """True where ``R_T + R_R <= L + c tau_p``."""
    return eclipsing_ellipsoid(geom, tau_p).contains(p)


def prf_bi_max(surf: CassiniSurface, tau_p: float) -> float:
    """Largest PRF for which the next pulse's leading edge reaches the receiver
    only after echoes from the whole oval have arrived."""
    L = surf.baseline
    return float(C_KM_S / (np.sqrt(L * L + 4 * surf.range_product) - L + C_KM_S * tau_p))


def prf_mono_max(r_max: float, tau_p: float) -> float:
    """Unambiguous-range PRF limit of a monostatic radar with range ``r_max`` km."""
    if r_max <= 0:
        raise DomainError("r_max must be positive")
    return float(C_KM_S / (2 * r_max + C_KM_S * tau_p))


def prf_containment_bound(surf: CassiniSurface, tau_p: float) -> float:
    """PRF at which the trailing-edge ellipsoid's semi-minor axis equals the oval's waist."""
    return float(C_KM_S / (2 * np.sqrt(surf.range_product) - surf.baseline + C_KM_S * tau_p))


def prf_ellipses(prf: float, geom: BistaticGeometry, tau_p: float) -> tuple[ProlateEllipsoid, ProlateEllipsoid]:
    """Ellipsoids reached by the next pulse's leading and trailing edges.

    Returns:
        ``(leading, trailing)`` with range sums ``L + c/prf`` and ``L + c(1/prf - tau_p)``.
    """
    if prf <= 0 or 1.0 / prf <= tau_p:
        raise DomainError("pulse interval must exceed the pulse length")
    L = geom.baseline
    return ProlateEllipsoid(L, L + C_KM_S / prf), ProlateEllipsoid(L, L + C_KM_S * (1.0 / prf - tau_p))


def containment_check(prf: float, surf: CassiniSurface, tau_p: float, samples: int = 200,
                      rtol: float = 1e-9) -> bool:
    """Check that every sampled oval point lies inside the trailing PRF ellipsoid.

    The oval is sampled on a uniform ``samples x samples`` grid over
    ``theta in [0, 2 pi)`` and ``varpi in [0, pi)``.
    """
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    varpi = np.linspace(0.0, np.pi, samples, endpoint=False)
    pts = cassini_point(theta[:, None], varpi[None, :], surf)
    _, trailing = prf_ellipses(prf, BistaticGeometry(surf.baseline), tau_p)
    return bool(np.all(trailing.contains(pts, rtol=rtol)))
