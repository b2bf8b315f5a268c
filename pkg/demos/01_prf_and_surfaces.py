"""
Coverage, eclipsing and the bistatic PRF bound
==============================================

A transmitter and a receiver 141 km apart share a coverage oval on which the
product of the two ranges is fixed. This script sizes that oval, the region
where the echo overlaps the direct pulse, and the highest PRF that keeps
consecutive pulses from overlapping at the receiver.
"""

import numpy as np

from pulsechase import (BistaticGeometry, CassiniSurface, cassini_point, containment_check, delta_r_bi,
                        prf_bi_max, prf_ellipses, prf_mono_max)
from pulsechase.surfaces import eclipsing_ellipsoid

baseline = np.sqrt(2) * 100.0
tau_p = 10e-6
surf = CassiniSurface.from_range(100.0, baseline)
geom = BistaticGeometry(baseline)

# the oval reaches 51.76 km past the receiver along the baseline
far = delta_r_bi(surf)
print(f"far edge beyond the receiver: {far:.2f} km")
print("oval on +x:", cassini_point(0.0, 0.0, surf).round(3))
print("oval waist:", cassini_point(np.pi / 2, 0.0, surf).round(3))

ecl = eclipsing_ellipsoid(geom, tau_p)
print(f"eclipsing ellipsoid semi-axes: {ecl.semi_major:.2f} x {ecl.semi_minor:.2f} km")

# a monostatic radar covering the same far edge must wait for 2 R_max
prf_bi = prf_bi_max(surf, tau_p)
prf_mo = prf_mono_max(baseline + far, tau_p)
print(f"PRF bistatic {prf_bi:.1f} Hz vs monostatic {prf_mo:.1f} Hz")

lead, trail = prf_ellipses(prf_bi, geom, tau_p)
print(f"next pulse: leading {lead.semi_major:.2f}/{lead.semi_minor:.2f} km, "
      f"trailing {trail.semi_major:.2f}/{trail.semi_minor:.2f} km")

# at the bound the whole oval still sits inside the trailing-edge ellipsoid
print("oval contained at the bound:", containment_check(prf_bi, surf, tau_p, samples=200))
print("contained 20% above it:", containment_check(1.2 * prf_bi, surf, tau_p, samples=200))

# the advantage grows with the baseline
for frac in (0.0, 0.25, 0.5, 0.75, 0.99):
    s = CassiniSurface.from_range(100.0, 200.0 * frac)
    print(f"L = {s.baseline:6.1f} km  PRF_bi = {prf_bi_max(s, tau_p):7.1f} Hz")
