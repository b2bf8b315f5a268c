"""
Pulse boxes and eclipsed corners
================================

The transmitted pulse at time t is a thin spherical shell segment bounded by
the beam edges. Its eight corners are what the receiver chases. Corners that
dip into the eclipsing region are slid back onto its surface before counting.
"""

import numpy as np

from pulsechase import BeamSpec, BistaticGeometry, pulse_box, pulse_center, relocate_vertices
from pulsechase.chasing import eclipse_range_sum

geom = BistaticGeometry(np.sqrt(2) * 100.0)
beams = BeamSpec()
s = eclipse_range_sum(geom, beams.tau_p)


def range_sum(p):
    return np.linalg.norm(p - geom.tx, axis=-1) + np.linalg.norm(p - geom.rx, axis=-1)


box = pulse_box(geom, beams, np.radians(20), np.radians(5), 300e-6)
print("corner ranges from the transmitter (km):")
print(np.linalg.norm(box.vertices - geom.tx, axis=1).round(3))

# march a pulse along 30 degrees azimuth at the horizon until its centre clears the eclipsing zone
phi, beta = np.radians(30), np.radians(0)
for t in np.arange(20e-6, 600e-6, 0.5e-6):
    centre = pulse_center(geom, beams, phi, beta, t, convention="midpoint").array
    if range_sum(centre) > s:
        break
box = pulse_box(geom, beams, phi, beta, t)
rep = relocate_vertices(box, geom, beams.tau_p, center=centre)
print(f"t = {t * 1e6:.1f} us: {rep.moved_count} corners eclipsed, case '{rep.case_tag}'")
print("range sums before:", range_sum(box.vertices).round(4))
print("range sums after: ", range_sum(rep.new_box.vertices).round(4))
print(f"eclipsing range sum: {s:.4f} km")
