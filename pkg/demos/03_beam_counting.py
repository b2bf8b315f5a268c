"""
Counting receive beams
======================

The receiver steers a grid of beams in direction-cosine space. A beam is
needed when the projected pulse touches its cell. Far from the receiver the
pulse is a small patch; close by it can fill a large part of the panel.
"""

import numpy as np

from pulsechase import BeamSpec, BistaticGeometry, PreconditionError, count_active_beams, pulse_box, relocate_vertices
from pulsechase.chasing import project_box

geom = BistaticGeometry(np.sqrt(2) * 100.0)
beams = BeamSpec()

for t_us in (480, 490, 520, 600):
    box = pulse_box(geom, beams, 0.0, 0.0, t_us * 1e-6)
    try:
        box = relocate_vertices(box, geom, beams.tau_p).new_box
    except PreconditionError as exc:
        print(f"t = {t_us} us: skipped ({exc})")
        continue
    n, grid = count_active_beams(box, geom, beams)
    uv = project_box(box, geom, grid.panel)
    span = np.ptp(uv, axis=0)
    print(f"t = {t_us} us: panel {grid.panel}, (u, v) span {span.round(3)}, {n} beams")

# off the baseline the pulse stays a small patch
for az in (10, 30, 45):
    box = pulse_box(geom, beams, np.radians(az), np.radians(5), 560e-6)
    print(f"azimuth {az:2d} deg: {count_active_beams(box, geom, beams)[0]} beams")
