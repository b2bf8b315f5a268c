"""Geometry and beam budgets of cooperative bistatic pulse-chasing radar."""

from .errors import (ConfigError, DomainError, GeometryError, InconsistentGeometryError,
                     PreconditionError, PulseChaseError, SplitCoverageError)
from .geometry import (C_KM_S, BeamSpec, BistaticGeometry, PulseBox, SphericalDirection, UvwPoint, Vec3,
                       cartesian_to_spherical, pulse_box, pulse_center, rotate_about_z,
                       spherical_to_cartesian, to_uvw)
from .surfaces import (CassiniSurface, ProlateEllipsoid, RadarConstantParams, cassini_c, cassini_point,
                       containment_check, delta_r_bi, is_eclipsed, prf_bi_max, prf_ellipses, prf_mono_max,
                       radar_constant, snr)
from .chasing import (BeamGrid, RelocationReport, assign_panel, beam_switch_rate, count_active_beams,
                      relocate_vertices, select_panel)
from .scenario import (ScenarioConfig, SweepResult, exclude_point, run_case1, run_case2, run_case3,
                       switching_sweep)

__version__ = "0.1.0"
