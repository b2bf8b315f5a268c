"""Receiver-side pulse chasing: switching rate, vertex relocation, panel choice, beam counting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DomainError, InconsistentGeometryError, PreconditionError, SplitCoverageError
from .geometry import C_KM_S, BeamSpec, BistaticGeometry, PulseBox, rotate_about_z, uvw_array

SWITCH_RATE_CONSTANT = 17.2
"""Scale of the switching-rate expression for km distances, degree beamwidths and beams/us."""

DEFAULT_PANEL_GUARD_DEG = 8.0

CASE_TAGS = {
    K.ST_NONE: "none",
    K.ST_ONE: "one",
    K.ST_TWO: "two",
    K.ST_THREE: "three",
    K.ST_FOUR: "four",
    K.ST_FALLBACK: "fallback",
}


def beam_switch_rate(l_km, r_t_km, phi_t, bw_r_az):
    """Receive beams crossed per microsecond by a pulse moving along azimuth ``phi_t``.

    Args:
        l_km: Baseline (km).
        r_t_km: Pulse range from the transmitter (km).
        phi_t: Transmit azimuth (rad).
        bw_r_az: Receive azimuth beamwidth (degrees).

    Returns:
        Signed rate; odd in ``phi_t``.
    """
    if np.any(np.asarray(bw_r_az) <= 0):
        raise DomainError("receive beamwidth must be positive")
    s = np.sin(phi_t)
    den = (r_t_km * s) ** 2 + (l_km - r_t_km * np.cos(phi_t)) ** 2
    out = SWITCH_RATE_CONSTANT * l_km * s / (bw_r_az * den)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BeamGrid:
    """Active receive-beam cells in (u, v) direction-cosine space.

    Attributes:
        u_origin, v_origin: Lower-left corner of cell (0, 0).
        du, dv: Cell sizes.
        active_cells: Set of ``(iu, iv)`` indices.
        panel: Receiver panel (quarter turns about z) the grid belongs to.
    """

    u_origin: float
    v_origin: float
    du: float
    dv: float
    active_cells: frozenset = field(default_factory=frozenset)
    panel: int = 0

    @property
    def count(self) -> int:
        return len(self.active_cells)


@dataclass(frozen=True)
class RelocationReport:
    moved_count: int
    moved_indices: tuple
    case_tag: str
    new_box: PulseBox


def eclipse_range_sum(geom: BistaticGeometry, tau_p: float) -> float:
    return geom.baseline + C_KM_S * tau_p


def relocate_vertices(box: PulseBox, geom: BistaticGeometry, tau_p: float, center=None,
                      range_sum: float | None = None) -> RelocationReport:
    """Pull eclipsed vertices onto the eclipsing ellipsoid.

    One eclipsed vertex moves along the diagonal of its constant-elevation face.
    Two vertices sharing an edge each move diagonally across the face
    perpendicular to that edge. Three vertices forming an L move along the
    attribute they share, toward the non-eclipsed side. A whole eclipsed face
    is pushed toward the opposite face. Any other pattern of at most four
    vertices is pulled toward the pulse centre.

    Args:
        box: Input pulse box.
        geom: Bistatic geometry.
        tau_p: Pulse length (s); sets the eclipsing range sum ``L + c tau_p``.
        center: Pulse centre; defaults to the vertex centroid.
        range_sum: Override for the eclipsing range sum (km).

    Raises:
        PreconditionError: if the centre itself is eclipsed.
        InconsistentGeometryError: if more than four vertices are eclipsed.
    """
    s = eclipse_range_sum(geom, tau_p) if range_sum is None else float(range_sum)
    c = box.vertices.mean(axis=0) if center is None else np.asarray(center, dtype=float).reshape(3)
    out = np.empty((8, 3))
    moved = np.empty(8, dtype=np.int64)
    st = K.relocate(np.ascontiguousarray(box.vertices), s, geom.baseline / 2, c, out, moved)
    if st == K.ST_CENTER_INSIDE:
        raise PreconditionError("pulse centre lies inside the eclipsing ellipsoid")
    if st == K.ST_INCONSISTENT:
        raise InconsistentGeometryError("more than four vertices inside the eclipsing ellipsoid")
    idx = tuple(int(i) for i in np.flatnonzero(moved))
    return RelocationReport(len(idx), idx, CASE_TAGS[st], PulseBox(out))


def body_frame(points, geom: BistaticGeometry, panel: int) -> np.ndarray:
    """Receiver body coordinates of origin-frame points for ``panel`` (quarter turns)."""
    q = np.asarray(points, dtype=float) - geom.rx
    return rotate_about_z(q, (4 - int(panel)) % 4)


def select_panel(box: PulseBox, geom: BistaticGeometry) -> int:
    """Panel maximising the smallest boresight cosine over the vertices.

    Ties go to the smallest index.

    Raises:
        SplitCoverageError: if no panel sees every vertex in its forward half-space.
    """
    scores = np.array([uvw_array(body_frame(box.vertices, geom, k))[:, 2].min() for k in range(4)])
    k = int(np.argmax(scores))
    if scores[k] <= 0:
        raise SplitCoverageError(f"best panel {k} has min w = {scores[k]:.3g}")
    return k


def assign_panel(box: PulseBox, geom: BistaticGeometry, guard_deg: float = DEFAULT_PANEL_GUARD_DEG) -> int:
    """Panel used for counting: front/back by centroid side, side panels near the y-z plane.

    Args:
        guard_deg: Angular distance from the receiver's y-z plane below which the
            pulse centroid is handed to the side panel.
    """
    return int(K.guard_panel(np.ascontiguousarray(box.vertices), geom.baseline / 2,
                             np.sin(np.radians(guard_deg))))


def project_box(box: PulseBox, geom: BistaticGeometry, panel: int) -> np.ndarray:
    """(u, v) direction cosines of the vertices as seen by ``panel``."""
    return uvw_array(body_frame(box.vertices, geom, panel))[:, :2]


def hull_intersects_rect(hull: np.ndarray, lo, hi) -> bool:
    """Separating-axis test between a convex polygon and an axis-aligned rectangle (both closed)."""
    hull = np.asarray(hull, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if hull[:, 0].max() < lo[0] or hull[:, 0].min() > hi[0]:
        return False
    if hull[:, 1].max() < lo[1] or hull[:, 1].min() > hi[1]:
        return False
    rect = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    n = len(hull)
    for k in range(n):
        e = hull[(k + 1) % n] - hull[k]
        axis = np.array([-e[1], e[0]])
        if not axis.any():
            continue
        ph = hull @ axis
        pr = rect @ axis
        if ph.max() < pr.min() or pr.max() < ph.min():
            return False
    return True


def sat_cells(uv: np.ndarray, du: float, dv: float) -> frozenset:
    """Active cells by testing every cell of the bounding box with :func:`hull_intersects_rect`."""
    uv = np.asarray(uv, dtype=float)
    u0, v0 = uv.min(axis=0)
    hull = K.convex_hull(np.ascontiguousarray(uv))
    nu = int(np.floor((uv[:, 0].max() - u0) / du)) + 1
    nv = int(np.floor((uv[:, 1].max() - v0) / dv)) + 1
    cells = set()
    for i in range(nu):
        for j in range(nv):
            lo = (u0 + i * du, v0 + j * dv)
            if hull_intersects_rect(hull, lo, (lo[0] + du, lo[1] + dv)):
                cells.add((i, j))
    return frozenset(cells)


def grid_cells(uv: np.ndarray, du: float, dv: float, origin=None) -> frozenset:
    """Active cells via per-column hull extents (same result as :func:`sat_cells`, much faster)."""
    uv = np.ascontiguousarray(uv, dtype=float)
    u0, v0 = uv.min(axis=0) if origin is None else origin
    cols = K.column_ranges(uv, float(du), float(dv), float(u0), float(v0))
    return frozenset((int(i), int(j)) for i, j0, j1 in cols for j in range(j0, j1 + 1))


def count_active_beams(box: PulseBox, geom: BistaticGeometry, beams: BeamSpec, panel_policy: str = "guard",
                       guard_deg: float = DEFAULT_PANEL_GUARD_DEG, method: str = "sat"):
    """Number of receive beams needed to cover the pulse box.

    The vertices are projected into the chosen panel's (u, v) space and a grid
    of ``sin(bw_r_az) x sin(bw_r_el)`` cells is laid from the vertex minimum. A
    cell is active when it meets the convex hull of the projected vertices.

    Args:
        panel_policy: ``"guard"`` (see :func:`assign_panel`) or ``"best"`` (see
            :func:`select_panel`; a split pulse is counted per panel over the
            vertices in front of it and summed).
        method: ``"sat"`` for the rectangle-by-rectangle test or ``"columns"``.

    Returns:
        ``(count, grid)``; for a split pulse ``grid`` holds the panel with the most cells.
    """
    du, dv = np.sin(beams.bw_r_az), np.sin(beams.bw_r_el)
    cells_fn = sat_cells if method == "sat" else grid_cells
    if panel_policy == "guard":
        panels = [assign_panel(box, geom, guard_deg)]
    elif panel_policy == "best":
        try:
            panels = [select_panel(box, geom)]
        except SplitCoverageError:
            panels = None
    else:
        raise DomainError(f"unknown panel policy {panel_policy!r}")
    if panels is not None:
        uv = project_box(box, geom, panels[0])
        cells = cells_fn(uv, du, dv)
        u0, v0 = uv.min(axis=0)
        return len(cells), BeamGrid(float(u0), float(v0), du, dv, cells, panels[0])
    total, best = 0, None
    for k in range(4):
        uvw = uvw_array(body_frame(box.vertices, geom, k))
        front = uvw[uvw[:, 2] > 0, :2]
        if len(front) == 0:
            continue
        cells = cells_fn(front, du, dv)
        total += len(cells)
        if best is None or len(cells) > best.count:
            u0, v0 = front.min(axis=0)
            best = BeamGrid(float(u0), float(v0), du, dv, cells, k)
    return total, best
