"""Compiled kernels behind the public pulse-chasing API and the sweep drivers.

Vertices are always held as ``(8, 3)`` float arrays in the row order of
:func:`pulsechase.geometry.box_vertices`. Each row carries three binary
attributes (azimuth side, elevation side, leading/trailing face); flipping
one attribute moves to the neighbouring vertex along one box edge.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# attribute bits per row: azimuth sign > 0, elevation sign > 0, leading face
ATTR = np.array(
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
    dtype=np.int64,
)
INDEX_OF = np.full((2, 2, 2), -1, dtype=np.int64)
for _k in range(8):
    INDEX_OF[ATTR[_k, 0], ATTR[_k, 1], ATTR[_k, 2]] = _k

AZ, EL, RNG = 0, 1, 2

# relocation status codes
ST_NONE, ST_ONE, ST_TWO, ST_THREE, ST_FOUR, ST_FALLBACK = 0, 1, 2, 3, 4, 5
ST_INCONSISTENT, ST_CENTER_INSIDE = -1, -2

INSIDE_TOL = 1e-9

# parameter vector layout for the sweep kernels
P_HALF_L, P_S_ECL, P_TAU, P_DT, P_HALF_AZ, P_HALF_EL, P_R_MONO, P_RANGE_PROD = range(8)
P_SIN_CUT, P_DU, P_DV, P_SIN_GUARD, P_C0, P_CUBE_HALF, P_C = range(8, 15)
N_PARAMS = 15

# counter layout: grid points, then exclusion reasons
C_TOTAL, C_EARLY, C_ECLIPSE, C_MONO, C_RANGE, C_ELEV, C_INCONSISTENT, C_FALLBACK = range(8)
N_COUNTERS = 8


@njit(cache=True, nogil=True)
def range_sum(p, half_l):
    dx1 = p[0] + half_l
    dx2 = p[0] - half_l
    yz = p[1] * p[1] + p[2] * p[2]
    return math.sqrt(dx1 * dx1 + yz) + math.sqrt(dx2 * dx2 + yz)


@njit(cache=True, nogil=True)
def flip(k, a0, a1, a2):
    """Index of the vertex reached from row ``k`` by flipping the flagged attributes."""
    a = ATTR[k, 0] ^ a0
    e = ATTR[k, 1] ^ a1
    r = ATTR[k, 2] ^ a2
    return INDEX_OF[a, e, r]


@njit(cache=True, nogil=True)
def ellipsoid_crossing(p, q, s, half_l, out):
    """Write into ``out`` the point where segment p->q leaves the ellipsoid of range sum ``s``.

    ``p`` is inside and ``q`` outside; the ellipsoid is centred at the origin
    with its major axis along x.
    """
    a2 = (s / 2) ** 2
    b2 = a2 - half_l * half_l
    d0 = q[0] - p[0]
    d1 = q[1] - p[1]
    d2 = q[2] - p[2]
    qa = d0 * d0 / a2 + (d1 * d1 + d2 * d2) / b2
    qb = 2 * (p[0] * d0 / a2 + (p[1] * d1 + p[2] * d2) / b2)
    qc = p[0] * p[0] / a2 + (p[1] * p[1] + p[2] * p[2]) / b2 - 1.0
    disc = max(qb * qb - 4 * qa * qc, 0.0)
    sq = math.sqrt(disc)
    # larger root, written to avoid cancellation
    if qb >= 0:
        t = -2 * qc / (qb + sq) if qb + sq > 0 else 0.0
    else:
        t = (-qb + sq) / (2 * qa)
    out[0] = p[0] + t * d0
    out[1] = p[1] + t * d1
    out[2] = p[2] + t * d2


@njit(cache=True, nogil=True)
def relocate(V, s, half_l, center, out, moved):
    """Move eclipsed vertices onto the eclipsing ellipsoid.

    Args:
        V: Input vertices (8, 3); not modified.
        s: Range sum of the eclipsing ellipsoid.
        half_l: Half baseline.
        center: Pulse centre (3,), used for the precondition and the fallback.
        out: Output vertices (8, 3).
        moved: Output flags (8,), 1 where a vertex was translated.

    Returns:
        Status code (``ST_*``).
    """
    for k in range(8):
        moved[k] = 0
        for j in range(3):
            out[k, j] = V[k, j]
    if range_sum(center, half_l) < s - INSIDE_TOL:
        return ST_CENTER_INSIDE
    inside = np.zeros(8, dtype=np.int64)
    n = 0
    for k in range(8):
        if range_sum(V[k], half_l) < s - INSIDE_TOL:
            inside[n] = k
            n += 1
    if n == 0:
        return ST_NONE
    if n > 4:
        return ST_INCONSISTENT
    target = np.full(8, -1, dtype=np.int64)
    status = ST_FALLBACK
    if n == 1:
        # diagonal of the constant-elevation face
        k = inside[0]
        target[k] = flip(k, 1, 0, 1)
        status = ST_ONE
    elif n == 2:
        k0 = inside[0]
        k1 = inside[1]
        nd = 0
        edge = -1
        for j in range(3):
            if ATTR[k0, j] != ATTR[k1, j]:
                nd += 1
                edge = j
        if nd == 1:
            f0 = 0 if edge == 0 else 1
            f1 = 0 if edge == 1 else 1
            f2 = 0 if edge == 2 else 1
            target[k0] = flip(k0, f0, f1, f2)
            target[k1] = flip(k1, f0, f1, f2)
            status = ST_TWO
    elif n == 3:
        corner = -1
        for a in range(3):
            ka = inside[a]
            nb = 0
            for b in range(3):
                kb = inside[b]
                if kb != ka:
                    nd = 0
                    for j in range(3):
                        if ATTR[ka, j] != ATTR[kb, j]:
                            nd += 1
                    if nd == 1:
                        nb += 1
            if nb == 2:
                corner = ka
        if corner >= 0:
            # the attribute shared by all three eclipsed vertices
            free = -1
            for j in range(3):
                same = True
                for b in range(3):
                    if ATTR[inside[b], j] != ATTR[corner, j]:
                        same = False
                if same:
                    free = j
            f0 = 1 if free == 0 else 0
            f1 = 1 if free == 1 else 0
            f2 = 1 if free == 2 else 0
            for b in range(3):
                target[inside[b]] = flip(inside[b], f0, f1, f2)
            status = ST_THREE
    else:
        face = -1
        for j in range(3):
            same = True
            for b in range(4):
                if ATTR[inside[b], j] != ATTR[inside[0], j]:
                    same = False
            if same:
                face = j
        if face >= 0:
            f0 = 1 if face == 0 else 0
            f1 = 1 if face == 1 else 0
            f2 = 1 if face == 2 else 0
            for b in range(4):
                target[inside[b]] = flip(inside[b], f0, f1, f2)
            status = ST_FOUR
    tmp = np.empty(3)
    for b in range(n):
        k = inside[b]
        if status == ST_FALLBACK:
            ellipsoid_crossing(V[k], center, s, half_l, tmp)
        else:
            ellipsoid_crossing(V[k], V[target[k]], s, half_l, tmp)
        for j in range(3):
            out[k, j] = tmp[j]
        moved[k] = 1
    return status


@njit(cache=True, nogil=True)
def _cross(o0, o1, a0, a1, b0, b1):
    return (a0 - o0) * (b1 - o1) - (a1 - o1) * (b0 - o0)


@njit(cache=True, nogil=True)
def convex_hull(uv):
    """Counter-clockwise convex hull (monotone chain) of a small point set."""
    n = uv.shape[0]
    # insertion sort by (u, v); n is tiny
    order = np.arange(n)
    for i in range(1, n):
        j = i
        while j > 0:
            a = order[j - 1]
            b = order[j]
            if uv[a, 0] > uv[b, 0] or (uv[a, 0] == uv[b, 0] and uv[a, 1] > uv[b, 1]):
                order[j - 1] = b
                order[j] = a
                j -= 1
            else:
                break
    hull = np.empty((2 * n + 1, 2))
    m = 0
    for ii in range(n):
        p = order[ii]
        while m >= 2 and _cross(hull[m - 2, 0], hull[m - 2, 1], hull[m - 1, 0], hull[m - 1, 1],
                                uv[p, 0], uv[p, 1]) <= 0:
            m -= 1
        hull[m, 0] = uv[p, 0]
        hull[m, 1] = uv[p, 1]
        m += 1
    lower = m + 1
    for ii in range(n - 2, -1, -1):
        p = order[ii]
        while m >= lower and _cross(hull[m - 2, 0], hull[m - 2, 1], hull[m - 1, 0], hull[m - 1, 1],
                                    uv[p, 0], uv[p, 1]) <= 0:
            m -= 1
        hull[m, 0] = uv[p, 0]
        hull[m, 1] = uv[p, 1]
        m += 1
    if m > 1:
        m -= 1
    return hull[:m].copy()


@njit(cache=True, nogil=True)
def _strip_vrange(hull, ua, ub):
    """v-extent of the hull within ua <= u <= ub; (inf, -inf) when empty."""
    n = hull.shape[0]
    lo = np.inf
    hi = -np.inf
    for k in range(n):
        p0 = hull[k, 0]
        p1 = hull[k, 1]
        q0 = hull[(k + 1) % n, 0]
        q1 = hull[(k + 1) % n, 1]
        if ua <= p0 <= ub:
            lo = min(lo, p1)
            hi = max(hi, p1)
        for side in range(2):
            uu = ua if side == 0 else ub
            if (p0 - uu) * (q0 - uu) < 0:
                v = p1 + (uu - p0) / (q0 - p0) * (q1 - p1)
                lo = min(lo, v)
                hi = max(hi, v)
    return lo, hi


@njit(cache=True, nogil=True)
def column_ranges(uv, du, dv, u0, v0):
    """Active cells as rows ``(iu, iv_lo, iv_hi)``; columns with no cell are omitted.

    A cell ``[u0 + iu du, u0 + (iu+1) du] x [v0 + iv dv, ...]`` is active when it
    intersects the closed convex hull of ``uv``.
    """
    hull = convex_hull(uv)
    umin = np.inf
    umax = -np.inf
    for k in range(uv.shape[0]):
        umin = min(umin, uv[k, 0])
        umax = max(umax, uv[k, 0])
    i0 = int(math.floor((umin - u0) / du))
    i1 = int(math.floor((umax - u0) / du))
    out = np.empty((i1 - i0 + 1, 3), dtype=np.int64)
    m = 0
    for i in range(i0, i1 + 1):
        ua = u0 + i * du
        lo, hi = _strip_vrange(hull, ua, ua + du)
        if lo > hi:
            continue
        out[m, 0] = i
        out[m, 1] = int(math.floor((lo - v0) / dv))
        out[m, 2] = int(math.floor((hi - v0) / dv))
        m += 1
    return out[:m]


@njit(cache=True, nogil=True)
def count_cells(uv, du, dv):
    """Number of grid cells touched by the hull, grid anchored at the vertex minimum."""
    u0 = np.inf
    v0 = np.inf
    for k in range(uv.shape[0]):
        u0 = min(u0, uv[k, 0])
        v0 = min(v0, uv[k, 1])
    cols = column_ranges(uv, du, dv, u0, v0)
    total = 0
    for m in range(cols.shape[0]):
        total += cols[m, 2] - cols[m, 1] + 1
    return total


@njit(cache=True, nogil=True)
def guard_panel(V, half_l, sin_guard):
    """Receiver panel (quarter turns) facing the pulse.

    The front (+x) or back (-x) panel is used while the whole pulse is on one
    side of the receiver's y-z plane and its centroid direction is more than
    the guard angle away from that plane; otherwise the side panel (+y or -y)
    toward the centroid takes over.
    """
    wmin = np.inf
    wmax = -np.inf
    c0 = 0.0
    c1 = 0.0
    c2 = 0.0
    for k in range(8):
        q0 = V[k, 0] - half_l
        q1 = V[k, 1]
        q2 = V[k, 2]
        w = q0 / math.sqrt(q0 * q0 + q1 * q1 + q2 * q2)
        wmin = min(wmin, w)
        wmax = max(wmax, w)
        c0 += q0
        c1 += q1
        c2 += q2
    wc = c0 / math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
    if (wmin < 0 < wmax) or abs(wc) < sin_guard:
        return 1 if c1 > 0 else 3
    return 0 if wc > 0 else 2


@njit(cache=True, nogil=True)
def project_uv(V, half_l, panel, uv):
    """Direction cosines (u, v) of the vertices in the body frame of ``panel``."""
    for k in range(V.shape[0]):
        x = V[k, 0] - half_l
        y = V[k, 1]
        z = V[k, 2]
        for _ in range(panel):
            x, y = y, -x
        n = math.sqrt(x * x + y * y + z * z)
        uv[k, 0] = -y / n
        uv[k, 1] = -z / n


@njit(cache=True, nogil=True)
def above_cutoff(V, half_l, sin_cut):
    """True if any vertex is seen from the receiver above the elevation cutoff."""
    for k in range(V.shape[0]):
        q0 = V[k, 0] - half_l
        n = math.sqrt(q0 * q0 + V[k, 1] ** 2 + V[k, 2] ** 2)
        if -V[k, 2] > sin_cut * n:
            return True
    return False


@njit(cache=True, nogil=True)
def fill_box(tx0, phi, beta, r_trail, r_lead, half_az, half_el, V):
    for k in range(8):
        a = phi + (half_az if ATTR[k, 0] == 1 else -half_az)
        e = beta + (half_el if ATTR[k, 1] == 1 else -half_el)
        r = r_lead if ATTR[k, 2] == 1 else r_trail
        ce = math.cos(e)
        V[k, 0] = tx0 + r * math.cos(a) * ce
        V[k, 1] = r * math.sin(a) * ce
        V[k, 2] = -r * math.sin(e)


@njit(cache=True, nogil=True)
def fill_cube(center, half, V):
    """Axis-aligned cube with the same attribute ordering: azimuth side -> y, elevation side -> up, face -> x."""
    for k in range(8):
        V[k, 0] = center[0] + (half if ATTR[k, 2] == 1 else -half)
        V[k, 1] = center[1] + (half if ATTR[k, 0] == 1 else -half)
        V[k, 2] = center[2] - (half if ATTR[k, 1] == 1 else -half)


@njit(cache=True, nogil=True)
def center_excluded(c, p, counters, use_mono):
    """Centre-based exclusions; increments the matching counter and returns True if excluded."""
    half_l = p[P_HALF_L]
    if range_sum(c, half_l) <= p[P_S_ECL]:
        counters[C_ECLIPSE] += 1
        return True
    dx = c[0] + half_l
    yz = c[1] * c[1] + c[2] * c[2]
    rt = math.sqrt(dx * dx + yz)
    if use_mono and rt < p[P_R_MONO]:
        counters[C_MONO] += 1
        return True
    dx2 = c[0] - half_l
    rr = math.sqrt(dx2 * dx2 + yz)
    if rt * rr > p[P_RANGE_PROD] * (1 + 1e-9):
        counters[C_RANGE] += 1
        return True
    return False


@njit(cache=True, nogil=True)
def evaluate_shape(V, c, p, counters, work, moved, uv):
    """Relocate, apply the elevation cutoff and count beams; -1 when excluded."""
    half_l = p[P_HALF_L]
    st = relocate(V, p[P_S_ECL], half_l, c, work, moved)
    if st == ST_INCONSISTENT or st == ST_CENTER_INSIDE:
        counters[C_INCONSISTENT] += 1
        return -1
    if st == ST_FALLBACK:
        counters[C_FALLBACK] += 1
    if above_cutoff(work, half_l, p[P_SIN_CUT]):
        counters[C_ELEV] += 1
        return -1
    panel = guard_panel(work, half_l, p[P_SIN_GUARD])
    project_uv(work, half_l, panel, uv)
    return count_cells(uv, p[P_DU], p[P_DV])


@njit(cache=True, nogil=True)
def sweep_azimuth(phi, betas, ts, cube, use_mono, p, counters):
    """Maximum beam count over (elevation, time) for one azimuth.

    Args:
        cube: If True, the pulse box is replaced by an axis-aligned cube at the centre.
        use_mono: Apply the monostatic-range exclusion.
        p: Parameter vector (``P_*`` layout).
        counters: int64 array (``C_*`` layout), incremented in place.

    Returns:
        ``(best, beta_index, time_index)``.
    """
    half_l = p[P_HALF_L]
    tx0 = -half_l
    V = np.empty((8, 3))
    work = np.empty((8, 3))
    moved = np.empty(8, dtype=np.int64)
    uv = np.empty((8, 2))
    c = np.empty(3)
    best = 0
    bi = -1
    ti = -1
    for ib in range(betas.shape[0]):
        beta = betas[ib]
        cb = math.cos(beta)
        sb = math.sin(beta)
        cp = math.cos(phi)
        sp = math.sin(phi)
        for it in range(ts.shape[0]):
            t = ts[it]
            counters[C_TOTAL] += 1
            rc = p[P_C] * t + p[P_C0]
            if t < p[P_TAU] or rc <= 0:
                counters[C_EARLY] += 1
                continue
            c[0] = tx0 + rc * cp * cb
            c[1] = rc * sp * cb
            c[2] = -rc * sb
            if center_excluded(c, p, counters, use_mono):
                continue
            if cube:
                fill_cube(c, p[P_CUBE_HALF], V)
            else:
                r_trail = max(p[P_C] * (t - p[P_TAU] - p[P_DT]), 0.0)
                r_lead = p[P_C] * (t + p[P_DT])
                fill_box(tx0, phi, beta, r_trail, r_lead, p[P_HALF_AZ], p[P_HALF_EL], V)
            n = evaluate_shape(V, c, p, counters, work, moved, uv)
            if n > best:
                best = n
                bi = ib
                ti = it
    return best, bi, ti


@njit(cache=True, nogil=True)
def trajectory_azimuth(phi, betas, ts, p, counters):
    """Beam budget without chasing: one box spanning the whole valid trajectory per elevation.

    The box reaches from the transmitter out to the leading edge at the last
    time step whose centre passes the eclipsing and coverage tests.
    """
    half_l = p[P_HALF_L]
    tx0 = -half_l
    V = np.empty((8, 3))
    work = np.empty((8, 3))
    moved = np.empty(8, dtype=np.int64)
    uv = np.empty((8, 2))
    c = np.empty(3)
    best = 0
    bi = -1
    ti = -1
    for ib in range(betas.shape[0]):
        beta = betas[ib]
        cb = math.cos(beta)
        sb = math.sin(beta)
        cp = math.cos(phi)
        sp = math.sin(phi)
        last = -1
        for it in range(ts.shape[0]):
            t = ts[it]
            counters[C_TOTAL] += 1
            rc = p[P_C] * t + p[P_C0]
            if t < p[P_TAU] or rc <= 0:
                counters[C_EARLY] += 1
                continue
            c[0] = tx0 + rc * cp * cb
            c[1] = rc * sp * cb
            c[2] = -rc * sb
            if center_excluded(c, p, counters, False):
                continue
            last = it
        if last < 0:
            continue
        rc = p[P_C] * ts[last] + p[P_C0]
        c[0] = tx0 + rc * cp * cb
        c[1] = rc * sp * cb
        c[2] = -rc * sb
        fill_box(tx0, phi, beta, 0.0, p[P_C] * (ts[last] + p[P_DT]), p[P_HALF_AZ], p[P_HALF_EL], V)
        n = evaluate_shape(V, c, p, counters, work, moved, uv)
        if n > best:
            best = n
            bi = ib
            ti = last
    return best, bi, ti


@njit(cache=True, nogil=True)
def cassini_centers(centers, p, counters, out):
    """Beam count for pulses centred on each given point (-1 where excluded).

    The transmit direction and time are recovered from the centre position.
    """
    half_l = p[P_HALF_L]
    tx0 = -half_l
    V = np.empty((8, 3))
    work = np.empty((8, 3))
    moved = np.empty(8, dtype=np.int64)
    uv = np.empty((8, 2))
    for m in range(centers.shape[0]):
        c = centers[m]
        out[m] = -1
        counters[C_TOTAL] += 1
        d0 = c[0] - tx0
        r = math.sqrt(d0 * d0 + c[1] * c[1] + c[2] * c[2])
        t = (r - p[P_C0]) / p[P_C]
        if t < p[P_TAU] or r == 0:
            counters[C_EARLY] += 1
            continue
        if center_excluded(c, p, counters, True):
            continue
        phi = math.atan2(c[1], d0)
        beta = math.asin(max(-1.0, min(1.0, -c[2] / r)))
        r_trail = max(p[P_C] * (t - p[P_TAU] - p[P_DT]), 0.0)
        r_lead = p[P_C] * (t + p[P_DT])
        fill_box(tx0, phi, beta, r_trail, r_lead, p[P_HALF_AZ], p[P_HALF_EL], V)
        out[m] = evaluate_shape(V, c, p, counters, work, moved, uv)
