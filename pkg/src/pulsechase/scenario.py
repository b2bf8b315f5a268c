"""Simulation drivers: scenario configuration, exclusion rules and the three sweep cases."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import _kernels as K
from .errors import ConfigError
from .geometry import C_KM_S, CENTER_CONVENTIONS, BeamSpec, BistaticGeometry, center_range
from .surfaces import CassiniSurface, cassini_point, delta_r_bi

log = logging.getLogger(__name__)

THREADS_ENV = "BISTATIC_THREADS"

EXCLUSION_REASONS = ("eclipsing", "monostatic", "out-of-range", "elevation")


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario parameters. Lengths in km, times in s, angles in degrees.

    Attributes:
        r_bi: Bistatic range; the coverage oval is ``R_T R_R = r_bi**2``.
        baseline: Transmitter-receiver separation.
        eclipse_margin: When positive, points with ``R_T + R_R <= baseline + eclipse_margin``
            are treated as eclipsed instead of using the pulse length.
        r_mono_exclusion: Points closer than this to the transmitter are left to monostatic operation.
        case3_cube_edge: Edge length of the cube used for the tracked-cell case.
        center_convention: ``"midpoint"`` (mean of trailing and leading ranges) or
            ``"offset"`` (``c (t + dt/2)``).
        panel_guard: Angle (degrees) from the receiver y-z plane inside which the side panel is used.
        switching_n_azi: Azimuth samples of the switching-rate field.
        case2_azimuth_grid: ``(first, last, count)`` of the azimuths (degrees) that
            surveillance-case results are binned to (nearest point).
    """

    r_bi: float = 100.0
    baseline: float = float(np.sqrt(2.0) * 100.0)
    tau_p: float = 10e-6
    bw_t_az: float = 2.0
    bw_t_el: float = 2.0
    bw_r_az: float = 2.0
    bw_r_el: float = 2.0
    dpsi_az: float = 1.0
    dpsi_el: float = 1.0
    dt: float = 0.5e-6
    n_azi: int = 201
    n_elev: int = 50
    time_step: float = 0.5e-6
    elevation_cutoff: float = 70.0
    eclipse_margin: float = 0.0
    r_mono_exclusion: float = 100.0
    case3_cube_edge: float = 0.4
    n_cassini: int = 200
    center_convention: str = "midpoint"
    panel_guard: float = 8.0
    switching_n_azi: int = 200
    case2_azimuth_grid: tuple = (-60.0, 60.0, 134)

    def __post_init__(self):
        positive = ("r_bi", "tau_p", "bw_t_az", "bw_t_el", "bw_r_az", "bw_r_el", "time_step",
                    "elevation_cutoff", "case3_cube_edge")
        for name in positive:
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not np.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        for name in ("baseline", "dpsi_az", "dpsi_el", "dt", "eclipse_margin", "r_mono_exclusion", "panel_guard"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not np.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be a non-negative number, got {v!r}")
        for name in ("n_azi", "n_elev", "n_cassini", "switching_n_azi"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 2:
                raise ConfigError(f"{name} must be an integer >= 2, got {v!r}")
        if self.center_convention not in CENTER_CONVENTIONS:
            raise ConfigError(f"center_convention must be one of {CENTER_CONVENTIONS}")
        for name in ("bw_t_az", "bw_t_el", "bw_r_az", "bw_r_el"):
            if getattr(self, name) >= 90:
                raise ConfigError(f"{name} must be below 90 degrees")
        grid = tuple(self.case2_azimuth_grid)
        if len(grid) != 3 or not isinstance(grid[2], int) or grid[2] < 2 or not grid[0] < grid[1]:
            raise ConfigError("case2_azimuth_grid must be (first_deg, last_deg, count >= 2)")
        object.__setattr__(self, "case2_azimuth_grid", (float(grid[0]), float(grid[1]), int(grid[2])))

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        d = dict(d)
        if "l_over" in d:
            d.setdefault("baseline", d.pop("l_over"))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        if "case2_azimuth_grid" in d:
            d["case2_azimuth_grid"] = tuple(d["case2_azimuth_grid"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["case2_azimuth_grid"] = list(self.case2_azimuth_grid)
        return d

    def replace(self, **kw) -> "ScenarioConfig":
        d = asdict(self)
        d.update(kw)
        return type(self)(**d)

    # derived objects

    @property
    def geometry(self) -> BistaticGeometry:
        return BistaticGeometry(self.baseline)

    @property
    def surface(self) -> CassiniSurface:
        return CassiniSurface.from_range(self.r_bi, self.baseline)

    @property
    def beams(self) -> BeamSpec:
        r = np.radians
        return BeamSpec(r(self.bw_t_az), r(self.bw_t_el), r(self.bw_r_az), r(self.bw_r_el),
                        r(self.dpsi_az), r(self.dpsi_el), self.dt, self.tau_p)

    @property
    def eclipse_range_sum(self) -> float:
        """Range sum below which a point counts as eclipsed."""
        if self.eclipse_margin > 0:
            return self.baseline + self.eclipse_margin
        return self.baseline + C_KM_S * self.tau_p

    def time_grid(self) -> np.ndarray:
        """Time samples from 0 to the echo delay of the far edge of coverage."""
        t_end = (self.baseline + delta_r_bi(self.surface)) / C_KM_S
        n = int(np.floor(t_end / self.time_step + 1e-9)) + 1
        return self.time_step * np.arange(n)

    def azimuth_grid(self, n: int | None = None) -> np.ndarray:
        return np.linspace(-np.pi, np.pi, self.n_azi if n is None else n)

    def elevation_grid(self) -> np.ndarray:
        return np.linspace(0.0, np.pi / 2, self.n_elev)

    def center_offset(self) -> float:
        """Constant ``c0`` in ``center range = c t + c0``."""
        return float(center_range(self.beams, 0.0, self.center_convention))


@dataclass
class SweepResult:
    """Per-azimuth maximum beam counts.

    Attributes:
        azimuth_deg: Transmit azimuths.
        max_beams: Maximum over elevation and time at each azimuth (0 if nothing was counted).
        global_max: ``max(max_beams)``.
        excluded_fraction: Share of grid points excluded.
        counters: Grid-point tallies by outcome.
        arg_elevation_deg, arg_time_us: Where each maximum occurred (NaN if none).
    """

    azimuth_deg: np.ndarray
    max_beams: np.ndarray
    global_max: int
    excluded_fraction: float
    counters: dict = field(default_factory=dict)
    arg_elevation_deg: np.ndarray | None = None
    arg_time_us: np.ndarray | None = None

    def at(self, azimuth_deg: float) -> int:
        """Value at the grid azimuth nearest to ``azimuth_deg``."""
        return int(self.max_beams[np.argmin(np.abs(self.azimuth_deg - azimuth_deg))])


@dataclass
class SwitchingField:
    """Switching rates over the azimuth-time plane at zero elevation, non-excluded points only."""

    azimuth_deg: np.ndarray
    time_us: np.ndarray
    rate: np.ndarray
    n_grid: int
    n_excluded: int

    @property
    def max_abs_rate(self) -> float:
        return float(np.abs(self.rate).max()) if len(self.rate) else 0.0


def worker_count() -> int:
    """Thread count from ``BISTATIC_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0")
    return n or (os.cpu_count() or 1)


def kernel_params(cfg: ScenarioConfig) -> np.ndarray:
    b = cfg.beams
    p = np.zeros(K.N_PARAMS)
    p[K.P_HALF_L] = cfg.baseline / 2
    p[K.P_S_ECL] = cfg.eclipse_range_sum
    p[K.P_TAU] = cfg.tau_p
    p[K.P_DT] = cfg.dt
    p[K.P_HALF_AZ] = b.half_az
    p[K.P_HALF_EL] = b.half_el
    p[K.P_R_MONO] = cfg.r_mono_exclusion
    p[K.P_RANGE_PROD] = cfg.r_bi**2
    p[K.P_SIN_CUT] = np.sin(np.radians(cfg.elevation_cutoff))
    p[K.P_DU] = np.sin(b.bw_r_az)
    p[K.P_DV] = np.sin(b.bw_r_el)
    p[K.P_SIN_GUARD] = np.sin(np.radians(cfg.panel_guard))
    p[K.P_C0] = cfg.center_offset()
    p[K.P_CUBE_HALF] = cfg.case3_cube_edge / 2
    p[K.P_C] = C_KM_S
    return p


def _counters_dict(c: np.ndarray) -> dict:
    names = ("grid_points", "before_emission", "eclipsing", "monostatic", "out_of_range", "elevation",
             "inconsistent_geometry", "relocation_fallback")
    return {n: int(v) for n, v in zip(names, c)}


def _excluded_total(c: np.ndarray) -> int:
    return int(c[K.C_EARLY] + c[K.C_ECLIPSE] + c[K.C_MONO] + c[K.C_RANGE] + c[K.C_ELEV] + c[K.C_INCONSISTENT])


def exclude_point(center, cfg: ScenarioConfig, geom: BistaticGeometry | None = None, vertices=None,
                  monostatic: bool = True):
    """Whether a grid point is left out of the beam budget, and why.

    Checks, in order: eclipsing of the centre, monostatic range of the
    transmitter, coverage (outside the oval), and the receiver elevation
    cutoff (any of ``vertices`` above it, or the centre if no vertices are given).

    Returns:
        ``(excluded, reason)``; ``reason`` is None or one of :data:`EXCLUSION_REASONS`.
    """
    geom = cfg.geometry if geom is None else geom
    c = np.asarray(center, dtype=float).reshape(3)
    rt = float(np.linalg.norm(c - geom.tx))
    rr = float(np.linalg.norm(c - geom.rx))
    if rt + rr <= cfg.eclipse_range_sum:
        return True, "eclipsing"
    if monostatic and rt < cfg.r_mono_exclusion:
        return True, "monostatic"
    if rt * rr > cfg.r_bi**2 * (1 + 1e-9):
        return True, "out-of-range"
    pts = c[None, :] if vertices is None else np.asarray(vertices, dtype=float).reshape(-1, 3)
    q = pts - geom.rx
    if np.any(-q[:, 2] > np.sin(np.radians(cfg.elevation_cutoff)) * np.linalg.norm(q, axis=1)):
        return True, "elevation"
    return False, None


def _map_azimuths(fn, phis):
    n = min(worker_count(), len(phis))
    if n <= 1:
        return [fn(i, phi) for i, phi in enumerate(phis)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, range(len(phis)), phis))


def _azimuth_sweep(cfg: ScenarioConfig, kernel, phis) -> SweepResult:
    betas = cfg.elevation_grid()
    ts = cfg.time_grid()
    p = kernel_params(cfg)

    def one(i, phi):
        c = np.zeros(K.N_COUNTERS, dtype=np.int64)
        best, bi, ti = kernel(phi, betas, ts, p, c)
        return best, bi, ti, c

    out = _map_azimuths(one, phis)
    counters = np.sum([o[3] for o in out], axis=0)
    best = np.array([o[0] for o in out], dtype=np.int64)
    arg_el = np.array([np.degrees(betas[o[1]]) if o[1] >= 0 else np.nan for o in out])
    arg_t = np.array([ts[o[2]] * 1e6 if o[2] >= 0 else np.nan for o in out])
    if best.max(initial=0) == 0:
        log.warning("no grid point survived exclusion")
    return SweepResult(np.degrees(phis), best, int(best.max(initial=0)),
                       _excluded_total(counters) / max(int(counters[K.C_TOTAL]), 1),
                       _counters_dict(counters), arg_el, arg_t)


def run_case1(cfg: ScenarioConfig, mode: str = "pc") -> SweepResult:
    """Full-volume chase of the transmitted pulse.

    Args:
        mode: ``"pc"`` counts the beams covering the instantaneous pulse box
            (maximum over time); ``"wpc"`` counts the beams covering the whole
            trajectory of the pulse along each transmit direction.
    """
    cfg.surface  # validates the geometry
    if mode == "pc":
        def kernel(phi, betas, ts, p, c):
            return K.sweep_azimuth(phi, betas, ts, False, True, p, c)
    elif mode == "wpc":
        kernel = K.trajectory_azimuth
    else:
        raise ConfigError(f"unknown case-1 mode {mode!r}")
    return _azimuth_sweep(cfg, kernel, cfg.azimuth_grid())


def run_case3(cfg: ScenarioConfig) -> SweepResult:
    """Chase of a small cube (a tracked target cell) centred on the pulse centre.

    A tracked target is followed anywhere inside coverage, so the monostatic
    range exclusion is not applied here.
    """
    cfg.surface

    def kernel(phi, betas, ts, p, c):
        return K.sweep_azimuth(phi, betas, ts, True, False, p, c)

    return _azimuth_sweep(cfg, kernel, cfg.azimuth_grid())


def case2_centers(cfg: ScenarioConfig) -> np.ndarray:
    """Pulse centres on a uniform (theta, varpi) grid over the coverage oval."""
    g = np.linspace(0.0, np.pi, cfg.n_cassini)
    return cassini_point(g[:, None], g[None, :], cfg.surface).reshape(-1, 3)


def run_case2(cfg: ScenarioConfig) -> SweepResult:
    """Beam budget with the pulse centred on the coverage oval.

    Each oval point fixes the transmit direction and time. Counts are reduced
    by maximum onto the nearest azimuth of ``cfg.case2_azimuth_grid``; bins that
    receive no counted point are omitted.
    """
    centers = case2_centers(cfg)
    p = kernel_params(cfg)
    n = worker_count()
    chunks = np.array_split(np.arange(len(centers)), max(n, 1))

    def one(i, idx):
        c = np.zeros(K.N_COUNTERS, dtype=np.int64)
        out = np.empty(len(idx), dtype=np.int64)
        K.cassini_centers(np.ascontiguousarray(centers[idx]), p, c, out)
        return out, c

    res = _map_azimuths(one, chunks)
    counts = np.concatenate([r[0] for r in res])
    counters = np.sum([r[1] for r in res], axis=0)

    lo, hi, nb = cfg.case2_azimuth_grid
    grid = np.linspace(lo, hi, nb)
    step = grid[1] - grid[0]
    d = centers - cfg.geometry.tx
    phi_deg = np.degrees(np.arctan2(d[:, 1], d[:, 0]))
    b = np.rint((phi_deg - lo) / step).astype(np.int64)
    ok = (counts >= 0) & (b >= 0) & (b < nb)
    per_bin = np.full(nb, -1, dtype=np.int64)
    np.maximum.at(per_bin, b[ok], counts[ok])
    keep = per_bin >= 0
    counters_d = _counters_dict(counters)
    counters_d["outside_azimuth_grid"] = int(np.sum((counts >= 0) & ~((b >= 0) & (b < nb))))
    if counters[K.C_EARLY]:
        log.warning("%d oval points have no valid time", counters[K.C_EARLY])
    best = per_bin[keep]
    return SweepResult(grid[keep], best, int(best.max(initial=0)),
                       _excluded_total(counters) / max(int(counters[K.C_TOTAL]), 1), counters_d)


def switching_sweep(cfg: ScenarioConfig) -> SwitchingField:
    """Beam switching rate over the zero-elevation azimuth-time grid.

    Uses ``cfg.switching_n_azi`` azimuths over [-180, 180] degrees and the case
    time grid. Points whose pulse centre is eclipsed, within monostatic range or
    outside coverage are dropped.
    """
    from .chasing import beam_switch_rate

    phis = cfg.azimuth_grid(cfg.switching_n_azi)
    ts = cfg.time_grid()
    P, T = np.meshgrid(phis, ts, indexing="ij")
    r = center_range(cfg.beams, T, cfg.center_convention)
    geom = cfg.geometry
    x = geom.tx[0] + r * np.cos(P)
    y = r * np.sin(P)
    rt = np.hypot(x - geom.tx[0], y)
    rr = np.hypot(x - geom.rx[0], y)
    ok = (r > 0) & (rt + rr > cfg.eclipse_range_sum) & (rt >= cfg.r_mono_exclusion)
    ok &= rt * rr <= cfg.r_bi**2 * (1 + 1e-9)
    rate = beam_switch_rate(cfg.baseline, r[ok], P[ok], cfg.bw_r_az)
    return SwitchingField(np.degrees(P[ok]), T[ok] * 1e6, np.asarray(rate), int(P.size), int(P.size - ok.sum()))
