"""Command-line front end: writes plot data as CSV plus a JSON run manifest."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, GeometryError
from .scenario import ScenarioConfig, run_case1, run_case2, run_case3, switching_sweep
from .surfaces import (CassiniSurface, cassini_point, cassini_radius, containment_check, delta_r_bi,
                       eclipsing_ellipsoid, prf_bi_max, prf_containment_bound, prf_ellipses, prf_mono_max)

log = logging.getLogger("pulsechase")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GEOMETRY, EXIT_INTERRUPTED = 0, 1, 2, 3, 130

PRF_COLUMNS = ["L_km", "R_bi_km", "tau_p_us", "prf_bi_hz", "prf_mono_hz", "delta_r_bi_km",
               "leading_a_km", "leading_b_km", "trailing_a_km", "trailing_b_km"]


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x) + 0.0:.6g}"


@dataclass
class RunManifest:
    command: str
    config: dict
    tool_version: str = __version__
    duration_s: float = 0.0
    outputs: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def write(self, path: Path):
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class Outputs:
    """Tracks files written by a command so an interrupted run can remove them."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.paths: list[Path] = []

    def csv(self, name: str, header, rows):
        path = self.dir / name
        self.paths.append(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        return path

    def cleanup(self):
        for p in self.paths:
            p.unlink(missing_ok=True)


def load_config(args) -> ScenarioConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for item in args.set or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            data[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            data[key.strip()] = raw
    for flag, key in (("n_azi", "n_azi"), ("eclipse_margin", "eclipse_margin")):
        v = getattr(args, flag, None)
        if v is not None:
            data[key] = v
    return ScenarioConfig.from_dict(data)


def prf_row(cfg: ScenarioConfig) -> list:
    surf = cfg.surface
    geom = cfg.geometry
    prf = prf_bi_max(surf, cfg.tau_p)
    dr = delta_r_bi(surf)
    lead, trail = prf_ellipses(prf, geom, cfg.tau_p)
    return [cfg.baseline, cfg.r_bi, cfg.tau_p * 1e6, prf, prf_mono_max(cfg.baseline + dr, cfg.tau_p), dr,
            lead.semi_major, lead.semi_minor, trail.semi_major, trail.semi_minor]


def surface_rows(cfg: ScenarioConfig, n: int = 361):
    """Boundary curves in the x-z plane (z positive down) for plotting."""
    surf = cfg.surface
    geom = cfg.geometry
    ang = np.linspace(0.0, 2 * np.pi, n)
    curves = {"cassini": cassini_point(ang, np.pi / 2, surf)[:, [0, 2]]}
    # ellipses about the origin, circle about the transmitter
    ecl = eclipsing_ellipsoid(geom, cfg.tau_p)
    lead, trail = prf_ellipses(prf_bi_max(surf, cfg.tau_p), geom, cfg.tau_p)
    for name, e in (("eclipsing", ecl), ("prf_leading", lead), ("prf_trailing", trail)):
        curves[name] = np.stack([e.semi_major * np.cos(ang), -e.semi_minor * np.sin(ang)], axis=1)
    r_mono = cfg.r_bi
    curves["monostatic"] = np.stack([geom.tx[0] + r_mono * np.cos(ang), -r_mono * np.sin(ang)], axis=1)
    for name, xz in curves.items():
        for a, (x, z) in zip(np.degrees(ang), xz):
            yield [name, a, x, z]


def _write_surfaces(out: Outputs, cfg: ScenarioConfig):
    rows = list(surface_rows(cfg))
    path = out.dir / "surfaces.csv"
    out.paths.append(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve", "angle_deg", "x_km", "z_km"])
        for name, a, x, z in rows:
            w.writerow([name, fmt(a), fmt(x), fmt(z)])
    return path


def cmd_prf(args, cfg, out: Outputs, man: RunManifest):
    row = prf_row(cfg)
    out.csv("prf.csv", PRF_COLUMNS, [row])
    _write_surfaces(out, cfg)
    man.summary = dict(zip(PRF_COLUMNS, (float(v) for v in row)))
    print(f"PRF_bi = {row[3] / 1e3:.3g} kHz ({row[3]:.1f} Hz), PRF_mono = {row[4] / 1e3:.3g} kHz, "
          f"delta_R_bi = {row[5]:.2f} km")
    return EXIT_OK


def cmd_surfaces(args, cfg, out: Outputs, man: RunManifest):
    _write_surfaces(out, cfg)
    return EXIT_OK


def cmd_switching(args, cfg, out: Outputs, man: RunManifest):
    f = switching_sweep(cfg)
    out.csv("switching.csv", ["azimuth_deg", "time_us", "rate_beams_per_us"],
            zip(f.azimuth_deg, f.time_us, f.rate))
    man.counters = {"grid_points": f.n_grid, "excluded": f.n_excluded, "rows": int(len(f.rate))}
    man.summary = {"max_abs_rate_beams_per_us": f.max_abs_rate}
    print(f"maximum switching rate: {f.max_abs_rate:.4g} beams/us")
    return EXIT_OK


def cmd_sweep(args, cfg, out: Outputs, man: RunManifest):
    if args.case == 1:
        res = run_case1(cfg, args.mode)
    elif args.case == 2:
        res = run_case2(cfg)
    else:
        res = run_case3(cfg)
    out.csv(f"case{args.case}.csv", ["azimuth_deg", "max_beams"], zip(res.azimuth_deg, res.max_beams))
    man.counters = res.counters
    man.summary = {"case": args.case, "mode": args.mode if args.case == 1 else None,
                   "global_max": res.global_max, "excluded_fraction": res.excluded_fraction}
    print(f"case {args.case}: global maximum {res.global_max} beams")
    return EXIT_OK


def _random_triples(n: int, seed: int):
    rng = np.random.default_rng(seed)
    r_bi = rng.uniform(10.0, 500.0, n)
    base = rng.uniform(0.0, 0.999, n) * 2 * r_bi
    tau = 10 ** rng.uniform(-7, -4, n)
    return zip(r_bi, base, tau)


def containment_suite(cfg: ScenarioConfig, n_random: int = 1000, samples: int = 256, seed: int = 0) -> dict:
    """Run the PRF containment property on the configured geometry and random geometries."""
    triples = [(cfg.r_bi, cfg.baseline, cfg.tau_p)] + list(_random_triples(n_random, seed))
    failures = []
    for r, L, tau in triples:
        surf = CassiniSurface.from_range(r, L)
        if not containment_check(prf_bi_max(surf, tau), surf, tau, samples):
            failures.append((float(r), float(L), float(tau)))
    # at the waist bound the trailing ellipsoid's semi-minor equals the oval's waist radius
    surf = cfg.surface
    _, trail = prf_ellipses(prf_containment_bound(surf, cfg.tau_p), cfg.geometry, cfg.tau_p)
    waist = float(cassini_radius(np.pi / 2, surf))
    rel = abs(trail.semi_minor - waist) / waist if waist > 0 else abs(trail.semi_minor)
    return {"checked": len(triples), "failures": failures, "waist_relative_error": rel,
            "passed": not failures and rel < 1e-6}


def cmd_check_containment(args, cfg, out: Outputs, man: RunManifest):
    res = containment_suite(cfg, args.random, args.samples, args.seed)
    man.summary = {k: v for k, v in res.items() if k != "failures"}
    man.summary["n_failures"] = len(res["failures"])
    print(f"containment: {res['checked']} geometries, {len(res['failures'])} failures, "
          f"waist relative error {res['waist_relative_error']:.2e}")
    return EXIT_OK if res["passed"] else EXIT_FAIL


COMMANDS = {"prf": cmd_prf, "surfaces": cmd_surfaces, "switching": cmd_switching, "sweep": cmd_sweep,
            "check-containment": cmd_check_containment}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with scenario fields")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config field")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pulsechase", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("prf", parents=[common], help="PRF bounds (prf.csv) and boundary curves (surfaces.csv)")
    sub.add_parser("surfaces", parents=[common], help="boundary curves only (surfaces.csv)")
    sub.add_parser("switching", parents=[common], help="beam switching-rate field (switching.csv)")
    sw = sub.add_parser("sweep", parents=[common], help="beam-budget sweep (case<N>.csv)")
    sw.add_argument("--case", type=int, choices=(1, 2, 3), required=True)
    sw.add_argument("--mode", choices=("pc", "wpc"), default="pc", help="case 1 only")
    sw.add_argument("--n-azi", dest="n_azi", type=int)
    sw.add_argument("--eclipse-margin", dest="eclipse_margin", type=float, metavar="KM")
    cc = sub.add_parser("check-containment", parents=[common], help="PRF containment property (exit 0/1)")
    cc.add_argument("--random", type=int, default=1000, help="random geometries (default 1000)")
    cc.add_argument("--samples", type=int, default=256, help="oval samples per axis (default 256)")
    cc.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = None
    try:
        cfg = load_config(args)
        cfg.surface  # geometry validity
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        out = Outputs(out_dir)
        man = RunManifest(args.command, cfg.to_dict())
        t0 = time.perf_counter()
        code = COMMANDS[args.command](args, cfg, out, man)
        man.duration_s = round(time.perf_counter() - t0, 3)
        man.outputs = [p.name for p in out.paths]
        if out.paths:
            stem = f"case{args.case}" if args.command == "sweep" else args.command
            mpath = out_dir / f"{stem}.manifest.json"
            man.write(mpath)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except KeyboardInterrupt:
        if out is not None:
            out.cleanup()
        print("interrupted", file=sys.stderr)
        return EXIT_INTERRUPTED


if __name__ == "__main__":
    sys.exit(main())
