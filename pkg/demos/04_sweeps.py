"""
Beam budgets over whole scenarios
=================================

Sweeps over transmit azimuth, elevation and time give the largest number of
simultaneous receive beams per azimuth. The tracked-cell case shows how a grid
of 200 azimuths steps over the spike at zero azimuth that 201 azimuths find.
"""

import time

import numpy as np

from pulsechase import ScenarioConfig, run_case1, run_case2, run_case3, switching_sweep

cfg = ScenarioConfig()

t0 = time.perf_counter()
field = switching_sweep(cfg)
print(f"max beam switching rate {field.max_abs_rate:.3f} beams/us")

surv = run_case2(cfg)
print(f"pulses on the coverage oval: up to {surv.global_max} beams")

for n in (200, 201):
    r = run_case3(cfg.replace(n_azi=n))
    print(f"tracked cell, {n} azimuths: max {r.global_max} beams, nearest azimuth to 0: "
          f"{np.abs(r.azimuth_deg).min():.3f} deg")

for label, res in (("chasing", run_case1(cfg)), ("whole trajectory", run_case1(cfg, "wpc")),
                   ("chasing, 10 km margin", run_case1(cfg.replace(eclipse_margin=10.0)))):
    print(f"{label:>22}: max {res.global_max} beams, {100 * res.excluded_fraction:.1f}% of grid excluded")
    for az in (0.0, 9.0, 30.0):
        i = int(np.argmin(np.abs(res.azimuth_deg - az)))
        print(f"{'':>24}azimuth {res.azimuth_deg[i]:6.2f} deg -> {res.max_beams[i]}")
print(f"total {time.perf_counter() - t0:.1f} s")
