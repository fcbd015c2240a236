"""A ten-revolution Earth-Moon mission followed by an exit check.

The full 100-revolution runs are what ``halokeep simulate`` does with the
packaged scenarios; this keeps the demo to about ten seconds.
"""

import dataclasses

import numpy as np

from halokeep.controller import run_mission
from halokeep.safety import SafetyConfig, verify_mission
from halokeep.scenario import builtin_path, load_scenario, resolve

res = resolve(load_scenario(builtin_path("earth_moon_ball.yaml")))
log = run_mission(dataclasses.replace(res.mission, revolutions=10))
per_rev = log.revolution_dv()
print(f"total {log.total_dv_mps:.4f} m/s; first revolution {per_rev[0]:.4f} m/s, "
      f"then {per_rev[1:].mean() * 1e3:.2f} mm/s per revolution")
print(f"steps without thrust after rev 2: {log.impulsive_fraction():.1%}")

report = verify_mission(log, res.orbit, SafetyConfig(window=(4, None), sample_every=10, workers=1))
print(f"uncontrolled exits through the intended side (revs 4-10): {report.success_rate:.1%}")
print({k: v for k, v in report.counts().items() if v})
