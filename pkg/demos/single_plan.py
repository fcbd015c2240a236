"""One receding-horizon plan: how the half-space shapes the burns.

A tiny error on the wrong side of the unstable mode grows ~1e6 times over
the two-revolution horizon yet stays inside the ball, so without the
half-space nothing needs doing; with it the plan pushes the error back
onto the side whose uncontrolled exit is the intended one.
"""

import dataclasses

import numpy as np

from halokeep.scenario import builtin_path, load_scenario, resolve
from halokeep.stationkeeping import StationkeepingProblem, halfspace_normal, plan_maneuvers

res = resolve(load_scenario(builtin_path("earth_moon_ball.yaml")))
orbit, model, cons = res.orbit, res.model, res.mission.constraints
dx0 = -3e-11 * orbit.manifold_direction(0)

for halfspace in (False, True):
    c = dataclasses.replace(cons, halfspace=halfspace)
    plan = plan_maneuvers(StationkeepingProblem(orbit, model, dx0, 80, c))
    burns = np.flatnonzero(np.abs(plan.controls).sum(axis=1) > 1e-9)
    side = [float(x @ halfspace_normal(orbit, k + 1, c.direction)) for k, x in enumerate(plan.errors[1:])]
    print(f"half-space {'on ' if halfspace else 'off'}: {plan.total_dv_mps:.2e} m/s in "
          f"{len(burns)} burns at steps {burns.tolist()}, "
          f"smallest projection on the escape normal {min(side):+.2e}")
