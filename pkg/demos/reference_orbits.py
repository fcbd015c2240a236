"""Build both packaged halo orbits and look at their unstable manifolds.

Run from anywhere after installing the package:

    python3 demos/reference_orbits.py
"""

import numpy as np

from halokeep.halo import build_reference_orbit, load_initial_guess, manifold_trajectories
from halokeep.scenario import builtin_path

for ic in ("earth_moon_l2_halo.ic", "saturn_enceladus_l2_halo.ic"):
    orbit = build_reference_orbit(load_initial_guess(builtin_path(ic)))
    p = orbit.params
    print(f"{p.name}: period {p.nd_to_days(orbit.period):.3f} d ({p.nd_to_hours(orbit.period):.2f} h), "
          f"lambda_u = {orbit.unstable_eigenvalue:.1f}, dt = {p.nd_to_hours(orbit.dt):.3f} h")

    # seed both branches at every 8th knot and see which side of L2 they end up on
    L = orbit.libration_position()
    R = orbit.escape_radius()
    for sign in (+1, -1):
        sides = []
        for m in manifold_trajectories(orbit, 1e-6, sign, tau=3 * orbit.period, stride=8):
            r = np.linalg.norm(m.trajectory.states[:, :3] - L, axis=1)
            first_out = int(np.argmax(r > R))
            sides.append("right" if m.trajectory.states[first_out, 0] > L[0] else "left")
        print(f"  {sign:+d} branch exits: {', '.join(sides)}")
