"""
Periodic halo reference orbits.

A halo orbit is symmetric about the x-z plane, so it can be converged by
shooting from one perpendicular crossing (``qy = vx = vz = 0``) to the next
and doubling the crossing time. The z amplitude is held fixed to pick the
family member; ``qx`` and ``vy`` are corrected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .dynamics import (
    PropagationError,
    SystemParams,
    Trajectory,
    collinear_point,
    get_system,
    propagate,
    propagate_with_stm,
)

log = logging.getLogger(__name__)

ORBIT_RTOL = 1e-13
ORBIT_ATOL = 1e-13


class CorrectionError(RuntimeError):
    """Differential correction did not converge or lost its crossing."""


class InitialConditionError(ValueError):
    """Malformed or inconsistent initial-condition file."""


@dataclass(frozen=True)
class InitialGuess:
    state: np.ndarray
    period: float
    system: str = ""
    knots: int = 41
    comments: tuple = ()


def _format_float(v: float) -> str:
    return repr(float(v))


def write_initial_guess(path, guess: InitialGuess):
    """Write an initial-condition file (``key = value`` lines, ``#`` comments)."""
    lines = [f"# {c}" for c in guess.comments]
    lines.append(f"system = {guess.system}")
    lines.append("x0 = " + " ".join(_format_float(v) for v in guess.state))
    lines.append(f"period = {_format_float(guess.period)}")
    lines.append(f"N = {int(guess.knots)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_initial_guess(source) -> InitialGuess:
    """Read an initial-condition file.

    ``source`` is a path. Required keys: ``x0`` (six numbers) and ``period``;
    optional ``system`` and ``N`` (default 41). The state must be an x-z plane
    crossing, i.e. ``qy = vx = vz = 0``.
    """
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InitialConditionError(f"cannot read initial-condition file {path}: {exc}") from exc
    values = {}
    comments = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        if "=" not in line:
            raise InitialConditionError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val
    try:
        state = np.array([float(v) for v in values["x0"].split()])
        period = float(values["period"])
        knots = int(values.get("N", 41))
    except KeyError as exc:
        raise InitialConditionError(f"{path}: missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InitialConditionError(f"{path}: {exc}") from None
    if state.shape != (6,) or not np.all(np.isfinite(state)):
        raise InitialConditionError(f"{path}: x0 must hold six finite numbers")
    if not (np.isfinite(period) and period > 0):
        raise InitialConditionError(f"{path}: period must be positive")
    if state[1] != 0.0 or state[3] != 0.0 or state[5] != 0.0:
        raise InitialConditionError(f"{path}: x0 is not an x-z plane crossing (need qy = vx = vz = 0)")
    return InitialGuess(state, period, values.get("system", ""), knots, tuple(comments))


def _half_period_crossing(x0, params, t_max, rtol, atol):
    def cross_y(t, y, *args):
        return y[1]

    cross_y.terminal = True
    # leave y = 0 in the direction of vy0, so the next crossing is the opposite one
    cross_y.direction = -1.0 if x0[4] > 0 else 1.0
    traj, stms, sol = propagate_with_stm(x0, (0.0, t_max), params, rtol, atol, events=cross_y)
    if len(sol.t_events[0]) == 0:
        raise CorrectionError(f"no x-z plane crossing within t={t_max:.6g}")
    t_c = float(sol.t_events[0][0])
    y_c = sol.y_events[0][0]
    return t_c, y_c[:6], y_c[6:].reshape(6, 6)


def differential_correct(guess, params: SystemParams, tol=1e-10, period_guess=None,
                         max_iter=50, rtol=ORBIT_RTOL, atol=ORBIT_ATOL):
    """Converge a symmetric halo orbit by single shooting on the half period.

    Parameters
    ----------
    guess : array_like or InitialGuess
        Crossing-form state ``[qx, 0, qz, 0, vy, 0]``.
    tol : float
        Required closure ``|x(T) - x0|`` of the corrected orbit.
    period_guess : float, optional
        Used to bound the crossing search at twice the half period.

    Returns
    -------
    x0 : ndarray
    period : float
    iterations : int
    """
    if isinstance(guess, InitialGuess):
        period_guess = guess.period if period_guess is None else period_guess
        guess = guess.state
    x0 = np.array(guess, dtype=float)
    if x0[1] != 0.0 or x0[3] != 0.0 or x0[5] != 0.0:
        raise CorrectionError("guess must be in crossing form (qy = vx = vz = 0)")
    t_max = period_guess if period_guess is not None else 2.0 * np.pi
    # crossing velocities must vanish well below the closure tolerance because the
    # second half of the orbit amplifies them
    cross_tol = tol * 1e-3
    for it in range(max_iter + 1):
        t_c, xf, phi = _half_period_crossing(x0, params, t_max, rtol, atol)
        vx, vz = xf[3], xf[5]
        if max(abs(vx), abs(vz)) < cross_tol:
            break
        if it == max_iter:
            raise CorrectionError(f"Newton stall: crossing residual {max(abs(vx), abs(vz)):.3e} "
                                  f"after {max_iter} iterations")
        acc = _accel(xf, params)
        vy = xf[4]
        # vary (qx0, vy0); the crossing time adjusts so that qy stays zero
        cols = [0, 4]
        D = np.array([[phi[3, j] for j in cols], [phi[5, j] for j in cols]])
        D -= np.outer([acc[0], acc[2]], [phi[1, j] for j in cols]) / vy
        dx = np.linalg.solve(D, -np.array([vx, vz]))
        x0[0] += dx[0]
        x0[4] += dx[1]
        t_max = max(t_max, 2.2 * t_c)
    else:  # pragma: no cover
        pass
    period = 2.0 * t_c
    log.debug("corrected in %d iterations, T=%.12f", it, period)
    return x0, period, it


def _accel(x, params):
    from .dynamics import derivative
    return derivative(x, np.zeros(3), params)[3:]


@dataclass(frozen=True)
class ReferenceOrbit:
    """Discretized periodic orbit with its knot-wise sensitivities.

    ``stms[k]`` maps a perturbation at the orbit start to knot ``k``; the last
    knot coincides (to integration accuracy) with the first.
    """

    params: SystemParams
    period: float
    knots: np.ndarray
    stms: np.ndarray
    monodromy: np.ndarray
    unstable_eigenvalue: float
    unstable_direction: np.ndarray
    libration_point: str = "L2"
    eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def n_knots(self) -> int:
        return len(self.knots)

    @property
    def n_segments(self) -> int:
        return len(self.knots) - 1

    @property
    def dt(self) -> float:
        return self.period / (len(self.knots) - 1)

    @property
    def x0(self) -> np.ndarray:
        return self.knots[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.knots)) * self.dt

    def knot(self, k: int) -> np.ndarray:
        """Reference state at knot ``k``, wrapping periodically."""
        return self.knots[k % self.n_segments]

    def segment_stm(self, k: int) -> np.ndarray:
        """STM from knot ``k`` to knot ``k + 1`` (0-based, ``k < N - 1``)."""
        return self.stms[k + 1] @ np.linalg.inv(self.stms[k])

    def manifold_direction(self, k: int, normalize=True) -> np.ndarray:
        """Unstable direction carried to knot ``k`` (phase taken modulo the period)."""
        d = self.stms[k % self.n_segments] @ self.unstable_direction
        return d / np.linalg.norm(d) if normalize else d

    @cached_property
    def unstable_left(self) -> np.ndarray:
        """Left eigenvector of the monodromy for ``lambda_u``, scaled so ``w . v_u = 1``."""
        w, V = np.linalg.eig(self.monodromy.T)
        i = int(np.argmin(np.abs(w - self.unstable_eigenvalue)))
        wl = V[:, i].real
        return wl / (wl @ self.unstable_direction)

    @cached_property
    def _covectors(self) -> np.ndarray:
        n = self.n_segments
        return np.array([np.linalg.solve(self.stms[k].T, self.unstable_left) for k in range(n)])

    def unstable_coordinate(self, k: int, normalize=True) -> np.ndarray:
        """Covector ``w_u Phi_k^-1`` reading the unstable-mode coefficient at knot ``k``.

        For a linear perturbation ``dx = sum_i c_i Phi_k v_i`` it returns
        ``c_u``; the other eigen-directions are in its null space. With
        ``normalize`` it is scaled to unit length, which keeps the sign.
        """
        ell = self._covectors[k % self.n_segments]
        return ell / np.linalg.norm(ell) if normalize else ell

    def libration_position(self) -> np.ndarray:
        return collinear_point(self.params, self.libration_point)

    def escape_radius(self, factor=5.0) -> float:
        return escape_radius(self.knots, self.params, factor, self.libration_point)

    def max_amplitude(self) -> float:
        """Largest knot distance from the libration point."""
        L = self.libration_position()
        return float(np.max(np.linalg.norm(self.knots[:, :3] - L, axis=1)))


def unstable_direction(monodromy, tol=1e-6):
    """Dominant real eigenpair of the monodromy matrix.

    Returns ``(lambda_u, v_u, eigenvalues)`` with ``v_u`` of unit length. The
    sign of ``v_u`` is left as computed; :func:`discretize` orients it.
    """
    w, V = np.linalg.eig(monodromy)
    real = np.abs(w.imag) < 1e-9 * np.maximum(1.0, np.abs(w))
    candidates = np.where(real & (w.real > 1.0 + tol))[0]
    if len(candidates) == 0:
        raise ValueError("monodromy matrix has no real eigenvalue greater than one")
    i = candidates[np.argmax(w.real[candidates])]
    v = V[:, i].real
    return float(w[i].real), v / np.linalg.norm(v), w


def escape_radius(knots, params: SystemParams, factor=5.0, libration_point="L2"):
    """Radius of the sphere about the libration point whose crossing counts as an escape.

    ``factor`` times the orbit's largest distance from the libration point,
    so that the whole secondary body stays outside the sphere: at most 0.9 of
    the distance to its centre and 1.1 body radii short of it. A branch
    heading for the secondary then registers as an exit on the near side
    before it can strike the surface or swing around to the far side.
    """
    L = collinear_point(params, libration_point)
    amplitude = float(np.max(np.linalg.norm(np.asarray(knots)[:, :3] - L, axis=1)))
    gap = abs(L[0] - (1.0 - params.mu))
    return min(factor * amplitude, 0.9 * gap, gap - 1.1 * params.secondary_radius_nd)


def _orient_direction(x0, v, lam, period, params, radius, side=+1.0, eps=1e-6):
    """Flip ``v`` so that ``x0 + eps*v`` first leaves the escape sphere on ``side`` of L2."""
    L = collinear_point(params, "L2")
    # long enough for eps to grow past the sphere
    n_per = max(2.0, np.log(1.0 / eps) / np.log(lam) + 2.0)

    def leave(t, y, *args):
        return np.sqrt((y[0] - L[0]) ** 2 + y[1] ** 2 + y[2] ** 2) - radius

    leave.terminal = True
    try:
        traj, sol = propagate(x0 + eps * v, (0.0, n_per * period), params, 1e-11, 1e-12, events=leave)
        dx = traj.final[0] - L[0]
    except PropagationError:
        dx = -1.0  # crashed into the secondary, which lies at -x
    return v if np.sign(dx) == np.sign(side) else -v


def discretize(x0, period, n_knots, params: SystemParams, rtol=ORBIT_RTOL, atol=ORBIT_ATOL,
               safe_side=+1.0):
    """Sample a corrected orbit at ``n_knots`` uniform times including both ends.

    The unstable direction is oriented so that a positive perturbation along it
    leaves toward ``safe_side`` in x relative to L2.
    """
    if n_knots < 3:
        raise ValueError("need at least 3 knots")
    times = np.linspace(0.0, period, n_knots)
    traj, stms = propagate_with_stm(x0, (0.0, period), params, rtol, atol, t_eval=times)
    knots = traj.states.copy()
    knots[0] = np.asarray(x0, dtype=float)
    M = stms[-1]
    lam, v, eigs = unstable_direction(M)
    v = _orient_direction(knots[0], v, lam, period, params, escape_radius(knots, params),
                          side=safe_side)
    return ReferenceOrbit(params=params, period=float(period), knots=knots, stms=stms,
                          monodromy=M, unstable_eigenvalue=lam, unstable_direction=v,
                          eigenvalues=eigs)


def build_reference_orbit(guess: InitialGuess, params: SystemParams = None, n_knots=None,
                          tol=1e-10) -> ReferenceOrbit:
    """Load-correct-discretize convenience pipeline."""
    if params is None:
        params = get_system(guess.system)
    x0, period, _ = differential_correct(guess, params, tol=tol)
    return discretize(x0, period, n_knots or guess.knots, params)


@dataclass(frozen=True)
class ManifoldTrajectory:
    departure_knot: int
    sign: int
    epsilon: float
    trajectory: Trajectory = None
    error: str = None


def manifold_trajectories(orbit: ReferenceOrbit, epsilon=1e-6, sign=+1, tau=None, stride=1,
                          n_samples=200, rtol=1e-11, atol=1e-12):
    """Unstable-manifold trajectories seeded at every ``stride``-th knot.

    Each seed is ``knot_k + sign * epsilon * Phi_k v_u`` propagated uncontrolled
    for ``tau`` (default: one period). Propagation failures are recorded on the
    returned object instead of raised.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    tau = orbit.period if tau is None else tau
    if tau <= 0:
        raise ValueError("tau must be positive")
    sign = 1 if sign > 0 else -1
    out = []
    for k in range(0, orbit.n_segments, stride):
        x_start = orbit.knots[k] + sign * epsilon * (orbit.stms[k] @ orbit.unstable_direction)
        t_eval = np.linspace(0.0, tau, n_samples)
        try:
            traj = propagate(x_start, (0.0, tau), orbit.params, rtol, atol, t_eval=t_eval)
            out.append(ManifoldTrajectory(k, sign, epsilon, traj))
        except PropagationError as exc:
            out.append(ManifoldTrajectory(k, sign, epsilon, None, str(exc)))
    return out
