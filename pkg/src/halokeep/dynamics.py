"""
Controlled circular restricted three-body dynamics.

State vectors are ``[qx, qy, qz, vx, vy, vz]`` in the rotating barycentric
frame, nondimensionalized so that the primary separation, the total mass and
the mean motion are all unity. The larger primary sits at ``(-mu, 0, 0)`` and
the smaller one at ``(1 - mu, 0, 0)``.

Two integrators live here:

* :func:`step_rk4` is the discrete model ``x_{k+1} = f_d(x_k, u_k)`` used by
  the optimizer and by the closed-loop simulation (classical RK4, control held
  constant over the step).
* :func:`propagate` / :func:`propagate_with_stm` are adaptive 8th-order
  propagations used for orbit construction, manifolds and exit verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

SINGULARITY_RADIUS = 1e-12
SECONDS_PER_DAY = 86400.0
# RK4 substeps per knot interval in the discrete model f_d
DEFAULT_SUBSTEPS = 8

J6 = np.block([[np.zeros((3, 3)), np.eye(3)], [-np.eye(3), np.zeros((3, 3))]])
# (q, v) -> canonical (q, p) with p = v + omega x q
_S = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
TO_CANONICAL = np.block([[np.eye(3), np.zeros((3, 3))], [_S, np.eye(3)]])
# the form preserved by STMs expressed in (q, v): T^T J T
SYMPLECTIC_FORM_QV = TO_CANONICAL.T @ J6 @ TO_CANONICAL


def to_canonical_stm(phi):
    """Express a (q, v) state transition matrix in canonical coordinates."""
    return TO_CANONICAL @ phi @ np.linalg.inv(TO_CANONICAL)


class SingularityError(ArithmeticError):
    """Raised when a state comes within the guard radius of a primary."""


class PropagationError(RuntimeError):
    """Raised when adaptive propagation fails; ``t_fail`` is where it stopped."""

    def __init__(self, message, t_fail=None):
        super().__init__(message)
        self.t_fail = t_fail


@dataclass(frozen=True)
class SystemParams:
    """Mass parameter and normalization units of one three-body system."""

    mu: float
    length_unit_km: float
    time_unit_days: float
    name: str = ""
    # physical radius of the smaller primary, used for impact checks
    secondary_radius_km: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.mu < 0.5:
            raise ValueError(f"mu must lie in (0, 0.5), got {self.mu}")
        if self.length_unit_km <= 0 or self.time_unit_days <= 0:
            raise ValueError("length and time units must be positive")

    @property
    def time_unit_s(self) -> float:
        return self.time_unit_days * SECONDS_PER_DAY

    @property
    def length_unit_m(self) -> float:
        return self.length_unit_km * 1e3

    @property
    def velocity_unit_mps(self) -> float:
        """Meters per second in one nondimensional velocity unit."""
        return self.length_unit_m / self.time_unit_s

    # unit conversions; all pure
    def m_to_nd(self, meters):
        return np.asarray(meters) / self.length_unit_m

    def nd_to_m(self, length):
        return np.asarray(length) * self.length_unit_m

    def mps_to_nd(self, mps):
        return np.asarray(mps) / self.velocity_unit_mps

    def nd_to_mps(self, velocity):
        return np.asarray(velocity) * self.velocity_unit_mps

    def nd_to_days(self, t):
        return np.asarray(t) * self.time_unit_days

    def nd_to_hours(self, t):
        return np.asarray(t) * self.time_unit_days * 24.0

    @property
    def secondary_radius_nd(self) -> float:
        return self.secondary_radius_km / self.length_unit_km


# Table values for the two systems studied; body radii are physical constants.
EARTH_MOON = SystemParams(
    mu=1.215e-2, length_unit_km=3.850e5, time_unit_days=4.349,
    name="earth-moon", secondary_radius_km=1737.4,
)
SATURN_ENCELADUS = SystemParams(
    mu=1.901e-7, length_unit_km=2.38529e5, time_unit_days=0.2189,
    name="saturn-enceladus", secondary_radius_km=252.1,
)
PRESETS = {p.name: p for p in (EARTH_MOON, SATURN_ENCELADUS)}


def get_system(name: str) -> SystemParams:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown system preset {name!r}; known: {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered states; ``states`` has shape ``(len(times), 6)``."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if np.any(np.diff(self.times) <= 0) and not np.all(np.diff(self.times) < 0):
            raise ValueError("times must be strictly monotone")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self):
        return len(self.times)


def _distances(qx, qy, qz, mu):
    r1 = math.sqrt((qx + mu) ** 2 + qy * qy + qz * qz)
    r2 = math.sqrt((qx - 1.0 + mu) ** 2 + qy * qy + qz * qz)
    if r1 < SINGULARITY_RADIUS or r2 < SINGULARITY_RADIUS:
        raise SingularityError(f"state within {SINGULARITY_RADIUS} of a primary (r1={r1}, r2={r2})")
    return r1, r2


def potential(q, params: SystemParams) -> float:
    """Augmented potential U = (qx^2 + qy^2)/2 + (1-mu)/r1 + mu/r2."""
    mu = params.mu
    r1, r2 = _distances(q[0], q[1], q[2], mu)
    return 0.5 * (q[0] ** 2 + q[1] ** 2) + (1.0 - mu) / r1 + mu / r2


def potential_gradient(q, params: SystemParams) -> np.ndarray:
    """Gradient of the augmented potential with respect to position."""
    mu = params.mu
    qx, qy, qz = float(q[0]), float(q[1]), float(q[2])
    r1, r2 = _distances(qx, qy, qz, mu)
    c1 = (1.0 - mu) / r1**3
    c2 = mu / r2**3
    return np.array([
        qx - c1 * (qx + mu) - c2 * (qx - 1.0 + mu),
        qy - (c1 + c2) * qy,
        -(c1 + c2) * qz,
    ])


def _rhs(t, x, mu, u0=0.0, u1=0.0, u2=0.0):
    qx, qy, qz, vx, vy, vz = x
    r1, r2 = _distances(qx, qy, qz, mu)
    c1 = (1.0 - mu) / (r1 * r1 * r1)
    c2 = mu / (r2 * r2 * r2)
    c12 = c1 + c2
    return np.array([
        vx, vy, vz,
        qx - c1 * (qx + mu) - c2 * (qx - 1.0 + mu) + 2.0 * vy + u0,
        qy - c12 * qy - 2.0 * vx + u1,
        -c12 * qz + u2,
    ])


def derivative(x, u, params: SystemParams) -> np.ndarray:
    """Time derivative of the state under constant acceleration ``u``."""
    return _rhs(0.0, x, params.mu, u[0], u[1], u[2])


def potential_hessian(q, mu: float) -> np.ndarray:
    qx, qy, qz = float(q[0]), float(q[1]), float(q[2])
    r1, r2 = _distances(qx, qy, qz, mu)
    d1 = np.array([qx + mu, qy, qz])
    d2 = np.array([qx - 1.0 + mu, qy, qz])
    c1 = (1.0 - mu) / r1**3
    c2 = mu / r2**3
    H = (3.0 * (1.0 - mu) / r1**5) * np.outer(d1, d1) + (3.0 * mu / r2**5) * np.outer(d2, d2)
    H -= (c1 + c2) * np.eye(3)
    H[0, 0] += 1.0
    H[1, 1] += 1.0
    return H


_OMEGA = np.array([[0.0, 2.0, 0.0], [-2.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def jacobian(x, params_or_mu) -> np.ndarray:
    """State Jacobian of the equations of motion (independent of ``u``)."""
    mu = params_or_mu.mu if isinstance(params_or_mu, SystemParams) else float(params_or_mu)
    A = np.zeros((6, 6))
    A[0:3, 3:6] = np.eye(3)
    A[3:6, 0:3] = potential_hessian(x[:3], mu)
    A[3:6, 3:6] = _OMEGA
    return A


def jacobi_constant(x, params: SystemParams) -> float:
    """C = 2U - |v|^2, conserved by the uncontrolled flow."""
    x = np.asarray(x, dtype=float)
    return 2.0 * potential(x[:3], params) - float(x[3:] @ x[3:])


def step_rk4(x, u, dt: float, params: SystemParams, substeps: int = 1) -> np.ndarray:
    """Classical RK4 over ``dt`` with ``u`` held constant (zero-order hold).

    With ``substeps > 1`` the interval is covered by that many equal RK4
    steps; the control is still held over the whole interval.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    mu = params.mu
    u0, u1, u2 = float(u[0]), float(u[1]), float(u[2])
    x = np.asarray(x, dtype=float)
    h = dt / substeps
    for _ in range(substeps):
        k1 = _rhs(0.0, x, mu, u0, u1, u2)
        k2 = _rhs(0.0, x + 0.5 * h * k1, mu, u0, u1, u2)
        k3 = _rhs(0.0, x + 0.5 * h * k2, mu, u0, u1, u2)
        k4 = _rhs(0.0, x + h * k3, mu, u0, u1, u2)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def _check_tols(rel_tol, abs_tol):
    if not (0 < rel_tol <= 1e-3 and 0 < abs_tol <= 1e-3):
        raise ValueError("tolerances must lie in (0, 1e-3]")


def _guarded(fun):
    def wrapped(t, y, *args):
        try:
            return fun(t, y, *args)
        except SingularityError as exc:
            raise PropagationError(str(exc), t_fail=t) from exc
    return wrapped


_rhs_guarded = _guarded(_rhs)


def propagate(x0, t_span, params: SystemParams, rel_tol=1e-12, abs_tol=1e-12,
              t_eval=None, events=None, dense_output=False, max_step=np.inf):
    """Uncontrolled adaptive propagation with an explicit 8(5,3) Runge-Kutta pair.

    Returns a :class:`Trajectory` holding every accepted step (or ``t_eval``
    samples). When ``events`` is given the scipy solution object is returned
    as a second value.
    """
    _check_tols(rel_tol, abs_tol)
    t0, tf = float(t_span[0]), float(t_span[1])
    x0 = np.asarray(x0, dtype=float)
    if t0 == tf:
        traj = Trajectory(np.array([t0]), x0[None, :].copy())
        return (traj, None) if events is not None else traj
    sol = solve_ivp(_rhs_guarded, (t0, tf), x0, method="DOP853", rtol=rel_tol, atol=abs_tol,
                    args=(params.mu,), t_eval=t_eval, events=events,
                    dense_output=dense_output, max_step=max_step)
    if sol.status < 0:
        t_fail = float(sol.t[-1]) if len(sol.t) else t0
        raise PropagationError(f"propagation failed at t={t_fail}: {sol.message}", t_fail=t_fail)
    traj = Trajectory(sol.t, sol.y.T)
    if events is not None:
        return traj, sol
    return traj


def _rhs_stm(t, y, mu):
    x = y[:6]
    phi = y[6:].reshape(6, 6)
    dx = _rhs(t, x, mu)
    dphi = jacobian(x, mu) @ phi
    return np.concatenate([dx, dphi.ravel()])


_rhs_stm_guarded = _guarded(_rhs_stm)


def propagate_with_stm(x0, t_span, params: SystemParams, rel_tol=1e-12, abs_tol=1e-12,
                       t_eval=None, events=None):
    """Propagate the state together with the variational equation.

    Returns ``(trajectory, stms)`` where ``stms[i]`` is the 6x6 state
    transition matrix from ``t_span[0]`` to ``trajectory.times[i]``. With
    ``events`` a third value, the scipy solution, is returned.
    """
    _check_tols(rel_tol, abs_tol)
    t0, tf = float(t_span[0]), float(t_span[1])
    x0 = np.asarray(x0, dtype=float)
    y0 = np.concatenate([x0, np.eye(6).ravel()])
    if t0 == tf:
        out = (Trajectory(np.array([t0]), x0[None, :].copy()), np.eye(6)[None, :, :])
        return out + (None,) if events is not None else out
    sol = solve_ivp(_rhs_stm_guarded, (t0, tf), y0, method="DOP853", rtol=rel_tol, atol=abs_tol,
                    args=(params.mu,), t_eval=t_eval, events=events)
    if sol.status < 0:
        t_fail = float(sol.t[-1]) if len(sol.t) else t0
        raise PropagationError(f"propagation failed at t={t_fail}: {sol.message}", t_fail=t_fail)
    traj = Trajectory(sol.t, sol.y[:6].T)
    stms = sol.y[6:].T.reshape(-1, 6, 6)
    if events is not None:
        return traj, stms, sol
    return traj, stms


def _collinear_condition(qx, mu):
    # x-component of grad U on the x-axis
    r1 = abs(qx + mu)
    r2 = abs(qx - 1.0 + mu)
    return qx - (1.0 - mu) * (qx + mu) / r1**3 - mu * (qx - 1.0 + mu) / r2**3


def collinear_point(params: SystemParams, which: str = "L2") -> np.ndarray:
    """Position of a collinear libration point, found by bracketed root search."""
    mu = params.mu
    which = which.upper()
    # guard keeps brackets off the singularities while still straddling the root
    eps = 1e-9 * max(mu, 1e-6) ** (1.0 / 3.0)
    hill = (mu / 3.0) ** (1.0 / 3.0)
    if which == "L1":
        a, b = -mu + 1e-6, 1.0 - mu - eps
    elif which == "L2":
        a, b = 1.0 - mu + eps, 2.0 + hill
    elif which == "L3":
        a, b = -2.0, -mu - 1e-6
    else:
        raise ValueError(f"unknown collinear point {which!r}")
    fa, fb = _collinear_condition(a, mu), _collinear_condition(b, mu)
    if fa * fb > 0:
        raise ValueError(f"could not bracket {which} for mu={mu}")
    x = brentq(_collinear_condition, a, b, args=(mu,), xtol=1e-16, rtol=1e-15, maxiter=500)
    return np.array([x, 0.0, 0.0])


def rk4_segments(x0, controls: Sequence, dt: float, params: SystemParams,
                 substeps: int = 1) -> np.ndarray:
    """Apply a sequence of zero-order-hold controls with :func:`step_rk4`.

    Returns the ``(len(controls) + 1, 6)`` array of visited states.
    """
    out = np.empty((len(controls) + 1, 6))
    out[0] = x0
    for k, u in enumerate(controls):
        out[k + 1] = step_rk4(out[k], u, dt, params, substeps)
    return out
