"""
Fuel-optimal stationkeeping as a second-order cone program.

Over a horizon of ``H`` steps starting at reference phase ``phase``::

    minimize    sum_k |u_k|_1
    subject to  dx_1 = dx_0
                dx_{k+1} = A_k dx_k + B_k u_k
                dx_k in D (ball) or E (cost-to-go ellipsoid),  k = 2..H+1
                dx_k . d_k >= a,                               k = 2..H+1

with ``d_k`` a unit normal tied to the unstable mode at the knot. The first
knot is pinned to the measured error, so the state constraints start at the
second knot: a pinned state cannot be steered.

Variables are rescaled before they reach the solver: positions by
``scale_q``, velocities by ``scale_v`` and accelerations by
``scale_v / dt``. :func:`extract_plan` undoes this.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .conic import NONNEG, SOC, ZERO, ConicProgram, ConicSolution, Status, solve
from .dynamics import SystemParams
from .halo import ReferenceOrbit
from .linearize import LinearizedModel
from .lqr import CostToGo, ellipsoid_shape

BALL, ELLIPSOID = "euclidean-ball", "ellipsoid"
MANIFOLD, UNSTABLE_COORDINATE = "manifold", "unstable-coordinate"


class AssemblyError(ValueError):
    pass


def halfspace_normal(orbit: ReferenceOrbit, k: int, direction: str = MANIFOLD) -> np.ndarray:
    if direction == MANIFOLD:
        return orbit.manifold_direction(k)
    return orbit.unstable_coordinate(k)


@dataclass(frozen=True)
class ConstraintConfig:
    """State-error constraint settings, all in nondimensional units.

    ``r_q`` / ``r_v`` bound the position / velocity error for the ball
    variant (``inf`` leaves that part free); ``c`` is the cost-to-go level for the ellipsoid variant; ``a``
    is the half-space level.

    ``direction`` picks the half-space normal at knot ``k``: ``manifold``
    uses the transported unstable vector ``Phi_k v_u`` and
    ``unstable-coordinate`` the covector ``w_u Phi_k^-1`` that reads the
    unstable-mode coefficient alone; both are normalized to unit length.
    Only the covector controls the sign of the unstable coefficient, which
    is what decides the side of an uncontrolled exit, so it is the default.
    """

    variant: str = BALL
    r_q: float = 1.0
    r_v: float = 1.0
    c: float = 1.0
    a: float = 0.0
    halfspace: bool = True
    direction: str = UNSTABLE_COORDINATE

    def __post_init__(self):
        if self.variant not in (BALL, ELLIPSOID):
            raise ValueError(f"unknown constraint variant {self.variant!r}")
        if self.direction not in (MANIFOLD, UNSTABLE_COORDINATE):
            raise ValueError(f"unknown half-space direction {self.direction!r}")
        if not (self.r_q > 0 and self.r_v > 0):
            raise ValueError("radii must be positive")
        if not self.c > 0:
            raise ValueError("cost-to-go level must be positive")
        if not np.isfinite(self.a):
            raise ValueError("half-space level must be finite")


@dataclass
class StationkeepingProblem:
    orbit: ReferenceOrbit
    model: LinearizedModel
    dx0: np.ndarray
    horizon: int
    constraints: ConstraintConfig
    cost_to_go: CostToGo = None
    phase: int = 0
    # cached factors L_k of the cost-to-go matrices
    shapes: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.dx0 = np.asarray(self.dx0, dtype=float).ravel()
        if self.dx0.shape != (6,) or not np.all(np.isfinite(self.dx0)):
            raise AssemblyError("dx0 must be a finite 6-vector")
        if self.horizon < 1:
            raise AssemblyError("horizon must be at least one step")
        if self.model.n_segments != self.orbit.n_segments:
            raise AssemblyError("linear model and orbit disagree on the number of segments")
        if self.constraints.variant == ELLIPSOID:
            if self.cost_to_go is None:
                raise AssemblyError("ellipsoid variant needs a cost-to-go")
            if self.shapes is None:
                self.shapes = ellipsoid_shape(self.cost_to_go)

    @property
    def scales(self):
        """Characteristic sizes ``(position, velocity, acceleration)`` used for rescaling."""
        cfg = self.constraints
        if cfg.variant == BALL:
            # an infinite radius drops its cone; any finite size then serves as the scale
            finite = [r for r in (cfg.r_q, cfg.r_v) if np.isfinite(r)]
            sq = cfg.r_q if np.isfinite(cfg.r_q) else (finite[0] if finite else 1.0)
            sv = cfg.r_v if np.isfinite(cfg.r_v) else (finite[0] if finite else 1.0)
        else:
            # axis extents of the ellipsoids, averaged over the period
            ext = np.sqrt(cfg.c / np.mean([np.diag(P) for P in self.cost_to_go.P], axis=0))
            sq, sv = float(np.exp(np.mean(np.log(ext[:3])))), float(np.exp(np.mean(np.log(ext[3:]))))
        return sq, sv, sv / self.model.dt

    def direction(self, j: int) -> np.ndarray:
        """Unit half-space normal at horizon knot ``j`` (0-based)."""
        return halfspace_normal(self.orbit, self.phase + j, self.constraints.direction)


def _layout(H):
    nx = 6 * (H + 1)
    nu = 3 * H
    return nx, nu, nx + 2 * nu


def assemble(problem: StationkeepingProblem) -> ConicProgram:
    """Build the conic program (variables ``[dx_1..dx_{H+1}, u_1..u_H, t_1..t_H]``, scaled)."""
    H = problem.horizon
    cfg = problem.constraints
    nx, nu, n = _layout(H)
    sq, sv, su = problem.scales
    Sx = np.r_[np.full(3, sq), np.full(3, sv)]
    Sx_inv = 1.0 / Sx

    def xcol(j):  # column offset of dx_{j+1}
        return 6 * j

    def ucol(j):
        return nx + 3 * j

    def tcol(j):
        return nx + nu + 3 * j

    # zero cone: initial condition and dynamics
    rows, cols, vals = [], [], []
    h_eq = []
    r = 0
    for i in range(6):
        rows.append(r + i)
        cols.append(xcol(0) + i)
        vals.append(1.0)
    h_eq.append(Sx_inv * problem.dx0)
    r += 6
    for j in range(H):
        A, B = problem.model.at(problem.phase + j)
        As = (Sx_inv[:, None] * A) * Sx[None, :]
        Bs = (Sx_inv[:, None] * B) * su
        ii, kk = np.meshgrid(np.arange(6), np.arange(6), indexing="ij")
        # dx_{j+2} - A dx_{j+1} - B u_{j+1} = 0
        rows.extend(r + np.arange(6))
        cols.extend(xcol(j + 1) + np.arange(6))
        vals.extend(np.ones(6))
        rows.extend((r + ii).ravel())
        cols.extend((xcol(j) + kk).ravel())
        vals.extend(-As.ravel())
        ii, kk = np.meshgrid(np.arange(6), np.arange(3), indexing="ij")
        rows.extend((r + ii).ravel())
        cols.extend((ucol(j) + kk).ravel())
        vals.extend(-Bs.ravel())
        h_eq.append(np.zeros(6))
        r += 6
    n_eq = r
    G_rows, G_cols, G_vals = list(rows), list(cols), list(vals)
    h_all = [np.concatenate(h_eq)]
    cones = [(ZERO, n_eq)]

    # nonnegative cone: L1 epigraph and half-spaces
    r0 = r
    for j in range(H):
        for i in range(3):
            # t - u >= 0 and t + u >= 0, written as s = h - G z
            G_rows += [r, r, r + 1, r + 1]
            G_cols += [ucol(j) + i, tcol(j) + i, ucol(j) + i, tcol(j) + i]
            G_vals += [1.0, -1.0, -1.0, -1.0]
            r += 2
    h_lp = [np.zeros(r - r0)]
    if cfg.halfspace:
        for j in range(1, H + 1):
            d = problem.direction(j) * Sx
            G_rows += [r] * 6
            G_cols += list(xcol(j) + np.arange(6))
            G_vals += list(-d)
            h_lp.append(np.array([-cfg.a]))
            r += 1
    h_all.append(np.concatenate(h_lp))
    cones.append((NONNEG, r - r0))

    # second-order cones on the state error
    h_soc = []
    for j in range(1, H + 1):
        if cfg.variant == BALL:
            for off, radius, scale in ((0, cfg.r_q, sq), (3, cfg.r_v, sv)):
                if not np.isfinite(radius):
                    continue
                G_rows += list(r + 1 + np.arange(3))
                G_cols += list(xcol(j) + off + np.arange(3))
                G_vals += [-1.0] * 3
                h_soc.append(np.r_[radius / scale, np.zeros(3)])
                cones.append((SOC, 4))
                r += 4
        else:
            L = problem.shapes[(problem.phase + j) % problem.orbit.n_segments] * Sx[None, :]
            ii, kk = np.meshgrid(np.arange(6), np.arange(6), indexing="ij")
            G_rows += list((r + 1 + ii).ravel())
            G_cols += list((xcol(j) + kk).ravel())
            G_vals += list(-L.ravel())
            h_soc.append(np.r_[np.sqrt(cfg.c), np.zeros(6)])
            cones.append((SOC, 7))
            r += 7
    if h_soc:
        h_all.append(np.concatenate(h_soc))

    c = np.zeros(n)
    c[nx + nu:] = 1.0
    G = sp.csc_matrix((G_vals, (G_rows, G_cols)), shape=(r, n))
    return ConicProgram(c, G, np.concatenate(h_all), cones)


@dataclass
class ManeuverPlan:
    """Optimal controls over the horizon in nondimensional and physical units."""

    controls: np.ndarray          # (H, 3) nondimensional accelerations
    errors: np.ndarray            # (H + 1, 6) predicted state errors
    dv_mps: np.ndarray            # (H,) |u_k|_2 dt in m/s
    dv_l1_mps: np.ndarray         # (H,) |u_k|_1 dt in m/s
    status: Status
    objective: float              # sum_k |u_k|_1, nondimensional
    residuals: tuple = ()
    iterations: int = 0

    @property
    def valid(self) -> bool:
        return self.status == Status.OPTIMAL

    @property
    def total_dv_mps(self) -> float:
        return float(np.sum(self.dv_mps))


def extract_plan(problem: StationkeepingProblem, solution: ConicSolution,
                 params: SystemParams = None) -> ManeuverPlan:
    params = params or problem.orbit.params
    H = problem.horizon
    nx, nu, _ = _layout(H)
    sq, sv, su = problem.scales
    dt = problem.model.dt
    if solution.status != Status.OPTIMAL:
        nan = np.full(H, np.nan)
        return ManeuverPlan(np.full((H, 3), np.nan), np.full((H + 1, 6), np.nan), nan, nan,
                            solution.status, np.nan,
                            (solution.primal_residual, solution.dual_residual, solution.gap),
                            solution.iterations)
    z = solution.z
    X = z[:nx].reshape(H + 1, 6) * np.r_[np.full(3, sq), np.full(3, sv)]
    U = z[nx:nx + nu].reshape(H, 3) * su
    dv = params.nd_to_mps(np.linalg.norm(U, axis=1) * dt)
    dv1 = params.nd_to_mps(np.abs(U).sum(axis=1) * dt)
    return ManeuverPlan(U, X, dv, dv1, solution.status, float(np.abs(U).sum()),
                        (solution.primal_residual, solution.dual_residual, solution.gap),
                        solution.iterations)


def plan_maneuvers(problem: StationkeepingProblem, tol=1e-8, max_iter=100) -> ManeuverPlan:
    """Assemble, solve and extract in one call."""
    program = assemble(problem)
    return extract_plan(problem, solve(program, tol=tol, max_iter=max_iter))


def constraint_margins(problem_or_orbit, dx, phase, constraints: ConstraintConfig, cost_to_go=None):
    """Constraint usage at one knot.

    Returns ``(state, halfspace)``: ``state`` is the ball usage
    ``max(|dq|/r_q, |dv|/r_v)`` or the ellipsoid usage ``dx^T P dx / c``
    (feasible when <= 1); ``halfspace`` is ``dx . d - a`` (feasible when >= 0).
    """
    orbit = problem_or_orbit.orbit if isinstance(problem_or_orbit, StationkeepingProblem) else problem_or_orbit
    dx = np.asarray(dx, dtype=float)
    if constraints.variant == BALL:
        state = max(np.linalg.norm(dx[:3]) / constraints.r_q, np.linalg.norm(dx[3:]) / constraints.r_v)
    else:
        P = cost_to_go.at(phase)
        state = float(dx @ P @ dx) / constraints.c
    half = float(dx @ halfspace_normal(orbit, phase, constraints.direction)) - constraints.a
    return state, half
