"""Receding-horizon closed loop on the RK4 zero-order-hold dynamics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .conic import Status, solve
from .dynamics import DEFAULT_SUBSTEPS, SystemParams, step_rk4
from .halo import ReferenceOrbit
from .linearize import LinearizedModel
from .lqr import CostToGo, ellipsoid_shape
from .stationkeeping import (ELLIPSOID, ConstraintConfig, StationkeepingProblem, assemble,
                             constraint_margins, extract_plan)


def format_number(v) -> str:
    """Shortest round-trip text for a number (also for numpy scalars)."""
    return repr(float(v))


@dataclass(frozen=True)
class InjectionError:
    """Offsets added to the initial state; ``q_axes`` / ``v_axes`` select components (0=x, 1=y, 2=z)."""

    position_m: float = 0.0
    velocity_mps: float = 0.0
    q_axes: tuple = (0,)
    v_axes: tuple = (1,)


@dataclass
class MissionConfig:
    orbit: ReferenceOrbit
    model: LinearizedModel
    constraints: ConstraintConfig
    revolutions: int = 100
    injection: InjectionError = InjectionError()
    cost_to_go: CostToGo = None
    horizon: int = None
    stride: int = None
    solver_tol: float = 1e-8
    solver_max_iter: int = 100
    substeps: int = DEFAULT_SUBSTEPS

    def __post_init__(self):
        n = self.orbit.n_segments
        if self.horizon is None:
            self.horizon = 2 * n
        if self.stride is None:
            self.stride = n // 2
        if self.revolutions < 1:
            raise ValueError("revolutions must be at least 1")
        if not 1 <= self.stride <= self.horizon:
            raise ValueError("stride must lie in [1, horizon]")
        if self.constraints.variant == ELLIPSOID and self.cost_to_go is None:
            raise ValueError("ellipsoid variant needs a cost-to-go")

    @property
    def params(self) -> SystemParams:
        return self.orbit.params

    @property
    def n_steps(self) -> int:
        return self.revolutions * self.orbit.n_segments

    @property
    def n_cycles(self) -> int:
        return math.ceil(self.n_steps / self.stride)


def inject_error(x0, params: SystemParams, injection: InjectionError):
    """Add the configured position and velocity offsets (given in m and m/s) to ``x0``."""
    x = np.array(x0, dtype=float)
    for i in injection.q_axes:
        x[i] += params.m_to_nd(injection.position_m)
    for i in injection.v_axes:
        x[3 + i] += params.mps_to_nd(injection.velocity_mps)
    return x


CSV_COLUMNS = ("step", "time", "rev", "phase",
               "x", "y", "z", "vx", "vy", "vz",
               "dx", "dy", "dz", "dvx", "dvy", "dvz",
               "ux", "uy", "uz", "dv_mps", "u_l1", "state_margin", "halfspace_margin")


@dataclass
class MissionLog:
    """Per-step records plus per-cycle solver diagnostics.

    Step ``k`` stores the true state at ``t_k = k dt`` before the control
    ``u_k`` is applied, the error against the reference knot, and the delta-v
    ``|u_k|_2 dt`` in m/s.
    """

    dt: float
    n_segments: int
    velocity_unit_mps: float
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    phases: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    controls: list = field(default_factory=list)
    dv_mps: list = field(default_factory=list)
    state_margin: list = field(default_factory=list)
    halfspace_margin: list = field(default_factory=list)
    cycles: list = field(default_factory=list)
    final_state: np.ndarray = None
    failure: dict = None

    @property
    def success(self) -> bool:
        return self.failure is None

    @property
    def n_steps(self) -> int:
        return len(self.times)

    def arrays(self):
        """The per-step fields as numpy arrays."""
        return dict(times=np.array(self.times), states=np.array(self.states).reshape(-1, 6),
                    phases=np.array(self.phases, dtype=int), errors=np.array(self.errors).reshape(-1, 6),
                    controls=np.array(self.controls).reshape(-1, 3), dv_mps=np.array(self.dv_mps),
                    state_margin=np.array(self.state_margin),
                    halfspace_margin=np.array(self.halfspace_margin))

    @property
    def total_dv_mps(self) -> float:
        return float(np.sum(self.dv_mps))

    def revolution_dv(self) -> np.ndarray:
        """Delta-v spent in each revolution (index 0 is the first revolution)."""
        n_rev = -(-self.n_steps // self.n_segments)
        out = np.zeros(n_rev)
        np.add.at(out, np.arange(self.n_steps) // self.n_segments, self.dv_mps)
        return out

    def dv_between(self, first_rev: int, last_rev: int) -> float:
        """Delta-v over revolutions ``first_rev..last_rev`` inclusive, counted from 1."""
        per_rev = self.revolution_dv()
        return float(per_rev[first_rev - 1:last_rev].sum())

    def impulsive_fraction(self, first_rev=3, threshold=1e-9) -> float:
        """Fraction of steps from revolution ``first_rev`` on with ``|u|_1`` below ``threshold``."""
        u = np.array(self.controls).reshape(-1, 3)[(first_rev - 1) * self.n_segments:]
        if len(u) == 0:
            return float("nan")
        return float(np.mean(np.abs(u).sum(axis=1) < threshold))

    def write_csv(self, path):
        a = self.arrays()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for k in range(self.n_steps):
                u = a["controls"][k]
                w.writerow([k, format_number(a["times"][k]), k // self.n_segments + 1, int(a["phases"][k]),
                            *map(format_number, a["states"][k]), *map(format_number, a["errors"][k]), *map(format_number, u),
                            format_number(a["dv_mps"][k]), format_number(float(np.abs(u).sum())),
                            format_number(a["state_margin"][k]), format_number(a["halfspace_margin"][k])])

    def summary(self, years_per_time_unit: float = None) -> dict:
        per_rev = self.revolution_dv()
        out = {
            "success": self.success,
            "failure": self.failure,
            "steps": self.n_steps,
            "cycles": len(self.cycles),
            "total_dv_mps": self.total_dv_mps,
            "dv_after_first_rev_mps": float(per_rev[1:].sum()),
            "per_rev_dv_mps": per_rev.tolist(),
            "impulsive_fraction_after_rev2": self.impulsive_fraction(3),
            "max_state_margin": float(np.max(self.state_margin)) if self.state_margin else None,
            "min_halfspace_margin": float(np.min(self.halfspace_margin)) if self.halfspace_margin else None,
        }
        if years_per_time_unit:
            years = self.n_steps * self.dt * years_per_time_unit
            out["duration_years"] = years
            out["dv_per_year_mps"] = self.total_dv_mps / years if years > 0 else None
        return out


def read_log_csv(path, dt=None, n_segments=None, velocity_unit_mps=None) -> MissionLog:
    """Rebuild a :class:`MissionLog` (per-step fields only) from its CSV."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    t = data["time"]
    if dt is None:
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    if n_segments is None:
        n_segments = int(data["phase"].max()) + 1
    log = MissionLog(dt, n_segments, velocity_unit_mps or float("nan"))
    log.times = list(t)
    log.states = list(np.column_stack([data[c] for c in ("x", "y", "z", "vx", "vy", "vz")]))
    log.phases = list(data["phase"].astype(int))
    log.errors = list(np.column_stack([data[c] for c in ("dx", "dy", "dz", "dvx", "dvy", "dvz")]))
    log.controls = list(np.column_stack([data[c] for c in ("ux", "uy", "uz")]))
    log.dv_mps = list(data["dv_mps"])
    log.state_margin = list(data["state_margin"])
    log.halfspace_margin = list(data["halfspace_margin"])
    return log


def run_mission(cfg: MissionConfig, progress=None) -> MissionLog:
    """Solve, apply ``stride`` controls on the nonlinear step, advance, repeat.

    A non-optimal solve ends the mission: the returned log holds every step
    simulated so far and ``log.failure`` records the cycle and solver status.
    """
    orbit, params = cfg.orbit, cfg.params
    n = orbit.n_segments
    dt = orbit.dt
    shapes = ellipsoid_shape(cfg.cost_to_go) if cfg.constraints.variant == ELLIPSOID else None
    log = MissionLog(dt, n, params.velocity_unit_mps)

    x = inject_error(orbit.knot(0), params, cfg.injection)
    step = 0
    for cycle in range(cfg.n_cycles):
        phase = step % n
        dx0 = x - orbit.knot(phase)
        problem = StationkeepingProblem(orbit, cfg.model, dx0, cfg.horizon, cfg.constraints,
                                        cfg.cost_to_go, phase, shapes)
        sol = solve(assemble(problem), tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
        plan = extract_plan(problem, sol, params)
        log.cycles.append({"cycle": cycle, "step": step, "phase": phase, "status": sol.status.value,
                           "iterations": sol.iterations, "objective": plan.objective,
                           "primal_residual": sol.primal_residual, "dual_residual": sol.dual_residual,
                           "gap": sol.gap})
        if sol.status != Status.OPTIMAL:
            log.failure = {"cycle": cycle, "step": step, "status": sol.status.value}
            break
        for j in range(min(cfg.stride, cfg.n_steps - step)):
            phase = step % n
            dx = x - orbit.knot(phase)
            u = plan.controls[j]
            sm, hm = constraint_margins(orbit, dx, phase, cfg.constraints, cfg.cost_to_go)
            log.times.append(step * dt)
            log.states.append(x.copy())
            log.phases.append(phase)
            log.errors.append(dx)
            log.controls.append(u.copy())
            log.dv_mps.append(float(plan.dv_mps[j]))
            log.state_margin.append(sm)
            log.halfspace_margin.append(hm)
            x = step_rk4(x, u, dt, params, cfg.substeps)
            step += 1
        if progress is not None:
            progress(cycle, log)
    log.final_state = x
    return log


def write_summary(path, summary: dict, config: dict = None):
    doc = dict(summary)
    if config is not None:
        doc["config"] = config
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    return str(obj)
