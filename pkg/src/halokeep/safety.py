"""Uncontrolled-exit verification of closed-loop states."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .controller import format_number
from .dynamics import PropagationError, SingularityError, SystemParams, collinear_point, propagate
from .halo import ReferenceOrbit

ESCAPE_INTENDED = "escape-intended"
ESCAPE_OPPOSITE = "escape-opposite"
IMPACT_SECONDARY = "impact-secondary"
BOUNDED = "bounded"
VERDICTS = (ESCAPE_INTENDED, ESCAPE_OPPOSITE, IMPACT_SECONDARY, BOUNDED)

SAFETY_RTOL = 1e-10
SAFETY_ATOL = 1e-12


@dataclass(frozen=True)
class ExitClassification:
    verdict: str
    escape_time: float          # nan unless the verdict is an escape
    closest_approach: float     # to the secondary, nondimensional length

    @property
    def safe(self) -> bool:
        return self.verdict == ESCAPE_INTENDED


@dataclass(frozen=True)
class SafetyConfig:
    """Settings for exit verification.

    ``boundary_factor`` scales the orbit's largest distance from L2 into the
    escape sphere radius (capped short of the secondary, see
    :func:`halokeep.halo.escape_radius`); ``impact_radius`` defaults to the secondary's body
    radius. ``window`` is the inclusive revolution range (counted from 1) over
    which the success rate is reported; ``sample_every`` thins the states.
    """

    horizon_periods: float = 3.0
    boundary_factor: float = 5.0
    boundary_radius: float = None
    impact_radius: float = None
    safe_side: float = +1.0
    window: tuple = (1, None)
    sample_every: int = 1
    workers: int = None
    rtol: float = SAFETY_RTOL
    atol: float = SAFETY_ATOL


def _events(L, secondary, boundary_radius, impact_radius):
    def leave(t, y, *args):
        return np.sqrt((y[0] - L[0]) ** 2 + y[1] ** 2 + y[2] ** 2) - boundary_radius

    def impact(t, y, *args):
        return np.sqrt((y[0] - secondary) ** 2 + y[1] ** 2 + y[2] ** 2) - impact_radius

    def periapsis(t, y, *args):
        # radial velocity about the secondary crosses zero upward at a local minimum of distance
        return (y[0] - secondary) * y[3] + y[1] * y[4] + y[2] * y[5]

    leave.terminal = True
    impact.terminal = True
    periapsis.direction = 1.0
    return [leave, impact, periapsis]


def classify_exit(x, orbit: ReferenceOrbit, params: SystemParams = None, horizon_periods=3.0,
                  boundary_radius=None, impact_radius=None, safe_side=+1.0,
                  rtol=SAFETY_RTOL, atol=SAFETY_ATOL) -> ExitClassification:
    """Propagate ``x`` without control and report where it leaves the L2 region.

    The trajectory escapes when it crosses the sphere of ``boundary_radius``
    about L2; the side is the sign of ``x - x_L2`` at the crossing. Reaching
    ``impact_radius`` of the secondary, or any propagation failure, counts as
    an impact.
    """
    params = params or orbit.params
    L = collinear_point(params, orbit.libration_point)
    secondary = 1.0 - params.mu
    if boundary_radius is None:
        boundary_radius = orbit.escape_radius()
    if impact_radius is None:
        impact_radius = params.secondary_radius_nd
    x = np.asarray(x, dtype=float)
    r0 = float(np.linalg.norm(x[:3] - [secondary, 0.0, 0.0]))
    events = _events(L, secondary, boundary_radius, impact_radius)
    try:
        traj, sol = propagate(x, (0.0, horizon_periods * orbit.period), params, rtol, atol,
                              events=events)
    except (PropagationError, SingularityError):
        return ExitClassification(IMPACT_SECONDARY, np.nan, 0.0)

    approaches = [r0, float(np.linalg.norm(traj.final[:3] - [secondary, 0.0, 0.0]))]
    for y in sol.y_events[2]:
        approaches.append(float(np.linalg.norm(y[:3] - [secondary, 0.0, 0.0])))
    closest = min(approaches)
    if len(sol.t_events[1]):
        return ExitClassification(IMPACT_SECONDARY, np.nan, min(closest, impact_radius))
    if len(sol.t_events[0]):
        t_exit = float(sol.t_events[0][0])
        side = np.sign(sol.y_events[0][0][0] - L[0])
        verdict = ESCAPE_INTENDED if side == np.sign(safe_side) else ESCAPE_OPPOSITE
        return ExitClassification(verdict, t_exit, closest)
    return ExitClassification(BOUNDED, np.nan, closest)


def _classify_chunk(args):
    states, orbit, kwargs = args
    return [classify_exit(x, orbit, **kwargs) for x in states]


def classify_states(states, orbit: ReferenceOrbit, cfg: SafetyConfig = SafetyConfig()):
    """Classify many states, fanning out over worker processes when ``cfg.workers != 1``."""
    states = np.asarray(states, dtype=float).reshape(-1, 6)
    kwargs = dict(horizon_periods=cfg.horizon_periods,
                  boundary_radius=cfg.boundary_radius or orbit.escape_radius(cfg.boundary_factor),
                  impact_radius=cfg.impact_radius, safe_side=cfg.safe_side, rtol=cfg.rtol,
                  atol=cfg.atol)
    workers = cfg.workers or os.cpu_count() or 1
    if workers == 1 or len(states) < 8:
        return _classify_chunk((states, orbit, kwargs))
    chunks = np.array_split(states, min(len(states), 4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_classify_chunk, [(c, orbit, kwargs) for c in chunks if len(c)])
    return [c for part in parts for c in part]


@dataclass
class SafetyReport:
    steps: np.ndarray                 # logged step indices that were classified
    classifications: list
    window: tuple                     # inclusive revolution range used for the rate
    success_rate: float
    halfspace_margin: np.ndarray = None
    window_mask: np.ndarray = None

    def counts(self, in_window=True) -> dict:
        mask = self.window_mask if in_window else np.ones(len(self.steps), bool)
        verdicts = [c.verdict for c, m in zip(self.classifications, mask) if m]
        return {v: verdicts.count(v) for v in VERDICTS}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("step", "in_window", "verdict", "escape_time", "closest_approach",
                        "halfspace_margin"))
            for i, (k, c) in enumerate(zip(self.steps, self.classifications)):
                hm = self.halfspace_margin[i] if self.halfspace_margin is not None else np.nan
                w.writerow((int(k), int(self.window_mask[i]), c.verdict, format_number(c.escape_time),
                            format_number(c.closest_approach), format_number(hm)))


def verify_mission(log, orbit: ReferenceOrbit, cfg: SafetyConfig = SafetyConfig()) -> SafetyReport:
    """Classify the logged states and report the safe-exit rate over ``cfg.window``.

    Every ``cfg.sample_every``-th logged step is classified; the success rate
    is the fraction of escape-intended verdicts among those inside the window.
    """
    n = orbit.n_segments
    states = np.asarray(log.states, dtype=float).reshape(-1, 6)
    steps = np.arange(0, len(states), max(1, int(cfg.sample_every)))
    first, last = cfg.window
    last = last if last is not None else np.inf
    rev = steps // n + 1
    mask = (rev >= first) & (rev <= last)
    results = classify_states(states[steps], orbit, cfg)
    safe = np.array([c.safe for c in results], dtype=bool)
    rate = float(np.mean(safe[mask])) if mask.any() else float("nan")
    hm = np.asarray(log.halfspace_margin, dtype=float)[steps] if len(log.halfspace_margin) else None
    return SafetyReport(steps, results, (first, cfg.window[1]), rate, hm, mask)
