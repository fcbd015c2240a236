"""
Scenario files: one YAML document describing system, orbit, constraints,
mission, solver, safety check and outputs.

Lengths and speeds may be plain numbers (nondimensional) or tagged mappings
such as ``{value: 40, unit: km}``. Accepted units: ``nd``, ``m``, ``km`` for
lengths and ``nd``, ``m/s``, ``mm/s``, ``km/s`` for speeds. The half-space
level ``a`` is nondimensional.

The LQR weights ``q`` and ``r`` multiply identity matrices in the unit
system named by ``lqr.length_unit`` and ``lqr.time_unit`` (``nd``, ``s``,
``min``, ``h``, ``day``); the level ``c`` is a value of that cost.
Relative file references resolve against the scenario file, or against the
packaged data for ``builtin:NAME``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .controller import InjectionError, MissionConfig
from .dynamics import PRESETS, SystemParams
from .halo import InitialGuess, ReferenceOrbit, build_reference_orbit, load_initial_guess
from .linearize import LinearizedModel, discrete_jacobians
from .lqr import CostToGo, CostWeights, periodic_riccati
from .safety import SafetyConfig
from .stationkeeping import BALL, ELLIPSOID, MANIFOLD, UNSTABLE_COORDINATE, ConstraintConfig


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario input."""


_LENGTH = {"nd": None, "m": 1.0, "km": 1e3}
_SPEED = {"nd": None, "m/s": 1.0, "mm/s": 1e-3, "km/s": 1e3}
_TIME = {"nd": None, "s": 1.0, "min": 60.0, "h": 3600.0, "day": 86400.0}
_AXES = {"x": 0, "y": 1, "z": 2}

DEFAULTS = {
    "system": {"preset": "earth-moon"},
    "orbit": {"initial_guess": None, "knots": None, "correction_tol": 1e-10},
    "constraint": {"variant": BALL, "r_q": 1.0, "r_v": 1.0, "c": 1.0, "a": 0.0, "halfspace": True,
                   "direction": UNSTABLE_COORDINATE},
    "lqr": {"q": 1e-3, "r": 1e3, "q_terminal": None, "length_unit": "nd", "time_unit": "nd",
            "tol": 1e-8, "max_periods": 500},
    "mission": {"revolutions": 100, "horizon": None, "stride": None,
                "injection": {"position_m": 0.0, "velocity_mps": 0.0,
                              "position_axes": ["x"], "velocity_axes": ["y"]}},
    "solver": {"tol": 1e-8, "max_iter": 100},
    "safety": {"horizon_periods": 3.0, "boundary_factor": 5.0, "window": [1, None],
               "sample_every": 1, "workers": None},
    "output": {"directory": "run", "formats": ["csv", "json"]},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _quantity(value, table, convert, what):
    if isinstance(value, dict):
        try:
            number, unit = float(value["value"]), str(value.get("unit", "nd"))
        except (KeyError, TypeError, ValueError):
            raise ScenarioError(f"{what}: expected {{value: <number>, unit: <unit>}}") from None
    else:
        try:
            number, unit = float(value), "nd"
        except (TypeError, ValueError):
            raise ScenarioError(f"{what}: not a number: {value!r}") from None
    if unit not in table:
        raise ScenarioError(f"{what}: unknown unit {unit!r}; use one of {sorted(table)}")
    return number if table[unit] is None else convert(number * table[unit])


def builtin_path(name: str) -> Path:
    """Path of a shipped data file (initial conditions, example scenarios)."""
    path = resources.files("halokeep") / "data" / name
    return Path(str(path))


@dataclass
class Scenario:
    raw: dict
    path: Path = None

    @property
    def base_dir(self) -> Path:
        return self.path.parent if self.path else Path.cwd()

    def section(self, name) -> dict:
        return self.raw[name]

    def resolve(self, ref) -> Path:
        """Resolve ``builtin:NAME`` or a path relative to the scenario file."""
        ref = str(ref)
        if ref.startswith("builtin:"):
            return builtin_path(ref.split(":", 1)[1])
        p = Path(ref).expanduser()
        return p if p.is_absolute() else self.base_dir / p

    def system(self) -> SystemParams:
        s = self.raw["system"]
        if s.get("preset"):
            try:
                return PRESETS[str(s["preset"]).lower()]
            except KeyError:
                raise ScenarioError(f"system: unknown preset {s['preset']!r}; known: {sorted(PRESETS)}")
        try:
            return SystemParams(mu=float(s["mu"]), length_unit_km=float(s["length_unit_km"]),
                                time_unit_days=float(s["time_unit_days"]),
                                name=str(s.get("name", "custom")),
                                secondary_radius_km=float(s.get("secondary_radius_km", 0.0)))
        except KeyError as exc:
            raise ScenarioError(f"system: missing {exc.args[0]!r} (or give a preset)") from None
        except ValueError as exc:
            raise ScenarioError(f"system: {exc}") from None

    def initial_guess(self) -> InitialGuess:
        ref = self.raw["orbit"].get("initial_guess")
        if ref is None:
            ref = f"builtin:{self.system().name.replace('-', '_')}_l2_halo.ic"
        path = self.resolve(ref)
        if not path.is_file():
            raise FileNotFoundError(f"initial-condition file not found: {path}")
        return load_initial_guess(path)

    def knots(self, guess: InitialGuess = None) -> int:
        n = self.raw["orbit"].get("knots")
        n = int(n) if n is not None else (guess or self.initial_guess()).knots
        if n < 3:
            raise ScenarioError("orbit.knots must be at least 3")
        return n

    def constraints(self, params: SystemParams = None) -> ConstraintConfig:
        params = params or self.system()
        c = self.raw["constraint"]
        variant = str(c.get("variant", BALL))
        if variant not in (BALL, ELLIPSOID):
            raise ScenarioError(f"constraint.variant must be {BALL!r} or {ELLIPSOID!r}")
        direction = str(c.get("direction", UNSTABLE_COORDINATE))
        if direction not in (MANIFOLD, UNSTABLE_COORDINATE):
            raise ScenarioError(f"constraint.direction must be {MANIFOLD!r} or {UNSTABLE_COORDINATE!r}")
        try:
            return ConstraintConfig(
                variant=variant,
                r_q=_quantity(c.get("r_q", 1.0), _LENGTH, params.m_to_nd, "constraint.r_q"),
                r_v=_quantity(c.get("r_v", 1.0), _SPEED, params.mps_to_nd, "constraint.r_v"),
                c=float(c.get("c", 1.0)), a=float(c.get("a", 0.0)),
                halfspace=bool(c.get("halfspace", True)), direction=direction)
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"constraint: {exc}") from None

    def weights(self, params: SystemParams = None) -> CostWeights:
        """LQR weights, declared in ``lqr.length_unit`` / ``lqr.time_unit``, made nondimensional."""
        params = params or self.system()
        q = self.raw["lqr"]
        qt = q.get("q_terminal")
        lu, tu = str(q.get("length_unit", "nd")), str(q.get("time_unit", "nd"))
        if lu not in _LENGTH:
            raise ScenarioError(f"lqr.length_unit: unknown unit {lu!r}; use one of {sorted(_LENGTH)}")
        if tu not in _TIME:
            raise ScenarioError(f"lqr.time_unit: unknown unit {tu!r}; use one of {sorted(_TIME)}")
        try:
            return CostWeights.in_units(float(q["q"]), float(q["r"]), params, _LENGTH[lu], _TIME[tu],
                                        c=float(self.raw["constraint"].get("c", 1.0)),
                                        q_terminal=None if qt is None else float(qt))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"lqr: {exc}") from None

    def injection(self) -> InjectionError:
        inj = self.raw["mission"].get("injection") or {}
        try:
            q_axes = tuple(_AXES[a] for a in inj.get("position_axes", ["x"]))
            v_axes = tuple(_AXES[a] for a in inj.get("velocity_axes", ["y"]))
        except KeyError as exc:
            raise ScenarioError(f"mission.injection: unknown axis {exc.args[0]!r}") from None
        return InjectionError(float(inj.get("position_m", 0.0)), float(inj.get("velocity_mps", 0.0)),
                              q_axes, v_axes)

    def safety(self) -> SafetyConfig:
        s = self.raw["safety"]
        window = s.get("window") or [1, None]
        return SafetyConfig(horizon_periods=float(s.get("horizon_periods", 3.0)),
                            boundary_factor=float(s.get("boundary_factor", 5.0)),
                            boundary_radius=s.get("boundary_radius"),
                            impact_radius=s.get("impact_radius"),
                            window=(int(window[0]), None if window[1] is None else int(window[1])),
                            sample_every=int(s.get("sample_every", 1)),
                            workers=s.get("workers"))

    @property
    def output_dir(self) -> Path:
        """Output directory; relative paths are taken from the working directory."""
        return Path(str(self.raw["output"].get("directory", "run"))).expanduser()


def load_scenario(source) -> Scenario:
    """Parse a scenario file, fill defaults and check ranges."""
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read scenario {path}: {exc.strerror or exc}") from None
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    unknown = set(doc) - set(DEFAULTS)
    if unknown:
        raise ScenarioError(f"{path}: unknown sections {sorted(unknown)}")
    sc = Scenario(_merge(DEFAULTS, doc), path.resolve())
    check_scenario(sc)
    return sc


def check_scenario(sc: Scenario):
    """Range checks that need the merged document; raises :class:`ScenarioError`."""
    m = sc.raw["mission"]
    if int(m["revolutions"]) < 1:
        raise ScenarioError("mission.revolutions must be at least 1")
    for key in ("horizon", "stride"):
        if m.get(key) is not None and int(m[key]) < 1:
            raise ScenarioError(f"mission.{key} must be positive")
    s = sc.raw["solver"]
    if not 0 < float(s["tol"]) < 1:
        raise ScenarioError("solver.tol must lie in (0, 1)")
    if int(s["max_iter"]) < 1:
        raise ScenarioError("solver.max_iter must be positive")
    params = sc.system()
    sc.constraints(params)
    sc.weights(params)


@dataclass
class Resolved:
    """Everything a mission needs, built from a scenario."""

    params: SystemParams
    orbit: ReferenceOrbit
    model: LinearizedModel
    cost_to_go: CostToGo
    mission: MissionConfig


def build_orbit(sc: Scenario) -> ReferenceOrbit:
    params = sc.system()
    guess = sc.initial_guess()
    return build_reference_orbit(guess, params, sc.knots(guess),
                                 tol=float(sc.raw["orbit"]["correction_tol"]))


def resolve(sc: Scenario, orbit: ReferenceOrbit = None) -> Resolved:
    params = sc.system()
    orbit = orbit or build_orbit(sc)
    model = discrete_jacobians(orbit)
    cons = sc.constraints(params)
    ctg = None
    if cons.variant == ELLIPSOID:
        lq = sc.raw["lqr"]
        ctg = periodic_riccati(model, sc.weights(params), tol=float(lq["tol"]),
                               max_periods=int(lq["max_periods"]))
    m = sc.raw["mission"]
    mission = MissionConfig(orbit, model, cons, revolutions=int(m["revolutions"]),
                            injection=sc.injection(), cost_to_go=ctg,
                            horizon=None if m.get("horizon") is None else int(m["horizon"]),
                            stride=None if m.get("stride") is None else int(m["stride"]),
                            solver_tol=float(sc.raw["solver"]["tol"]),
                            solver_max_iter=int(sc.raw["solver"]["max_iter"]))
    return Resolved(params, orbit, model, ctg, mission)


def dump_resolved(sc: Scenario) -> dict:
    """The merged scenario with constraint values converted to nondimensional units."""
    out = copy.deepcopy(sc.raw)
    c = sc.constraints()
    out["constraint_nd"] = {"variant": c.variant, "r_q": c.r_q, "r_v": c.r_v, "c": c.c, "a": c.a,
                            "halfspace": c.halfspace, "direction": c.direction}
    return out
