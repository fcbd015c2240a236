import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halokeep.conic import ConicSolution, Status, solve
from halokeep.stationkeeping import (
    BALL, ELLIPSOID, MANIFOLD, UNSTABLE_COORDINATE, AssemblyError, ConstraintConfig,
    StationkeepingProblem, assemble, constraint_margins, extract_plan, halfspace_normal,
    plan_maneuvers,
)

R_Q, R_V = 1.0e-4, 7.0e-5   # nondimensional, about 38 km and 0.072 m/s for Earth-Moon
H2 = 80                     # two revolutions of 40 segments


def ball(**kw):
    base = dict(variant=BALL, r_q=R_Q, r_v=R_V, a=0.0, halfspace=False)
    base.update(kw)
    return ConstraintConfig(**base)


def problem(orbit, model, dx0, horizon=H2, phase=0, ctg=None, **kw):
    return StationkeepingProblem(orbit, model, np.asarray(dx0, float), horizon, ball(**kw) if "variant" not in kw
                                 else ConstraintConfig(**kw), cost_to_go=ctg, phase=phase)


def check_plan(prob, plan, tol=1e-7):
    """Re-evaluate every constraint of the program against the returned plan."""
    X, U = plan.errors, plan.controls
    cfg = prob.constraints
    scale = np.abs(X).max() + 1e-300
    np.testing.assert_allclose(X[0], prob.dx0, atol=tol * scale)
    for j in range(prob.horizon):
        A, B = prob.model.at(prob.phase + j)
        assert np.linalg.norm(X[j + 1] - A @ X[j] - B @ U[j]) <= tol * scale
    for j in range(1, prob.horizon + 1):
        k = prob.phase + j
        if cfg.variant == BALL:
            if np.isfinite(cfg.r_q):
                assert np.linalg.norm(X[j, :3]) <= cfg.r_q * (1 + tol)
            if np.isfinite(cfg.r_v):
                assert np.linalg.norm(X[j, 3:]) <= cfg.r_v * (1 + tol)
        else:
            assert X[j] @ prob.cost_to_go.at(k) @ X[j] <= cfg.c * (1 + tol)
        if cfg.halfspace:
            d = halfspace_normal(prob.orbit, k, cfg.direction)
            assert X[j] @ d >= cfg.a - tol * max(abs(cfg.a), scale)


def one_step_grid_oracle(A, B, dx0, r_q, r_v, span, levels=10, n=61):
    """Smallest |u|_1 on a zooming 3-D grid with |dq_2| <= r_q and |dv_2| <= r_v."""
    free = A @ dx0
    center = np.zeros(3)
    best = (np.inf, None)
    for _ in range(levels):
        g = np.linspace(-span, span, n)
        U = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3) + center
        X = free + U @ B.T
        ok = (np.linalg.norm(X[:, :3], axis=1) <= r_q) & (np.linalg.norm(X[:, 3:], axis=1) <= r_v)
        if ok.any():
            cost = np.abs(U[ok]).sum(axis=1)
            i = int(np.argmin(cost))
            if cost[i] < best[0]:
                best = (cost[i], U[ok][i])
            center = best[1]
        span *= 4.0 / (n - 1)
    return best


class TestConfig:
    @pytest.mark.parametrize("kw", [
        dict(variant="box"), dict(r_q=0.0), dict(r_v=-1.0), dict(c=0.0), dict(a=np.nan),
        dict(direction="sideways"),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ConstraintConfig(**kw)

    def test_defaults(self):
        cfg = ConstraintConfig()
        assert cfg.variant == BALL and cfg.halfspace and cfg.direction == UNSTABLE_COORDINATE


class TestAssembly:
    def test_layout(self, em_orbit, em_model):
        prob = problem(em_orbit, em_model, np.zeros(6), horizon=5, halfspace=True, a=1e-11)
        prog = assemble(prob)
        nx, nu = 6 * 6, 3 * 5
        assert prog.n == nx + 2 * nu
        assert prog.cones[0] == ("zero", 6 + 6 * 5)
        # L1 epigraph plus one half-space row per constrained knot
        assert prog.cones[1] == ("nonneg", 2 * nu + 5)
        assert prog.cones[2:] == [("soc", 4)] * 10
        assert np.all(prog.c[:nx + nu] == 0.0) and np.all(prog.c[nx + nu:] == 1.0)

    def test_ellipsoid_layout(self, em_orbit, em_model, cost_to_go):
        prob = problem(em_orbit, em_model, np.zeros(6), horizon=4, ctg=cost_to_go["earth-moon"],
                       variant=ELLIPSOID, c=1.0, halfspace=False)
        assert assemble(prob).cones[2:] == [("soc", 7)] * 4

    def test_errors(self, em_orbit, em_model, se_orbit):
        with pytest.raises(AssemblyError):
            problem(em_orbit, em_model, np.zeros(5))
        with pytest.raises(AssemblyError):
            problem(em_orbit, em_model, [np.nan] + [0.0] * 5)
        with pytest.raises(AssemblyError):
            problem(em_orbit, em_model, np.zeros(6), horizon=0)
        with pytest.raises(AssemblyError, match="cost-to-go"):
            StationkeepingProblem(em_orbit, em_model, np.zeros(6), 3, ConstraintConfig(variant=ELLIPSOID))
        short = type(em_model)(em_model.A[:10], em_model.B[:10], em_model.dt)
        with pytest.raises(AssemblyError):
            problem(em_orbit, short, np.zeros(6))


class TestSolutions:
    def test_origin_costs_nothing(self, em_orbit, em_model):
        plan = plan_maneuvers(problem(em_orbit, em_model, np.zeros(6)))
        assert plan.valid
        assert plan.total_dv_mps < 1e-9

    def test_halfspace_excludes_origin(self, em_orbit, em_model):
        prob = problem(em_orbit, em_model, np.zeros(6), halfspace=True, a=1e-8)
        plan = plan_maneuvers(prob)
        assert plan.valid
        assert plan.objective > 0 and plan.total_dv_mps > 0
        check_plan(prob, plan)

    def test_one_step_against_grid(self, em_orbit, em_model):
        A, B = em_model.at(0)
        # a velocity error that drifts out of both balls in one step
        dx0 = np.array([0.0, 0.0, 0.0, 1.5 * R_V, -0.5 * R_V, 0.2 * R_V])
        free = A @ dx0
        assert np.linalg.norm(free[:3]) > R_Q or np.linalg.norm(free[3:]) > R_V
        prob = problem(em_orbit, em_model, dx0, horizon=1)
        plan = plan_maneuvers(prob)
        assert plan.valid
        span = 4.0 * R_V / em_model.dt
        oracle, _ = one_step_grid_oracle(A, B, dx0, R_Q, R_V, span)
        assert plan.objective == pytest.approx(oracle, rel=1e-4)
        assert plan.objective <= oracle * (1 + 1e-7)

    def test_sparse_in_time(self, em_orbit, em_model):
        prob = problem(em_orbit, em_model, np.zeros(6), halfspace=True, a=1e-11)
        plan = plan_maneuvers(prob)
        assert plan.valid
        quiet = np.abs(plan.controls).sum(axis=1) < 1e-9
        assert quiet.mean() > 0.5

    @pytest.mark.parametrize("phase", [0, 17, 39])
    @pytest.mark.parametrize("direction", [MANIFOLD, UNSTABLE_COORDINATE])
    def test_constraints_hold(self, em_orbit, em_model, rng, phase, direction):
        dx0 = np.r_[rng.normal(scale=0.3 * R_Q, size=3), rng.normal(scale=0.3 * R_V, size=3)]
        # start on the permitted side; a large error on the wrong side may not be
        # recoverable in the single step before the first constrained knot
        dx0 *= np.sign(dx0 @ halfspace_normal(em_orbit, phase, direction))
        prob = problem(em_orbit, em_model, dx0, phase=phase, halfspace=True, a=1e-11, direction=direction)
        plan = plan_maneuvers(prob)
        assert plan.valid
        check_plan(prob, plan)
        r = plan.residuals
        assert max(r) < 1e-8

    def test_ellipsoid_constraints_hold(self, em_orbit, em_model, cost_to_go, rng):
        ctg = cost_to_go["earth-moon"]
        P0 = ctg.at(5)
        dx0 = rng.normal(size=6)
        dx0 *= np.sqrt(0.25 / (dx0 @ P0 @ dx0))
        prob = problem(em_orbit, em_model, dx0, phase=5, ctg=ctg, variant=ELLIPSOID, c=1.0,
                       halfspace=True, a=1e-11)
        plan = plan_maneuvers(prob)
        assert plan.valid
        check_plan(prob, plan)

    def test_monotone_in_level(self, em_orbit, em_model):
        objs = []
        for a in (0.0, 1e-11, 1e-10, 1e-9, 1e-8):
            plan = plan_maneuvers(problem(em_orbit, em_model, np.zeros(6), halfspace=True, a=a))
            assert plan.valid
            objs.append(plan.objective)
        assert all(b >= a * (1 - 1e-6) - 1e-12 for a, b in zip(objs, objs[1:]))
        assert objs[-1] > objs[0]

    @settings(max_examples=10, deadline=None)
    @given(st.lists(st.floats(min_value=-1e-3, max_value=1e-3), min_size=6, max_size=6))
    def test_unconstrained_needs_no_control(self, em_orbit, em_model, dx0):
        prob = problem(em_orbit, em_model, dx0, horizon=20, r_q=np.inf, r_v=np.inf)
        plan = plan_maneuvers(prob)
        assert plan.valid
        assert np.abs(plan.controls).max() < 1e-12

    def test_unreachable_level_is_infeasible(self, em_orbit, em_model):
        prob = problem(em_orbit, em_model, np.zeros(6), horizon=10, halfspace=True, a=10 * R_Q)
        plan = plan_maneuvers(prob)
        assert plan.status == Status.PRIMAL_INFEASIBLE
        assert not plan.valid and np.isnan(plan.total_dv_mps)


class TestExtract:
    def test_zero_primal(self, em_orbit, em_model):
        prob = problem(em_orbit, em_model, np.zeros(6), horizon=3)
        prog = assemble(prob)
        sol = ConicSolution(Status.OPTIMAL, np.zeros(prog.n), np.zeros(prog.m), np.zeros(prog.m),
                            0.0, 0, 0.0, 0.0, 0.0)
        plan = extract_plan(prob, sol)
        assert plan.total_dv_mps == 0.0 and plan.objective == 0.0

    def test_unit_conversion(self, em_orbit, em_model):
        prob = problem(em_orbit, em_model, np.zeros(6), horizon=1)
        prog = assemble(prob)
        z = np.zeros(prog.n)
        su = prob.scales[2]
        z[12] = 1.0 / su  # u_1 = (1, 0, 0) nondimensional
        sol = ConicSolution(Status.OPTIMAL, z, np.zeros(prog.m), np.zeros(prog.m), 0.0, 0, 0.0, 0.0, 0.0)
        plan = extract_plan(prob, sol)
        # hand computation from the unit constants: dt = T/40, velocity unit = LU/TU
        dt_nd = em_orbit.period / 40
        by_hand = dt_nd * 385000.0e3 / (4.349 * 86400.0)
        assert plan.dv_mps[0] == pytest.approx(by_hand, rel=1e-12)
        assert plan.dv_l1_mps[0] == pytest.approx(by_hand, rel=1e-12)
        np.testing.assert_allclose(plan.controls[0], [1.0, 0.0, 0.0], rtol=1e-14)

    def test_invalid_status(self, em_orbit, em_model):
        prob = problem(em_orbit, em_model, np.zeros(6), horizon=2)
        prog = assemble(prob)
        sol = solve(prog, max_iter=0)
        plan = extract_plan(prob, sol)
        assert not plan.valid
        assert np.all(np.isnan(plan.controls))

    def test_total_is_sum(self, em_orbit, em_model):
        plan = plan_maneuvers(problem(em_orbit, em_model, np.zeros(6), halfspace=True, a=1e-9))
        assert plan.total_dv_mps == pytest.approx(plan.dv_mps.sum())
        U = plan.controls
        np.testing.assert_allclose(
            plan.dv_mps, em_orbit.params.nd_to_mps(np.linalg.norm(U, axis=1) * em_model.dt), rtol=1e-12)


class TestMargins:
    def test_ball(self, em_orbit):
        cfg = ball(a=1e-11)
        dx = np.array([0.5 * R_Q, 0, 0, 0, 0.9 * R_V, 0])
        state, half = constraint_margins(em_orbit, dx, 3, cfg)
        assert state == pytest.approx(0.9)
        d = halfspace_normal(em_orbit, 3, cfg.direction)
        assert half == pytest.approx(dx @ d - 1e-11)

    def test_ellipsoid(self, em_orbit, cost_to_go):
        ctg = cost_to_go["earth-moon"]
        cfg = ConstraintConfig(variant=ELLIPSOID, c=2.0)
        dx = np.full(6, 1e-5)
        state, _ = constraint_margins(em_orbit, dx, 44, cfg, ctg)
        assert state == pytest.approx(dx @ ctg.P[4] @ dx / 2.0)

    def test_normals(self, em_orbit):
        for k in (0, 9, 40):
            m = halfspace_normal(em_orbit, k, MANIFOLD)
            u = halfspace_normal(em_orbit, k, UNSTABLE_COORDINATE)
            assert np.linalg.norm(m) == pytest.approx(1.0) and np.linalg.norm(u) == pytest.approx(1.0)
            v = em_orbit.stms[k % 40] @ em_orbit.unstable_direction
            np.testing.assert_allclose(m, v / np.linalg.norm(v))
            # both normals agree on the sign of the unstable branch
            assert m @ u > 0
