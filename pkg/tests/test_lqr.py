import numpy as np
import pytest

from halokeep import lqr
from halokeep.dynamics import EARTH_MOON
from halokeep.linearize import LinearizedModel
from halokeep.lqr import CostToGo, CostWeights, RiccatiError, ellipsoid_shape, periodic_riccati

NAMES = ["earth-moon", "saturn-enceladus"]


def decoupled_model():
    """Three copies of the scalar system A=1.1, B=1 next to three uncontrolled stable modes."""
    A = np.diag([1.1, 1.1, 1.1, 0.5, 0.5, 0.5])
    B = np.vstack([np.eye(3), np.zeros((3, 3))])
    return LinearizedModel(A[None], B[None], dt=1.0)


class TestWeights:
    def test_validation(self):
        with pytest.raises(ValueError):
            CostWeights(-np.eye(6), np.eye(3), np.eye(6))
        with pytest.raises(ValueError):
            CostWeights(np.eye(6), np.zeros((3, 3)), np.eye(6))
        with pytest.raises(ValueError):
            CostWeights(np.eye(6), np.eye(3), np.triu(np.ones((6, 6))))
        with pytest.raises(ValueError):
            CostWeights.scaled_identity(1.0, 1.0, c=0.0)

    def test_in_units_default_is_identity(self):
        a = CostWeights.in_units(1e-3, 1e3, EARTH_MOON, c=2.0)
        b = CostWeights.scaled_identity(1e-3, 1e3, c=2.0)
        for x, y in ((a.Q, b.Q), (a.R, b.R), (a.Q_N, b.Q_N)):
            np.testing.assert_allclose(x, y, rtol=1e-15)
        assert a.c == 2.0

    def test_in_units_km_day(self):
        p = EARTH_MOON
        w = CostWeights.in_units(0.3, 7.0, p, length_m=1e3, time_s=86400.0)
        # cost of a nondimensional error equals the cost of the same error in km and km/day
        dx = np.array([1e-4, -2e-5, 3e-5, 1e-3, 2e-4, -1e-4])
        u = np.array([1e-3, 0.0, -2e-3])
        km = dx[:3] * p.length_unit_km
        kmpd = dx[3:] * p.length_unit_km / p.time_unit_days
        kmpd2 = u * p.length_unit_km / p.time_unit_days**2
        assert dx @ w.Q @ dx == pytest.approx(0.3 * (km @ km + kmpd @ kmpd), rel=1e-12)
        assert u @ w.R @ u == pytest.approx(7.0 * kmpd2 @ kmpd2, rel=1e-12)


class TestRiccati:
    def test_zero_weights_give_zero(self, em_model):
        w = CostWeights(np.zeros((6, 6)), np.eye(3), np.zeros((6, 6)))
        ctg = periodic_riccati(em_model, w, require_pd=False)
        assert np.all(ctg.P == 0.0)

    @pytest.mark.parametrize("doubling", [True, False])
    def test_scalar_closed_form(self, doubling):
        # the stopping rule bounds the change per period, so a 1e-10 match needs a tighter tol
        ctg = periodic_riccati(decoupled_model(), CostWeights.scaled_identity(1.0, 1.0), tol=1e-13,
                               doubling=doubling)
        # P^2 - 1.21 P - 1 = 0 for the controlled copies, P = 1 + 0.25 P for the others
        p_ctrl = (1.21 + np.sqrt(1.21**2 + 4.0)) / 2.0
        expected = np.diag([p_ctrl] * 3 + [4.0 / 3.0] * 3)
        np.testing.assert_allclose(ctg.P[0], expected, rtol=1e-10, atol=1e-12)
        np.testing.assert_array_equal(ctg.P[1], ctg.P[0])

    def test_monotone_from_zero(self):
        m = decoupled_model()
        A, B = m.A[0], m.B[0]
        # a coupled time-invariant system as well
        rng = np.random.default_rng(3)
        A2 = np.eye(6) + 0.1 * rng.normal(size=(6, 6))
        B2 = rng.normal(size=(6, 3))
        for A_, B_ in ((A, B), (A2, B2)):
            P = np.zeros((6, 6))
            for _ in range(60):
                P_next = lqr._riccati_step(P, A_, B_, np.eye(6), np.eye(3))
                assert np.linalg.eigvalsh(P_next - P).min() > -1e-9 * max(1.0, np.abs(P_next).max())
                P = P_next

    @pytest.mark.parametrize("name", NAMES)
    def test_orbit_models_converge(self, models, cost_to_go, name):
        m, ctg = models[name], cost_to_go[name]
        assert ctg.P.shape == (41, 6, 6)
        np.testing.assert_array_equal(ctg.P[-1], ctg.P[0])
        for P in ctg.P:
            np.testing.assert_array_equal(P, P.T)
            assert np.linalg.eigvalsh(P).min() > 0
        assert ctg.residual < 1e-8

    @pytest.mark.parametrize("name", NAMES)
    def test_fixed_point(self, models, cost_to_go, name):
        m, ctg = models[name], cost_to_go[name]
        from conftest import WEIGHTS
        q, r = WEIGHTS[name]
        P = ctg.P[0]
        for k in range(m.n_segments - 1, -1, -1):
            P = lqr._riccati_step(P, m.A[k], m.B[k], q * np.eye(6), r * np.eye(3))
        assert np.linalg.norm(P - ctg.P[0]) / np.linalg.norm(ctg.P[0]) < 1e-7

    @pytest.mark.parametrize("name", NAMES)
    def test_doubling_matches_plain_sweeps(self, models, cost_to_go, name):
        from conftest import WEIGHTS
        plain = periodic_riccati(models[name], CostWeights.scaled_identity(*WEIGHTS[name]),
                                 doubling=False, max_periods=5000)
        rel = np.linalg.norm(plain.P - cost_to_go[name].P, axis=(1, 2)) / np.linalg.norm(plain.P, axis=(1, 2))
        assert rel.max() < 1e-5

    def test_non_convergence(self, em_model):
        with pytest.raises(RiccatiError, match="converge"):
            periodic_riccati(em_model, CostWeights.scaled_identity(1e-3, 1e3), max_periods=3,
                             doubling=False)

    def test_loss_of_definiteness(self):
        w = CostWeights(np.diag([1.0] * 5 + [0.0]), np.eye(3), np.diag([1.0] * 5 + [0.0]))
        m = LinearizedModel(np.diag([0.5] * 6)[None], np.vstack([np.eye(3), np.zeros((3, 3))])[None], 1.0)
        with pytest.raises(RiccatiError, match="definite"):
            periodic_riccati(m, w)
        assert periodic_riccati(m, w, require_pd=False).P[0][5, 5] == 0.0

    def test_phase_wraps(self, cost_to_go):
        ctg = cost_to_go["earth-moon"]
        np.testing.assert_array_equal(ctg.at(40), ctg.P[0])
        np.testing.assert_array_equal(ctg.at(83), ctg.P[3])


class TestEllipsoid:
    def test_identity(self):
        ctg = CostToGo(np.array([np.eye(6), np.eye(6)]))
        L = ellipsoid_shape(ctg)
        np.testing.assert_array_equal(L[0], np.eye(6))
        dx = np.array([2.0, 0, 0, 0, 0, 0])
        assert np.linalg.norm(L[0] @ dx) == pytest.approx(np.sqrt(4.0))

    @pytest.mark.parametrize("name", NAMES)
    def test_factor_and_boundary(self, cost_to_go, rng, name):
        ctg = cost_to_go[name]
        L = ellipsoid_shape(ctg)
        c = 3.0
        for k in (0, 11, 40):
            P = ctg.P[k]
            assert np.linalg.norm(L[k].T @ L[k] - P) / np.linalg.norm(P) < 1e-10
            e = rng.normal(size=6)
            e /= np.linalg.norm(e)
            dx = np.sqrt(c) * np.linalg.solve(L[k], e)
            assert np.linalg.norm(L[k] @ dx) ** 2 == pytest.approx(c, rel=1e-12)
            # the quadratic form loses about cond(P) * eps to roundoff
            rel = max(1e-9, 10 * np.linalg.cond(P) * np.finfo(float).eps)
            assert dx @ P @ dx == pytest.approx(c, rel=rel)

    def test_not_positive_definite(self):
        P = np.eye(6)
        P[2, 2] = -1.0
        with pytest.raises(RiccatiError):
            ellipsoid_shape(CostToGo(np.array([P, P])))
