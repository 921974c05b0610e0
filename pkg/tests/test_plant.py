import numpy as np
import pytest

from gtmpc import plant
from gtmpc.attitude import dcm_from_quat, quat_normalize

# Nominal 8U inertia tensor used throughout the scenario tests.
J_NOM = np.array([
    [0.1335, -0.0015, 0.0045],
    [-0.0015, 0.1545, -0.0225],
    [0.0045, -0.0225, 0.1065],
])


def random_state(rng, rate_scale=0.1):
    q = rng.standard_normal(4)
    return plant.BodyState(rate_scale * rng.standard_normal(3),
                           q / np.linalg.norm(q))


class TestCheckInertia:
    def test_accepts_nominal(self):
        plant.check_inertia(J_NOM)

    def test_rejects_asymmetric(self):
        J = J_NOM.copy()
        J[0, 1] += 1e-6
        with pytest.raises(ValueError):
            plant.check_inertia(J)

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            plant.check_inertia(-np.eye(3))


class TestStateDerivative:
    def test_zero_rate_gives_jinv_u(self):
        u = np.array([1e-3, -2e-3, 0.5e-3])
        wdot, _ = plant.state_derivative(np.zeros(3), np.array([1.0, 0, 0, 0]),
                                         u, np.zeros(3), J_NOM)
        assert np.allclose(wdot, np.linalg.solve(J_NOM, u), atol=1e-18)

    def test_principal_axis_spin_is_torque_free(self):
        J = np.diag([0.1, 0.15, 0.12])
        w = np.array([0.0, 0.3, 0.0])
        wdot, _ = plant.state_derivative(w, np.array([1.0, 0, 0, 0]),
                                         np.zeros(3), np.zeros(3), J)
        assert np.allclose(wdot, 0.0, atol=1e-18)

    def test_quaternion_norm_conservation(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            s = random_state(rng)
            _, qdot = plant.state_derivative(s.omega, s.q, rng.standard_normal(3),
                                             rng.standard_normal(3), J_NOM)
            assert abs(s.q @ qdot) < 1e-12


class TestGravityGradient:
    def test_principal_alignment_zero(self):
        J = np.diag([0.1, 0.15, 0.12])
        # Identity attitude, nadir along body z (a principal axis).
        L = plant.gravity_gradient_torque(np.array([1.0, 0, 0, 0]),
                                          np.array([0.0, 0, 1.0]), 1.1e-3, J)
        assert np.allclose(L, 0.0, atol=1e-20)

    def test_zero_mean_motion(self):
        rng = np.random.default_rng(1)
        s = random_state(rng)
        L = plant.gravity_gradient_torque(s.q, np.array([0.0, 0, 1.0]), 0.0, J_NOM)
        assert np.allclose(L, 0.0)

    def test_matches_direct_cross_product(self):
        # Oracle: direct evaluation of 3 n^2 c x (J c) for nadir (0,0,1)
        # at identity attitude with the nominal inertia.
        n = 1.0948e-3
        c = np.array([0.0, 0, 1.0])
        expected = 3.0 * n**2 * np.cross(c, J_NOM @ c)
        L = plant.gravity_gradient_torque(np.array([1.0, 0, 0, 0]), c, n, J_NOM)
        assert np.allclose(L, expected, atol=1e-20)
        # Frozen oracle values: c x (J c) = (-J23, J13, 0) for c = e3.
        assert np.allclose(expected, 3.0 * n**2 * np.array([0.0225, 0.0045, 0.0]),
                           atol=1e-20)


class TestRk4:
    def test_equilibrium(self):
        s = plant.BodyState(np.zeros(3), np.array([1.0, 0, 0, 0]))
        out = plant.rk4_step(s, np.zeros(3), 0.01, J_NOM,
                             plant.DisturbanceConfig(gravity_gradient=False))
        assert np.allclose(out.omega, 0.0, atol=1e-15)
        assert np.allclose(out.q, s.q, atol=1e-15)

    def test_torque_free_conservation(self):
        rng = np.random.default_rng(2)
        s = plant.BodyState(np.array([0.05, -0.03, 0.04]),
                            quat_normalize(rng.standard_normal(4)))
        e0 = 0.5 * s.omega @ (J_NOM @ s.omega)
        h0 = np.linalg.norm(J_NOM @ s.omega)
        for _ in range(1000):  # 10 s at 0.01 s
            s = plant.rk4_step(s, np.zeros(3), 0.01, J_NOM, None)
        e1 = 0.5 * s.omega @ (J_NOM @ s.omega)
        h1 = np.linalg.norm(J_NOM @ s.omega)
        assert abs(e1 - e0) / e0 < 1e-8
        assert abs(h1 - h0) / h0 < 1e-8
        assert abs(np.linalg.norm(s.q) - 1.0) < 1e-12

    def test_convergence_order(self):
        # Richardson order estimate from successive step halvings on a fast
        # tumble (errors far above the roundoff floor). For an order-p
        # method, |x(h) - x(h/2)| halves by 2^p per halving.
        u = np.array([1e-3, 5e-4, -8e-4])

        def propagate(dt):
            s = plant.BodyState(np.array([0.6, -0.4, 0.5]),
                                np.array([1.0, 0, 0, 0]))
            for _ in range(int(round(1.0 / dt))):
                s = plant.rk4_step(s, u, dt, J_NOM, None)
            return np.concatenate((s.omega, s.q))

        x = [propagate(dt) for dt in (0.04, 0.02, 0.01)]
        d1 = np.linalg.norm(x[0] - x[1])
        d2 = np.linalg.norm(x[1] - x[2])
        order = np.log2(d1 / d2)
        assert order >= 3.8

    def test_bias_cancellation(self):
        # Principal-axis spin on a diagonal inertia so the gyroscopic term
        # is exactly zero; with u = -bias the net torque vanishes and omega
        # must stay put.
        bias = np.array([3e-4, -2e-4, 1e-4])
        cfg = plant.DisturbanceConfig(gravity_gradient=False, constant_bias=bias)
        J = np.diag([0.1335, 0.1545, 0.1065])
        s = plant.BodyState(np.array([0.0, 0.05, 0.0]),
                            np.array([1.0, 0, 0, 0]))
        w0 = s.omega.copy()
        for _ in range(500):
            s = plant.rk4_step(s, -bias, 0.01, J, cfg)
        assert np.max(np.abs(s.omega - w0)) < 1e-10

    def test_noise_requires_rng_and_is_seeded(self):
        cfg = plant.DisturbanceConfig(gravity_gradient=False, torque_noise_std=1e-5)
        s = plant.BodyState(np.zeros(3), np.array([1.0, 0, 0, 0]))
        with pytest.raises(ValueError):
            plant.rk4_step(s, np.zeros(3), 0.01, J_NOM, cfg)
        a = plant.rk4_step(s, np.zeros(3), 0.01, J_NOM, cfg,
                           rng=np.random.default_rng(5))
        b = plant.rk4_step(s, np.zeros(3), 0.01, J_NOM, cfg,
                           rng=np.random.default_rng(5))
        assert np.array_equal(a.omega, b.omega)

    def test_gravity_gradient_path(self):
        # With gg enabled and a non-principal attitude the torque is felt.
        cfg = plant.DisturbanceConfig(gravity_gradient=True)
        q = quat_normalize(np.array([0.9, 0.2, 0.3, 0.1]))
        s = plant.BodyState(np.zeros(3), q)
        out = plant.rk4_step(s, np.zeros(3), 0.01, J_NOM, cfg,
                             nadir_n=np.array([0.0, 0, -1.0]), mean_motion=1.1e-3)
        assert np.linalg.norm(out.omega) > 0.0
