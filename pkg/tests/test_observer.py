"""Observer tests: augmented-matrix structure, Kalman predict/update
contracts (zero-innovation fixed point, infinite-noise limit, Joseph-form
covariance health), and disturbance-channel convergence against a
linear-truth rollout."""

import numpy as np
import pytest

from gtmpc import attitude, geometry as geo, linearizer as lin, observer as obs

J_NOM = np.array([
    [0.1335, -0.0015, 0.0045],
    [-0.0015, 0.1545, -0.0225],
    [0.0045, -0.0225, 0.1065],
])
V_INS_B = np.array([0.0, 0.0, 1.0])
V_STR_B = attitude.unit_vector(np.array([0.0, 0.97, -0.23]))
TS = 0.1


def _model(q_hat=None):
    # one-step horizon: the observer consumes only the k = 0 rows
    if q_hat is None:
        q_hat = attitude.IDENTITY_QUAT
    c_t = attitude.dcm_from_quat(q_hat).T
    dirs = geo.DirectionSet(
        (c_t @ V_INS_B)[None, :],
        (c_t @ attitude.unit_vector(np.cross(V_STR_B, [1.0, 0.0, 0.0])))[None, :],
        (c_t @ attitude.unit_vector(np.cross(V_STR_B, [0.0, 0.0, 1.0])))[None, :])
    return lin.linearize_step(q_hat, J_NOM, TS, dirs, V_INS_B, V_STR_B)


def _offsets(model):
    return np.array([
        model.cbar_trg[0] - model.h_trg[0] @ model.x_lp,
        model.cbar_sun[0] - model.h_sun[0] @ model.x_lp,
        model.cbar_nadir[0] - model.h_nadir[0] @ model.x_lp,
    ])


class TestBuildAugmented:
    def test_block_structure(self):
        model = _model()
        a_aug, b_aug, c_aff = obs.build_augmented(model.a_d, model.b_d,
                                                  model.x_lp)
        assert a_aug.shape == (13, 13)
        assert np.array_equal(a_aug[:7, :7], model.a_d)
        assert np.array_equal(a_aug[:7, 7:10], model.b_d)
        assert np.array_equal(a_aug[7:10, 7:10], np.eye(3))
        assert np.array_equal(a_aug[10:, 10:], np.eye(3))
        assert np.all(a_aug[7:, :7] == 0.0)
        assert np.all(a_aug[7:10, 10:] == 0.0)
        assert np.array_equal(b_aug[:7], model.b_d)
        assert np.all(b_aug[7:] == 0.0)
        assert np.all(c_aff[7:] == 0.0)

    def test_operating_point_is_fixed_point(self):
        model = _model(attitude.quat_normalize(np.array([0.8, 0.1, -0.4,
                                                         0.2])))
        a_aug, b_aug, c_aff = obs.build_augmented(model.a_d, model.b_d,
                                                  model.x_lp)
        z = np.concatenate((model.x_lp, np.zeros(6)))
        est = obs.predict(obs.AugmentedEstimate(z, np.zeros((13, 13))),
                          np.zeros(3), a_aug, b_aug, c_aff, np.zeros((13, 13)))
        assert np.max(np.abs(est.x - model.x_lp)) <= 1e-14

    def test_input_disturbance_enters_through_input_map(self):
        model = _model()
        a_aug, b_aug, c_aff = obs.build_augmented(model.a_d, model.b_d,
                                                  model.x_lp)
        for i in range(3):
            z = np.zeros(13)
            z[7 + i] = 1.0
            est = obs.predict(obs.AugmentedEstimate(z, np.zeros((13, 13))),
                              np.zeros(3), a_aug, b_aug, c_aff,
                              np.zeros((13, 13)))
            assert np.allclose(est.x - c_aff[:7], model.b_d[:, i],
                               atol=1e-15)


class TestBuildObservation:
    def test_row_structure(self):
        model = _model()
        c_aug, b = obs.build_observation(model.h_trg[0], model.h_sun[0],
                                         model.h_nadir[0], _offsets(model))
        assert c_aug.shape == (10, 13)
        assert np.array_equal(c_aug[:7, :7], np.eye(7))
        assert np.all(c_aug[:7, 7:] == 0.0)
        assert np.array_equal(c_aug[7, :7], model.h_trg[0])
        assert np.array_equal(c_aug[8, :7], model.h_sun[0])
        assert np.array_equal(c_aug[9, :7], model.h_nadir[0])
        assert np.all(c_aug[7:, 7:10] == 0.0)
        assert np.array_equal(c_aug[7:, 10:], np.eye(3))
        assert np.all(b[:7] == 0.0)

    def test_predicted_measurement_at_operating_point(self):
        model = _model(attitude.quat_normalize(np.array([0.9, -0.2, 0.3,
                                                         0.1])))
        c_aug, b = obs.build_observation(model.h_trg[0], model.h_sun[0],
                                         model.h_nadir[0], _offsets(model))
        z = np.concatenate((model.x_lp, np.zeros(6)))
        y_pred = c_aug @ z + b
        expected = np.concatenate((model.x_lp,
                                   [model.cbar_trg[0], model.cbar_sun[0],
                                    model.cbar_nadir[0]]))
        assert np.max(np.abs(y_pred - expected)) <= 1e-12


class TestPredict:
    def test_matches_affine_product(self):
        rng = np.random.default_rng(8)
        model = _model()
        a_aug, b_aug, c_aff = obs.build_augmented(model.a_d, model.b_d,
                                                  model.x_lp)
        z = rng.standard_normal(13)
        m = rng.standard_normal((13, 13))
        P = m @ m.T
        u = rng.standard_normal(3)
        est = obs.predict(obs.AugmentedEstimate(z, P), u, a_aug, b_aug,
                          c_aff, np.zeros((13, 13)))
        assert np.max(np.abs(est.z - (a_aug @ z + b_aug @ u + c_aff))) \
            <= 1e-14
        assert np.max(np.abs(est.P - a_aug @ P @ a_aug.T)) \
            <= 1e-12 * np.max(np.abs(P))
        assert np.max(np.abs(est.P - est.P.T)) == 0.0

    def test_identity_model_is_noop(self):
        z = np.arange(13.0)
        est = obs.predict(obs.AugmentedEstimate(z, np.eye(13)), np.zeros(3),
                          np.eye(13), np.zeros((13, 3)), np.zeros(13),
                          np.zeros((13, 13)))
        assert np.array_equal(est.z, z)

    def test_process_noise_adds_exactly(self):
        rng = np.random.default_rng(9)
        model = _model()
        a_aug, b_aug, c_aff = obs.build_augmented(model.a_d, model.b_d,
                                                  model.x_lp)
        m = rng.standard_normal((13, 13))
        P = m @ m.T
        q = obs.NoiseConfig().q_proc
        est0 = obs.AugmentedEstimate(rng.standard_normal(13), P)
        with_q = obs.predict(est0, np.zeros(3), a_aug, b_aug, c_aff, q)
        without = obs.predict(est0, np.zeros(3), a_aug, b_aug, c_aff,
                              np.zeros((13, 13)))
        diff = with_q.P - without.P
        assert np.max(np.abs(diff - q)) <= 1e-12
        assert np.trace(with_q.P) > np.trace(without.P)


class TestUpdate:
    def _setup(self, seed=10):
        rng = np.random.default_rng(seed)
        model = _model()
        c_aug, b = obs.build_observation(model.h_trg[0], model.h_sun[0],
                                         model.h_nadir[0], _offsets(model))
        z = np.concatenate((0.01 * rng.standard_normal(3),
                            attitude.quat_normalize(rng.standard_normal(4)),
                            1e-4 * rng.standard_normal(6)))
        noise = obs.NoiseConfig()
        return model, c_aug, b, obs.AugmentedEstimate(z, noise.p0), noise

    def test_zero_innovation_leaves_state(self):
        _, c_aug, b, est, noise = self._setup()
        y = c_aug @ est.z + b
        out = obs.update(est, y, c_aug, b, noise.r_meas)
        assert np.max(np.abs(out.z - est.z)) <= 1e-12
        assert np.trace(out.P) <= np.trace(est.P)

    def test_infinite_noise_limit_is_noop(self):
        _, c_aug, b, est, noise = self._setup(11)
        y = c_aug @ est.z + b + 0.01
        out = obs.update(est, y, c_aug, b, 1e12 * noise.r_meas)
        assert np.max(np.abs(out.z - est.z)) <= 1e-6

    def test_quaternion_renormalized(self):
        _, c_aug, b, est, noise = self._setup(12)
        y = c_aug @ est.z + b
        y[3:7] *= 1.2  # inconsistent quaternion measurement
        out = obs.update(est, y, c_aug, b, noise.r_meas)
        assert abs(np.linalg.norm(out.z[3:7]) - 1.0) <= 1e-12

    def test_covariance_health_over_cycles(self):
        rng = np.random.default_rng(13)
        model, c_aug, b, est, noise = self._setup(13)
        a_aug, b_aug, c_aff = obs.build_augmented(model.a_d, model.b_d,
                                                  model.x_lp)
        for _ in range(60):
            est = obs.predict(est, 1e-4 * rng.standard_normal(3), a_aug,
                              b_aug, c_aff, noise.q_proc)
            y = c_aug @ est.z + b + 1e-4 * rng.standard_normal(10)
            est = obs.update(est, y, c_aug, b, noise.r_meas)
            assert np.max(np.abs(est.P - est.P.T)) <= 1e-10
            ev = np.min(np.linalg.eigvalsh(est.P))
            assert ev >= -1e-10 * max(1.0, np.max(np.abs(est.P)))

    def test_indefinite_innovation_raises(self):
        _, c_aug, b, est, noise = self._setup(14)
        y = c_aug @ est.z + b
        with pytest.raises(obs.InnovationSolveError):
            obs.update(est, y, c_aug, b, -1.0 * np.eye(10))


class TestNoiseConfig:
    def test_defaults_match_documented_values(self):
        noise = obs.NoiseConfig()
        assert np.array_equal(np.diag(noise.p0),
                              np.concatenate((np.full(3, 1e-4),
                                              np.full(4, 1e-4),
                                              np.full(3, 1e-8),
                                              np.full(3, 1e-6))))
        assert np.array_equal(np.diag(noise.q_proc),
                              np.concatenate((np.full(3, 1e-8),
                                              np.full(4, 1e-10),
                                              np.full(3, 1e-12),
                                              np.full(3, 1e-10))))
        assert np.array_equal(np.diag(noise.r_meas),
                              np.concatenate((np.full(3, 1e-8),
                                              np.full(4, 1e-10),
                                              np.full(3, 1e-8))))

    def test_validation(self):
        with pytest.raises(ValueError):
            obs.NoiseConfig(r_meas=np.zeros((10, 10)))  # not PD
        bad = np.eye(13)
        bad[0, 1] = 0.5
        with pytest.raises(ValueError):
            obs.NoiseConfig(q_proc=bad)
        with pytest.raises(ValueError):
            obs.NoiseConfig(p0=-np.eye(13))


class TestDisturbanceConvergence:
    def test_constant_disturbances_recovered_on_linear_truth(self):
        """Truth follows the augmented linear model with constant d_u and
        d_y; feedforward holds the state at the operating point so the
        only information about d_u is the innovation sequence."""
        model = _model()
        a_aug, b_aug, c_aff = obs.build_augmented(model.a_d, model.b_d,
                                                  model.x_lp)
        c_aug, b = obs.build_observation(model.h_trg[0], model.h_sun[0],
                                         model.h_nadir[0], _offsets(model))
        d_u_true = np.array([2e-5, -1e-5, 1.5e-5])
        d_y_true = np.array([5e-4, -3e-4, 2e-4])
        z_true = np.concatenate((model.x_lp, d_u_true, d_y_true))
        noise = obs.NoiseConfig()
        est = obs.AugmentedEstimate(np.concatenate((model.x_lp,
                                                    np.zeros(6))),
                                    noise.p0)
        u = -d_u_true  # cancels the bias, state stays put
        for _ in range(600):
            z_true = a_aug @ z_true + b_aug @ u + c_aff
            est = obs.predict(est, u, a_aug, b_aug, c_aff, noise.q_proc)
            est = obs.update(est, c_aug @ z_true + b, c_aug, b,
                             noise.r_meas)
        assert np.max(np.abs(est.d_u - d_u_true)) \
            <= 0.05 * np.max(np.abs(d_u_true))
        assert np.max(np.abs(est.d_y - d_y_true)) \
            <= 0.05 * np.max(np.abs(d_y_true))
        assert np.max(np.abs(est.x - model.x_lp)) <= 1e-6
