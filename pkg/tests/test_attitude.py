import numpy as np
import pytest

from gtmpc import attitude as att


def random_unit_quat(rng):
    q = rng.standard_normal(4)
    return q / np.linalg.norm(q)


def random_unit_vec(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


class TestDcm:
    def test_identity(self):
        C = att.dcm_from_quat(np.array([1.0, 0, 0, 0]))
        assert np.allclose(C, np.eye(3), atol=1e-15)

    def test_90deg_about_x_term_by_term(self):
        # Oracle: symbolic term-by-term evaluation of
        # C = (q0^2 - qv.qv) I + 2 qv qv^T + 2 q0 [qv]x
        # for q = (s, s, 0, 0), s = sqrt(2)/2.
        s = np.sqrt(2.0) / 2.0
        q0 = s
        qv = np.array([s, 0.0, 0.0])
        expected = (q0**2 - qv @ qv) * np.eye(3) \
            + 2.0 * np.outer(qv, qv) \
            + 2.0 * q0 * np.array([[0, -qv[2], qv[1]],
                                   [qv[2], 0, -qv[0]],
                                   [-qv[1], qv[0], 0]])
        # Frozen values of the oracle: rotation by 90 deg about x.
        assert np.allclose(expected, np.array([[1.0, 0, 0],
                                               [0, 0, -1.0],
                                               [0, 1.0, 0]]), atol=1e-15)
        C = att.dcm_from_quat(np.array([s, s, 0.0, 0.0]))
        assert np.allclose(C, expected, atol=1e-15)

    def test_sign_symmetry(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            q = random_unit_quat(rng)
            assert np.allclose(att.dcm_from_quat(q), att.dcm_from_quat(-q), atol=1e-14)

    def test_orthogonal_det_one(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            C = att.dcm_from_quat(random_unit_quat(rng))
            assert np.max(np.abs(C.T @ C - np.eye(3))) < 1e-12
            assert abs(np.linalg.det(C) - 1.0) < 1e-12

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            att.dcm_from_quat(np.array([1.0, 0.1, 0, 0]))

    def test_quat_from_dcm_roundtrip(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            q = random_unit_quat(rng)
            C = att.dcm_from_quat(q)
            q2 = att.quat_from_dcm(C)
            assert np.allclose(att.dcm_from_quat(q2), C, atol=1e-12)


class TestQuatMatrix:
    def test_identity(self):
        assert np.allclose(att.quat_matrix(np.array([1.0, 0, 0, 0])), np.eye(4))

    def test_orthogonality(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            Q = att.quat_matrix(random_unit_quat(rng))
            assert np.max(np.abs(Q.T @ Q - np.eye(4))) < 1e-12

    def test_kinematics_preserve_norm(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            q = random_unit_quat(rng)
            w = rng.standard_normal(3)
            qdot = 0.5 * att.quat_matrix(q) @ np.concatenate(([0.0], w))
            assert abs(q @ qdot) < 1e-12

    def test_product_composition_vs_dcm(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            q1, q2 = random_unit_quat(rng), random_unit_quat(rng)
            q12 = att.quat_mul(q1, q2)
            assert np.max(np.abs(att.dcm_from_quat(att.quat_normalize(q12))
                                 - att.dcm_from_quat(q1) @ att.dcm_from_quat(q2))) < 1e-10


class TestSkew:
    def test_zero(self):
        assert np.allclose(att.skew(np.zeros(3)), np.zeros((3, 3)))

    def test_e1_cross_e2(self):
        e1, e2, e3 = np.eye(3)
        assert np.allclose(att.skew(e1) @ e2, e3)

    def test_matches_cross_and_antisymmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a, b = rng.standard_normal(3), rng.standard_normal(3)
            S = att.skew(a)
            assert np.max(np.abs(S @ b - np.cross(a, b))) < 1e-15
            assert np.max(np.abs(S.T + S)) < 1e-15


class TestAngleBetween:
    def test_endpoints(self):
        u = np.array([0.0, 0, 1.0])
        assert att.angle_between(u, u) == 0.0
        assert att.angle_between(u, -u) == pytest.approx(np.pi)

    def test_known_angle(self):
        # Construct a pair at exactly 26.7 deg (closest-approach off-nadir).
        th = np.deg2rad(26.7)
        u = np.array([0.0, 0, 1.0])
        v = np.array([np.sin(th), 0.0, np.cos(th)])
        assert att.angle_between(u, v) == pytest.approx(th, abs=1e-14)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            u, v = random_unit_vec(rng), random_unit_vec(rng)
            C = att.dcm_from_quat(random_unit_quat(rng))
            assert att.angle_between(C @ u, C @ v) == pytest.approx(
                att.angle_between(u, v), abs=1e-12)

    def test_clamps_dot(self):
        u = np.array([1.0, 0, 0])
        # Norm slightly above 1 should not make arccos blow up.
        assert att.angle_between(u, u * (1 + 5e-16)) == 0.0


class TestTriad:
    def test_identity_pairs(self):
        v1 = np.array([1.0, 0, 0])
        v2 = np.array([0.0, 1.0, 0])
        q = att.triad(v1, v2, v1, v2)
        assert att.quat_rotation_angle(q, att.IDENTITY_QUAT) < 1e-12

    def test_90deg_rotation_recovered(self):
        # v1 rotated 90 deg about the shared v2 axis.
        v2 = np.array([0.0, 0, 1.0])
        v1n = np.array([1.0, 0, 0])
        v1b = np.array([0.0, -1.0, 0])  # C(q) v1n for a 90 deg rotation about z
        q = att.triad(v1n, v2, v1b, v2)
        C = att.dcm_from_quat(q)
        assert np.max(np.abs(C @ v1n - v1b)) < 1e-12
        assert att.quat_rotation_angle(q, att.IDENTITY_QUAT) == pytest.approx(
            np.pi / 2, abs=1e-12)

    def test_primary_alignment_random(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            v1n, v2n = random_unit_vec(rng), random_unit_vec(rng)
            if abs(v1n @ v2n) > 0.99:
                continue
            C_true = att.dcm_from_quat(random_unit_quat(rng))
            q = att.triad(v1n, v2n, C_true @ v1n, C_true @ v2n)
            C = att.dcm_from_quat(q)
            assert np.linalg.norm(C @ v1n - C_true @ v1n) < 1e-12
            # Exact pairs: full attitude is recovered.
            assert np.max(np.abs(C - C_true)) < 1e-9

    def test_secondary_in_plane(self):
        rng = np.random.default_rng(10)
        v1n, v2n = random_unit_vec(rng), random_unit_vec(rng)
        v1b, v2b = random_unit_vec(rng), random_unit_vec(rng)
        q = att.triad(v1n, v2n, v1b, v2b)
        C = att.dcm_from_quat(q)
        mapped = C @ v2n
        # mapped v2 lies in span(v1b, v2b), on v2b's side of v1b.
        n = np.cross(v1b, v2b)
        assert abs(mapped @ n / np.linalg.norm(n)) < 1e-12
        assert mapped @ np.cross(n, v1b) > 0

    def test_parallel_pair_raises(self):
        v = np.array([1.0, 0, 0])
        with pytest.raises(att.DegenerateGeometryError):
            att.triad(v, v, v, np.array([0.0, 1.0, 0]))


class TestSlerp:
    def test_endpoints(self):
        rng = np.random.default_rng(11)
        qa, qb = random_unit_quat(rng), random_unit_quat(rng)
        assert att.quat_rotation_angle(att.slerp(qa, qb, 0.0), qa) < 1e-12
        assert att.quat_rotation_angle(att.slerp(qa, qb, 1.0), qb) < 1e-12

    def test_halfway_angle(self):
        qa = att.IDENTITY_QUAT
        qb = att.axis_angle_quat(np.array([1.0, 0, 0]), np.pi / 2)
        qm = att.slerp(qa, qb, 0.5)
        # Oracle: rotation angle via 2*arccos(q0).
        assert 2 * np.arccos(qm[0]) == pytest.approx(np.pi / 4, abs=1e-12)

    def test_shortest_arc_on_sign_flip(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            qa = random_unit_quat(rng)
            qb = random_unit_quat(rng)
            if qa @ qb > 0:
                qb = -qb
            total = att.quat_rotation_angle(qa, qb)
            path = sum(
                att.quat_rotation_angle(att.slerp(qa, qb, g),
                                        att.slerp(qa, qb, g + 0.1))
                for g in np.arange(0.0, 0.95, 0.1)
            )
            assert path <= np.pi + 1e-9
            assert path == pytest.approx(total, abs=1e-8)

    def test_constant_angular_speed(self):
        rng = np.random.default_rng(13)
        qa, qb = random_unit_quat(rng), random_unit_quat(rng)
        total = att.quat_rotation_angle(qa, qb)
        d = 0.05
        for g in np.arange(0.0, 1.0 - d, 0.1):
            step = att.quat_rotation_angle(att.slerp(qa, qb, g), att.slerp(qa, qb, g + d))
            assert step == pytest.approx(d * total, abs=1e-9)

    def test_gamma_out_of_range(self):
        with pytest.raises(ValueError):
            att.slerp(att.IDENTITY_QUAT, att.IDENTITY_QUAT, 1.5)
