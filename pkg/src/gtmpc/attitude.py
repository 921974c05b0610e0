"""Quaternion and rotation-geometry primitives shared by the whole suite.

All quaternions are scalar-first unit quaternions q = (q0, q1, q2, q3) stored
as numpy arrays of shape (4,). The direction cosine matrix C(q) maps
inertial-frame vectors into the body frame, v_B = C(q) @ v_N.

Everything here is pure and stateless.
"""

from __future__ import annotations

import numpy as np

Array = np.ndarray

QUAT_NORM_TOL = 1e-9
UNIT_VEC_TOL = 1e-12

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


class DegenerateGeometryError(ValueError):
    """Raised when input geometry is too close to singular (parallel vectors)."""


def check_unit_quat(q: Array, tol: float = QUAT_NORM_TOL) -> Array:
    """Validate that q is a unit quaternion within tol; returns it as float64."""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"quaternion must have shape (4,), got {q.shape}")
    n = np.linalg.norm(q)
    if abs(n - 1.0) > tol:
        raise ValueError(f"quaternion norm {n} deviates from 1 beyond tol {tol}")
    return q


def unit_vector(v: Array) -> Array:
    """Normalize v to a unit 3-vector; rejects near-zero input."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero vector")
    return v / n


def quat_normalize(q: Array) -> Array:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def quat_matrix(q: Array) -> Array:
    """4x4 left-multiplication matrix Q(q), so that q ⊗ p = Q(q) @ p.

    Orthogonal for unit q. The quaternion kinematics read
    q_dot = 0.5 * Q(q) @ (0, omega).
    """
    q0, q1, q2, q3 = np.asarray(q, dtype=float)
    return np.array([
        [q0, -q1, -q2, -q3],
        [q1, q0, -q3, q2],
        [q2, q3, q0, -q1],
        [q3, -q2, q1, q0],
    ])


def quat_mul(qa: Array, qb: Array) -> Array:
    """Hamilton product qa ⊗ qb, implemented through quat_matrix."""
    return quat_matrix(qa) @ np.asarray(qb, dtype=float)


def quat_conj(q: Array) -> Array:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def skew(a: Array) -> Array:
    """Cross-product matrix: skew(a) @ b == a x b."""
    ax, ay, az = np.asarray(a, dtype=float)
    return np.array([
        [0.0, -az, ay],
        [az, 0.0, -ax],
        [-ay, ax, 0.0],
    ])


def dcm_from_quat(q: Array) -> Array:
    """Direction cosine matrix C(q) = (q0^2 - qv.qv) I + 2 qv qv^T + 2 q0 [qv]x.

    Maps inertial vectors to body frame. Raises if q is not unit within
    QUAT_NORM_TOL.
    """
    q = check_unit_quat(q)
    q0 = q[0]
    qv = q[1:]
    return (q0 * q0 - qv @ qv) * np.eye(3) + 2.0 * np.outer(qv, qv) + 2.0 * q0 * skew(qv)


def quat_from_dcm(C: Array) -> Array:
    """Unit quaternion such that dcm_from_quat(q) == C (Shepperd's method).

    Returned with q0 >= 0.
    """
    C = np.asarray(C, dtype=float)
    tr = np.trace(C)
    # Pick the largest of the four squared components for numerical safety.
    cand = np.array([tr, C[0, 0], C[1, 1], C[2, 2]])
    i = int(np.argmax(cand))
    if i == 0:
        q0 = 0.5 * np.sqrt(1.0 + tr)
        f = 0.25 / q0
        q = np.array([q0,
                      f * (C[2, 1] - C[1, 2]),
                      f * (C[0, 2] - C[2, 0]),
                      f * (C[1, 0] - C[0, 1])])
    else:
        a = i - 1
        b = (a + 1) % 3
        c = (a + 2) % 3
        qa = 0.5 * np.sqrt(1.0 + C[a, a] - C[b, b] - C[c, c])
        f = 0.25 / qa
        q = np.zeros(4)
        q[0] = f * (C[c, b] - C[b, c])
        q[1 + a] = qa
        q[1 + b] = f * (C[b, a] + C[a, b])
        q[1 + c] = f * (C[c, a] + C[a, c])
    if q[0] < 0.0:
        q = -q
    return quat_normalize(q)


def angle_between(u: Array, v: Array) -> float:
    """Angle in [0, pi] between two unit vectors; dot clamped to [-1, 1]."""
    d = float(np.dot(u, v))
    return float(np.arccos(np.clip(d, -1.0, 1.0)))


def quat_rotation_angle(qa: Array, qb: Array) -> float:
    """Shortest rotation angle taking qa to qb, in [0, pi]."""
    d = abs(float(np.dot(qa, qb)))
    return 2.0 * float(np.arccos(np.clip(d, -1.0, 1.0)))


def axis_angle_quat(axis: Array, angle: float) -> Array:
    """Unit quaternion for a rotation of `angle` about unit `axis`."""
    axis = unit_vector(axis)
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis))


def triad(v1n: Array, v2n: Array, v1b: Array, v2b: Array) -> Array:
    """TRIAD attitude from two vector pairs (inertial v1n,v2n; body v1b,v2b).

    The returned q satisfies C(q) @ v1n == v1b exactly (primary alignment);
    v2 fixes the rotation about v1. Built from the orthonormal triads
    (v1, v1 x v2 / |.|, v1 x (v1 x v2) / |.|) in each frame.
    """
    v1n, v2n = unit_vector(v1n), unit_vector(v2n)
    v1b, v2b = unit_vector(v1b), unit_vector(v2b)
    for a, b in ((v1n, v2n), (v1b, v2b)):
        if abs(float(np.dot(a, b))) > 1.0 - 1e-9:
            raise DegenerateGeometryError("TRIAD vector pair is (anti)parallel")

    def frame(v1: Array, v2: Array) -> Array:
        t1 = v1
        t2 = unit_vector(np.cross(v1, v2))
        t3 = np.cross(t1, t2)
        return np.column_stack((t1, t2, t3))

    mb = frame(v1b, v2b)
    mn = frame(v1n, v2n)
    return quat_from_dcm(mb @ mn.T)


def slerp(qa: Array, qb: Array, gamma: float) -> Array:
    """Spherical linear interpolation from qa toward qb by fraction gamma.

    Takes the shortest arc (sign of qb flipped first if qa.qb < 0). The
    rotation angle from qa to the result is gamma times the qa->qb angle.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"slerp fraction must be in [0, 1], got {gamma}")
    qa = np.asarray(qa, dtype=float)
    qb = np.asarray(qb, dtype=float)
    d = float(np.dot(qa, qb))
    if d < 0.0:
        qb = -qb
        d = -d
    d = min(d, 1.0)
    theta = np.arccos(d)
    if theta < 1e-9:
        # Nearly identical: linear blend, then renormalize.
        return quat_normalize((1.0 - gamma) * qa + gamma * qb)
    s = np.sin(theta)
    return quat_normalize(
        (np.sin((1.0 - gamma) * theta) / s) * qa + (np.sin(gamma * theta) / s) * qb
    )
