"""Discrete time-varying linear model about the latest attitude estimate.

State is x = (omega, q) in R^7, linearized about x_lp = (0, q_hat): zero
rate, raw quaternion coordinates with no unit-norm projection. The
continuous Jacobian is nilpotent (A_c^2 = 0), so the zero-order hold has
the exact closed forms A_d = I + Ts A_c and B_d = Ts B_c + Ts^2/2 A_c B_c.
Geometric outputs y = v_body^T C(q) v_inertial are linearized into one row
h_k per horizon step; the rate entries of every h are identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attitude import check_unit_quat, dcm_from_quat, quat_matrix
from .geometry import DirectionSet

Array = np.ndarray

N_STATE = 7
UNIT_TOL = 1e-9


@dataclass
class OperatingPoint:
    """Linearization point (0, q_hat)."""

    x_lp: Array

    def __post_init__(self) -> None:
        self.x_lp = np.asarray(self.x_lp, dtype=float)
        if self.x_lp.shape != (N_STATE,):
            raise ValueError("operating point must be a 7-vector")
        if np.any(self.x_lp[:3] != 0.0):
            raise ValueError("rate part of the operating point must be zero")
        check_unit_quat(self.x_lp[3:])


def operating_point(q_hat: Array) -> OperatingPoint:
    return OperatingPoint(np.concatenate((np.zeros(3), q_hat)))


@dataclass
class LinearizedModel:
    """One control step's model: shared (A_d, B_d), per-step output rows.

    Arrays h_* have shape (N, 7); cbar_* hold the shifted affine offsets
    (equal to the output value at the operating point), shape (N,).
    """

    a_d: Array
    b_d: Array
    h_trg: Array
    h_sun: Array
    h_nadir: Array
    cbar_trg: Array
    cbar_sun: Array
    cbar_nadir: Array
    x_lp: Array


def continuous_jacobians(q_hat: Array, J: Array) -> tuple[Array, Array]:
    """Jacobians of the rigid-body dynamics at (omega, q) = (0, q_hat).

    At zero rate the gyroscopic term has zero derivative, so A_c holds only
    the quaternion-kinematics sensitivity dq_dot/domega = 0.5 Q(q)[:, 1:4].
    """
    q_hat = check_unit_quat(q_hat)
    a_c = np.zeros((N_STATE, N_STATE))
    a_c[3:, :3] = 0.5 * quat_matrix(q_hat)[:, 1:]
    b_c = np.zeros((N_STATE, 3))
    b_c[:3, :] = np.linalg.inv(J)
    return a_c, b_c


def discretize_zoh(a_c: Array, b_c: Array, ts: float) -> tuple[Array, Array]:
    """Exact zero-order hold. Valid for any A_c, exact in closed form here
    because A_c is 2-step nilpotent (the series terminates)."""
    if ts <= 0.0:
        raise ValueError("ts must be positive")
    a_d = np.eye(N_STATE) + ts * a_c
    b_d = ts * b_c + 0.5 * ts**2 * (a_c @ b_c)
    return a_d, b_d


def output_row(v_body: Array, v_inertial: Array,
               q_hat: Array) -> tuple[Array, float, float]:
    """Linearize y = v_body^T C(q) v_inertial about q_hat.

    Returns (h, y_hat, c) with y ~= h^T x + c and c = y_hat - h^T x_lp.
    The derivative is taken with respect to the raw quaternion 4-vector.
    """
    q_hat = check_unit_quat(q_hat)
    v_body = np.asarray(v_body, dtype=float)
    v_inertial = np.asarray(v_inertial, dtype=float)
    for v in (v_body, v_inertial):
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise ValueError("direction vectors must be unit")
    q0 = q_hat[0]
    qv = q_hat[1:]
    y_hat = float(v_body @ dcm_from_quat(q_hat) @ v_inertial)
    bn = float(v_body @ v_inertial)
    h = np.zeros(N_STATE)
    h[3] = 2.0 * q0 * bn + 2.0 * float(v_body @ np.cross(qv, v_inertial))
    h[4:] = (-2.0 * bn * qv
             + 2.0 * float(qv @ v_inertial) * v_body
             + 2.0 * float(v_body @ qv) * v_inertial
             + 2.0 * q0 * np.cross(v_inertial, v_body))
    x_lp = np.concatenate((np.zeros(3), q_hat))
    c = y_hat - float(h @ x_lp)
    return h, y_hat, c


def linearize_step(q_hat: Array, J: Array, ts: float, dirs: DirectionSet,
                   v_ins_b: Array, v_str_b: Array) -> LinearizedModel:
    """Model for one control step: instrument row tracks the target, star
    tracker rows face the Sun and nadir exclusion cones."""
    a_c, b_c = continuous_jacobians(q_hat, J)
    a_d, b_d = discretize_zoh(a_c, b_c, ts)
    n = dirs.v_trg.shape[0]
    h_trg = np.empty((n, N_STATE))
    h_sun = np.empty((n, N_STATE))
    h_nadir = np.empty((n, N_STATE))
    cbar_trg = np.empty(n)
    cbar_sun = np.empty(n)
    cbar_nadir = np.empty(n)
    for k in range(n):
        h_trg[k], cbar_trg[k], _ = output_row(v_ins_b, dirs.v_trg[k], q_hat)
        h_sun[k], cbar_sun[k], _ = output_row(v_str_b, dirs.v_sun[k], q_hat)
        h_nadir[k], cbar_nadir[k], _ = output_row(v_str_b, dirs.v_nadir[k],
                                                  q_hat)
    x_lp = np.concatenate((np.zeros(3), q_hat))
    return LinearizedModel(a_d, b_d, h_trg, h_sun, h_nadir,
                           cbar_trg, cbar_sun, cbar_nadir, x_lp)
