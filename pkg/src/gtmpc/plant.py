"""Ground-truth nonlinear rigid-body plant.

Rigid-body Euler equations plus quaternion kinematics, integrated with
classical RK4 at a fixed simulation substep (0.01 s in the nominal scenario).
External torque is composed of gravity gradient, a constant bias, and
optional zero-mean Gaussian torque noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attitude import dcm_from_quat, quat_matrix, quat_normalize

Array = np.ndarray


def check_inertia(J: Array) -> Array:
    """Validate a symmetric positive-definite inertia tensor."""
    J = np.asarray(J, dtype=float)
    if J.shape != (3, 3):
        raise ValueError(f"inertia tensor must be 3x3, got {J.shape}")
    if np.max(np.abs(J - J.T)) > 1e-12:
        raise ValueError("inertia tensor must be symmetric")
    if np.min(np.linalg.eigvalsh(J)) <= 0.0:
        raise ValueError("inertia tensor must be positive definite")
    return J


@dataclass
class BodyState:
    """Angular rate (rad/s, body frame) and scalar-first unit quaternion."""
    omega: Array
    q: Array

    def copy(self) -> "BodyState":
        return BodyState(self.omega.copy(), self.q.copy())


@dataclass
class DisturbanceConfig:
    gravity_gradient: bool = True
    constant_bias: Array = field(default_factory=lambda: np.zeros(3))  # N m
    torque_noise_std: float = 0.0  # N m, per axis

    def __post_init__(self):
        self.constant_bias = np.asarray(self.constant_bias, dtype=float)
        if self.torque_noise_std < 0.0:
            raise ValueError("torque_noise_std must be >= 0")


def state_derivative(omega: Array, q: Array, u: Array, l_ext: Array, J: Array,
                     J_inv: Array | None = None) -> tuple[Array, Array]:
    """Rigid-body dynamics:

        omega_dot = J^-1 (u + l_ext - omega x (J omega))
        q_dot     = 0.5 Q(q) (0, omega)
    """
    if J_inv is None:
        J_inv = np.linalg.inv(J)
    omega_dot = J_inv @ (u + l_ext - np.cross(omega, J @ omega))
    q_dot = 0.5 * quat_matrix(q) @ np.concatenate(([0.0], omega))
    return omega_dot, q_dot


def gravity_gradient_torque(q: Array, nadir_n: Array, mean_motion: float,
                            J: Array) -> Array:
    """Gravity-gradient torque 3 n^2 (c x (J c)), c = body-frame Earth direction.

    nadir_n is the inertial unit vector from spacecraft toward the Earth
    center; c = C(q) @ nadir_n.
    """
    c = dcm_from_quat(q) @ nadir_n
    return 3.0 * mean_motion**2 * np.cross(c, J @ c)


def rk4_step(state: BodyState, u: Array, dt: float, J: Array,
             disturbances: DisturbanceConfig | None = None,
             nadir_n: Array | None = None, mean_motion: float = 0.0,
             rng: np.random.Generator | None = None,
             J_inv: Array | None = None) -> BodyState:
    """One classical RK4 step; quaternion renormalized afterwards.

    Gravity gradient is re-evaluated at each RK4 stage from the stage
    quaternion (nadir direction held fixed over the substep); torque noise
    is sampled once per step and held constant.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if J_inv is None:
        J_inv = np.linalg.inv(J)

    bias = np.zeros(3)
    use_gg = False
    if disturbances is not None:
        bias = disturbances.constant_bias.copy()
        if disturbances.torque_noise_std > 0.0:
            if rng is None:
                raise ValueError("torque noise enabled but no rng supplied")
            bias = bias + rng.normal(0.0, disturbances.torque_noise_std, size=3)
        use_gg = disturbances.gravity_gradient and nadir_n is not None

    def deriv(omega: Array, q: Array) -> tuple[Array, Array]:
        l_ext = bias
        if use_gg:
            l_ext = bias + gravity_gradient_torque(
                quat_normalize(q), nadir_n, mean_motion, J)
        return state_derivative(omega, q, u, l_ext, J, J_inv=J_inv)

    w0, q0 = state.omega, state.q
    k1w, k1q = deriv(w0, q0)
    k2w, k2q = deriv(w0 + 0.5 * dt * k1w, q0 + 0.5 * dt * k1q)
    k3w, k3q = deriv(w0 + 0.5 * dt * k2w, q0 + 0.5 * dt * k2q)
    k4w, k4q = deriv(w0 + dt * k3w, q0 + dt * k3q)

    omega = w0 + (dt / 6.0) * (k1w + 2 * k2w + 2 * k3w + k4w)
    q = q0 + (dt / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
    return BodyState(omega, quat_normalize(q))
