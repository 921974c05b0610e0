"""Augmented-state estimator for offset-free tracking control.

A time-varying Kalman filter on z = (x, d_u, d_y): the seven-state
attitude model extended with a random-walk torque disturbance d_u acting
through the input map and a random-walk bias d_y on the three geometric
outputs. The measurement stacks the full state (star-tracker quaternion
plus gyro rates) with the raw geometric outputs, so the observation matrix
carries the current-step output linearization and is rebuilt every sample.

The filter runs in raw quaternion coordinates, consistent with the linear
model; the quaternion part of the estimate is renormalized after each
measurement update with the covariance left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .attitude import quat_normalize
from .linearizer import N_STATE

Array = np.ndarray

N_DIST_U = 3
N_DIST_Y = 3
N_AUG = N_STATE + N_DIST_U + N_DIST_Y
N_MEAS = N_STATE + N_DIST_Y


class InnovationSolveError(RuntimeError):
    """Innovation covariance could not be factorized."""


def _check_cov(name: str, mat: Array, size: int,
               positive_definite: bool = False) -> Array:
    m = np.asarray(mat, dtype=float)
    if m.shape != (size, size):
        raise ValueError(f"{name} must be {size}x{size}, got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > 1e-10 * scale:
        raise ValueError(f"{name} must be symmetric")
    ev_min = float(np.min(np.linalg.eigvalsh(m)))
    if positive_definite:
        if ev_min <= 0.0:
            raise ValueError(f"{name} must be positive definite")
    elif ev_min < -1e-10 * scale:
        raise ValueError(f"{name} must be positive semidefinite")
    return m


def _default_q_proc() -> Array:
    return np.diag(np.concatenate((np.full(3, 1e-8), np.full(4, 1e-10),
                                   np.full(3, 1e-12), np.full(3, 1e-10))))


def _default_r_meas() -> Array:
    return np.diag(np.concatenate((np.full(3, 1e-8), np.full(4, 1e-10),
                                   np.full(3, 1e-8))))


def _default_p0() -> Array:
    return np.diag(np.concatenate((np.full(3, 1e-4), np.full(4, 1e-4),
                                   np.full(3, 1e-8), np.full(3, 1e-6))))


@dataclass
class NoiseConfig:
    """Filter covariances. The defaults make the disturbance channels
    settle within tens of seconds at a 0.1 s sample time."""

    q_proc: Array = field(default_factory=_default_q_proc)
    r_meas: Array = field(default_factory=_default_r_meas)
    p0: Array = field(default_factory=_default_p0)

    def __post_init__(self) -> None:
        self.q_proc = _check_cov("q_proc", self.q_proc, N_AUG)
        self.r_meas = _check_cov("r_meas", self.r_meas, N_MEAS,
                                 positive_definite=True)
        self.p0 = _check_cov("p0", self.p0, N_AUG)


@dataclass
class AugmentedEstimate:
    """State, input-disturbance, and output-bias estimate with covariance."""

    z: Array
    P: Array

    def __post_init__(self) -> None:
        self.z = np.asarray(self.z, dtype=float)
        self.P = np.asarray(self.P, dtype=float)
        if self.z.shape != (N_AUG,) or self.P.shape != (N_AUG, N_AUG):
            raise ValueError("augmented estimate dimensions wrong")

    @property
    def x(self) -> Array:
        return self.z[:N_STATE]

    @property
    def d_u(self) -> Array:
        return self.z[N_STATE:N_STATE + N_DIST_U]

    @property
    def d_y(self) -> Array:
        return self.z[N_STATE + N_DIST_U:]


def build_augmented(a_d: Array, b_d: Array,
                    x_lp: Array) -> tuple[Array, Array, Array]:
    """Augmented prediction matrices: random-walk disturbance blocks and
    the affine term that pins the operating point."""
    if a_d.shape != (N_STATE, N_STATE) or b_d.shape != (N_STATE, 3):
        raise ValueError("model matrices have wrong shape")
    a_aug = np.eye(N_AUG)
    a_aug[:N_STATE, :N_STATE] = a_d
    a_aug[:N_STATE, N_STATE:N_STATE + N_DIST_U] = b_d
    b_aug = np.zeros((N_AUG, 3))
    b_aug[:N_STATE] = b_d
    c_aff = np.zeros(N_AUG)
    c_aff[:N_STATE] = (np.eye(N_STATE) - a_d) @ x_lp
    return a_aug, b_aug, c_aff


def build_observation(h_trg: Array, h_sun: Array, h_nadir: Array,
                      c_offsets: Array) -> tuple[Array, Array]:
    """Observation matrix for the stacked (state, outputs) measurement.

    ``c_offsets`` holds the current-step affine offsets of the three
    output linearizations, c = y_hat - h^T x_lp.
    """
    c_offsets = np.asarray(c_offsets, dtype=float)
    if c_offsets.shape != (3,):
        raise ValueError("c_offsets must be a 3-vector")
    c_aug = np.zeros((N_MEAS, N_AUG))
    c_aug[:N_STATE, :N_STATE] = np.eye(N_STATE)
    for i, h in enumerate((h_trg, h_sun, h_nadir)):
        h = np.asarray(h, dtype=float)
        if h.shape != (N_STATE,):
            raise ValueError("output rows must be 7-vectors")
        c_aug[N_STATE + i, :N_STATE] = h
        c_aug[N_STATE + i, N_STATE + N_DIST_U + i] = 1.0
    b = np.zeros(N_MEAS)
    b[N_STATE:] = c_offsets
    return c_aug, b


def predict(est: AugmentedEstimate, u: Array, a_aug: Array, b_aug: Array,
            c_aff: Array, q_proc: Array) -> AugmentedEstimate:
    z = a_aug @ est.z + b_aug @ u + c_aff
    P = a_aug @ est.P @ a_aug.T + q_proc
    return AugmentedEstimate(z, 0.5 * (P + P.T))


def update(est: AugmentedEstimate, y_meas: Array, c_aug: Array, b: Array,
           r_meas: Array) -> AugmentedEstimate:
    """Measurement update in Joseph form; quaternion renormalized after."""
    y_meas = np.asarray(y_meas, dtype=float)
    if y_meas.shape != (N_MEAS,):
        raise ValueError(f"measurement must be a {N_MEAS}-vector")
    innovation = y_meas - (c_aug @ est.z + b)
    s_mat = c_aug @ est.P @ c_aug.T + r_meas
    try:
        cf = scipy.linalg.cho_factor(s_mat, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        d = np.diag(s_mat)
        raise InnovationSolveError(
            "innovation covariance factorization failed "
            f"(diagonal range [{np.min(d):.3e}, {np.max(d):.3e}])") from exc
    gain = scipy.linalg.cho_solve(cf, c_aug @ est.P, check_finite=False).T
    z = est.z + gain @ innovation
    ikc = np.eye(N_AUG) - gain @ c_aug
    P = ikc @ est.P @ ikc.T + gain @ r_meas @ gain.T
    z[3:N_STATE] = quat_normalize(z[3:N_STATE])
    return AugmentedEstimate(z, 0.5 * (P + P.T))
