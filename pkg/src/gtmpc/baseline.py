"""Reference-tracking baseline controller.

Three stages: a geometric attitude reference (instrument boresight on the
target, residual roll freedom spent pushing the star tracker away from the
Sun), a rate-limiting quaternion shaper that bounds the per-step rotation
of the reference sequence, and a saturated quaternion-feedback inner loop.
The commanded motion respects the rate limit by construction; the
exclusion cones are deliberately not handled, which is the point of
comparing against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attitude import (check_unit_quat, quat_conj, quat_mul,
                       quat_rotation_angle, slerp, triad)
from .plant import BodyState

Array = np.ndarray


@dataclass
class ShaperState:
    """Previously applied rate-limited reference; seed with the initial
    attitude so the first step starts from where the spacecraft is."""

    q_ref_lim_prev: Array

    def __post_init__(self) -> None:
        self.q_ref_lim_prev = check_unit_quat(self.q_ref_lim_prev)


@dataclass
class BaselineGains:
    k_p: float = 0.02
    k_d: float = 0.2

    def __post_init__(self) -> None:
        if self.k_p <= 0.0 or self.k_d <= 0.0:
            raise ValueError("feedback gains must be positive")


def unconstrained_reference(v_trg_n: Array, v_sun_n: Array, v_ins_b: Array,
                            v_str_b: Array) -> Array:
    """Attitude placing the instrument boresight on the target with the
    star tracker rolled as far from the Sun as the remaining freedom
    allows (secondary pair: anti-Sun direction onto the tracker
    boresight). Raises DegenerateGeometryError when target and Sun are
    (anti)parallel; the caller holds the previous reference in that case.
    """
    return triad(v_trg_n, -np.asarray(v_sun_n, dtype=float), v_ins_b,
                 v_str_b)


def rate_limited_reference(state: ShaperState, q_ref: Array,
                           omega_max: float, ts: float) -> Array:
    """One shaper step: interpolate from the previous limited reference
    toward ``q_ref``, capping the step rotation at omega_max * ts."""
    alpha_max = omega_max * ts
    alpha_act = quat_rotation_angle(state.q_ref_lim_prev, q_ref)
    gamma = 1.0 if alpha_act <= alpha_max else alpha_max / alpha_act
    q_lim = slerp(state.q_ref_lim_prev, q_ref, gamma)
    state.q_ref_lim_prev = q_lim
    return q_lim


def rate_reference(q_lim_k: Array, q_lim_km1: Array, ts: float) -> Array:
    """Body-frame rate of the shaped reference from the finite difference
    of consecutive limited quaternions (small-angle form)."""
    if ts <= 0.0:
        raise ValueError("ts must be positive")
    q_rel = quat_mul(quat_conj(q_lim_km1), q_lim_k)
    if q_rel[0] < 0.0:
        q_rel = -q_rel
    return (2.0 / ts) * q_rel[1:]


def inner_loop(state: BodyState, q_ref_lim: Array, omega_ref: Array,
               gains: BaselineGains, u_max: float) -> Array:
    """Quaternion state feedback u = -K_p sign(qe0) qe_v - K_d (w - w_ref),
    saturated per axis. The sign factor avoids unwinding through the far
    hemisphere."""
    q_e = quat_mul(quat_conj(q_ref_lim), state.q)
    sign = 1.0 if q_e[0] >= 0.0 else -1.0
    u = (-gains.k_p * sign * q_e[1:]
         - gains.k_d * (state.omega - np.asarray(omega_ref, dtype=float)))
    return np.clip(u, -u_max, u_max)
