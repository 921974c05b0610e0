"""Condensed receding-horizon tracking controller.

At each control step the predicted states of the linearized attitude model
are eliminated, leaving a dense QP over the stacked torque sequence and
the feasibility slacks. Decision vector layout for horizon N:

    p = (u_0 .. u_{N-1}, s_w0 .. s_w{N-1}, s_sun, s_nadir) in R^{N(3+3+2)}

with per-step rate slack s_wk in R^3 shared by the upper and lower rate
rows, and scalar per-step cone slacks. Inequality rows are ordered: rate
upper (3N), rate lower (3N), sun cone (N), nadir cone (N); torque limits
and slack non-negativity are box constraints. Rows are written for
k = 0..N-1, so the k = 0 rows are constant in the inputs and feasible only
through their slack when the current state already violates a bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qpsolver
from .linearizer import N_STATE, LinearizedModel

Array = np.ndarray

N_INPUT = 3
SLACK_PER_STEP = 5


def _weight_block(name: str, q: Array) -> Array:
    q = np.asarray(q, dtype=float)
    if q.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got {q.shape}")
    scale = max(1.0, float(np.max(np.abs(q))))
    if np.max(np.abs(q - q.T)) > 1e-12 * scale:
        raise ValueError(f"{name} must be symmetric")
    if float(np.min(np.linalg.eigvalsh(q))) < -1e-9 * scale:
        raise ValueError(f"{name} must be positive semidefinite")
    return q


@dataclass
class MpcWeights:
    """Objective weights; the defaults are the closed-loop tuning used by
    the simulation scenarios."""

    w_p: float = 100.0
    q_omega: Array = field(default_factory=lambda: 0.05 * np.eye(3))
    q_domega: Array = field(default_factory=lambda: np.eye(3))
    q_du: Array = field(default_factory=lambda: np.eye(3))
    w_s: float = 1.0e9

    def __post_init__(self) -> None:
        if self.w_p < 0.0 or self.w_s < 0.0:
            raise ValueError("scalar weights must be nonnegative")
        self.q_omega = _weight_block("q_omega", self.q_omega)
        self.q_domega = _weight_block("q_domega", self.q_domega)
        self.q_du = _weight_block("q_du", self.q_du)


@dataclass
class Limits:
    """Per-axis rate and torque limits plus exclusion-cone half-angles."""

    omega_max: float = np.deg2rad(3.0)
    u_max: float = 2.0e-3
    alpha_sun: float = np.deg2rad(45.0)
    alpha_nadir: float = np.deg2rad(89.0)

    def __post_init__(self) -> None:
        if self.omega_max <= 0.0 or self.u_max <= 0.0:
            raise ValueError("rate and torque limits must be positive")
        for a in (self.alpha_sun, self.alpha_nadir):
            if not 0.0 < a < np.pi:
                raise ValueError("exclusion half-angles must lie in (0, pi)")


@dataclass
class QpProblem:
    """Dense QP data over p = (U, s_w, s_sun, s_nadir).

    ``cost_offset`` carries the constant cost terms dropped from the QP so
    diagnostics can report the full objective value.
    """

    P: Array
    g: Array
    a_ineq: Array
    b: Array
    p_min: Array
    p_max: Array
    horizon: int
    cost_offset: float = 0.0

    def __post_init__(self) -> None:
        n = self.horizon * (N_INPUT + SLACK_PER_STEP)
        if self.P.shape != (n, n) or self.g.shape != (n,):
            raise ValueError("cost dimensions inconsistent with horizon")
        if (self.a_ineq.ndim != 2 or self.a_ineq.shape[1] != n
                or self.b.shape != (self.a_ineq.shape[0],)):
            raise ValueError("constraint dimensions inconsistent")
        if self.p_min.shape != (n,) or self.p_max.shape != (n,):
            raise ValueError("bound dimensions inconsistent")


@dataclass
class MpcSolution:
    """First input plus the full solution for diagnostics and warm starts."""

    u0: Array
    u_seq: Array
    s_omega: Array
    s_sun: Array
    s_nadir: Array
    qp_iterations: int
    status: str
    objective: float
    p: Array


def pointing_cost_term(w_p: float, y_map: Array,
                       y_const: Array) -> tuple[Array, Array, float]:
    """Contribution of w_p * sum_k (y_k - 1)^2 for stacked affine outputs
    y_k = y_map[k] @ U + y_const[k].

    Returns (hessian, gradient, constant) in the 1/2 U^T P U + g^T U + c
    convention.
    """
    n_u = y_map.shape[1]
    if w_p == 0.0:
        return np.zeros((n_u, n_u)), np.zeros(n_u), 0.0
    e = np.asarray(y_const, dtype=float) - 1.0
    return (2.0 * w_p * (y_map.T @ y_map),
            2.0 * w_p * (y_map.T @ e),
            w_p * float(e @ e))


def _stage_quadratic(q_blk: Array, v_map: Array,
                     v_const: Array) -> tuple[Array, Array, float]:
    # sum_k v_k^T Q v_k for v stacked in 3-blocks, v = v_map @ U + v_const
    n_steps = v_const.shape[0] // 3
    q_big = np.kron(np.eye(n_steps), q_blk)
    qm = q_big @ v_map
    qc = q_big @ v_const
    return 2.0 * (v_map.T @ qm), 2.0 * (v_map.T @ qc), float(v_const @ qc)


def _check_vec(name: str, v: Array, size: int) -> Array:
    v = np.asarray(v, dtype=float)
    if v.shape != (size,):
        raise ValueError(f"{name} must have shape ({size},), got {v.shape}")
    return v


def build_problem(dx0: Array, model: LinearizedModel, d_u_hat: Array,
                  d_y_hat: Array, omega_prev: Array, u_prev: Array,
                  weights: MpcWeights, limits: Limits,
                  horizon: int) -> QpProblem:
    """Condense the tracking problem for one control step.

    ``dx0`` is the deviation of the state estimate from the operating
    point (rate part equals the estimated rate; quaternion part should be
    near zero since the model is relinearized each step). ``d_u_hat`` and
    ``d_y_hat`` are the estimated input and output disturbances, held
    constant over the horizon. ``omega_prev``/``u_prev`` anchor the first
    rate- and input-increment penalties.
    """
    n_h = int(horizon)
    if n_h < 1:
        raise ValueError("horizon must be >= 1")
    dx0 = _check_vec("dx0", dx0, N_STATE)
    d_u_hat = _check_vec("d_u_hat", d_u_hat, 3)
    d_y_hat = _check_vec("d_y_hat", d_y_hat, 3)
    omega_prev = _check_vec("omega_prev", omega_prev, 3)
    u_prev = _check_vec("u_prev", u_prev, 3)
    if model.h_trg.shape[0] < n_h:
        raise ValueError("model horizon shorter than requested")

    n_u = N_INPUT * n_h
    n = n_u + SLACK_PER_STEP * n_h
    a_d, b_d = model.a_d, model.b_d

    # state elimination: dx_k = f_k dx0 + t_k (U + d_tile)
    d_tile = np.tile(d_u_hat, n_h)
    rate_map = np.zeros((3 * n_h, n_u))
    rate_const = np.zeros(3 * n_h)
    y_map = np.zeros((3, n_h, n_u))
    y_const = np.zeros((3, n_h))
    h_rows = (model.h_trg, model.h_sun, model.h_nadir)
    c_bars = (model.cbar_trg, model.cbar_sun, model.cbar_nadir)
    t_k = np.zeros((N_STATE, n_u))
    f_k = np.eye(N_STATE)
    for k in range(n_h):
        const_k = f_k @ dx0 + t_k @ d_tile
        rate_map[3 * k:3 * k + 3] = t_k[:3]
        rate_const[3 * k:3 * k + 3] = const_k[:3]
        for i in range(3):
            y_map[i, k] = h_rows[i][k] @ t_k
            y_const[i, k] = (float(h_rows[i][k] @ const_k)
                             + c_bars[i][k] + d_y_hat[i])
        if k + 1 < n_h:
            t_k = a_d @ t_k
            t_k[:, 3 * k:3 * k + 3] += b_d
            f_k = a_d @ f_k

    P = np.zeros((n, n))
    g = np.zeros(n)
    blk, gv, offset = pointing_cost_term(weights.w_p, y_map[0], y_const[0])
    P[:n_u, :n_u] += blk
    g[:n_u] += gv

    blk, gv, c = _stage_quadratic(weights.q_omega, rate_map, rate_const)
    P[:n_u, :n_u] += blk
    g[:n_u] += gv
    offset += c

    # rate increments; the k = 0 increment is anchored at omega_prev and
    # constant in U
    drate_map = rate_map.copy()
    drate_map[3:] -= rate_map[:-3]
    drate_const = rate_const.copy()
    drate_const[3:] -= rate_const[:-3]
    drate_const[:3] = dx0[:3] - omega_prev
    blk, gv, c = _stage_quadratic(weights.q_domega, drate_map, drate_const)
    P[:n_u, :n_u] += blk
    g[:n_u] += gv
    offset += c

    du_map = np.eye(n_u)
    idx = np.arange(n_u - 3)
    du_map[idx + 3, idx] -= 1.0
    du_const = np.zeros(n_u)
    du_const[:3] = -u_prev
    blk, gv, c = _stage_quadratic(weights.q_du, du_map, du_const)
    P[:n_u, :n_u] += blk
    g[:n_u] += gv
    offset += c

    sl = np.arange(n_u, n)
    P[sl, sl] = 2.0 * weights.w_s
    P = 0.5 * (P + P.T)

    m_rows = 8 * n_h
    a_ineq = np.zeros((m_rows, n))
    b = np.empty(m_rows)
    rows_rate = np.arange(3 * n_h)
    a_ineq[:3 * n_h, :n_u] = rate_map
    a_ineq[rows_rate, n_u + rows_rate] = -1.0
    b[:3 * n_h] = limits.omega_max - rate_const
    a_ineq[3 * n_h:6 * n_h, :n_u] = -rate_map
    a_ineq[3 * n_h + rows_rate, n_u + rows_rate] = -1.0
    b[3 * n_h:6 * n_h] = limits.omega_max + rate_const
    rows_step = np.arange(n_h)
    for i, (r0, alpha) in enumerate(((6 * n_h, limits.alpha_sun),
                                     (7 * n_h, limits.alpha_nadir))):
        a_ineq[r0:r0 + n_h, :n_u] = y_map[i + 1]
        a_ineq[r0 + rows_step, n_u + (3 + i) * n_h + rows_step] = -1.0
        b[r0:r0 + n_h] = np.cos(alpha) - y_const[i + 1]

    p_min = np.concatenate((np.full(n_u, -limits.u_max),
                            np.zeros(n - n_u)))
    p_max = np.concatenate((np.full(n_u, limits.u_max),
                            np.full(n - n_u, np.inf)))
    return QpProblem(P, g, a_ineq, b, p_min, p_max, n_h, offset)


def solve_step(problem: QpProblem,
               options: qpsolver.QpOptions | None = None,
               warm_start: Array | None = None) -> MpcSolution:
    """Solve the condensed QP and unpack the first input and slacks."""
    sol = qpsolver.solve(problem.P, problem.g, problem.a_ineq, problem.b,
                         problem.p_min, problem.p_max, options=options,
                         warm_start=warm_start)
    n_h = problem.horizon
    n_u = N_INPUT * n_h
    u_seq = sol.p[:n_u].reshape(n_h, 3)
    s_omega = sol.p[n_u:n_u + 3 * n_h].reshape(n_h, 3)
    s_sun = sol.p[n_u + 3 * n_h:n_u + 4 * n_h].copy()
    s_nadir = sol.p[n_u + 4 * n_h:].copy()
    return MpcSolution(u0=u_seq[0].copy(), u_seq=u_seq, s_omega=s_omega,
                       s_sun=s_sun, s_nadir=s_nadir,
                       qp_iterations=sol.iterations, status=sol.status,
                       objective=sol.objective + problem.cost_offset,
                       p=sol.p)
