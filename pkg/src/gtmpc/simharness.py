"""Closed-loop executor: truth plant at the fine substep, controller and
estimator at the control period, one telemetry row per control step, run
metrics computed at the end.

The truth plant integrates the nonlinear rigid-body dynamics; the MPC path
relinearizes about the current attitude estimate every step and sees the
plant only through synthesized measurements (unless perfect_state is set).
The naive path runs the shaper plus inner loop directly on the true state
and performs no estimation. Telemetry always logs the true state, so the
constraint audit and pointing metrics are ground truth, not estimates.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baseline, mpc, observer
from .attitude import (DegenerateGeometryError, angle_between,
                       axis_angle_quat, dcm_from_quat, quat_from_dcm,
                       quat_normalize, triad, unit_vector)
from .geometry import (GroundTarget, OrbitConfig, horizon_directions,
                       nadir_direction, solve_scenario_phasing, sun_direction)
from .linearizer import linearize_step
from .mpc import Limits, MpcWeights
from .observer import AugmentedEstimate, NoiseConfig
from .plant import BodyState, DisturbanceConfig, check_inertia, rk4_step

Array = np.ndarray

TELEMETRY_HEADER = ("t, wx, wy, wz, q0, q1, q2, q3, ux, uy, uz, "
                    "theta_err_deg, y_sun, y_nadir, s_max, qp_iters, "
                    "qp_status")

POINTING_THRESHOLD_DEG = 1.0
SETTLING_WINDOW = 3.0

# audit tolerances on the true state
RATE_AUDIT_TOL = 1e-6
TORQUE_AUDIT_TOL = 1e-9
CONE_AUDIT_TOL = 1e-6

MAX_CONSECUTIVE_QP_FAILURES = 5


def _nominal_inertia() -> Array:
    return np.array([[0.1335, -0.0015, 0.0045],
                     [-0.0015, 0.1545, -0.0225],
                     [0.0045, -0.0225, 0.1065]])


@dataclass
class SpacecraftConfig:
    """Inertia tensor and the two body-frame boresights."""

    j_body: Array = field(default_factory=_nominal_inertia)
    v_ins_b: Array = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    v_str_b: Array = field(
        default_factory=lambda: np.array([0.0, 0.97, -0.23]))

    def __post_init__(self) -> None:
        self.j_body = check_inertia(self.j_body)
        self.v_ins_b = unit_vector(self.v_ins_b)
        self.v_str_b = unit_vector(self.v_str_b)


@dataclass
class ObserverConfig:
    """Estimator switches: ``perfect_state`` bypasses the filter and feeds
    the controller the true state with zero disturbance estimates (the
    default for scenario runs, which assess guidance and control, not
    estimation); ``measurement_noise`` corrupts synthesized measurements
    with Gaussian noise of covariance ``noise.r_meas``."""

    noise: NoiseConfig = field(default_factory=NoiseConfig)
    enabled: bool = True
    perfect_state: bool = True
    measurement_noise: bool = False


@dataclass
class ScenarioConfig:
    """One closed-loop run. ``plant_inertia``, when set, is used by the
    truth plant while the controller keeps ``spacecraft.j_body`` (the
    model-mismatch mechanism for perturbed campaigns).

    The back-off fields tighten only the limits handed to the MPC; the
    audit and telemetry keep the true limits. A plan that rides a bound
    exactly drifts past it between samples by the unmodeled one-step
    nonlinearity (gyroscopic coupling, and inertia mismatch when the
    plant is perturbed), so the controller plans to a slightly smaller
    box. rate_backoff is a fraction of omega_max sized for worst-case
    mismatch drift; cone_backoff is in cosine units.
    """

    orbit: OrbitConfig
    target: GroundTarget
    spacecraft: SpacecraftConfig = field(default_factory=SpacecraftConfig)
    limits: Limits = field(default_factory=Limits)
    weights: MpcWeights = field(default_factory=MpcWeights)
    controller: str = "mpc"
    duration: float = 200.0
    ts: float = 0.1
    t_sim: float = 0.01
    seed: int = 0
    horizon: int = 50
    disturbances: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    observer: ObserverConfig = field(default_factory=ObserverConfig)
    plant_inertia: Array | None = None
    rate_backoff: float = 0.02
    cone_backoff: float = 1e-4

    def __post_init__(self) -> None:
        if self.controller not in ("mpc", "naive"):
            raise ValueError(f"unknown controller '{self.controller}'")
        if self.duration < 0.0:
            raise ValueError("duration must be nonnegative")
        if self.ts <= 0.0 or self.t_sim <= 0.0:
            raise ValueError("sampling periods must be positive")
        ratio = self.ts / self.t_sim
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("ts must be an integer multiple of t_sim")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.plant_inertia is not None:
            self.plant_inertia = check_inertia(self.plant_inertia)
        if not 0.0 <= self.rate_backoff < 1.0:
            raise ValueError("rate_backoff must be in [0, 1)")
        if self.cone_backoff < 0.0:
            raise ValueError("cone_backoff must be nonnegative")

    def controller_limits(self) -> Limits:
        """Limits the MPC plans to: true limits shrunk by the back-offs."""
        lim = self.limits
        return Limits(
            omega_max=lim.omega_max * (1.0 - self.rate_backoff),
            u_max=lim.u_max,
            alpha_sun=float(np.arccos(np.clip(
                np.cos(lim.alpha_sun) - self.cone_backoff, -1.0, 1.0))),
            alpha_nadir=float(np.arccos(np.clip(
                np.cos(lim.alpha_nadir) - self.cone_backoff, -1.0, 1.0))))

    @property
    def substeps(self) -> int:
        return int(round(self.ts / self.t_sim))

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.ts))


@dataclass
class ViolationCounts:
    rate: int = 0
    torque: int = 0
    sun: int = 0
    nadir: int = 0

    @property
    def total(self) -> int:
        return self.rate + self.torque + self.sun + self.nadir


@dataclass
class RunMetrics:
    """Post-settling pointing statistics are None when the run never
    settles (or the trace is empty)."""

    settling_time: float | None
    mean_pointing_error_post_settling: float | None
    max_pointing_error: float | None
    constraint_violations: ViolationCounts
    qp_iters_mean: float
    qp_iters_max: int
    both_zones_active: bool
    qp_failures: int = 0
    aborted: bool = False

    def as_dict(self) -> dict:
        """Flat key-value view used by the report writers."""
        return {
            "settling_time_s": self.settling_time,
            "mean_pointing_error_post_settling_deg":
                self.mean_pointing_error_post_settling,
            "max_pointing_error_deg": self.max_pointing_error,
            "violations_rate": self.constraint_violations.rate,
            "violations_torque": self.constraint_violations.torque,
            "violations_sun": self.constraint_violations.sun,
            "violations_nadir": self.constraint_violations.nadir,
            "qp_iters_mean": self.qp_iters_mean,
            "qp_iters_max": self.qp_iters_max,
            "both_zones_active": self.both_zones_active,
            "qp_failures": self.qp_failures,
            "aborted": self.aborted,
        }


@dataclass
class Telemetry:
    """Column arrays, one entry per control step; true plant state."""

    t: Array
    omega: Array
    q: Array
    u: Array
    theta_err_deg: Array
    y_sun: Array
    y_nadir: Array
    s_max: Array
    qp_iters: Array
    qp_status: list

    @classmethod
    def empty(cls) -> "Telemetry":
        return cls(np.empty(0), np.empty((0, 3)), np.empty((0, 4)),
                   np.empty((0, 3)), np.empty(0), np.empty(0), np.empty(0),
                   np.empty(0), np.empty(0, dtype=int), [])

    def write_csv(self, path) -> None:
        lines = [TELEMETRY_HEADER]
        for i in range(self.t.size):
            vals = [self.t[i], *self.omega[i], *self.q[i], *self.u[i],
                    self.theta_err_deg[i], self.y_sun[i], self.y_nadir[i],
                    self.s_max[i]]
            row = ", ".join(repr(float(v)) for v in vals)
            lines.append(f"{row}, {int(self.qp_iters[i])}, "
                         f"{self.qp_status[i]}")
        Path(path).write_text("\n".join(lines) + "\n")


def true_outputs(q: Array, v_trg_n: Array, v_sun_n: Array, v_nadir_n: Array,
                 v_ins_b: Array, v_str_b: Array) -> tuple[float, float, float]:
    """Nonlinear cosine outputs evaluated on the true attitude."""
    c = dcm_from_quat(q)
    return (float(v_ins_b @ c @ v_trg_n),
            float(v_str_b @ c @ v_sun_n),
            float(v_str_b @ c @ v_nadir_n))


def _minimal_rotation(v_from: Array, v_to: Array) -> Array:
    """DCM of the smallest rotation taking unit v_from onto unit v_to."""
    axis = np.cross(v_from, v_to)
    s = float(np.linalg.norm(axis))
    c = float(v_from @ v_to)
    if s < 1e-12:
        if c > 0.0:
            return np.eye(3)
        # antiparallel: rotate pi about any perpendicular
        e = np.zeros(3)
        e[int(np.argmin(np.abs(v_from)))] = 1.0
        axis = unit_vector(np.cross(v_from, e))
        return dcm_from_quat(axis_angle_quat(axis, np.pi))
    return dcm_from_quat(axis_angle_quat(axis / s, np.arctan2(s, c)))


def initial_attitude(config: ScenarioConfig, n_scan: int = 1441) -> Array:
    """Nadir-pointing attitude at t = 0 with the star-tracker azimuth
    chosen to maximize the worst exclusion-cone margin over the pass.

    The instrument boresight on nadir leaves one rotational degree of
    freedom. For each candidate roll the margin is evaluated at the start
    attitude, along the minimal-rotation slew onto the target line, and
    across the tracking arc under a roll-frozen transport: the attitude is
    carried along by the smallest rotation that follows the moving target
    direction, which is the roll the optimizer has no incentive to leave.
    The grid keeps the roll whose smallest margin is largest. Raises
    DegenerateGeometryError if no roll clears both cones.
    """
    sc = config.spacecraft
    v_nadir0 = nadir_direction(0.0, config.orbit)
    v_sun0 = sun_direction(0.0, config.orbit.epoch)
    secondary = v_sun0
    if abs(float(secondary @ v_nadir0)) > 1.0 - 1e-6:
        secondary = np.array([0.0, 0.0, 1.0])
        if abs(float(secondary @ v_nadir0)) > 1.0 - 1e-6:
            secondary = np.array([1.0, 0.0, 0.0])
    c_base = dcm_from_quat(triad(v_nadir0, secondary, sc.v_ins_b,
                                 sc.v_str_b))

    # pass geometry at 1 s cadence, t = 0 sample always present
    n_pass = max(int(round(config.duration)) + 1, 1)
    dirs = horizon_directions(0.0, n_pass, 1.0, config.orbit, config.target)
    # transport T_k accumulates the minimal target-following rotations on
    # the inertial side: C_k = C_0 @ T_k keeps the boresight on target
    t_k = np.empty((n_pass, 3, 3))
    t_k[0] = np.eye(3)
    for k in range(n_pass - 1):
        r_step = _minimal_rotation(dirs.v_trg[k], dirs.v_trg[k + 1])
        t_k[k + 1] = t_k[k] @ r_step.T
    # directions seen through the transport, so only C_0 varies with roll
    w_sun = np.einsum("kij,kj->ki", t_k, dirs.v_sun)
    w_nadir = np.einsum("kij,kj->ki", t_k, dirs.v_nadir)

    alpha_sun = config.limits.alpha_sun
    alpha_nadir = config.limits.alpha_nadir
    slew_fracs = np.linspace(0.0, 1.0, 9)

    def margin_of(cos_sun, cos_nadir):
        m_sun = np.arccos(np.clip(cos_sun, -1.0, 1.0)) - alpha_sun
        m_nad = np.arccos(np.clip(cos_nadir, -1.0, 1.0)) - alpha_nadir
        return min(float(np.min(m_sun)), float(np.min(m_nad)))

    best_margin = -np.inf
    best_c = c_base
    for psi in np.linspace(0.0, 2.0 * np.pi, n_scan, endpoint=False):
        c0 = dcm_from_quat(axis_angle_quat(sc.v_ins_b, psi)) @ c_base
        # slew: smallest body rotation pulling the target line onto the
        # boresight, sampled against the t = 0 cone directions
        b0 = c0 @ dirs.v_trg[0]
        axis = np.cross(b0, sc.v_ins_b)
        s_ax = float(np.linalg.norm(axis))
        theta = float(np.arctan2(s_ax, float(b0 @ sc.v_ins_b)))
        margin = np.inf
        if s_ax < 1e-12:
            c_track0 = c0 if theta < 0.5 * np.pi else None
            if c_track0 is None:
                continue  # target dead astern of the boresight: skip roll
        else:
            axis = axis / s_ax
            for lam in slew_fracs:
                c_lam = dcm_from_quat(
                    axis_angle_quat(axis, lam * theta)) @ c0
                margin = min(margin, margin_of(
                    (c_lam @ dirs.v_sun[0]) @ sc.v_str_b,
                    (c_lam @ dirs.v_nadir[0]) @ sc.v_str_b))
            c_track0 = dcm_from_quat(axis_angle_quat(axis, theta)) @ c0
        if margin <= best_margin:
            continue
        margin = min(margin, margin_of(
            (w_sun @ c_track0.T) @ sc.v_str_b,
            (w_nadir @ c_track0.T) @ sc.v_str_b))
        if margin > best_margin:
            best_margin = margin
            best_c = c0
    if best_margin <= 0.0:
        raise DegenerateGeometryError(
            "no star-tracker azimuth clears both exclusion cones over "
            "the pass")
    return quat_from_dcm(best_c)


def settling_time(t: Array, err_deg: Array,
                  threshold_deg: float = POINTING_THRESHOLD_DEG,
                  window: float = SETTLING_WINDOW) -> float | None:
    """First time the error stays below the threshold for a full window.

    Expects a uniformly sampled trace; returns None if the trace is too
    short to contain one window or never settles.
    """
    t = np.asarray(t, dtype=float)
    err_deg = np.asarray(err_deg, dtype=float)
    n = t.size
    if n < 2:
        return None
    dt = t[1] - t[0]
    w = int(round(window / dt))
    if n < w + 1:
        return None
    below = err_deg < threshold_deg
    ok = np.lib.stride_tricks.sliding_window_view(below, w + 1).all(axis=1)
    idx = np.flatnonzero(ok)
    return float(t[idx[0]]) if idx.size else None


def constraint_audit(tel: Telemetry, limits: Limits) -> ViolationCounts:
    """Count control steps whose true state breaches each constraint."""
    rate = int(np.sum(np.any(
        np.abs(tel.omega) > limits.omega_max + RATE_AUDIT_TOL, axis=1)))
    torque = int(np.sum(np.any(
        np.abs(tel.u) > limits.u_max + TORQUE_AUDIT_TOL, axis=1)))
    sun = int(np.sum(
        tel.y_sun > np.cos(limits.alpha_sun) + CONE_AUDIT_TOL))
    nadir = int(np.sum(
        tel.y_nadir > np.cos(limits.alpha_nadir) + CONE_AUDIT_TOL))
    return ViolationCounts(rate, torque, sun, nadir)


def _longest_true_run(mask: Array) -> int:
    best = cur = 0
    for m in mask:
        cur = cur + 1 if m else 0
        best = max(best, cur)
    return best


def both_zones_active(tel: Telemetry, limits: Limits, tol: float = 1e-4,
                      min_duration: float = 1.0) -> bool:
    """True when both cosine outputs sit within tol of their bounds
    simultaneously for at least min_duration of consecutive steps."""
    if tel.t.size < 2:
        return False
    dt = tel.t[1] - tel.t[0]
    mask = ((tel.y_sun >= np.cos(limits.alpha_sun) - tol)
            & (tel.y_nadir >= np.cos(limits.alpha_nadir) - tol))
    needed = max(1, int(np.ceil(min_duration / dt - 1e-12)))
    return _longest_true_run(mask) >= needed


def exclusion_active(tel: Telemetry, limits: Limits,
                     tol: float = 1e-3) -> bool:
    """True when either exclusion output comes within tol of its bound at
    any step."""
    return bool(np.any(tel.y_sun >= np.cos(limits.alpha_sun) - tol)
                or np.any(tel.y_nadir >= np.cos(limits.alpha_nadir) - tol))


def compute_metrics(tel: Telemetry, limits: Limits, aborted: bool = False,
                    qp_failures: int = 0) -> RunMetrics:
    counts = constraint_audit(tel, limits)
    if tel.t.size == 0:
        return RunMetrics(None, None, None, counts, 0.0, 0, False,
                          qp_failures, aborted)
    st = settling_time(tel.t, tel.theta_err_deg)
    mean_e = max_e = None
    if st is not None:
        post = tel.theta_err_deg[tel.t >= st]
        mean_e = float(np.mean(post))
        max_e = float(np.max(post))
    return RunMetrics(
        settling_time=st,
        mean_pointing_error_post_settling=mean_e,
        max_pointing_error=max_e,
        constraint_violations=counts,
        qp_iters_mean=float(np.mean(tel.qp_iters)),
        qp_iters_max=int(np.max(tel.qp_iters)),
        both_zones_active=both_zones_active(tel, limits),
        qp_failures=qp_failures,
        aborted=aborted,
    )


def run(config: ScenarioConfig) -> tuple[Telemetry, RunMetrics]:
    """Execute one closed-loop scenario.

    Per control step: evaluate the direction horizon, linearize about the
    attitude estimate, update the filter (or take the true state), solve
    the MPC or the naive law, log telemetry, time-update the filter, and
    integrate the plant over the substeps. A failed QP holds the previous
    input; more than MAX_CONSECUTIVE_QP_FAILURES in a row aborts the run.
    """
    sc = config.spacecraft
    j_ctrl = sc.j_body
    j_plant = config.plant_inertia if config.plant_inertia is not None \
        else j_ctrl
    j_plant_inv = np.linalg.inv(j_plant)
    rng = np.random.default_rng(config.seed)

    n_steps = config.n_steps
    substeps = config.substeps
    is_mpc = config.controller == "mpc"
    obs_cfg = config.observer
    use_observer = is_mpc and obs_cfg.enabled and not obs_cfg.perfect_state
    noise_std = np.sqrt(np.diag(obs_cfg.noise.r_meas))
    ctrl_limits = config.controller_limits()

    q0 = initial_attitude(config)
    state = BodyState(np.zeros(3), q0.copy())
    u_prev = np.zeros(3)
    warm = None
    est = None
    if use_observer:
        z0 = np.concatenate((np.zeros(3), q0, np.zeros(6)))
        est = AugmentedEstimate(z0, obs_cfg.noise.p0.copy())
    shaper = baseline.ShaperState(q0.copy())
    gains = baseline.BaselineGains()
    last_q_ref = q0.copy()

    t_log = np.empty(n_steps)
    w_log = np.empty((n_steps, 3))
    q_log = np.empty((n_steps, 4))
    u_log = np.empty((n_steps, 3))
    err_log = np.empty(n_steps)
    ysun_log = np.empty(n_steps)
    ynad_log = np.empty(n_steps)
    smax_log = np.empty(n_steps)
    iters_log = np.zeros(n_steps, dtype=int)
    status_log = []

    consecutive_failures = 0
    qp_failures = 0
    aborted = False
    n_done = 0

    for k in range(n_steps):
        t = k * config.ts
        dirs = horizon_directions(t, config.horizon if is_mpc else 1,
                                  config.ts, config.orbit, config.target)
        y_trg, y_sun, y_nadir = true_outputs(
            state.q, dirs.v_trg[0], dirs.v_sun[0], dirs.v_nadir[0],
            sc.v_ins_b, sc.v_str_b)
        theta_err = np.degrees(np.arccos(np.clip(y_trg, -1.0, 1.0)))

        if is_mpc:
            if use_observer:
                q_lin = quat_normalize(est.z[3:7])
            else:
                q_lin = state.q
            model = linearize_step(q_lin, j_ctrl, config.ts, dirs,
                                   sc.v_ins_b, sc.v_str_b)
            if use_observer:
                y_meas = np.concatenate(
                    (state.omega, state.q, [y_trg, y_sun, y_nadir]))
                if obs_cfg.measurement_noise:
                    y_meas = y_meas + noise_std * rng.standard_normal(10)
                # keep the measured quaternion on the estimate's cover
                if float(y_meas[3:7] @ est.z[3:7]) < 0.0:
                    y_meas[3:7] = -y_meas[3:7]
                c_offsets = np.array(
                    [model.cbar_trg[0] - model.h_trg[0] @ model.x_lp,
                     model.cbar_sun[0] - model.h_sun[0] @ model.x_lp,
                     model.cbar_nadir[0] - model.h_nadir[0] @ model.x_lp])
                c_aug, b_obs = observer.build_observation(
                    model.h_trg[0], model.h_sun[0], model.h_nadir[0],
                    c_offsets)
                est = observer.update(est, y_meas, c_aug, b_obs,
                                      obs_cfg.noise.r_meas)
                x_hat = est.x.copy()
                d_u_hat = est.d_u.copy()
                d_y_hat = est.d_y.copy()
            else:
                x_hat = np.concatenate((state.omega, state.q))
                d_u_hat = np.zeros(3)
                d_y_hat = np.zeros(3)

            problem = mpc.build_problem(x_hat - model.x_lp, model, d_u_hat,
                                        d_y_hat, x_hat[:3], u_prev,
                                        config.weights, ctrl_limits,
                                        config.horizon)
            sol = mpc.solve_step(problem, warm_start=warm)
            if sol.status == "optimal":
                u = sol.u0
                warm = sol.p
                consecutive_failures = 0
            else:
                u = u_prev.copy()
                warm = None
                consecutive_failures += 1
                qp_failures += 1
            s_val = float(max(np.max(sol.s_omega), np.max(sol.s_sun),
                              np.max(sol.s_nadir)))
            if not np.isfinite(s_val):
                s_val = 0.0
            iters = sol.qp_iterations
            status = sol.status
            if use_observer:
                a_aug, b_aug, c_aff = observer.build_augmented(
                    model.a_d, model.b_d, model.x_lp)
                est = observer.predict(est, u, a_aug, b_aug, c_aff,
                                       obs_cfg.noise.q_proc)
        else:
            try:
                q_ref = baseline.unconstrained_reference(
                    dirs.v_trg[0], dirs.v_sun[0], sc.v_ins_b, sc.v_str_b)
                last_q_ref = q_ref
            except DegenerateGeometryError:
                q_ref = last_q_ref
            q_lim_prev = shaper.q_ref_lim_prev
            q_lim = baseline.rate_limited_reference(
                shaper, q_ref, config.limits.omega_max, config.ts)
            omega_ref = baseline.rate_reference(q_lim, q_lim_prev, config.ts)
            u = baseline.inner_loop(state, q_lim, omega_ref, gains,
                                    config.limits.u_max)
            s_val = 0.0
            iters = 0
            status = "none"

        t_log[k] = t
        w_log[k] = state.omega
        q_log[k] = state.q
        u_log[k] = u
        err_log[k] = theta_err
        ysun_log[k] = y_sun
        ynad_log[k] = y_nadir
        smax_log[k] = s_val
        iters_log[k] = iters
        status_log.append(status)
        n_done = k + 1

        if consecutive_failures > MAX_CONSECUTIVE_QP_FAILURES:
            aborted = True
            break

        for j in range(substeps):
            nadir_n = nadir_direction(t + j * config.t_sim, config.orbit)
            state = rk4_step(state, u, config.t_sim, j_plant,
                             disturbances=config.disturbances,
                             nadir_n=nadir_n,
                             mean_motion=config.orbit.mean_motion,
                             rng=rng, J_inv=j_plant_inv)
        u_prev = u

    tel = Telemetry(t_log[:n_done], w_log[:n_done], q_log[:n_done],
                    u_log[:n_done], err_log[:n_done], ysun_log[:n_done],
                    ynad_log[:n_done], smax_log[:n_done],
                    iters_log[:n_done], status_log)
    metrics = compute_metrics(tel, config.limits, aborted=aborted,
                              qp_failures=qp_failures)
    return tel, metrics


def parallel_map(fn, items, workers: int = 1) -> list:
    """Order-preserving map over independent work items; workers > 1 uses
    a process pool. Results are independent of scheduling because each
    item carries its own seed."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def nominal_scenario(controller: str = "mpc", duration: float = 200.0,
                     seed: int = 0) -> ScenarioConfig:
    """Reference tracking pass: 550 km sun-synchronous orbit phased for
    closest approach over the Prague ground site at t = 100 s with a 26.7
    deg off-nadir angle, on the day side."""
    target = GroundTarget(np.deg2rad(50.0755), np.deg2rad(14.4378))
    orbit = solve_scenario_phasing(target, 550.0e3, np.deg2rad(97.6), 0.0,
                                   100.0, np.deg2rad(26.7))
    return ScenarioConfig(orbit=orbit, target=target, controller=controller,
                          duration=duration, seed=seed)
