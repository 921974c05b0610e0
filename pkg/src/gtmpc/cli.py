"""Command-line front end: scenario runs, randomized campaigns, and
numerical self-checks, driven by flat INI config files.

Angles are degrees at this interface and radians everywhere inside. The
bundled ``configs/nominal.ini`` holds the reference pass and is used when
no config path is given. Exit codes are a stable contract: 0 success,
1 config error, 2 aborted run, 3 self-check failure.
"""

from __future__ import annotations

import argparse
import sys
from configparser import ConfigParser, Error as ConfigParserError
from importlib import resources
from pathlib import Path

import numpy as np

from . import linearizer, qpsolver
from .attitude import DegenerateGeometryError, quat_normalize
from .geometry import GroundTarget, solve_scenario_phasing
from .montecarlo import CampaignConfig, run_campaign
from .mpc import Limits, MpcWeights
from .observer import NoiseConfig
from .plant import DisturbanceConfig, state_derivative
from .simharness import ObserverConfig, ScenarioConfig, SpacecraftConfig, run

Array = np.ndarray

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORTED = 2
EXIT_SELFCHECK = 3

# set by tests to exercise the self-check failure path; "jacobian_sign"
# negates the analytic rate Jacobian before comparison
LINCHECK_FAULT: str | None = None


class ConfigError(Exception):
    pass


def _parse_bool(raw: str) -> bool:
    val = raw.strip().lower()
    if val in ("true", "yes", "on", "1"):
        return True
    if val in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_vec3(raw: str) -> Array:
    parts = [float(v) for v in raw.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected 3 components, got {len(parts)}")
    return np.array(parts)


_SCHEMA = {
    "scenario": {"controller": str, "duration": float, "ts": float,
                 "t_sim": float, "seed": int, "horizon": int,
                 "rate_backoff": float, "cone_backoff": float},
    "orbit": {"altitude_km": float, "inclination_deg": float,
              "t_closest": float, "off_nadir_deg": float},
    "target": {"latitude_deg": float, "longitude_deg": float,
               "altitude_m": float},
    "spacecraft": {"jxx": float, "jyy": float, "jzz": float, "jxy": float,
                   "jxz": float, "jyz": float, "v_ins_b": _parse_vec3,
                   "v_str_b": _parse_vec3},
    "limits": {"omega_max_deg": float, "u_max": float,
               "alpha_sun_deg": float, "alpha_nadir_deg": float},
    "weights": {"w_p": float, "q_omega": float, "q_domega": float,
                "q_du": float, "w_s": float},
    "observer": {"enabled": _parse_bool, "perfect_state": _parse_bool,
                 "measurement_noise": _parse_bool},
    "disturbances": {"gravity_gradient": _parse_bool,
                     "constant_bias": _parse_vec3,
                     "torque_noise_std": float},
    "mc": {"n_runs": int, "seed": int, "inertia_perturbation": float,
           "max_off_nadir_deg": float, "t_closest": float, "workers": int},
}


def default_config_path() -> Path:
    return Path(str(resources.files("gtmpc") / "configs" / "nominal.ini"))


def load_config(path, overrides: list[str] | None = None) -> dict:
    """Parse and validate an INI file into {section: {key: typed value}}.

    Every section and key must appear in the schema; unknown names are an
    error naming the offender. Overrides are ``section.key=value`` strings
    applied after the file, validated the same way.
    """
    cp = ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except ConfigParserError as exc:
        raise ConfigError(f"config parse failure: {exc}") from exc

    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(
                f"override must look like section.key=value: {item!r}")
        dotted, value = item.split("=", 1)
        section, key = dotted.split(".", 1)
        section, key = section.strip(), key.strip()
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value.strip())

    out: dict = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        out[section] = {}
        for key, raw in cp.items(section):
            conv = _SCHEMA[section].get(key)
            if conv is None:
                raise ConfigError(
                    f"unknown key '{key}' in section [{section}]")
            try:
                out[section][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {section}.{key}: {exc}") from exc
    return out


def _val(cfg: dict, section: str, key: str, default):
    return cfg.get(section, {}).get(key, default)


def build_scenario(cfg: dict) -> ScenarioConfig:
    """Instantiate the run configuration, solving the orbit phasing so the
    configured target reaches closest approach at the configured time."""
    target = GroundTarget(
        latitude=np.radians(_val(cfg, "target", "latitude_deg", 50.0755)),
        longitude=np.radians(_val(cfg, "target", "longitude_deg", 14.4378)),
        altitude=_val(cfg, "target", "altitude_m", 0.0))
    try:
        orbit = solve_scenario_phasing(
            target,
            _val(cfg, "orbit", "altitude_km", 550.0) * 1e3,
            np.radians(_val(cfg, "orbit", "inclination_deg", 97.6)),
            0.0,
            _val(cfg, "orbit", "t_closest", 100.0),
            np.radians(_val(cfg, "orbit", "off_nadir_deg", 26.7)))
    except (DegenerateGeometryError, ValueError) as exc:
        raise ConfigError(f"orbit phasing failed: {exc}") from exc

    j = np.array(
        [[_val(cfg, "spacecraft", "jxx", 0.1335),
          _val(cfg, "spacecraft", "jxy", -0.0015),
          _val(cfg, "spacecraft", "jxz", 0.0045)],
         [_val(cfg, "spacecraft", "jxy", -0.0015),
          _val(cfg, "spacecraft", "jyy", 0.1545),
          _val(cfg, "spacecraft", "jyz", -0.0225)],
         [_val(cfg, "spacecraft", "jxz", 0.0045),
          _val(cfg, "spacecraft", "jyz", -0.0225),
          _val(cfg, "spacecraft", "jzz", 0.1065)]])
    spacecraft = SpacecraftConfig(
        j_body=j,
        v_ins_b=_val(cfg, "spacecraft", "v_ins_b",
                     np.array([0.0, 0.0, 1.0])),
        v_str_b=_val(cfg, "spacecraft", "v_str_b",
                     np.array([0.0, 0.97, -0.23])))
    limits = Limits(
        omega_max=np.radians(_val(cfg, "limits", "omega_max_deg", 3.0)),
        u_max=_val(cfg, "limits", "u_max", 2e-3),
        alpha_sun=np.radians(_val(cfg, "limits", "alpha_sun_deg", 45.0)),
        alpha_nadir=np.radians(
            _val(cfg, "limits", "alpha_nadir_deg", 89.0)))
    weights = MpcWeights(
        w_p=_val(cfg, "weights", "w_p", 100.0),
        q_omega=_val(cfg, "weights", "q_omega", 0.05) * np.eye(3),
        q_domega=_val(cfg, "weights", "q_domega", 1.0) * np.eye(3),
        q_du=_val(cfg, "weights", "q_du", 1.0) * np.eye(3),
        w_s=_val(cfg, "weights", "w_s", 1e9))
    disturbances = DisturbanceConfig(
        gravity_gradient=_val(cfg, "disturbances", "gravity_gradient",
                              True),
        constant_bias=_val(cfg, "disturbances", "constant_bias",
                           np.zeros(3)),
        torque_noise_std=_val(cfg, "disturbances", "torque_noise_std",
                              0.0))
    observer = ObserverConfig(
        noise=NoiseConfig(),
        enabled=_val(cfg, "observer", "enabled", True),
        perfect_state=_val(cfg, "observer", "perfect_state", True),
        measurement_noise=_val(cfg, "observer", "measurement_noise",
                               False))
    try:
        return ScenarioConfig(
            orbit=orbit, target=target, spacecraft=spacecraft,
            limits=limits, weights=weights,
            controller=_val(cfg, "scenario", "controller", "mpc"),
            duration=_val(cfg, "scenario", "duration", 200.0),
            ts=_val(cfg, "scenario", "ts", 0.1),
            t_sim=_val(cfg, "scenario", "t_sim", 0.01),
            seed=_val(cfg, "scenario", "seed", 0),
            horizon=_val(cfg, "scenario", "horizon", 50),
            disturbances=disturbances, observer=observer,
            rate_backoff=_val(cfg, "scenario", "rate_backoff", 0.02),
            cone_backoff=_val(cfg, "scenario", "cone_backoff", 1e-4))
    except ValueError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def build_campaign(cfg: dict, base: ScenarioConfig) -> CampaignConfig:
    try:
        return CampaignConfig(
            base_scenario=base,
            n_runs=_val(cfg, "mc", "n_runs", 25),
            seed=_val(cfg, "mc", "seed", 0),
            inertia_perturbation=_val(cfg, "mc", "inertia_perturbation",
                                      0.30),
            max_off_nadir=np.radians(
                _val(cfg, "mc", "max_off_nadir_deg", 30.0)),
            t_closest=_val(cfg, "mc", "t_closest", 100.0),
            workers=_val(cfg, "mc", "workers", 1))
    except ValueError as exc:
        raise ConfigError(f"invalid campaign: {exc}") from exc


def _write_metrics(path: Path, metrics: dict) -> None:
    lines = [f"{key} = {'' if val is None else val}"
             for key, val in metrics.items()]
    path.write_text("\n".join(lines) + "\n")


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.set)
    if args.seed is not None:
        cfg.setdefault("scenario", {})["seed"] = args.seed
    scenario = build_scenario(cfg)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tel, met = run(scenario)
    tel.write_csv(out / "telemetry.csv")
    _write_metrics(out / "metrics.txt", met.as_dict())
    if met.aborted:
        print("run aborted: persistent QP failure", file=sys.stderr)
        return EXIT_ABORTED
    print(f"run complete: {tel.t.size} steps, "
          f"telemetry in {out / 'telemetry.csv'}")
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = load_config(args.config, args.set)
    if args.seed is not None:
        cfg.setdefault("mc", {})["seed"] = args.seed
    if args.workers is not None:
        cfg.setdefault("mc", {})["workers"] = args.workers
    base = build_scenario(cfg)
    campaign = build_campaign(cfg, base)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = run_campaign(campaign)
    report.write_csv(out / "mc_runs.csv")
    report.write_summary(out / "mc_summary.txt")
    print(f"campaign complete: {report.n_runs} runs "
          f"({report.aborted_runs} aborted), summary in "
          f"{out / 'mc_summary.txt'}")
    return EXIT_OK


J_CHECK = np.array([[0.1335, -0.0015, 0.0045],
                    [-0.0015, 0.1545, -0.0225],
                    [0.0045, -0.0225, 0.1065]])


def _dynamics(x: Array, u: Array, j: Array, j_inv: Array) -> Array:
    dw, dq = state_derivative(x[:3], x[3:7], u, np.zeros(3), j, j_inv)
    return np.concatenate((dw, dq))


def _check_jacobian_fd(rng: np.random.Generator, trials: int) -> float:
    """Max relative deviation of the analytic continuous-time Jacobians
    and output rows from central finite differences of the raw formulas."""
    j_inv = np.linalg.inv(J_CHECK)
    h = 1e-6
    worst = 0.0
    for _ in range(trials):
        q = quat_normalize(rng.standard_normal(4))
        a_c, b_c = linearizer.continuous_jacobians(q, J_CHECK)
        if LINCHECK_FAULT == "jacobian_sign":
            a_c = -a_c
        x0 = np.concatenate((np.zeros(3), q))
        a_fd = np.empty((7, 7))
        for i in range(7):
            e = np.zeros(7)
            e[i] = h
            a_fd[:, i] = (_dynamics(x0 + e, np.zeros(3), J_CHECK, j_inv)
                          - _dynamics(x0 - e, np.zeros(3), J_CHECK,
                                      j_inv)) / (2 * h)
        b_fd = np.empty((7, 3))
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            b_fd[:, i] = (_dynamics(x0, e, J_CHECK, j_inv)
                          - _dynamics(x0, -e, J_CHECK, j_inv)) / (2 * h)
        scale_a = np.maximum(np.abs(a_c), 1.0)
        scale_b = np.maximum(np.abs(b_c), 1.0)
        worst = max(worst, float(np.max(np.abs(a_fd - a_c) / scale_a)),
                    float(np.max(np.abs(b_fd - b_c) / scale_b)))
        # output row of the target cosine for a random direction pair
        v_n = rng.standard_normal(3)
        v_n /= np.linalg.norm(v_n)
        v_b = rng.standard_normal(3)
        v_b /= np.linalg.norm(v_b)
        h_row, _, _ = linearizer.output_row(v_b, v_n, q)
        h_fd = np.empty(7)
        for i in range(7):
            e = np.zeros(7)
            e[i] = h
            yp = _raw_cosine((x0 + e)[3:7], v_b, v_n)
            ym = _raw_cosine((x0 - e)[3:7], v_b, v_n)
            h_fd[i] = (yp - ym) / (2 * h)
        scale_h = np.maximum(np.abs(h_row), 1.0)
        worst = max(worst, float(np.max(np.abs(h_fd - h_row) / scale_h)))
    return worst


def _raw_cosine(q: Array, vb: Array, vn: Array) -> float:
    # homogeneous quadratic form without unit-norm validation, so finite
    # differences of off-manifold perturbations are well defined
    q0, qv = q[0], q[1:]
    return float((q0 * q0 - qv @ qv) * (vb @ vn)
                 + 2.0 * (vb @ qv) * (qv @ vn)
                 + 2.0 * q0 * (vb @ np.cross(qv, vn)))


def _check_zoh_expm(rng: np.random.Generator, trials: int) -> float:
    import scipy.linalg
    worst = 0.0
    ts = 0.1
    for _ in range(trials):
        q = quat_normalize(rng.standard_normal(4))
        a_c, b_c = linearizer.continuous_jacobians(q, J_CHECK)
        a_d, b_d = linearizer.discretize_zoh(a_c, b_c, ts)
        blk = np.zeros((10, 10))
        blk[:7, :7] = a_c * ts
        blk[:7, 7:] = b_c * ts
        e = scipy.linalg.expm(blk)
        worst = max(worst, float(np.max(np.abs(e[:7, :7] - a_d))),
                    float(np.max(np.abs(e[:7, 7:] - b_d))))
    return worst


def _check_qp_kkt(rng: np.random.Generator, trials: int) -> float:
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(5, 31))
        m = int(rng.integers(3, 2 * n))
        mat = rng.standard_normal((n, n))
        p_mat = mat.T @ mat + 0.1 * np.eye(n)
        g = rng.standard_normal(n)
        a = rng.standard_normal((m, n))
        x0 = rng.uniform(-0.5, 0.5, n)
        b = a @ x0 + rng.uniform(0.1, 1.0, m)
        lo = np.full(n, -1.0)
        hi = np.full(n, 1.0)
        sol = qpsolver.solve(p_mat, g, a, b, lo, hi)
        if sol.status != "optimal":
            return np.inf
        kkt = qpsolver.kkt_residuals(p_mat, g, a, b, (lo, hi), sol.p,
                                     (sol.z, sol.w_lo, sol.w_hi))
        worst = max(worst, kkt.max())
    return worst


def cmd_lincheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    checks = [
        ("jacobian-fd", _check_jacobian_fd(rng, args.trials), 1e-6),
        ("zoh-expm", _check_zoh_expm(rng, args.trials), 1e-12),
        ("qp-kkt", _check_qp_kkt(rng, max(args.trials // 5, 1)), 1e-8),
    ]
    failed = []
    for name, dev, tol in checks:
        status = "PASS" if dev <= tol else "FAIL"
        print(f"{name:12s} max deviation {dev:10.3e}  tol {tol:8.1e}  "
              f"{status}")
        if dev > tol:
            failed.append(name)
    if failed:
        print(f"self-check failure: {', '.join(failed)}", file=sys.stderr)
        return EXIT_SELFCHECK
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtmpc",
        description="ground-target tracking MPC: runs, campaigns, checks")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=str(default_config_path()),
                       help="INI config file (default: bundled scenario)")
        p.add_argument("--output-dir", default=".",
                       help="directory for result files")
        p.add_argument("--set", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override a config value (repeatable)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the run seed")

    p_run = sub.add_parser("run", help="single closed-loop scenario")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_mc = sub.add_parser("mc", help="randomized campaign")
    add_common(p_mc)
    p_mc.add_argument("--workers", type=int, default=None,
                      help="parallel run workers")
    p_mc.set_defaults(func=cmd_mc)

    p_lc = sub.add_parser("lincheck",
                          help="linearization and QP self-checks")
    p_lc.add_argument("--seed", type=int, default=0)
    p_lc.add_argument("--trials", type=int, default=100)
    p_lc.set_defaults(func=cmd_lincheck)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
