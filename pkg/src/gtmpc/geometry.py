"""Orbit, Earth rotation, Sun ephemeris, and ground-target geometry.

Produces the inertial direction vectors (target, Sun, nadir) and the
validity predicates consumed by the pointing controllers. Conventions: the
inertial frame is Earth-centered with z along the rotation axis; Earth
rotates uniformly at the sidereal rate and is spherical for target
positioning; the orbit is a circular two-body solution (no J2). Over the
few hundred seconds of a tracking pass these approximations sit well below
the pointing tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, root

from .attitude import DegenerateGeometryError, angle_between, unit_vector

Array = np.ndarray

MU_EARTH = 3.986004418e14      # m^3 s^-2
R_EARTH = 6378137.0            # m
OMEGA_EARTH = 7.2921158553e-5  # rad/s, sidereal
ERA_J2000 = np.deg2rad(280.46061837)  # Earth rotation angle at J2000
MAX_OFF_NADIR = np.deg2rad(30.0)


@dataclass
class OrbitConfig:
    """Circular orbit with phasing and a calendar epoch.

    ``epoch`` is the absolute time, in seconds past J2000, of simulation
    time t = 0; Earth rotation and the solar ephemeris are evaluated at
    ``epoch + t``.
    """

    altitude: float
    inclination: float
    raan: float
    argument_of_latitude_epoch: float
    epoch: float

    def __post_init__(self) -> None:
        if self.altitude <= 0.0:
            raise ValueError("altitude must be positive")

    @property
    def semi_major_axis(self) -> float:
        return R_EARTH + self.altitude

    @property
    def mean_motion(self) -> float:
        a = self.semi_major_axis
        return float(np.sqrt(MU_EARTH / a**3))


@dataclass
class GroundTarget:
    """Ground point fixed in the rotating Earth frame."""

    latitude: float
    longitude: float
    altitude: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.latitude) > np.pi / 2.0:
            raise ValueError("latitude out of range")


@dataclass
class DirectionSet:
    """Inertial unit vectors over a prediction horizon, each (N, 3)."""

    v_trg: Array
    v_sun: Array
    v_nadir: Array


@dataclass
class ValidityReport:
    valid: bool
    off_nadir: float
    is_day: bool


def earth_rotation_angle(t_abs: float) -> float:
    """Rotation of the Earth-fixed frame about inertial z, ``t_abs`` seconds
    past J2000."""
    return ERA_J2000 + OMEGA_EARTH * t_abs


def _orbit_basis(orbit: OrbitConfig):
    # n_hat: ascending node, m_hat: in-plane quadrature, h_hat: orbit normal
    so, co = np.sin(orbit.raan), np.cos(orbit.raan)
    si, ci = np.sin(orbit.inclination), np.cos(orbit.inclination)
    n_hat = np.array([co, so, 0.0])
    m_hat = np.array([-so * ci, co * ci, si])
    h_hat = np.array([so * si, -co * si, ci])
    return n_hat, m_hat, h_hat


def spacecraft_position(t: float, orbit: OrbitConfig) -> Array:
    n_hat, m_hat, _ = _orbit_basis(orbit)
    u = orbit.argument_of_latitude_epoch + orbit.mean_motion * t
    return orbit.semi_major_axis * (np.cos(u) * n_hat + np.sin(u) * m_hat)


def spacecraft_velocity(t: float, orbit: OrbitConfig) -> Array:
    n_hat, m_hat, _ = _orbit_basis(orbit)
    n = orbit.mean_motion
    u = orbit.argument_of_latitude_epoch + n * t
    return orbit.semi_major_axis * n * (-np.sin(u) * n_hat + np.cos(u) * m_hat)


def nadir_direction(t: float, orbit: OrbitConfig) -> Array:
    return -unit_vector(spacecraft_position(t, orbit))


def target_position(t: float, epoch: float, target: GroundTarget) -> Array:
    """Inertial position of a ground point riding the rotating Earth."""
    r = R_EARTH + target.altitude
    cl = np.cos(target.latitude)
    p_ecef = r * np.array([cl * np.cos(target.longitude),
                           cl * np.sin(target.longitude),
                           np.sin(target.latitude)])
    th = earth_rotation_angle(epoch + t)
    c, s = np.cos(th), np.sin(th)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return rot @ p_ecef


def target_direction(t: float, orbit: OrbitConfig,
                     target: GroundTarget) -> Array:
    d = target_position(t, orbit.epoch, target) - spacecraft_position(t, orbit)
    return unit_vector(d)


def sun_direction(t: float, epoch: float) -> Array:
    """Sun direction from the low-precision mean-ecliptic-longitude almanac
    formulas. The Sun moves about 0.002 deg over a 200 s pass, so this is
    far more accuracy than the exclusion-zone geometry needs."""
    d = (epoch + t) / 86400.0
    g = np.deg2rad(357.528 + 0.9856003 * d)
    lam = np.deg2rad(280.460 + 0.9856474 * d
                     + 1.915 * np.sin(g) + 0.020 * np.sin(2.0 * g))
    eps = np.deg2rad(23.439 - 4.0e-7 * d)
    v = np.array([np.cos(lam),
                  np.cos(eps) * np.sin(lam),
                  np.sin(eps) * np.sin(lam)])
    return unit_vector(v)


def off_nadir_angle(t: float, orbit: OrbitConfig,
                    target: GroundTarget) -> float:
    return angle_between(target_direction(t, orbit, target),
                         nadir_direction(t, orbit))


def horizon_directions(t0: float, n_steps: int, ts: float,
                       orbit: OrbitConfig, target: GroundTarget) -> DirectionSet:
    """Evaluate the three guidance directions at t0 + k*ts, k = 0..N-1."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if ts <= 0.0:
        raise ValueError("ts must be positive")
    v_trg = np.empty((n_steps, 3))
    v_sun = np.empty((n_steps, 3))
    v_nadir = np.empty((n_steps, 3))
    for k in range(n_steps):
        tk = t0 + k * ts
        v_trg[k] = target_direction(tk, orbit, target)
        v_sun[k] = sun_direction(tk, orbit.epoch)
        v_nadir[k] = nadir_direction(tk, orbit)
    return DirectionSet(v_trg, v_sun, v_nadir)


def validity_check(t_closest: float, orbit: OrbitConfig,
                   target: GroundTarget) -> ValidityReport:
    """Observation validity: off-nadir below 30 deg at closest approach and
    the target on the day side (sun elevation above the local horizon)."""
    eta = off_nadir_angle(t_closest, orbit, target)
    up = unit_vector(target_position(t_closest, orbit.epoch, target))
    day = float(sun_direction(t_closest, orbit.epoch) @ up) > 0.0
    return ValidityReport(valid=bool(eta < MAX_OFF_NADIR and day),
                          off_nadir=float(eta), is_day=day)


def cross_track_angle(off_nadir: float, a: float, r_t: float) -> float:
    """Central angle between sub-satellite point and target that yields the
    given off-nadir angle at closest approach (flat cross-track geometry)."""
    if off_nadir == 0.0:
        return 0.0
    if not 0.0 < off_nadir < np.pi / 3:
        raise ValueError("off_nadir out of supported range")

    def f(d: float) -> float:
        return np.arctan2(r_t * np.sin(d), a - r_t * np.cos(d)) - off_nadir

    return brentq(f, 0.0, np.pi / 3, xtol=1e-13)


def _phasing_guesses(p_hat: Array, delta: float, inclination: float):
    # Closed-form candidates ignoring Earth rotation: choose RAAN so the
    # target sits at cross-track angle delta from the orbit great circle,
    # then phase the satellite at the closest point of that circle.
    si, ci = np.sin(inclination), np.cos(inclination)
    amp = si * np.hypot(p_hat[0], p_hat[1])
    if amp < 1e-12:
        return
    phi = np.arctan2(-p_hat[1], p_hat[0])
    for sign in (1.0, -1.0):
        val = (sign * np.sin(delta) - p_hat[2] * ci) / amp
        if abs(val) > 1.0:
            continue
        base = float(np.arcsin(val))
        for raan in (base - phi, np.pi - base - phi):
            so, co = np.sin(raan), np.cos(raan)
            n_hat = np.array([co, so, 0.0])
            m_hat = np.array([-so * ci, co * ci, si])
            h_hat = np.array([so * si, -co * si, ci])
            r_star = p_hat - (p_hat @ h_hat) * h_hat
            nrm = np.linalg.norm(r_star)
            if nrm < 1e-9:
                continue
            r_star = r_star / nrm
            u_c = float(np.arctan2(r_star @ m_hat, r_star @ n_hat))
            yield u_c, raan


def solve_scenario_phasing(target: GroundTarget, altitude: float,
                           inclination: float, epoch: float,
                           t_closest: float, off_nadir: float,
                           require_day: bool = True) -> OrbitConfig:
    """Choose RAAN and orbit phasing so closest approach to the target
    happens at ``t_closest`` with the requested off-nadir angle.

    The target and timeline are fixed; RAAN and the argument of latitude
    are solved for numerically from closed-form initial guesses. When
    ``require_day`` is set and the solved pass falls on the night side, the
    epoch is advanced in 3 h steps (up to one day) until the observation is
    valid. Raises DegenerateGeometryError if no configuration is found.
    """
    delta = cross_track_angle(off_nadir, R_EARTH + altitude,
                              R_EARTH + target.altitude)
    h = 0.5
    n_bumps = 8 if require_day else 1
    for bump in range(n_bumps):
        ep = epoch + bump * 10800.0
        p_hat = unit_vector(target_position(t_closest, ep, target))
        for u_c, raan0 in _phasing_guesses(p_hat, delta, inclination):
            def residual(x):
                orb = OrbitConfig(altitude, inclination, x[1], x[0], ep)
                f0 = off_nadir_angle(t_closest, orb, target) - off_nadir
                f1 = (off_nadir_angle(t_closest + h, orb, target)
                      - off_nadir_angle(t_closest - h, orb, target)) / (2 * h)
                return [f0, 50.0 * f1]

            n = OrbitConfig(altitude, inclination, 0.0, 0.0, ep).mean_motion
            sol = root(residual, [u_c - n * t_closest, raan0], tol=1e-12)
            if not sol.success:
                continue
            orbit = OrbitConfig(altitude, inclination,
                                float(np.mod(sol.x[1], 2 * np.pi)),
                                float(np.mod(sol.x[0], 2 * np.pi)), ep)
            eta_c = off_nadir_angle(t_closest, orbit, target)
            if abs(eta_c - off_nadir) > 1e-8:
                continue
            # closest approach must be a minimum, not a stationary maximum
            if (off_nadir_angle(t_closest - 10.0, orbit, target) <= eta_c
                    or off_nadir_angle(t_closest + 10.0, orbit, target) <= eta_c):
                continue
            report = validity_check(t_closest, orbit, target)
            if require_day and not report.is_day:
                continue
            return orbit
    raise DegenerateGeometryError(
        "no orbit phasing found for the requested pass geometry")
