"""Dense convex QP solver for receding-horizon subproblems.

Solves

    min 1/2 p^T P p + g^T p   s.t.  A p <= b,  p_min <= p <= p_max

with a Mehrotra predictor-corrector primal-dual interior-point method.
Three implementation notes matter for this problem class:

* Ruiz-style equilibration before solving; the slack weight (1e9) and the
  torque entries (order one) span nine decades, and the iteration must not
  see that spread.
* Columns that carry no Hessian coupling and never share a constraint row
  with each other (the per-step slack variables after condensation) are
  eliminated through a diagonal Schur complement, so the factorization cost
  is set by the coupled block only.
* After convergence an active-set polish solves the equality-constrained
  KKT system exactly, which pushes the raw residuals to machine level; the
  polished point is kept only when it beats the interior-point iterate.

Everything is deterministic: no randomized pivoting, no randomized
initialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

Array = np.ndarray

OPTIMAL = "optimal"
MAX_ITERATIONS = "max_iterations"
NUMERICAL_FAILURE = "numerical_failure"

# barrier ratio cap: gaps are floored to dual/_RATIO_CAP before any division
# so the Newton matrix diagonal stays below ~1e12, where the factorization
# and the refinement matvec still hold the digits that matter
_RATIO_CAP = 1e12
_TINY = 1e-300


@dataclass
class KktResiduals:
    primal_residual: float
    dual_residual: float
    complementarity: float

    def max(self) -> float:
        return max(self.primal_residual, self.dual_residual,
                   self.complementarity)


@dataclass
class QpOptions:
    tol: float = 1e-8
    max_iterations: int = 100
    tau: float = 0.995
    ruiz_iterations: int = 10
    polish: bool = True
    verbose: bool = False


@dataclass
class QpSolution:
    p: Array
    status: str
    iterations: int
    kkt: KktResiduals            # residuals of the equilibrated problem
    z: Array                     # duals of A p <= b
    w_lo: Array                  # duals of p >= p_min (0 where infinite)
    w_hi: Array                  # duals of p <= p_max (0 where infinite)
    objective: float


def kkt_residuals(P: Array, g: Array, a_ineq: Array, b: Array,
                  bounds: tuple[Array, Array], p: Array,
                  duals: tuple[Array, Array, Array]) -> KktResiduals:
    """Raw KKT residual infinity-norms of the original (unscaled) problem.

    duals = (z, w_lo, w_hi) with the sign convention of the Lagrangian
    L = f + z^T(Ap - b) + w_lo^T(p_min - p) + w_hi^T(p - p_max).
    """
    p_min, p_max = bounds
    z, w_lo, w_hi = duals
    stat = P @ p + g - w_lo + w_hi
    if a_ineq.shape[0]:
        stat = stat + a_ineq.T @ z
        slack = b - a_ineq @ p
        primal = float(max(np.max(-slack, initial=0.0), 0.0))
        comp = float(np.max(np.abs(z * slack), initial=0.0))
    else:
        primal = 0.0
        comp = 0.0
    lo_fin = np.isfinite(p_min)
    hi_fin = np.isfinite(p_max)
    if np.any(lo_fin):
        primal = max(primal, float(np.max(p_min[lo_fin] - p[lo_fin])))
        comp = max(comp, float(np.max(
            np.abs(w_lo[lo_fin] * (p[lo_fin] - p_min[lo_fin])))))
    if np.any(hi_fin):
        primal = max(primal, float(np.max(p[hi_fin] - p_max[hi_fin])))
        comp = max(comp, float(np.max(
            np.abs(w_hi[hi_fin] * (p_max[hi_fin] - p[hi_fin])))))
    return KktResiduals(max(primal, 0.0), float(np.max(np.abs(stat))), comp)


def _ruiz_equilibrate(P, g, A, b, p_min, p_max, iters):
    """Symmetric diagonal scaling of the KKT data toward unit row norms.

    Returns scaled copies plus (d, e, c): variable scales, constraint
    scales, cost scale.
    """
    n = P.shape[0]
    m = A.shape[0]
    d = np.ones(n)
    e = np.ones(m)
    # iterate on magnitude copies; the real data is scaled once at the end
    absP = np.abs(P)
    absA = np.abs(A)
    for _ in range(iters):
        col = np.maximum(np.max(absP, axis=0, initial=0.0),
                         np.max(absA, axis=0, initial=0.0) if m else 0.0)
        col[col == 0.0] = 1.0
        dd = 1.0 / np.sqrt(col)
        if m:
            row = np.max(absA, axis=1, initial=0.0)
            row[row == 0.0] = 1.0
            ee = 1.0 / np.sqrt(row)
        else:
            ee = np.ones(0)
        absP *= dd[:, None]
        absP *= dd[None, :]
        if m:
            absA *= ee[:, None]
            absA *= dd[None, :]
        d *= dd
        e *= ee
        if (np.max(np.abs(dd - 1.0), initial=0.0) < 1e-2
                and np.max(np.abs(ee - 1.0), initial=0.0) < 1e-2):
            break
    P = P * d[:, None]
    P *= d[None, :]
    if m:
        A = A * e[:, None]
        A *= d[None, :]
    else:
        A = A.copy()
    g = d * g
    b = e * b if m else b.copy()
    colP = np.max(absP, axis=0, initial=0.0)
    c = 1.0 / max(1.0, float(np.mean(colP)) if n else 1.0,
                  float(np.max(np.abs(g), initial=0.0)))
    P *= c
    g *= c
    lo = np.where(np.isfinite(p_min), p_min / d, -np.inf)
    hi = np.where(np.isfinite(p_max), p_max / d, np.inf)
    return P, g, A, b, lo, hi, d, e, c


def _detect_separable(P, A):
    """Columns with diagonal-only Hessian that never share a row with each
    other; these admit a diagonal Schur-complement elimination."""
    n = P.shape[0]
    offdiag = P - np.diag(np.diag(P))
    cand = (np.max(np.abs(offdiag), axis=0) == 0.0) & (np.diag(P) > 0.0)
    if A.shape[0] == 0 or not np.any(cand):
        return np.zeros(n, dtype=bool)
    nz = A != 0.0
    counts = nz[:, cand].sum(axis=1)
    bad_rows = counts > 1
    if np.any(bad_rows):
        drop = np.any(nz[bad_rows][:, cand], axis=0)
        idx = np.flatnonzero(cand)
        cand[idx[drop]] = False
    if cand.sum() < max(8, n // 5):
        return np.zeros(n, dtype=bool)
    return cand


class _SchurKkt:
    """Normal-equations solver M dp = r with M = P + A^T D A + diag(d_box),
    eliminating the separable block when one exists."""

    def __init__(self, P, A, sep):
        self.P = P
        self.A = A
        self.sep = sep
        self.n_sep = int(sep.sum())
        if self.n_sep:
            self.gen = ~sep
            self.A_gen = np.ascontiguousarray(A[:, self.gen])
            # each row holds at most one separable entry
            sep_cols_global = np.flatnonzero(sep)
            local = -np.ones(P.shape[0], dtype=int)
            local[sep_cols_global] = np.arange(self.n_sep)
            nz = A[:, sep] != 0.0
            self.row_has_sep = nz.any(axis=1)
            rows = np.flatnonzero(self.row_has_sep)
            cols_local = np.argmax(nz[rows], axis=1)
            # group rows by separable column so the cross block assembles
            # with one reduceat instead of scattered adds
            order = np.argsort(cols_local, kind='stable')
            self.sep_rows = rows[order]
            self.sep_cols = cols_local[order]
            self.sep_vals = A[self.sep_rows, sep_cols_global[self.sep_cols]]
            self.seg_cols, self.seg_starts = np.unique(self.sep_cols,
                                                       return_index=True)
            self.Ag_sep = np.ascontiguousarray(self.A_gen[self.sep_rows])
            self.P_gg = np.ascontiguousarray(P[np.ix_(self.gen, self.gen)])
            self.P_ss = np.diag(P)[sep]

    def factor(self, dz, d_box):
        P, A = self.P, self.A
        self.dz = dz
        self.d_box = d_box
        if not self.n_sep:
            M = P + np.diag(d_box)
            if A.shape[0]:
                M = M + A.T @ (dz[:, None] * A)
            self.chol = scipy.linalg.cho_factor(
                _regularized(M), lower=True, check_finite=False)
            return
        Ag = self.A_gen
        M_gg = self.P_gg + np.diag(d_box[self.gen]) + Ag.T @ (dz[:, None] * Ag)
        # cross and diagonal separable blocks
        n_g = Ag.shape[1]
        M_gs = np.zeros((self.n_sep, n_g))
        d_ss = self.P_ss + d_box[self.sep]
        if self.sep_rows.size:
            w = dz[self.sep_rows] * self.sep_vals
            M_gs[self.seg_cols] = np.add.reduceat(
                w[:, None] * self.Ag_sep, self.seg_starts, axis=0)
            d_ss += np.bincount(self.sep_cols, weights=w * self.sep_vals,
                                minlength=self.n_sep)
        self.d_ss = d_ss
        self.M_gs = M_gs
        M_sc = M_gg - (M_gs.T / d_ss) @ M_gs
        self.chol = scipy.linalg.cho_factor(
            _regularized(M_sc), lower=True, check_finite=False)

    def _solve_once(self, r):
        if not self.n_sep:
            return scipy.linalg.cho_solve(self.chol, r, check_finite=False)
        r_g = r[self.gen]
        r_s = r[self.sep]
        rhs = r_g - self.M_gs.T @ (r_s / self.d_ss)
        dp_g = scipy.linalg.cho_solve(self.chol, rhs, check_finite=False)
        dp_s = (r_s - self.M_gs @ dp_g) / self.d_ss
        out = np.empty_like(r)
        out[self.gen] = dp_g
        out[self.sep] = dp_s
        return out

    def matvec(self, x):
        y = self.P @ x + self.d_box * x
        if self.A.shape[0]:
            y += self.A.T @ (self.dz * (self.A @ x))
        return y

    def solve(self, r):
        # iterative refinement against the true (unregularized) matrix; the
        # factor carries both a safeguard shift and the barrier's extreme
        # diagonal, so one or two passes buy several digits in the tail
        dp = self._solve_once(r)
        scale = float(np.max(np.abs(r), initial=1.0))
        for _ in range(2):
            res = r - self.matvec(dp)
            if np.max(np.abs(res), initial=0.0) <= 1e-14 * max(scale, 1.0):
                break
            dp = dp + self._solve_once(res)
        return dp


def _regularized(M):
    # escalate a diagonal shift until the factorization goes through
    scale = max(1.0, float(np.max(np.abs(np.diag(M)))))
    reg = 0.0
    for _ in range(8):
        try:
            scipy.linalg.cho_factor(M + reg * np.eye(M.shape[0]) if reg
                                    else M, lower=True, check_finite=False)
            return M + reg * np.eye(M.shape[0]) if reg else M
        except scipy.linalg.LinAlgError:
            reg = 1e-12 * scale if reg == 0.0 else reg * 100.0
    raise scipy.linalg.LinAlgError("kkt factorization failed")


def _max_step(v, dv):
    # largest alpha in (0, 1] with v + alpha dv >= 0
    neg = dv < 0.0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def solve(P: Array, g: Array, a_ineq: Array, b: Array, p_min: Array,
          p_max: Array, options: QpOptions | None = None,
          warm_start: Array | None = None) -> QpSolution:
    """Interior-point solve of the box-and-inequality QP. See module doc."""
    opts = options or QpOptions()
    P = np.asarray(P, dtype=float)
    P = 0.5 * (P + P.T)
    g = np.asarray(g, dtype=float)
    a_raw = np.asarray(a_ineq, dtype=float).reshape(-1, P.shape[0])
    b_raw = np.asarray(b, dtype=float).reshape(-1)
    p_min = np.asarray(p_min, dtype=float)
    p_max = np.asarray(p_max, dtype=float)
    n = P.shape[0]
    m = a_raw.shape[0]

    Ph, gh, Ah, bh, lo, hi, d_scl, e_scl, c_scl = _ruiz_equilibrate(
        P, g, a_raw, b_raw, p_min, p_max, opts.ruiz_iterations)
    lo_fin = np.isfinite(lo)
    hi_fin = np.isfinite(hi)
    n_pairs = m + int(lo_fin.sum()) + int(hi_fin.sum())

    if n_pairs == 0:
        # unconstrained: single symmetric solve
        try:
            p_hat = scipy.linalg.cho_solve(
                scipy.linalg.cho_factor(_regularized(Ph), lower=True,
                                        check_finite=False),
                -gh, check_finite=False)
            status = OPTIMAL
        except scipy.linalg.LinAlgError:
            p_hat = np.zeros(n)
            status = NUMERICAL_FAILURE
        p = d_scl * p_hat
        rd = float(np.max(np.abs(Ph @ p_hat + gh), initial=0.0))
        kkt = KktResiduals(0.0, rd, 0.0)
        obj = float(0.5 * p @ P @ p + g @ p)
        return QpSolution(p, status, 0, kkt, np.zeros(0), np.zeros(n),
                          np.zeros(n), obj)

    kkt_mat = _SchurKkt(Ph, Ah, _detect_separable(Ph, Ah))

    # strictly interior start; a warm point keeps a much smaller margin so
    # near-active coordinates are not pushed off the boundary they sit on,
    # and gets duals matched to it (z = mu0/s) so the first centering step
    # does not have to undo a cold z = 1 guess.
    if warm_start is not None:
        p_hat = np.asarray(warm_start, dtype=float) / d_scl
        span = np.where(lo_fin & hi_fin, 1e-3 * (hi - lo), 1e-6)
        margin = np.minimum(1e-6, span)
    else:
        p_hat = np.zeros(n)
        span = np.where(lo_fin & hi_fin, 0.1 * (hi - lo), 1.0)
        margin = np.minimum(1.0, span)
    p_hat = np.clip(p_hat,
                    np.where(lo_fin, lo + margin, -np.inf),
                    np.where(hi_fin, hi - margin, np.inf))
    gl = p_hat[lo_fin] - lo[lo_fin]
    gu = hi[hi_fin] - p_hat[hi_fin]
    if warm_start is not None:
        s = np.maximum(bh - Ah @ p_hat, 1e-6) if m else np.zeros(0)
        mu0 = 1e-2
        z = np.clip(mu0 / s, 1e-6, 1e6) if m else np.zeros(0)
        w_l = np.clip(mu0 / gl, 1e-6, 1e6)
        w_u = np.clip(mu0 / gu, 1e-6, 1e6)
    else:
        s = np.maximum(bh - Ah @ p_hat, 1.0) if m else np.zeros(0)
        z = np.ones(m)
        w_l = np.ones(gl.shape[0])
        w_u = np.ones(gu.shape[0])

    def residuals(p_hat, s, z, gl, gu, w_l, w_u):
        r_d = Ph @ p_hat + gh
        if m:
            r_d = r_d + Ah.T @ z
        r_d[lo_fin] -= w_l
        r_d[hi_fin] += w_u
        r_p = Ah @ p_hat + s - bh if m else np.zeros(0)
        r_gl = p_hat[lo_fin] - lo[lo_fin] - gl
        r_gu = hi[hi_fin] - p_hat[hi_fin] - gu
        return r_d, r_p, r_gl, r_gu

    def merit_of(r_d, r_p, r_gl, r_gu, mu):
        return (mu + float(np.max(np.abs(r_d), initial=0.0))
                + float(np.max(np.abs(r_p), initial=0.0))
                + float(np.max(np.abs(r_gl), initial=0.0))
                + float(np.max(np.abs(r_gu), initial=0.0)))

    def mu_of(s, z, gl, gu, w_l, w_u):
        tot = (float(s @ z) if m else 0.0) + float(gl @ w_l) + float(gu @ w_u)
        return tot / n_pairs

    def res_floors(p_hat, s, z, w_l, w_u):
        # evaluating A^T z - w or A p + s - b carries eps times the largest
        # term of roundoff, so when the iterate carries large magnitudes an
        # absolute residual test sits below the evaluation noise; floor the
        # tolerance there. Complementarity products have no cancellation,
        # so that test stays absolute.
        sc_d = max(1.0, float(np.max(np.abs(Ph @ p_hat), initial=0.0)),
                   float(np.max(w_l, initial=0.0)),
                   float(np.max(w_u, initial=0.0)))
        if m:
            sc_d = max(sc_d, float(np.max(np.abs(Ah.T @ z), initial=0.0)))
        sc_p = max(1.0, float(np.max(np.abs(s), initial=0.0)),
                   float(np.max(np.abs(p_hat), initial=0.0)))
        eps20 = 20.0 * np.finfo(float).eps
        return eps20 * sc_p, eps20 * sc_d, sc_d

    best = None
    best_it = 0
    status = MAX_ITERATIONS
    iters_done = 0
    for it in range(opts.max_iterations):
        r_d, r_p, r_gl, r_gu = residuals(p_hat, s, z, gl, gu, w_l, w_u)
        mu = mu_of(s, z, gl, gu, w_l, w_u)
        merit = merit_of(r_d, r_p, r_gl, r_gu, mu)
        if opts.verbose:
            print(f"it {it:3d} mu {mu:9.2e} rp "
                  f"{np.max(np.abs(r_p), initial=0.0):9.2e} rd "
                  f"{np.max(np.abs(r_d), initial=0.0):9.2e} merit {merit:9.2e}")
        if best is None or merit < best[0]:
            best = (merit, p_hat.copy(), s.copy(), z.copy(), gl.copy(),
                    gu.copy(), w_l.copy(), w_u.copy())
            best_it = it
        comp_inf = 0.0
        if m:
            comp_inf = float(np.max(np.abs(s * z), initial=0.0))
        comp_inf = max(comp_inf,
                       float(np.max(np.abs(gl * w_l), initial=0.0)),
                       float(np.max(np.abs(gu * w_u), initial=0.0)))
        fl_p, fl_d, sc_d = res_floors(p_hat, s, z, w_l, w_u)
        if (np.max(np.abs(r_p), initial=0.0) <= max(opts.tol, fl_p)
                and np.max(np.abs(r_d), initial=0.0) <= max(opts.tol, fl_d)
                and comp_inf <= opts.tol):
            status = OPTIMAL
            iters_done = it
            break
        # dual-residual floor: each step's dual recovery divides by the
        # floored gaps, injecting eps * (z/s) * step of noise into the
        # duals, so on stiff problems rd wanders near eps * sc_d without
        # converging further. Once everything else is at tolerance and rd
        # has made no progress for several iterations, the best iterate is
        # optimal to working precision.
        if (it - best_it >= 5
                and np.max(np.abs(r_p), initial=0.0) <= max(opts.tol, fl_p)
                and comp_inf <= opts.tol
                and np.max(np.abs(r_d), initial=0.0) <= opts.tol * sc_d):
            if best is not None and best[0] < merit:
                _, p_hat, s, z, gl, gu, w_l, w_u = best
            status = OPTIMAL
            iters_done = it
            break
        # a crawl with tiny residuals and tiny mean gap is a degenerate
        # tail; stop and let the polish settle it rather than grind the
        # iteration budget
        if (it - best_it >= 5
                and np.max(np.abs(r_p), initial=0.0) <= max(10.0 * opts.tol,
                                                            fl_p)
                and np.max(np.abs(r_d), initial=0.0) <= max(10.0 * opts.tol,
                                                            fl_d)
                and mu <= 10.0 * opts.tol):
            iters_done = it
            break
        iters_done = it + 1

        # gap floors: dividing by the true gap overflows once a pair pins
        # to its boundary, and capping only the matrix ratio would make the
        # recovered dz/dw inconsistent with the factored system (the dual
        # residual then grows along the step instead of contracting).
        # Flooring the gap everywhere solves a nearby Newton system exactly,
        # so the linear residual updates stay affine-exact.
        s_t = np.maximum(np.maximum(s, z / _RATIO_CAP), _TINY) \
            if m else np.zeros(0)
        gl_t = np.maximum(np.maximum(gl, w_l / _RATIO_CAP), _TINY)
        gu_t = np.maximum(np.maximum(gu, w_u / _RATIO_CAP), _TINY)
        dz_diag = z / s_t if m else np.zeros(0)
        d_box = np.zeros(n)
        d_box[lo_fin] += w_l / gl_t
        d_box[hi_fin] += w_u / gu_t
        try:
            kkt_mat.factor(dz_diag, d_box)
        except scipy.linalg.LinAlgError:
            status = NUMERICAL_FAILURE
            break

        def reduced_solve(rc_a, rc_l, rc_u):
            rhs = -r_d.copy()
            if m:
                rhs -= Ah.T @ ((z * r_p - rc_a) / s_t)
            rhs[lo_fin] -= (rc_l + w_l * r_gl) / gl_t
            rhs[hi_fin] += (rc_u + w_u * r_gu) / gu_t
            dp = kkt_mat.solve(rhs)
            ds = -r_p - Ah @ dp if m else np.zeros(0)
            dz = (-rc_a - z * ds) / s_t if m else np.zeros(0)
            dgl = dp[lo_fin] + r_gl
            dgu = -dp[hi_fin] + r_gu
            dw_l = (-rc_l - w_l * dgl) / gl_t
            dw_u = (-rc_u - w_u * dgu) / gu_t
            return dp, ds, dz, dgl, dgu, dw_l, dw_u

        # predictor
        aff = reduced_solve(s * z if m else np.zeros(0), gl * w_l, gu * w_u)
        dp_a, ds_a, dz_a, dgl_a, dgu_a, dwl_a, dwu_a = aff
        a_p = min(_max_step(s, ds_a) if m else 1.0,
                  _max_step(gl, dgl_a), _max_step(gu, dgu_a))
        a_d = min(_max_step(z, dz_a) if m else 1.0,
                  _max_step(w_l, dwl_a), _max_step(w_u, dwu_a))
        mu_aff = (((s + a_p * ds_a) @ (z + a_d * dz_a) if m else 0.0)
                  + (gl + a_p * dgl_a) @ (w_l + a_d * dwl_a)
                  + (gu + a_p * dgu_a) @ (w_u + a_d * dwu_a)) / n_pairs
        sigma = min(1.0, max(0.0, (mu_aff / max(mu, _TINY)))**3)

        # push the boundary fraction toward 1 as the gap closes; long tail
        # steps are safe once the iterate is nearly central
        tau = max(opts.tau, 1.0 - 10.0 * mu)

        def try_direction(rc_a, rc_l, rc_u, equal_steps=False):
            # returns the accepted state or None if no step decreases merit
            dp, ds, dz, dgl, dgu, dw_l, dw_u = reduced_solve(rc_a, rc_l, rc_u)
            a_p = min(1.0, tau * min(_max_step(s, ds) if m else 1.0,
                                     _max_step(gl, dgl),
                                     _max_step(gu, dgu)))
            a_d = min(1.0, tau * min(_max_step(z, dz) if m else 1.0,
                                     _max_step(w_l, dw_l),
                                     _max_step(w_u, dw_u)))
            if equal_steps:
                # equal steps keep every residual shrinking as (1 - alpha),
                # which makes backtracking a true descent safeguard
                a_p = a_d = min(a_p, a_d)
            # residuals are affine in (a_p, a_d); precompute the direction
            # matvecs so every backtracking trial is vector arithmetic
            u_dp = Ph @ dp
            u_dd = Ah.T @ dz if m else np.zeros(n)
            u_dd[lo_fin] -= dw_l
            u_dd[hi_fin] += dw_u
            u_p = Ah @ dp + ds if m else np.zeros(0)
            u_gl = dp[lo_fin] - dgl
            u_gu = -dp[hi_fin] - dgu
            # non-monotone acceptance: residuals may rise transiently with
            # split primal/dual steps, so only genuine blow-ups backtrack
            limit = 10.0 * (merit + opts.tol)
            for _ in range(20):
                s_n = s + a_p * ds
                gl_n = gl + a_p * dgl
                gu_n = gu + a_p * dgu
                z_n = z + a_d * dz
                wl_n = w_l + a_d * dw_l
                wu_n = w_u + a_d * dw_u
                r_dn = r_d + a_p * u_dp + a_d * u_dd
                r_pn = r_p + a_p * u_p
                r_gln = r_gl + a_p * u_gl
                r_gun = r_gu + a_p * u_gu
                mu_n = mu_of(s_n, z_n, gl_n, gu_n, wl_n, wu_n)
                if merit_of(r_dn, r_pn, r_gln, r_gun, mu_n) <= limit:
                    return p_hat + a_p * dp, s_n, z_n, gl_n, gu_n, wl_n, wu_n
                a_p *= 0.5
                a_d *= 0.5
                if max(a_p, a_d) < 1e-14:
                    return None
            return None

        # Mehrotra corrector first; if its merit cannot decrease for any
        # step length, fall back to plain centering directions, which are
        # descent directions for the merit away from stationarity.
        rc_meh_a = s * z + ds_a * dz_a - sigma * mu if m else np.zeros(0)
        rc_meh_l = gl * w_l + dgl_a * dwl_a - sigma * mu
        rc_meh_u = gu * w_u + dgu_a * dwu_a - sigma * mu
        new_state = try_direction(rc_meh_a, rc_meh_l, rc_meh_u)
        if new_state is None:
            new_state = try_direction(rc_meh_a, rc_meh_l, rc_meh_u,
                                      equal_steps=True)
        if new_state is None:
            sig_safe = max(0.5, min(0.99, sigma))
            new_state = try_direction(
                s * z - sig_safe * mu if m else np.zeros(0),
                gl * w_l - sig_safe * mu, gu * w_u - sig_safe * mu,
                equal_steps=True)
        if new_state is None:
            new_state = try_direction(
                s * z - 0.95 * mu if m else np.zeros(0),
                gl * w_l - 0.95 * mu, gu * w_u - 0.95 * mu,
                equal_steps=True)
        if new_state is None:
            break
        p_hat, s, z, gl, gu, w_l, w_u = new_state
    else:
        iters_done = opts.max_iterations

    if status != OPTIMAL and best is not None:
        _, p_hat, s, z, gl, gu, w_l, w_u = best
        r_d, r_p, r_gl, r_gu = residuals(p_hat, s, z, gl, gu, w_l, w_u)
        comp_inf = 0.0
        if m:
            comp_inf = float(np.max(np.abs(s * z), initial=0.0))
        comp_inf = max(comp_inf,
                       float(np.max(np.abs(gl * w_l), initial=0.0)),
                       float(np.max(np.abs(gu * w_u), initial=0.0)))
        fl_p, fl_d, _ = res_floors(p_hat, s, z, w_l, w_u)
        if (np.max(np.abs(r_p), initial=0.0) <= max(opts.tol, fl_p)
                and np.max(np.abs(r_d), initial=0.0) <= max(opts.tol, fl_d)
                and comp_inf <= opts.tol):
            status = OPTIMAL

    r_d, r_p, r_gl, r_gu = residuals(p_hat, s, z, gl, gu, w_l, w_u)
    comp_inf = float(np.max(np.abs(s * z), initial=0.0)) if m else 0.0
    comp_inf = max(comp_inf, float(np.max(np.abs(gl * w_l), initial=0.0)),
                   float(np.max(np.abs(gu * w_u), initial=0.0)))
    prim_inf = float(np.max(np.abs(r_p), initial=0.0))
    prim_inf = max(prim_inf, float(np.max(lo[lo_fin] - p_hat[lo_fin],
                                          initial=0.0)),
                   float(np.max(p_hat[hi_fin] - hi[hi_fin], initial=0.0)))
    kkt_scaled = KktResiduals(prim_inf, float(np.max(np.abs(r_d),
                                                     initial=0.0)), comp_inf)

    # unscale
    p = d_scl * p_hat
    z_out = (e_scl * z) / c_scl if m else np.zeros(0)
    w_lo_out = np.zeros(n)
    w_hi_out = np.zeros(n)
    w_lo_out[lo_fin] = w_l / d_scl[lo_fin] / c_scl
    w_hi_out[hi_fin] = w_u / d_scl[hi_fin] / c_scl

    fl_p, fl_d, _ = res_floors(p_hat, s, z, w_l, w_u)
    near = (kkt_scaled.primal_residual <= max(10.0 * opts.tol, fl_p)
            and kkt_scaled.dual_residual <= max(10.0 * opts.tol, fl_d)
            and mu_of(s, z, gl, gu, w_l, w_u) <= 10.0 * opts.tol)
    if opts.polish and (status == OPTIMAL or near):
        polished = _polish(P, g, a_raw, b_raw, p_min, p_max,
                           p, z_out, w_lo_out, w_hi_out)
        if polished is not None:
            p, z_out, w_lo_out, w_hi_out = polished
            if status != OPTIMAL:
                raw = kkt_residuals(P, g, a_raw, b_raw, (p_min, p_max), p,
                                    (z_out, w_lo_out, w_hi_out))
                if raw.max() <= opts.tol:
                    # degenerate tail resolved exactly by the active-set
                    # solve; report the residuals of the polished point
                    status = OPTIMAL
                    wl_full = np.zeros(n)
                    wh_full = np.zeros(n)
                    wl_full[lo_fin] = w_lo_out[lo_fin] * d_scl[lo_fin] * c_scl
                    wh_full[hi_fin] = w_hi_out[hi_fin] * d_scl[hi_fin] * c_scl
                    kkt_scaled = kkt_residuals(
                        Ph, gh, Ah, bh, (lo, hi), p / d_scl,
                        (z_out * c_scl / e_scl if m else np.zeros(0),
                         wl_full, wh_full))

    obj = float(0.5 * p @ P @ p + g @ p)
    return QpSolution(p, status, iters_done, kkt_scaled, z_out,
                      w_lo_out, w_hi_out, obj)


def _polish(P, g, A, b, p_min, p_max, p, z, w_lo, w_hi):
    """Active-set resolve seeded by the interior-point split; accept only
    if it strictly improves the raw KKT residuals.

    The seed split can misclassify weakly active constraints, so members
    with negative multipliers are dropped and violated constraints added
    over a few equality resolves before giving up.
    """
    n = P.shape[0]
    m = A.shape[0]
    before = kkt_residuals(P, g, A, b, (p_min, p_max), p,
                           (z, w_lo, w_hi)).max()
    scale_p = 1.0 + float(np.max(np.abs(p)))
    if m:
        slack = b - A @ p
        row_act = z > np.maximum(slack, 0.0) / scale_p
    else:
        row_act = np.zeros(0, dtype=bool)
    at_lo = np.isfinite(p_min) & (w_lo > np.maximum(p - p_min, 0.0) / scale_p)
    at_hi = np.isfinite(p_max) & (w_hi > np.maximum(p_max - p, 0.0) / scale_p)
    both = at_lo & at_hi
    if np.any(both):
        keep_lo = w_lo >= w_hi
        at_lo &= ~both | keep_lo
        at_hi &= ~both | ~keep_lo
    dual_floor = -1e-9 * (1.0 + float(np.max(np.abs(z), initial=0.0)))
    prim_tol = 1e-11 * scale_p

    for _ in range(6):
        fixed = at_lo | at_hi
        free = ~fixed
        x_fix = np.where(at_lo, p_min, np.where(at_hi, p_max, 0.0))
        act_rows = np.flatnonzero(row_act)
        n_f = int(free.sum())
        n_a = act_rows.shape[0]
        if n_a > n_f:
            return None
        A_act = A[act_rows][:, free] if n_a else np.zeros((0, n_f))
        kkt = np.zeros((n_f + n_a, n_f + n_a))
        kkt[:n_f, :n_f] = P[np.ix_(free, free)]
        if n_a:
            kkt[:n_f, n_f:] = A_act.T
            kkt[n_f:, :n_f] = A_act
        rhs = np.concatenate((
            -g[free] - P[np.ix_(free, fixed)] @ x_fix[fixed],
            (b[act_rows] - A[act_rows][:, fixed] @ x_fix[fixed]) if n_a
            else np.zeros(0)))
        # symmetric equilibration, then LU with refinement. Only the
        # factored copy carries the dual shift: a shifted row displaces the
        # constraint by shift * multiplier, which with stiff penalties is
        # far from negligible, so the residuals must see the clean matrix.
        dinv = 1.0 / np.sqrt(np.maximum(
            np.max(np.abs(kkt), axis=1, initial=0.0), 1e-30))
        kkt_s = kkt * dinv[:, None] * dinv[None, :]
        rhs_s = rhs * dinv
        kkt_f = kkt_s.copy()
        if n_a:
            kkt_f[n_f:, n_f:] -= 1e-12 * np.eye(n_a)
        try:
            lu = scipy.linalg.lu_factor(kkt_f, check_finite=False)
            sol = scipy.linalg.lu_solve(lu, rhs_s, check_finite=False)
            for _ in range(3):
                res = rhs_s - kkt_s @ sol
                sol = sol + scipy.linalg.lu_solve(lu, res, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError):
            return None
        sol = sol * dinv
        if not np.all(np.isfinite(sol)):
            return None
        p_new = x_fix.copy()
        p_new[free] = sol[:n_f]
        z_new = np.zeros(m)
        if n_a:
            z_new[act_rows] = sol[n_f:]
        grad = P @ p_new + g + (A.T @ z_new if m else 0.0)
        w_lo_new = np.where(at_lo, grad, 0.0)
        w_hi_new = np.where(at_hi, -grad, 0.0)

        # classification errors show up as wrong dual signs or violated
        # inactive constraints; repair the sets and resolve
        drop_rows = row_act & (z_new < dual_floor)
        drop_lo = at_lo & (w_lo_new < dual_floor)
        drop_hi = at_hi & (w_hi_new < dual_floor)
        add_lo = np.isfinite(p_min) & ~fixed & (p_new < p_min - prim_tol)
        add_hi = np.isfinite(p_max) & ~fixed & (p_new > p_max + prim_tol)
        add_rows = np.zeros(m, dtype=bool)
        if m:
            add_rows = ~row_act & (A @ p_new - b > prim_tol)
        if not (np.any(drop_rows) or np.any(drop_lo) or np.any(drop_hi)
                or np.any(add_lo) or np.any(add_hi) or np.any(add_rows)):
            w_lo_new = np.maximum(w_lo_new, 0.0)
            w_hi_new = np.maximum(w_hi_new, 0.0)
            z_new = np.maximum(z_new, 0.0)
            after = kkt_residuals(P, g, A, b, (p_min, p_max), p_new,
                                  (z_new, w_lo_new, w_hi_new)).max()
            if not np.isfinite(after) or after >= before:
                return None
            return p_new, z_new, w_lo_new, w_hi_new
        row_act = (row_act & ~drop_rows) | add_rows
        at_lo = (at_lo & ~drop_lo) | add_lo
        at_hi = (at_hi & ~drop_hi) | add_hi
    return None
