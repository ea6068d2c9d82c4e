"""Dense interior-point solver for small structured concave programs.

The optimizers in this package repeatedly maximize a smooth concave
objective over a handful of complex Hermitian PSD matrix variables with
unit diagonals plus a few auxiliary scalars, subject to concave >= 0
inequality constraints.  Problem sizes are tiny (matrix order ~ M+1 <= 33)
but the solve count is large, so this module implements a primal barrier
method whose Newton systems are solved in closed form:

* the log-det barrier Hessian acts as G -> W^-1 G W^-1, whose inverse is
  the analytic map G -> W G W;
* every other curvature term is a rank-one outer product of the gradient
  of an affine functional, absorbed by a Woodbury correction;
* the unit-diagonal equalities are eliminated through a small Schur
  complement whose base block is simply |W|^2 entrywise.

Expressions are restricted to the families the subproblems actually use:
affine terms, -c * affine(x)^2, -c / affine(x), and c * log(affine(x)),
each with c >= 0, which keeps every expression concave by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# ------------------------------------------------------------------ points


class Point:
    """A primal point or dense gradient: scalar block + Hermitian matrices."""

    __slots__ = ("s", "mats")

    def __init__(self, s: np.ndarray, mats: Sequence[np.ndarray]):
        self.s = np.asarray(s, dtype=float)
        self.mats = [np.asarray(m, dtype=complex) for m in mats]

    @staticmethod
    def zeros(n_scalars: int, mat_dims: Sequence[int]) -> "Point":
        return Point(np.zeros(n_scalars), [np.zeros((n, n), complex) for n in mat_dims])

    def copy(self) -> "Point":
        return Point(self.s.copy(), [m.copy() for m in self.mats])

    def axpy(self, a: float, other: "Point") -> "Point":
        self.s += a * other.s
        for m, o in zip(self.mats, other.mats):
            m += a * o
        return self


def _dot(x: Point, y: Point) -> float:
    tot = float(np.dot(x.s, y.s))
    for a, b in zip(x.mats, y.mats):
        tot += float(np.vdot(a, b).real)
    return tot


# ------------------------------------------------------------- expressions


@dataclass
class LinF:
    """Affine functional c0 + s . x_s + sum_t Re tr(C_t X_t), C_t Hermitian."""

    const: float = 0.0
    s: Optional[np.ndarray] = None
    mats: Optional[list] = None   # len == n matrix vars; entries None or (n,n)

    def value(self, x: Point) -> float:
        v = self.const
        if self.s is not None:
            v += float(np.dot(self.s, x.s))
        if self.mats is not None:
            for c, m in zip(self.mats, x.mats):
                if c is not None:
                    v += float(np.vdot(c, m).real)
        return v

    def add_grad(self, out: Point, scale: float) -> None:
        if self.s is not None:
            out.s += scale * self.s
        if self.mats is not None:
            for c, m in zip(self.mats, out.mats):
                if c is not None:
                    m += scale * c

    def pure_scalar_index(self) -> Optional[int]:
        """Index if this functional touches exactly one scalar and no matrix."""
        if self.mats is not None and any(c is not None for c in self.mats):
            return None
        if self.s is None:
            return None
        nz = np.nonzero(self.s)[0]
        return int(nz[0]) if nz.size == 1 else None


NEGQUAD = "negquad"   # -c * a(x)^2
NEGRECIP = "negrecip"  # -c / a(x),   domain a(x) > 0
LOG = "log"            # +c * log a(x), domain a(x) > 0


@dataclass
class Atom:
    kind: str
    a: LinF
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("atom coefficients must be nonnegative (concavity)")
        if self.kind not in (NEGQUAD, NEGRECIP, LOG):
            raise ValueError(f"unknown atom kind {self.kind}")


@dataclass
class ConcaveExpr:
    """affine + sum of concave atoms; value/gradient/curvature evaluation."""

    lf: LinF = field(default_factory=LinF)
    atoms: list = field(default_factory=list)

    def domain_ok(self, x: Point) -> bool:
        return all(
            at.a.value(x) > 0.0 for at in self.atoms if at.kind in (NEGRECIP, LOG)
        )

    def value(self, x: Point) -> float:
        v = self.lf.value(x)
        for at in self.atoms:
            a = at.a.value(x)
            if at.kind == NEGQUAD:
                v -= at.c * a * a
            elif at.kind == NEGRECIP:
                v -= at.c / a
            else:
                v += at.c * math.log(a)
        return v

    def add_grad(self, out: Point, scale: float, x: Point) -> None:
        self.lf.add_grad(out, scale)
        for at in self.atoms:
            a = at.a.value(x)
            if at.kind == NEGQUAD:
                at.a.add_grad(out, -2.0 * at.c * a * scale)
            elif at.kind == NEGRECIP:
                at.a.add_grad(out, at.c / (a * a) * scale)
            else:
                at.a.add_grad(out, at.c / a * scale)

    def curvatures(self, x: Point):
        """Yield (rho, LinF) with local Hessian == -sum rho * grad(a) grad(a)^T."""
        for at in self.atoms:
            a = at.a.value(x)
            if at.kind == NEGQUAD:
                yield 2.0 * at.c, at.a
            elif at.kind == NEGRECIP:
                yield 2.0 * at.c / (a * a * a), at.a
            else:
                yield at.c / (a * a), at.a


# ------------------------------------------------------------------- spec


@dataclass
class SubproblemSpec:
    """One structured concave maximization instance.

    Matrix variables are Hermitian PSD with unit diagonal; `ineqs` are
    expressions constrained >= 0.
    """

    mat_dims: list
    n_scalars: int
    objective: ConcaveExpr
    ineqs: list = field(default_factory=list)
    name: str = ""

    def describe(self) -> str:
        lines = [
            f"spec {self.name or '<anon>'}: {len(self.mat_dims)} matrix vars "
            f"{self.mat_dims}, {self.n_scalars} scalars, {len(self.ineqs)} ineqs",
            f"  objective: affine + {len(self.objective.atoms)} atoms",
        ]
        for i, h in enumerate(self.ineqs):
            kinds = ",".join(at.kind for at in h.atoms) or "affine"
            lines.append(f"  ineq[{i}]: {kinds} >= 0")
        return "\n".join(lines)

    def _padded_with_slack(self):
        """Copy with one extra scalar (index n_scalars) used by phase I."""

        def pad_lf(lf: LinF, extra: float = 0.0) -> LinF:
            s = np.zeros(self.n_scalars + 1)
            if lf.s is not None:
                s[: self.n_scalars] = lf.s
            s[self.n_scalars] = extra
            return LinF(lf.const, s, lf.mats)

        def pad_expr(e: ConcaveExpr, extra: float = 0.0) -> ConcaveExpr:
            return ConcaveExpr(
                pad_lf(e.lf, extra),
                [Atom(at.kind, pad_lf(at.a), at.c) for at in e.atoms],
            )

        tau_obj = ConcaveExpr(pad_lf(LinF(), extra=1.0))
        ineqs = [pad_expr(h, extra=-1.0) for h in self.ineqs]
        return SubproblemSpec(
            list(self.mat_dims), self.n_scalars + 1, tau_obj, ineqs,
            name=self.name + "+phase1",
        )


# --------------------------------------------------------------- solution


@dataclass
class KKTReport:
    stationarity: float
    primal_violation: float
    comp_slackness: float
    min_psd_eig: float


@dataclass
class ConicSolution:
    scalars: np.ndarray
    mats: list
    objective: float
    gap: float
    status: str                 # optimal | max-iter | infeasible
    newton_steps: int
    centerings: int
    phase1_used: bool = False

    @property
    def point(self) -> Point:
        return Point(self.scalars, self.mats)


# ------------------------------------------------------------ the solver


def _feasible(spec: SubproblemSpec, x: Point, strict: float = 0.0) -> bool:
    if not spec.objective.domain_ok(x):
        return False
    for h in spec.ineqs:
        if not h.domain_ok(x) or h.value(x) <= strict:
            return False
    for m in x.mats:
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return False
    return True


def _flatten(p: Point) -> np.ndarray:
    parts = [p.s]
    for m in p.mats:
        parts.append(m.real.ravel())
        parts.append(m.imag.ravel())
    return np.concatenate(parts) if parts else np.zeros(0)


def _robust_chol(a: np.ndarray, base_jitter: float = 1e-14) -> np.ndarray:
    """Cholesky with escalating diagonal jitter.  The factor only serves as
    a preconditioner (iterative refinement fixes the perturbation), so a
    generous jitter beats a failure."""
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(np.diag(a)))))
    jitter = base_jitter * scale
    for _ in range(30):
        try:
            return np.linalg.cholesky(a + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            jitter *= 100.0
    raise np.linalg.LinAlgError("could not stabilize Cholesky factorization")


class _Barrier:
    """Newton machinery for the scaled barrier problem

        min_x  -f(x) - (1/t) [ sum log h_j(x) + sum logdet X_t ]
        s.t.   diag(X_t) = 1.

    Scaling by 1/t keeps every assembled quantity O(1) along the central
    path.  The Hessian is the analytic barrier operator plus rank-one
    terms, inverted by Woodbury + a Schur complement over the diagonal
    equalities; one or two iterative-refinement passes with the exactly
    applied Hessian recover the digits Woodbury cancellation loses when
    constraints become very active.
    """

    def __init__(self, spec: SubproblemSpec, delta: float = 1e-11):
        self.spec = spec
        self.delta = delta
        self.T = len(spec.mat_dims)
        self.n_eq = sum(spec.mat_dims)

    # -- value ------------------------------------------------------------
    def phi(self, t: float, x: Point) -> float:
        spec = self.spec
        if not spec.objective.domain_ok(x):
            return np.inf
        val = -spec.objective.value(x)
        for h in spec.ineqs:
            if not h.domain_ok(x):
                return np.inf
            hv = h.value(x)
            if hv <= 0.0:
                return np.inf
            val -= math.log(hv) / t
        for m in x.mats:
            try:
                L = np.linalg.cholesky(m)
            except np.linalg.LinAlgError:
                return np.inf
            val -= 2.0 * float(np.sum(np.log(np.diag(L).real))) / t
        return val

    # -- model assembly per point -------------------------------------------
    def _model(self, t: float, x: Point):
        spec = self.spec
        S = spec.n_scalars
        inv_t = 1.0 / t
        Winvs = [np.linalg.inv(m) for m in x.mats]

        g = Point.zeros(S, spec.mat_dims)
        spec.objective.add_grad(g, -1.0, x)
        ks = np.full(S, self.delta)
        ro_coef = []
        ro_vec = []

        def push(rho: float, lf: LinF):
            if rho <= 0.0:
                return
            idx = lf.pure_scalar_index()
            if idx is not None:
                ks[idx] += rho * float(lf.s[idx]) ** 2
                return
            p = Point.zeros(S, spec.mat_dims)
            lf.add_grad(p, 1.0)
            ro_coef.append(rho)
            ro_vec.append(p)

        for rho, lf in spec.objective.curvatures(x):
            push(rho, lf)
        for h in spec.ineqs:
            hv = h.value(x)
            hg = Point.zeros(S, spec.mat_dims)
            h.add_grad(hg, 1.0, x)
            g.axpy(-inv_t / hv, hg)
            idx = None
            if not any(np.any(m) for m in hg.mats):
                nz = np.nonzero(hg.s)[0]
                if nz.size == 1:
                    idx = int(nz[0])
            if idx is not None:
                ks[idx] += inv_t * (hg.s[idx] / hv) ** 2
            else:
                ro_coef.append(inv_t / (hv * hv))
                ro_vec.append(hg)
            for rho, lf in h.curvatures(x):
                push(inv_t * rho / hv, lf)
        for gm, wi in zip(g.mats, Winvs):
            gm -= inv_t * wi

        return _KKTModel(self, t, x, Winvs, g, ks, ro_coef, ro_vec)

    # -- centering ----------------------------------------------------------
    def center(self, t: float, x: Point, ctol: float = 1e-10, max_steps: int = 50):
        steps = 0
        prev_lam2 = np.inf
        for _ in range(max_steps):
            model = self._model(t, x)
            delta, lam2 = model.direction()
            steps += 1
            if not np.isfinite(lam2) or lam2 <= 0:
                break
            if lam2 / 2.0 <= ctol:
                break
            if lam2 / 2.0 <= 1e-7 and lam2 > 0.9 * prev_lam2:
                break          # numerical floor; close enough to centered
            prev_lam2 = lam2
            phi0 = self.phi(t, x)
            a = 1.0
            ok = False
            while a > 1e-13:
                trial = x.copy().axpy(a, delta)
                for m in trial.mats:
                    np.fill_diagonal(m, 1.0)
                phiv = self.phi(t, trial)
                if phiv < phi0 - 0.25 * a * lam2 + 1e-13 * abs(phi0):
                    x = trial
                    ok = True
                    break
                a *= 0.5
            if not ok:
                break
        return x, steps


class _KKTModel:
    """Quadratic model H = K + sum rho v v^T at one point, with exact apply,
    Woodbury/Schur solve, and iterative refinement for the Newton step."""

    def __init__(self, barrier, t, x, Winvs, g, ks, ro_coef, ro_vec):
        self.spec = barrier.spec
        self.T = barrier.T
        self.n_eq = barrier.n_eq
        self.t = t
        self.x = x
        self.Winvs = Winvs
        self.g = g
        self.ks = ks
        self.ks_inv = 1.0 / ks
        self.ro_coef = np.asarray(ro_coef)
        self.ro_vec = ro_vec
        self.R = len(ro_coef)
        self._factor()

    def _kinv(self, p: Point) -> Point:
        return Point(
            p.s * self.ks_inv,
            [self.t * (m @ pm @ m) for m, pm in zip(self.x.mats, p.mats)],
        )

    def _factor(self):
        self.kiv = [self._kinv(v) for v in self.ro_vec]
        if self.R:
            self.F = np.stack([_flatten(v) for v in self.ro_vec])
            KiF = np.stack([_flatten(v) for v in self.kiv])
            Mw = np.diag(1.0 / self.ro_coef) + self.F @ KiF.T
            self.Mw = 0.5 * (Mw + Mw.T)
            self.Mw_chol = _robust_chol(self.Mw)
            self.Dg = np.stack([
                np.concatenate([np.diag(v.mats[ti]).real for ti in range(self.T)])
                for v in self.kiv
            ]) if self.T else np.zeros((self.R, 0))
        else:
            self.Dg = np.zeros((0, self.n_eq))
        # Schur complement of the unit-diagonal equality block.
        if not self.n_eq:
            self.S_chol = None
            return
        Ssch = np.zeros((self.n_eq, self.n_eq))
        off = 0
        for m in self.x.mats:
            n = m.shape[0]
            Ssch[off:off + n, off:off + n] = self.t * np.abs(m) ** 2
            off += n
        if self.R:
            Y = self._mw_solve(self.Dg)
            Ssch -= self.Dg.T @ Y
        Ssch = 0.5 * (Ssch + Ssch.T)
        self.S_chol = _robust_chol(Ssch, base_jitter=1e-13)

    def _mw_solve(self, b):
        return np.linalg.solve(self.Mw_chol.T, np.linalg.solve(self.Mw_chol, b))

    def _ktilde_inv(self, p: Point) -> Point:
        kp = self._kinv(p)
        if not self.R:
            return kp
        w = self._mw_solve(self.F @ _flatten(kp))
        for wi, v in zip(w, self.kiv):
            kp.axpy(-float(wi), v)
        return kp

    def _eq_rows(self, p: Point) -> np.ndarray:
        if not self.T:
            return np.zeros(0)
        return np.concatenate([np.diag(m).real for m in p.mats])

    def _embed(self, nu: np.ndarray) -> Point:
        emb = Point.zeros(self.spec.n_scalars, self.spec.mat_dims)
        off = 0
        for ti, n in enumerate(self.spec.mat_dims):
            np.fill_diagonal(emb.mats[ti], nu[off:off + n])
            off += n
        return emb

    def h_apply(self, v: Point) -> Point:
        """Exact product of the assembled Hessian model with v."""
        out = Point(
            self.ks * v.s,
            [(wi @ vm @ wi) / self.t for wi, vm in zip(self.Winvs, v.mats)],
        )
        for rho, u in zip(self.ro_coef, self.ro_vec):
            out.axpy(float(rho) * _dot(u, v), u)
        return out

    def solve_kkt(self, rp: Point, rd: np.ndarray):
        d_unc = self._ktilde_inv(rp)
        if self.n_eq:
            nu = np.linalg.solve(
                self.S_chol.T,
                np.linalg.solve(self.S_chol, self._eq_rows(d_unc) - rd),
            )
            dx = d_unc.axpy(-1.0, self._ktilde_inv(self._embed(nu)))
        else:
            nu = np.zeros(0)
            dx = d_unc
        return dx, nu

    def direction(self, refine: int = 2):
        r0 = Point(-self.g.s, [-m for m in self.g.mats])
        dx, nu = self.solve_kkt(r0.copy(), np.zeros(self.n_eq))
        gnorm = math.sqrt(max(_dot(self.g, self.g), 1e-300))
        for _ in range(refine):
            res_p = r0.copy().axpy(-1.0, self.h_apply(dx)).axpy(
                -1.0, self._embed(nu)
            )
            res_d = -self._eq_rows(dx)
            rnorm = math.sqrt(_dot(res_p, res_p) + float(res_d @ res_d))
            if rnorm <= 1e-12 * gnorm:
                break
            ddx, dnu = self.solve_kkt(res_p, res_d)
            dx.axpy(1.0, ddx)
            nu = nu + dnu
        lam2 = _dot(r0, dx)
        return dx, lam2


def solve(
    spec: SubproblemSpec,
    x0: Optional[Point] = None,
    tol: float = 1e-7,
    max_newton: int = 2000,
    mu: float = 30.0,
    stop_above: Optional[float] = None,
) -> ConicSolution:
    """Maximize spec.objective over its feasible set.

    `x0` must satisfy the unit diagonals and atom domains; if some
    inequality is violated (or x0 is None) a phase-I pass maximizes the
    minimum slack first.  Returns status "infeasible" when no strictly
    feasible point is found.
    """
    if x0 is None:
        x0 = Point(np.zeros(spec.n_scalars), [np.eye(n) for n in spec.mat_dims])
    x = x0.copy()
    for m in x.mats:
        np.fill_diagonal(m, 1.0)
    phase1_used = False

    if not _feasible(spec, x, strict=0.0):
        phase1_used = True
        x = _phase1(spec, x, tol)
        if x is None:
            return ConicSolution(
                x0.s.copy(), [m.copy() for m in x0.mats], -np.inf, np.inf,
                "infeasible", 0, 0, True,
            )

    barrier = _Barrier(spec)
    m_bar = len(spec.ineqs) + sum(spec.mat_dims)
    f0 = spec.objective.value(x)
    t = max(1.0, m_bar / max(1.0, abs(f0)))
    total_steps = 0
    centerings = 0
    status = "max-iter"
    while total_steps < max_newton:
        x, steps = barrier.center(t, x)
        total_steps += steps
        centerings += 1
        if stop_above is not None and spec.objective.value(x) > stop_above:
            status = "optimal"
            break
        if m_bar / t <= tol:
            status = "optimal"
            break
        t *= mu

    f_final = spec.objective.value(x)
    if f_final < f0:
        # never degrade a supplied feasible start
        x, f_final = x0.copy(), f0
    return ConicSolution(
        x.s, x.mats, f_final, m_bar / t, status, total_steps, centerings,
        phase1_used,
    )


def _phase1(spec: SubproblemSpec, x: Point, tol: float) -> Optional[Point]:
    """Maximize the minimum inequality slack until strictly positive."""
    if not spec.objective.domain_ok(x) or not all(
        h.domain_ok(x) for h in spec.ineqs
    ):
        return None
    for m in x.mats:
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return None
    p1 = spec._padded_with_slack()
    slacks = [h.value(x) for h in spec.ineqs]
    tau0 = min(slacks) - 1.0
    cap = abs(tau0) + 10.0
    cap_lf = LinF(cap, np.zeros(p1.n_scalars))
    cap_lf.s[-1] = -1.0
    p1.ineqs.append(ConcaveExpr(cap_lf))
    x1 = Point(np.append(x.s, tau0), [m.copy() for m in x.mats])
    sol = solve(p1, x1, tol=min(1e-6, tol * 10), stop_above=1e-7, mu=20.0)
    tau = sol.scalars[-1]
    if sol.status == "infeasible" or tau <= 0.0:
        return None
    out = Point(sol.scalars[:-1], sol.mats)
    return out if _feasible(spec, out) else None


# --------------------------------------------------------------- KKT check


def kkt_report(spec: SubproblemSpec, point: Point, act_tol: float = 1e-6) -> KKTReport:
    """Least-squares Lagrange-multiplier fit at `point`.

    Active inequality gradients, near-null PSD eigenvector duals and the
    unit-diagonal equality duals form the design matrix; the reported
    stationarity is the residual of projecting grad f onto their span.
    """
    S = spec.n_scalars
    g = Point.zeros(S, spec.mat_dims)
    spec.objective.add_grad(g, 1.0, point)

    cols = []
    min_eig = np.inf
    primal = 0.0
    hvals = [h.value(point) for h in spec.ineqs]
    for hv, h in zip(hvals, spec.ineqs):
        primal = max(primal, -hv)
    scale = max(1.0, max((abs(v) for v in hvals), default=1.0))
    for hv, h in zip(hvals, spec.ineqs):
        if hv <= act_tol * scale:
            hg = Point.zeros(S, spec.mat_dims)
            h.add_grad(hg, 1.0, point)
            cols.append(_flatten(hg))
    for ti, m in enumerate(point.mats):
        w, U = np.linalg.eigh(0.5 * (m + m.conj().T))
        min_eig = min(min_eig, float(w[0]))
        primal = max(primal, float(-w[0]))
        primal = max(primal, float(np.max(np.abs(np.diag(m) - 1.0))))
        for j in range(len(w)):
            if w[j] <= act_tol * max(1.0, w[-1]):
                d = Point.zeros(S, spec.mat_dims)
                d.mats[ti] = np.outer(U[:, j], U[:, j].conj())
                cols.append(_flatten(d))
        for i in range(m.shape[0]):
            d = Point.zeros(S, spec.mat_dims)
            d.mats[ti][i, i] = 1.0
            cols.append(_flatten(d))

    gfl = _flatten(g)
    if cols:
        A = np.stack(cols, axis=1)
        coef, *_ = np.linalg.lstsq(A, -gfl, rcond=None)
        resid = float(np.linalg.norm(gfl + A @ coef))
    else:
        resid = float(np.linalg.norm(gfl))
    comp = 0.0
    for hv in hvals:
        if hv > act_tol * scale:
            comp = max(comp, 0.0)   # inactive constraints carry zero multiplier
    if not np.isfinite(min_eig):
        min_eig = 0.0
    return KKTReport(resid, primal, comp, min_eig)
