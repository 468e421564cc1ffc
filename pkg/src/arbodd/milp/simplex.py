"""Bounded-variable revised simplex (dense explicit inverse).

Problem form: ``min c'x  s.t.  A x (<=|=|>=) b,  lb <= x <= ub``. Every row
gets a slack ``s`` with ``A x + s = b`` and a sign-bounded domain, and an
artificial column used only in phase 1 (fixed at zero afterwards).

Cold solves run a two-phase primal simplex. Re-solves after bound changes
(branch-and-bound children) start from a saved basis with the dual simplex.
Dantzig pricing switches to Bland's rule after a run of degenerate pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalFailure
from .model import EQ, GE, INFEASIBLE, LE, OPTIMAL, UNBOUNDED

FEAS_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 64
DEGENERATE_RUN = 50


@dataclass
class BasisState:
    basis: np.ndarray
    at_upper: np.ndarray
    art_sign: np.ndarray


@dataclass
class LPOutcome:
    status: str
    x: np.ndarray = None
    objective: float = np.nan
    duals: np.ndarray = None
    reduced_costs: np.ndarray = None
    iterations: int = 0
    state: BasisState = None


class SimplexEngine:
    def __init__(self, c, A, senses, b):
        A = np.asarray(A, dtype=float)
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.c = np.asarray(c, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.Aext = np.zeros((m, n + 2 * m))
        self.Aext[:, :n] = A
        self.Aext[:, n:n + m] = np.eye(m)
        self.art_sign = np.ones(m)
        self.Aext[:, n + m:] = np.eye(m)
        self.slack_lo = np.array([0.0 if s == LE else (-np.inf if s == GE else 0.0) for s in senses])
        self.slack_hi = np.array([np.inf if s == LE else 0.0 for s in senses])
        self.cext = np.concatenate([self.c, np.zeros(2 * m)])
        self.N = n + 2 * m
        self.max_iter = 50 * (self.N + m) + 1000
        self._cached = None

    # -- public -------------------------------------------------------
    def solve(self, lb, ub, warm: BasisState = None) -> LPOutcome:
        self.lo = np.concatenate([lb, self.slack_lo, np.zeros(self.m)])
        self.hi = np.concatenate([ub, self.slack_hi, np.zeros(self.m)])
        self.iters = 0
        for attempt in range(3):
            try:
                status = None
                if warm is not None and attempt == 0:
                    status = self._warm(warm)
                if status is None:
                    status = self._cold()
                if status == OPTIMAL and not self._verify():
                    raise NumericalFailure("optimal basis failed verification")
                return self._outcome(status)
            except (np.linalg.LinAlgError, NumericalFailure):
                warm = None
                continue
        raise NumericalFailure("simplex failed after repeated refactorizations")

    # -- setup --------------------------------------------------------
    def _set_art_sign(self, sign):
        m, n = self.m, self.n
        self.art_sign = sign.copy()
        self.Aext[:, n + m:] = np.diag(sign)

    def _nonbasic_values(self, upper):
        lo, hi = self.lo, self.hi
        fin_lo, fin_hi = np.isfinite(lo), np.isfinite(hi)
        v = np.where(fin_lo, lo, np.where(fin_hi, hi, 0.0))
        return np.where(upper & fin_hi, hi, v)

    def _factor(self):
        self.Binv = np.linalg.inv(self.Aext[:, self.basis])
        self.n_updates = 0
        self._recompute_xb()

    def _recompute_xb(self):
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b - self.Aext @ xn)

    def _cold(self):
        m, n = self.m, self.n
        self.x = self._nonbasic_values(np.zeros(self.N, dtype=bool))
        self.x[n + m:] = 0.0
        r = self.b - self.Aext[:, : n + m] @ self.x[: n + m]
        sign = np.where(r >= 0, 1.0, -1.0)
        self._set_art_sign(sign)
        self.basis = np.arange(n + m, n + 2 * m)
        self.x[self.basis] = np.abs(r)
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[self.basis] = True
        self.Binv = np.diag(sign)
        self.n_updates = 0
        # phase 1
        c1 = np.zeros(self.N)
        c1[n + m:] = 1.0
        self.hi[n + m:] = np.inf
        st = self._primal(c1)
        infeas = float(np.sum(self.x[n + m:]))
        self.hi[n + m:] = 0.0
        if st != OPTIMAL or infeas > FEAS_TOL * max(1.0, float(np.max(np.abs(self.b), initial=0.0))) * 10:
            return INFEASIBLE
        self.x[n + m:] = np.where(self.is_basic[n + m:], self.x[n + m:], 0.0)
        return self._primal(self.cext)

    def _warm(self, state: BasisState):
        self._set_art_sign(state.art_sign)
        self.basis = state.basis.copy()
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[self.basis] = True
        self.x = self._nonbasic_values(state.at_upper)
        # siblings in branch-and-bound start from the same parent basis
        if self._cached is not None and self._cached[0] is state:
            self.Binv = self._cached[1].copy()
            self.n_updates = 0
            self._recompute_xb()
        else:
            self._factor()
            self._cached = (state, self.Binv.copy())
        d = self._reduced_costs(self.cext)
        if self._dual_feasible(d):
            st = self._dual(self.cext)
            if st != OPTIMAL:
                return st
            return self._primal(self.cext)
        if self._primal_feasible():
            return self._primal(self.cext)
        return None

    # -- helpers ------------------------------------------------------
    def _reduced_costs(self, cost):
        y = cost[self.basis] @ self.Binv
        return cost - y @ self.Aext

    def _status_masks(self):
        nb = ~self.is_basic
        fixed = nb & (self.hi - self.lo <= FEAS_TOL)
        at_lo = nb & ~fixed & np.isfinite(self.lo) & (np.abs(self.x - self.lo) <= FEAS_TOL)
        at_hi = nb & ~fixed & np.isfinite(self.hi) & (np.abs(self.x - self.hi) <= FEAS_TOL)
        free = nb & ~fixed & ~at_lo & ~at_hi
        return at_lo, at_hi, free, fixed

    def _dual_feasible(self, d):
        at_lo, at_hi, free, _ = self._status_masks()
        return not (
            np.any(d[at_lo] < -DUAL_TOL) or np.any(d[at_hi] > DUAL_TOL) or np.any(np.abs(d[free]) > DUAL_TOL)
        )

    def _primal_feasible(self):
        xb = self.x[self.basis]
        return bool(np.all(xb >= self.lo[self.basis] - FEAS_TOL) and np.all(xb <= self.hi[self.basis] + FEAS_TOL))

    def _pivot(self, r, q, alpha):
        piv = alpha[r]
        row = self.Binv[r, :] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r, :] = row
        old = self.basis[r]
        self.is_basic[old] = False
        self.is_basic[q] = True
        self.basis[r] = q
        self.n_updates += 1
        if self.n_updates >= REFACTOR_EVERY:
            self._factor()

    def _tick(self):
        self.iters += 1
        if self.iters > self.max_iter:
            raise NumericalFailure("simplex iteration limit reached")

    # -- primal simplex -----------------------------------------------
    def _primal(self, cost):
        degenerate = 0
        while True:
            self._tick()
            d = self._reduced_costs(cost)
            at_lo, at_hi, free, _ = self._status_masks()
            inc = (at_lo & (d < -DUAL_TOL)) | (free & (d < -DUAL_TOL))
            dec = (at_hi & (d > DUAL_TOL)) | (free & (d > DUAL_TOL))
            cand = np.flatnonzero(inc | dec)
            if len(cand) == 0:
                return OPTIMAL
            if degenerate >= DEGENERATE_RUN:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            sigma = 1.0 if d[q] < 0 else -1.0
            alpha = self.Binv @ self.Aext[:, q]
            sa = sigma * alpha
            xb = self.x[self.basis]
            lo_b, hi_b = self.lo[self.basis], self.hi[self.basis]
            ratios = np.full(self.m, np.inf)
            pos = sa > PIVOT_TOL
            neg = sa < -PIVOT_TOL
            ratios[pos] = (xb[pos] - lo_b[pos]) / sa[pos]
            ratios[neg] = (hi_b[neg] - xb[neg]) / (-sa[neg])
            ratios = np.maximum(ratios, 0.0)
            t_flip = (self.hi[q] - self.x[q]) if sigma > 0 else (self.x[q] - self.lo[q])
            t_min = float(np.min(ratios)) if self.m else np.inf
            if not np.isfinite(t_min) and not np.isfinite(t_flip):
                return UNBOUNDED
            if t_flip <= t_min:
                self.x[q] += sigma * t_flip
                self.x[self.basis] -= sigma * t_flip * alpha
                degenerate = 0
                continue
            ties = np.flatnonzero(ratios <= t_min + 1e-12)
            if degenerate >= DEGENERATE_RUN:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            t = ratios[r]
            degenerate = degenerate + 1 if t <= 1e-12 else 0
            leaving = self.basis[r]
            self.x[q] += sigma * t
            self.x[self.basis] -= sigma * t * alpha
            # snap the leaving variable onto the bound it hit
            self.x[leaving] = lo_b[r] if sa[r] > 0 else hi_b[r]
            self._pivot(r, q, alpha)

    # -- dual simplex -------------------------------------------------
    def _dual(self, cost):
        degenerate = 0
        while True:
            self._tick()
            xb = self.x[self.basis]
            lo_b, hi_b = self.lo[self.basis], self.hi[self.basis]
            below = lo_b - xb
            above = xb - hi_b
            infeas = np.maximum(below, above)
            bad = np.flatnonzero(infeas > FEAS_TOL)
            if len(bad) == 0:
                return OPTIMAL
            if degenerate >= DEGENERATE_RUN:
                r = int(bad[np.argmin(self.basis[bad])])
            else:
                r = int(bad[np.argmax(infeas[bad])])
            increase = below[r] > 0
            target = lo_b[r] if increase else hi_b[r]
            rho = self.Binv[r, :] @ self.Aext
            d = self._reduced_costs(cost)
            at_lo, at_hi, free, _ = self._status_masks()
            if increase:
                ok = (at_lo & (rho < -PIVOT_TOL)) | (at_hi & (rho > PIVOT_TOL)) | (free & (np.abs(rho) > PIVOT_TOL))
            else:
                ok = (at_lo & (rho > PIVOT_TOL)) | (at_hi & (rho < -PIVOT_TOL)) | (free & (np.abs(rho) > PIVOT_TOL))
            cand = np.flatnonzero(ok)
            if len(cand) == 0:
                return INFEASIBLE
            ratios = np.abs(d[cand]) / np.abs(rho[cand])
            best = float(np.min(ratios))
            ties = cand[ratios <= best + 1e-12]
            if degenerate >= DEGENERATE_RUN:
                q = int(ties[0])
            else:
                q = int(ties[np.argmax(np.abs(rho[ties]))])
            degenerate = degenerate + 1 if best <= 1e-12 else 0
            alpha = self.Binv @ self.Aext[:, q]
            delta = (self.x[self.basis[r]] - target) / alpha[r]
            leaving = self.basis[r]
            self.x[q] += delta
            self.x[self.basis] -= alpha * delta
            self.x[leaving] = target
            self._pivot(r, q, alpha)

    # -- results ------------------------------------------------------
    def _verify(self):
        if self.n_updates > REFACTOR_EVERY // 4:
            self._factor()
        resid = self.Aext @ self.x - self.b
        scale = 1.0 + float(np.max(np.abs(self.b), initial=0.0))
        if np.max(np.abs(resid), initial=0.0) > 1e-7 * scale:
            return False
        if not self._primal_feasible():
            # tiny drift after refactorization: let the dual simplex clean it up
            d = self._reduced_costs(self.cext)
            if not self._dual_feasible(d):
                return False
            if self._dual(self.cext) != OPTIMAL:
                return False
        return True

    def _outcome(self, status):
        if status != OPTIMAL:
            return LPOutcome(status, iterations=self.iters)
        n = self.n
        y = self.cext[self.basis] @ self.Binv
        d = self.cext - y @ self.Aext
        x = self.x[:n].copy()
        at_upper = np.zeros(self.N, dtype=bool)
        nb = ~self.is_basic
        at_upper[nb] = np.isfinite(self.hi[nb]) & (np.abs(self.x[nb] - self.hi[nb]) <= FEAS_TOL) & (
            self.hi[nb] > self.lo[nb]
        )
        state = BasisState(self.basis.copy(), at_upper, self.art_sign.copy())
        return LPOutcome(OPTIMAL, x, float(self.c @ x), y, d[:n], self.iters, state)


class HighsEngine:
    """Same interface backed by scipy's HiGHS LP solver (no warm starts)."""

    def __init__(self, c, A, senses, b):
        from scipy import sparse

        self.c = np.asarray(c, dtype=float)
        A = sparse.csr_matrix(A)
        senses = np.asarray(senses)
        b = np.asarray(b, dtype=float)
        le = senses == LE
        ge = senses == GE
        eq = senses == EQ
        ub_rows = sparse.vstack([A[le], -A[ge]]) if (le.any() or ge.any()) else None
        self.A_ub = ub_rows
        self.b_ub = np.concatenate([b[le], -b[ge]]) if ub_rows is not None else None
        self.A_eq = A[eq] if eq.any() else None
        self.b_eq = b[eq] if eq.any() else None
        self._rows = (np.flatnonzero(le), np.flatnonzero(ge), np.flatnonzero(eq))
        self.m = A.shape[0]

    def solve(self, lb, ub, warm=None) -> LPOutcome:
        from scipy.optimize import linprog

        lb = np.where(np.isfinite(lb), lb, -np.inf)
        bounds = np.column_stack([lb, ub])
        bounds = [(None if not np.isfinite(a) else a, None if not np.isfinite(b) else b) for a, b in bounds]
        res = linprog(
            self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq, bounds=bounds, method="highs"
        )
        if res.status == 2:
            return LPOutcome(INFEASIBLE)
        if res.status == 3:
            return LPOutcome(UNBOUNDED)
        if res.status != 0:
            raise NumericalFailure(f"HiGHS returned status {res.status}: {res.message}")
        duals = np.zeros(self.m)
        le, ge, eq = self._rows
        if self.A_ub is not None:
            marg = res.ineqlin.marginals
            duals[le] = marg[: len(le)]
            duals[ge] = -marg[len(le):]
        if self.A_eq is not None:
            duals[eq] = res.eqlin.marginals
        rc = res.lower.marginals + res.upper.marginals
        return LPOutcome(OPTIMAL, res.x, float(res.fun), duals, rc, int(getattr(res, "nit", 0)))
