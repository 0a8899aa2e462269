"""Linear programs over designs: max t s.t. each cut dominates t.

The master problem of the cutting-plane solver is

    maximize   t
    subject to sum_x h_j(x) xi(x) >= t          (objective cuts, j = 1..J)
               sum_x g_l(x) xi(x) >= a_l        (level cuts,     l = 1..L)
               sum_x e_r(x) xi(x)  = b_r        (equality rows; always
                                                 includes sum xi = 1)
               xi >= 0.

Solved by a dense two-phase revised simplex.  Entering columns are picked by
most-negative reduced cost with lowest-index tie-breaking; after a run of
degenerate pivots the pricing latches to Bland's least-index rule, which
rules out cycling, so the pivot sequence is deterministic for a given
problem.  When the candidate set is much larger than the number of cuts the
LP is solved as stated (few rows); once cuts outnumber candidates the dual
program is solved instead and the design recovered from the simplex
multipliers -- either way the basis stays small.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = ["CutLP", "LPSolution", "LPStatus", "solve_lp", "dump_lp"]

_FEAS_TOL = 1e-9
_COST_RTOL = 1e-12
_PIVOT_TOL = 1e-10
_REFACTOR_EVERY = 128


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iter-limit"
    NUMERIC = "numeric-failure"


@dataclass
class LPSolution:
    status: LPStatus
    t_star: float | None
    xi: np.ndarray | None
    dual_values: dict | None
    pivots: int
    orientation: str


class CutLP:
    """Incrementally grown master problem over ``n_points`` design weights."""

    def __init__(self, n_points: int):
        if n_points < 1:
            raise ValueError("need at least one candidate point")
        self.n_points = n_points
        self._objective: list[np.ndarray] = []
        self._levels: list[tuple[np.ndarray, float]] = []
        self._equalities: list[tuple[np.ndarray, float]] = [
            (np.ones(n_points), 1.0)
        ]
        # last verified optimal basis per orientation, as symbolic labels that
        # survive the column renumbering caused by later add_*_cut calls
        self._warm: dict[str, list[tuple[str, int]]] = {}

    def _coerce(self, coefficients) -> np.ndarray:
        c = np.asarray(getattr(coefficients, "coefficients", coefficients), float)
        if c.shape != (self.n_points,):
            raise ValueError(
                f"cut has {c.shape} coefficients, expected ({self.n_points},)"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("cut coefficients must be finite")
        return c

    def add_objective_cut(self, coefficients) -> None:
        self._objective.append(self._coerce(coefficients))

    def add_level_cut(self, coefficients, level: float) -> None:
        level = float(level)
        if not np.isfinite(level):
            raise ValueError("level must be finite")
        self._levels.append((self._coerce(coefficients), level))

    def add_equality_row(self, coefficients, rhs: float) -> None:
        rhs = float(rhs)
        if not np.isfinite(rhs):
            raise ValueError("equality rhs must be finite")
        self._equalities.append((self._coerce(coefficients), rhs))

    @property
    def n_objective_cuts(self) -> int:
        return len(self._objective)

    @property
    def n_level_cuts(self) -> int:
        return len(self._levels)

    @property
    def n_rows(self) -> int:
        return len(self._objective) + len(self._levels) + len(self._equalities)

    def blocks(self):
        """(H, G, a, E, b) as dense arrays; empty blocks have 0 rows."""
        n = self.n_points
        h = np.array(self._objective) if self._objective else np.empty((0, n))
        if self._levels:
            g = np.array([c for c, _ in self._levels])
            a = np.array([v for _, v in self._levels])
        else:
            g, a = np.empty((0, n)), np.empty(0)
        e = np.array([c for c, _ in self._equalities])
        b = np.array([v for _, v in self._equalities])
        return h, g, a, e, b


@dataclass
class _CoreResult:
    status: LPStatus
    x: np.ndarray | None = None
    obj: float | None = None
    duals: np.ndarray | None = None
    pivots: int = 0
    basis: np.ndarray | None = None


@dataclass
class _Simplex:
    """Two-phase revised simplex for min c.x, Ax = b, x >= 0 with b >= 0.

    ``init_basis`` pre-seeds rows whose right-hand side is zero with a
    designated +-1 column (a slack or surplus), so artificials are only
    created where b is positive.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    init_basis: np.ndarray  # per row: structural column index, or -1
    pivot_budget: int
    bland: bool = field(default=False)
    # Refuse pivots on junk elements in phase 2, settling for an optimal-at-
    # tolerance basis instead.  Only sound where an early stop keeps the
    # caller's bound valid (the minimizing dual form, by weak duality).
    guard_pivots: bool = field(default=False)
    # Optional primal-feasible starting basis (column indices, one per row).
    # When usable it skips phase 1 entirely; when stale or singular the
    # caller falls back to a cold start.
    start_basis: np.ndarray | None = field(default=None)

    def run(self) -> _CoreResult:
        if self.start_basis is not None:
            res = self._warm_run()
            if res is not None:
                return res
        m, n = self.a.shape
        art_rows = np.nonzero(self.init_basis < 0)[0]
        n_art = art_rows.size
        afull = np.hstack([self.a, np.zeros((m, n_art))])
        for k, r in enumerate(art_rows):
            afull[r, n + k] = 1.0
        basis = self.init_basis.copy()
        basis[art_rows] = n + np.arange(n_art)
        binv = np.zeros((m, m))
        for r in range(m):
            binv[r, r] = 1.0 / afull[r, basis[r]]
        self._afull, self._basis, self._binv = afull, basis, binv
        self._n_struct, self._m = n, m
        self._pivots = 0
        self._degenerate_run = 0
        self._since_refactor = 0

        if n_art:
            c1 = np.zeros(n + n_art)
            c1[n:] = 1.0
            res = self._optimize(c1, guard_pivots=False)
            if res is not None:
                return res
            xb = self._binv @ self.b
            art_mask = self._basis >= n
            phase1 = float(xb[art_mask].sum()) if art_mask.any() else 0.0
            if phase1 > _FEAS_TOL * (1.0 + float(np.abs(self.b).sum())):
                return _CoreResult(LPStatus.INFEASIBLE, pivots=self._pivots)

        c2 = np.concatenate([self.c, np.zeros(n_art)])
        res = self._optimize(c2, guard_pivots=self.guard_pivots)
        if res is not None:
            return res
        return self._extract(c2)

    def _warm_run(self) -> _CoreResult | None:
        """Phase-2-only run from ``start_basis``; None when it is unusable."""
        m, n = self.a.shape
        basis = np.asarray(self.start_basis, dtype=int)
        if (
            basis.shape != (m,)
            or basis.min() < 0
            or basis.max() >= n
            or np.unique(basis).size != m
        ):
            return None
        self._afull, self._basis = self.a, basis.copy()
        self._n_struct, self._m = n, m
        self._pivots = 0
        self._degenerate_run = 0
        self._since_refactor = 1  # force a real factorization first
        try:
            self._refactor()
            xb = self._binv @ self.b
            if float(xb.min()) < -1e-9 * (1.0 + float(np.max(np.abs(self.b)))):
                return None  # basis no longer primal-feasible
            res = self._optimize(self.c, guard_pivots=self.guard_pivots)
            if res is not None:
                return res
            return self._extract(self.c)
        except RuntimeError:
            return None  # singular along the way; cold start instead

    def _extract(self, cost: np.ndarray) -> _CoreResult:
        if self._since_refactor:
            self._refactor()  # product-form drift would leak into x and duals
        x = np.zeros(self._afull.shape[1])
        xb = self._binv @ self.b
        x[self._basis] = xb
        duals = cost[self._basis] @ self._binv
        obj = float(cost @ x)
        n = self._n_struct
        return _CoreResult(
            LPStatus.OPTIMAL, x[:n], obj, duals, self._pivots, self._basis.copy()
        )

    # -- internals ---------------------------------------------------------

    def _optimize(self, cost: np.ndarray, guard_pivots: bool = False) -> _CoreResult | None:
        """Run pivots until optimal (returns None) or a terminal status."""
        afull, b = self._afull, self.b
        m, n = self._m, self._n_struct
        tol_c = _COST_RTOL * (1.0 + float(np.max(np.abs(cost))))
        tol_ray = 1e-9 * (1.0 + float(np.max(np.abs(cost))))
        # Shelved columns (noise rays, junk pivots) stay shelved across basis
        # changes -- re-pricing them after every pivot costs a full pass each.
        # One clean recheck happens before optimality is declared; columns
        # that immediately re-shelve then count as nonimproving at tolerance.
        banned = np.zeros(afull.shape[1], dtype=bool)
        rechecked = False
        while True:
            if self._pivots >= self.pivot_budget:
                return _CoreResult(LPStatus.ITER_LIMIT, pivots=self._pivots)
            if self._since_refactor >= _REFACTOR_EVERY:
                self._refactor()
            reduced = cost - (cost[self._basis] @ self._binv) @ afull
            reduced[self._basis] = 0.0
            reduced[n:] = np.inf  # artificials never re-enter
            reduced[banned] = np.inf
            if self.bland:
                entering = np.nonzero(reduced[:n] < -tol_c)[0]
                j = int(entering[0]) if entering.size else -1
            else:
                j = int(np.argmin(reduced[:n]))
                if reduced[j] >= -tol_c:
                    j = -1
            if j < 0:
                if banned.any() and not rechecked:
                    banned[:] = False
                    rechecked = True
                    if self._since_refactor:
                        self._refactor()
                    continue
                return None
            direction = self._binv @ afull[:, j]
            xb = np.maximum(self._binv @ b, 0.0)
            blocking = direction > _PIVOT_TOL
            # basic artificials sit at zero and must never go negative
            guard = (self._basis >= n) & (np.abs(direction) > _PIVOT_TOL)
            rows = np.nonzero(blocking | guard)[0]
            if rows.size == 0:
                # No blocking row means a feasible ray, but a reduced cost a
                # hair past tol_c can be rounding noise (e.g. the idle half of
                # a split free variable), so certify the ray really improves
                # before declaring unboundedness; otherwise shelve the column
                # until the next basis change.
                if self._since_refactor:
                    self._refactor()
                    continue
                ray_cost = float(cost[j] - cost[self._basis] @ direction)
                if ray_cost < -tol_ray:
                    return _CoreResult(LPStatus.UNBOUNDED, pivots=self._pivots)
                banned[j] = True
                continue
            ratios = np.where(
                blocking[rows], xb[rows] / np.where(blocking[rows], direction[rows], 1.0), 0.0
            )
            theta = float(ratios.min())
            if self.bland:
                ties = rows[ratios <= theta + 1e-12 * (1.0 + theta)]
                leave = int(ties[np.argmin(self._basis[ties])])
            else:
                # Harris two-pass ratio test: allow each basic value to dip by
                # the feasibility tolerance and, within that slack, take the
                # largest pivot element.  Degenerate vertices with stacks of
                # near-parallel rows otherwise force ~1e-9 pivots that drive
                # the basis singular.  Bland mode keeps the pure min-ratio /
                # min-index rule, which is what guarantees termination.
                delta = 1e-9 * (1.0 + float(np.max(np.abs(b))))
                slack = np.where(
                    blocking[rows],
                    (xb[rows] + delta)
                    / np.where(blocking[rows], direction[rows], 1.0),
                    delta / np.abs(direction[rows]),
                )
                ties = rows[ratios <= float(slack.min())]
                leave = int(ties[np.argmax(np.abs(direction[ties]))])
                theta = max(float(ratios[rows == leave][0]), 0.0)
            if guard_pivots and abs(direction[leave]) < 1e-8 * (
                1.0 + float(np.max(np.abs(direction)))
            ):
                banned[j] = True  # pivoting here would wreck the basis
                continue
            self._pivot(leave, j, direction)
            rechecked = False
            if theta <= 1e-11:
                self._degenerate_run += 1
                if self._degenerate_run > m + 50:
                    self.bland = True
            else:
                self._degenerate_run = 0

    def _pivot(self, row: int, col: int, direction: np.ndarray) -> None:
        binv = self._binv
        piv = direction[row]
        binv[row] /= piv
        other = direction.copy()
        other[row] = 0.0
        binv -= np.outer(other, binv[row])
        self._basis[row] = col
        self._pivots += 1
        self._since_refactor += 1

    def _refactor(self) -> None:
        bmat = self._afull[:, self._basis]
        try:
            binv = np.linalg.solve(bmat, np.eye(self._m))
        except np.linalg.LinAlgError:
            raise RuntimeError("basis matrix became numerically singular") from None
        if not np.all(np.isfinite(binv)):
            raise RuntimeError("basis matrix became numerically singular")
        self._binv = binv
        self._since_refactor = 0


def _refined_vertex(prob: CutLP, active_x, binding_obj, binding_lvl):
    """Re-solve a claimed vertex's binding system by dense least squares.

    Basis-inverse products accumulate error on ill-conditioned bases, so the
    extracted vertex can drift far beyond the verification tolerances.  The
    final basis still identifies which constraints bind; those rows pin the
    same vertex down as a small consistent system that lstsq solves to near
    machine precision.  Returns ``(xi, t)`` or None when the system does not
    close (e.g. the active set was misidentified).
    """
    h, g, a, e, brhs = prob.blocks()
    act = np.asarray(sorted(active_x), dtype=int)
    n_unknown = act.size + 1  # xi on the active set, then t
    rows, rhs = [], []
    for j in binding_obj:
        row = np.zeros(n_unknown)
        row[:-1] = h[j, act]
        row[-1] = -1.0
        rows.append(row)
        rhs.append(0.0)
    for l in binding_lvl:
        row = np.zeros(n_unknown)
        row[:-1] = g[l, act]
        rows.append(row)
        rhs.append(a[l])
    for r in range(e.shape[0]):
        row = np.zeros(n_unknown)
        row[:-1] = e[r, act]
        rows.append(row)
        rhs.append(brhs[r])
    if len(rows) < n_unknown:
        return None
    amat, bvec = np.vstack(rows), np.asarray(rhs)
    sol, *_ = np.linalg.lstsq(amat, bvec, rcond=None)
    resid = float(np.max(np.abs(amat @ sol - bvec)))
    if resid > 1e-10 * (1.0 + float(np.max(np.abs(bvec))) + abs(float(sol[-1]))):
        return None
    xi = np.zeros(prob.n_points)
    xi[act] = sol[:-1]
    return xi, float(sol[-1])


def _better_vertex(prob: CutLP, refined, xi, t_star):
    """Prefer the refined vertex, but only when it is fully feasible.

    A degenerate vertex can leave the binding system rank deficient, in
    which case lstsq returns some other point of the optimal face; full
    verification keeps such candidates from replacing a usable raw vertex.
    """
    if refined is not None and _verify(
        prob, LPSolution(LPStatus.OPTIMAL, refined[1], refined[0], None, 0, "")
    ):
        return refined
    return xi, t_star


def _solve_primal(prob: CutLP, budget: int) -> LPSolution:
    h, g, a, e, brhs = prob.blocks()
    nj, nl, nr = h.shape[0], g.shape[0], e.shape[0]
    n = prob.n_points
    n_struct = n + 2 + nj + nl
    m = nj + nl + nr
    amat = np.zeros((m, n_struct))
    bvec = np.concatenate([np.zeros(nj), a, brhs])
    amat[:nj, :n] = h
    amat[:nj, n] = -1.0
    amat[:nj, n + 1] = 1.0
    amat[np.arange(nj), n + 2 + np.arange(nj)] = -1.0
    amat[nj : nj + nl, :n] = g
    amat[nj + np.arange(nl), n + 2 + nj + np.arange(nl)] = -1.0
    amat[nj + nl :, :n] = e
    flip = bvec < 0
    amat[flip] *= -1.0
    bvec[flip] *= -1.0
    cvec = np.zeros(n_struct)
    cvec[n] = -1.0
    cvec[n + 1] = 1.0

    init = np.full(m, -1, dtype=int)
    for i in range(m):
        if bvec[i] == 0.0:
            if i < nj:
                init[i] = n + 2 + i
            elif i < nj + nl:
                init[i] = n + 2 + nj + (i - nj)
    try:
        core = _Simplex(amat, bvec, cvec, init, budget).run()
    except RuntimeError:
        return LPSolution(LPStatus.NUMERIC, None, None, None, 0, "primal")
    if core.status is not LPStatus.OPTIMAL:
        return LPSolution(core.status, None, None, None, core.pivots, "primal")
    xi = core.x[:n]
    t_star = core.x[n] - core.x[n + 1]
    in_basis = np.zeros(n_struct + m, dtype=bool)
    in_basis[core.basis] = True
    refined = _refined_vertex(
        prob,
        np.nonzero(in_basis[:n])[0],
        [j for j in range(nj) if not in_basis[n + 2 + j]],
        [l for l in range(nl) if not in_basis[n + 2 + nj + l]],
    )
    xi, t_star = _better_vertex(prob, refined, xi, t_star)
    duals = core.duals.copy()
    duals[flip] *= -1.0
    dual_values = {
        "objective_cuts": duals[:nj],
        "level_cuts": duals[nj : nj + nl],
        "equality_rows": duals[nj + nl :],
    }
    return LPSolution(
        LPStatus.OPTIMAL, float(t_star), xi, dual_values, core.pivots, "primal"
    )


_DUAL_KINDS = ("y", "z", "wp", "wm", "s")


def _dual_warm_labels(basis, nj, nl, nr, n) -> list[tuple[str, int]] | None:
    """Symbolic (kind, index) labels of a dual basis, or None if unusable."""
    bounds = [nj, nj + nl, nj + nl + nr, nj + nl + 2 * nr, nj + nl + 2 * nr + n]
    labels = []
    for col in basis:
        col = int(col)
        if col >= bounds[-1]:
            return None  # artificial stuck in the basis; don't reuse
        for kind, hi, lo in zip(_DUAL_KINDS, bounds, [0] + bounds[:-1]):
            if col < hi:
                labels.append((kind, col - lo))
                break
    return labels


def _dual_warm_basis(prob: CutLP, nj, nl, nr, n) -> np.ndarray | None:
    """Column indices of the cached dual basis under the current layout."""
    labels = prob._warm.get("dual")
    if not labels or len(labels) != n + 1:
        return None
    offset = {"y": 0, "z": nj, "wp": nj + nl, "wm": nj + nl + nr,
              "s": nj + nl + 2 * nr}
    limit = {"y": nj, "z": nl, "wp": nr, "wm": nr, "s": n}
    cols = np.empty(n + 1, dtype=int)
    for i, (kind, idx) in enumerate(labels):
        if idx >= limit[kind]:
            return None
        cols[i] = offset[kind] + idx
    return cols


def _solve_dual(prob: CutLP, budget: int) -> LPSolution:
    h, g, a, e, brhs = prob.blocks()
    nj, nl, nr = h.shape[0], g.shape[0], e.shape[0]
    n = prob.n_points
    # variables: y (J), z (L), w+ (R), w- (R), slack (n)
    n_struct = nj + nl + 2 * nr + n
    m = n + 1
    amat = np.zeros((m, n_struct))
    amat[:n, :nj] = h.T
    amat[:n, nj : nj + nl] = g.T
    amat[:n, nj + nl : nj + nl + nr] = -e.T
    amat[:n, nj + nl + nr : nj + nl + 2 * nr] = e.T
    amat[np.arange(n), nj + nl + 2 * nr + np.arange(n)] = 1.0
    amat[n, :nj] = 1.0
    bvec = np.zeros(m)
    bvec[n] = 1.0
    cvec = np.concatenate([np.zeros(nj), -a, brhs, -brhs, np.zeros(n)])

    init = np.full(m, -1, dtype=int)
    init[:n] = nj + nl + 2 * nr + np.arange(n)
    slack0 = nj + nl + 2 * nr

    def _finish(core: _CoreResult) -> LPSolution:
        xi = -core.duals[:n]
        t_star = float(core.duals[n])
        in_basis = np.zeros(n_struct + m, dtype=bool)
        in_basis[core.basis] = True
        refined = _refined_vertex(
            prob,
            [x for x in range(n) if not in_basis[slack0 + x]],
            np.nonzero(in_basis[:nj])[0],
            [l for l in range(nl) if in_basis[nj + l]],
        )
        xi, t_star = _better_vertex(prob, refined, xi, t_star)
        dual_values = {
            "objective_cuts": core.x[:nj],
            "level_cuts": core.x[nj : nj + nl],
            "equality_rows": core.x[nj + nl : nj + nl + nr]
            - core.x[nj + nl + nr : nj + nl + 2 * nr],
        }
        return LPSolution(
            LPStatus.OPTIMAL, t_star, xi, dual_values, core.pivots, "dual"
        )

    # A verified basis from an earlier solve of this master stays feasible
    # when cuts are appended (they only add columns here), so re-optimizing
    # from it usually takes a handful of pivots instead of a cold two-phase
    # run -- and keeps the pivot path too short to drift numerically.
    warm = _dual_warm_basis(prob, nj, nl, nr, n)
    if warm is not None:
        try:
            core = _Simplex(
                amat, bvec, cvec, init, budget,
                guard_pivots=True, start_basis=warm,
            ).run()
        except RuntimeError:
            core = None
        if core is not None and core.status is LPStatus.OPTIMAL:
            sol = _finish(core)
            if _verify(prob, sol):
                labels = _dual_warm_labels(core.basis, nj, nl, nr, n)
                if labels is not None:
                    prob._warm["dual"] = labels
                return sol
        # stale, unverified, or sick: fall through to the cold start

    try:
        core = _Simplex(amat, bvec, cvec, init, budget, guard_pivots=True).run()
    except RuntimeError:
        return LPSolution(LPStatus.NUMERIC, None, None, None, 0, "dual")
    if core.status is LPStatus.UNBOUNDED:
        # the dual sinks to -inf exactly when no design satisfies the cuts
        return LPSolution(LPStatus.INFEASIBLE, None, None, None, core.pivots, "dual")
    if core.status is LPStatus.INFEASIBLE:
        raise RuntimeError(
            "dual master program infeasible; this cannot happen with the "
            "probability-normalization row present"
        )
    if core.status is not LPStatus.OPTIMAL:
        return LPSolution(core.status, None, None, None, core.pivots, "dual")
    sol = _finish(core)
    if _verify(prob, sol):
        labels = _dual_warm_labels(core.basis, nj, nl, nr, n)
        if labels is not None:
            prob._warm["dual"] = labels
    return sol


def _verify(prob: CutLP, sol: LPSolution) -> bool:
    h, g, a, e, brhs = prob.blocks()
    xi, t = sol.xi, sol.t_star
    if xi is None or float(xi.min()) < -1e-9:
        return False
    scale = 1.0 + abs(t)
    if h.shape[0] and float(np.min(h @ xi - t)) < -1e-8 * scale:
        return False
    if g.shape[0]:
        resid = g @ xi - a
        if float(np.min(resid)) < -1e-8 * (1.0 + float(np.max(np.abs(a)))):
            return False
    eq_err = float(np.max(np.abs(e @ xi - brhs)))
    return eq_err <= 1e-8 * (1.0 + float(np.max(np.abs(brhs))))


def _thin_rows(rows: list[np.ndarray]) -> list[int]:
    """Indices of ``rows`` with near-duplicates (1e-11 max-norm) removed.

    Feasible weights live on the probability simplex, so two rows within
    1e-11 of each other produce values within 1e-11 -- far inside the 1e-9
    verification tolerance.  Dropping the twin from a working set therefore
    cannot hide a violation, but it keeps the small basis well conditioned.
    """
    kept: list[int] = []
    for i, r in enumerate(rows):
        if all(float(np.max(np.abs(r - rows[k]))) > 1e-11 for k in kept):
            kept.append(i)
    return kept


def _active_subproblem(prob: CutLP, act_obj, act_lvl) -> CutLP:
    sub = CutLP(prob.n_points)
    rows = [prob._objective[j] for j in act_obj]
    sub._objective = [rows[i] for i in _thin_rows(rows)]
    sub._levels = [prob._levels[l] for l in act_lvl]
    sub._equalities = list(prob._equalities)
    return sub


def _solve_by_row_generation(prob: CutLP, budget: int) -> LPSolution:
    """Exact solve of a cut-heavy master through a small working set.

    Only ~n_points+1 cuts can bind at a vertex, so the master is solved over
    an active subset, the left-out rows are priced at the solution, and
    violated ones join the set until none violate.  The final iterate is then
    feasible for every cut while optimal for a relaxation, which makes it
    exactly optimal for the full master -- same answer, but every simplex run
    stays small instead of crawling through thousands of near-parallel
    columns.
    """
    h, g, a, e, brhs = prob.blocks()
    nj, nl = h.shape[0], g.shape[0]
    n = prob.n_points
    cached = prob._warm.get("active")
    if cached is not None:
        act_obj = sorted({j for j in cached[0] if j < nj})
        act_lvl = sorted({l for l in cached[1] if l < nl})
    else:
        act_obj, act_lvl = [], []
    if not act_obj:
        act_obj = list(range(max(0, nj - (n + 1)), nj))
    if not act_lvl:
        act_lvl = list(range(max(0, nl - (n + 1)), nl))
    pivots = 0
    resets = 0
    for _ in range(nj + nl + 3):  # every round adds a row, so this suffices
        sub = _active_subproblem(prob, act_obj, act_lvl)
        try:
            sol = solve_lp(sub, "primal")
        except RuntimeError:
            # ill-conditioned working set; restart from the newest rows once
            # or twice before conceding
            resets += 1
            if resets > 2:
                raise
            prob._warm.pop("active", None)
            act_obj = list(range(max(0, nj - resets * (n + 1)), nj))
            act_lvl = list(range(max(0, nl - resets * (n + 1)), nl))
            continue
        pivots += sol.pivots
        if sol.status is not LPStatus.OPTIMAL:
            # e.g. level rows of the subset already infeasible; the subset
            # is a relaxation, so the verdict transfers to the full master
            return LPSolution(
                sol.status, sol.t_star, sol.xi, None, pivots, "rowgen"
            )
        if pivots > budget:
            return LPSolution(
                LPStatus.ITER_LIMIT, None, None, None, pivots, "rowgen"
            )
        # the subproblem itself is only certified to 1e-8 residuals, so rows
        # must not count as violated below that, or satisfied-at-tolerance
        # rows cycle in and out of the working set forever
        tol = 2e-8 * (1.0 + abs(sol.t_star))
        lvl_tol = 2e-8 * (1.0 + float(np.max(np.abs(a)))) if nl else 0.0
        viol_obj = h @ sol.xi - sol.t_star
        viol_lvl = (g @ sol.xi - a) if nl else np.empty(0)
        bad_obj = np.nonzero(viol_obj < -tol)[0]
        bad_lvl = np.nonzero(viol_lvl < -lvl_tol)[0]
        have_obj, have_lvl = set(act_obj), set(act_lvl)
        worst = np.argsort(viol_obj[bad_obj])
        new_obj = [int(j) for j in bad_obj[worst[:128]] if int(j) not in have_obj]
        worst = np.argsort(viol_lvl[bad_lvl]) if bad_lvl.size else []
        new_lvl = [int(l) for l in bad_lvl[worst[:128]] if int(l) not in have_lvl]
        if not new_obj and not new_lvl:
            # nothing violated, or the offenders are already active (their
            # residuals sit inside the subproblem's own certificate slop)
            prob._warm["active"] = (
                [j for j in act_obj if viol_obj[j] <= tol * 10],
                [l for l in act_lvl if viol_lvl[l] <= lvl_tol * 10],
            )
            return LPSolution(
                LPStatus.OPTIMAL, sol.t_star, sol.xi, sol.dual_values,
                pivots, "rowgen",
            )
        act_obj = sorted(have_obj | set(new_obj))
        act_lvl = sorted(have_lvl | set(new_lvl))
    raise RuntimeError("row generation failed to close the master problem")


def solve_lp(prob: CutLP, orientation: str | None = None) -> LPSolution:
    """Solve the master LP; returns the maximizing design and t*.

    ``orientation`` forces "primal" or "dual" (mostly for tests); by default
    small-row instances are solved as stated and cut-heavy ones through
    row generation on a working subset.  The returned design weights may
    carry negatives of order -1e-12 from the vertex arithmetic -- callers
    normalize through :class:`~optdesign.models.Design`.
    """
    if prob.n_objective_cuts == 0:
        raise ValueError("master problem needs at least one objective cut")
    n_struct = prob.n_points + 2 + prob.n_objective_cuts + prob.n_level_cuts
    budget = 50 * (prob.n_rows + n_struct)
    if orientation is None:
        if prob.n_rows <= prob.n_points + 1:
            orientation = "primal"
        elif prob.n_rows <= 512:
            # the dual basis stays (n_points+1)^2 however many cuts arrive,
            # and a direct solve avoids the working-set tolerance slack
            orientation = "dual"
        else:
            return _solve_by_row_generation(prob, budget)
    if orientation not in ("primal", "dual"):
        raise ValueError(f"unknown orientation {orientation!r}")
    solver = _solve_primal if orientation == "primal" else _solve_dual
    sol = solver(prob, budget)
    unverified = sol.status is LPStatus.OPTIMAL and not _verify(prob, sol)
    if unverified or sol.status is LPStatus.NUMERIC:
        # safety net: retry in the other form, unless that basis would be
        # enormous (the dual basis is (n_points+1)^2)
        reason = (
            "LP solution failed residual verification"
            if unverified
            else "simplex basis became numerically singular"
        )
        other_rows = prob.n_points + 1 if orientation == "primal" else prob.n_rows
        if other_rows > 4096:
            raise RuntimeError(reason)
        other = _solve_dual if orientation == "primal" else _solve_primal
        sol = other(prob, budget)
        if sol.status is LPStatus.NUMERIC or (
            sol.status is LPStatus.OPTIMAL and not _verify(prob, sol)
        ):
            raise RuntimeError(reason + " in both orientations")
    return sol


def dump_lp(prob: CutLP) -> str:
    """Plain-text rendering of the master problem, for debugging."""
    h, g, a, e, brhs = prob.blocks()
    out = [
        f"cut master LP: {prob.n_points} design weights, "
        f"{h.shape[0]} objective cuts, {g.shape[0]} level cuts, "
        f"{e.shape[0]} equality rows",
        "maximize t subject to:",
    ]

    def row(vec):
        return " ".join(f"{v:.12g}" for v in vec)

    for j in range(h.shape[0]):
        out.append(f"  obj[{j}]: {row(h[j])} >= t")
    for l in range(g.shape[0]):
        out.append(f"  lvl[{l}]: {row(g[l])} >= {a[l]:.12g}")
    for r in range(e.shape[0]):
        out.append(f"  eq[{r}]:  {row(e[r])} == {brhs[r]:.12g}")
    out.append("  xi >= 0")
    return "\n".join(out)
