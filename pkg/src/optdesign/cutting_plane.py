"""Cutting-plane solvers for design optimization.

The optimum of a concave positively homogeneous criterion over the simplex of
designs is approached from above: every reference design contributes a linear
cut dominating the criterion, the master LP maximizes t subject to all cuts
collected so far, and its optimum t is an upper bound while the criterion
value of the LP solution is a lower bound.  The loop stops when that sandwich
closes below epsilon, so every reported design carries a certificate of
epsilon-optimality, not just a stationarity heuristic.

Variants share the machinery:

* ``solve``            one criterion (D, A, E_k, maximin efficiency, prior
                       average)
* ``solve_ek_sweep``   all p eigenvalue-sum optima of a space
* ``solve_maximin``    criterion-robust design maximizing the worst
                       E_k-efficiency
* ``solve_d_given_a``  D-optimality constrained by a floor on A-optimality
                       (level cuts enter the LP as constraints)
* ``efficiency_sweep`` the D/A efficiency trade-off curve over a grid of
                       floors
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .criteria import (
    AOptimality,
    AveragedCriterion,
    DOptimality,
    EK_WINDOW_RTOL,
    EkOptimality,
    MaximinEfficiency,
    ave_cut,
    cut,
    equivalence_gap,
    info_matrix,
    phi,
)
from .linalg import NearSingularError
from .lp import CutLP, LPStatus, solve_lp
from .models import Design, DesignSpace, uniform_design

__all__ = [
    "SolveConfig",
    "SolveReport",
    "StopReason",
    "TraceEntry",
    "EkOptimum",
    "EfficiencySweep",
    "SweepPoint",
    "solve",
    "solve_ek_sweep",
    "solve_maximin",
    "solve_d_given_a",
    "efficiency_sweep",
    "thread_count",
]

#: Cuts whose coefficients agree within this max-norm are considered
#: duplicates and dropped.
DUPLICATE_TOL = 1e-12


class StopReason(str, Enum):
    GAP_BELOW_EPSILON = "gap-below-epsilon"
    EQUIVALENCE_STOP = "equivalence-stop"
    ITER_LIMIT = "iter-limit"
    INFEASIBLE_CONSTRAINT = "infeasible-constraint"


@dataclass
class SolveConfig:
    """Knobs of the cutting-plane loop.

    ``epsilon`` bounds the optimality gap at termination.  ``delta_a`` is the
    extra slack required of the constrained A-value before a D-given-A run
    may stop, on top of the LP feasibility tolerance that an active level is
    always met within.  ``gamma`` is the ridge added to a numerically
    singular reference matrix when generating D/A cuts (eigenvalue-sum cuts
    never need it).  ``stop_on_equivalence`` optionally stops a D/A/E_k run
    early once the equivalence-theorem gap falls below the given value.
    """

    epsilon: float = 1e-10
    delta_a: float = 0.0
    gamma: float = 1e-8
    max_iter: int = 5000
    initial_designs: list[Design] | None = None
    stop_on_equivalence: float | None = None
    record_trace: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class TraceEntry:
    iteration: int
    upper_bound: float
    value: float
    gap: float
    a_value: float | None = None
    a_gap: float | None = None


@dataclass
class SolveReport:
    """Outcome of one cutting-plane run.

    ``phi_value`` and ``upper_bound`` sandwich the true optimum whenever the
    run finished cleanly, so ``gap`` is a proof of near-optimality.  The
    D-given-A fields and the maximin fields are None for other variants.
    """

    criterion: str
    stop_reason: StopReason
    design: Design | None
    phi_value: float | None
    upper_bound: float | None
    gap: float | None
    iterations: int
    equivalence_gap: float | None = None
    equivalence_reliable: bool | None = None
    trace: list[TraceEntry] = field(default_factory=list)
    regularized: bool = False
    diagnostic: str | None = None
    a_target: float | None = None
    a_value: float | None = None
    delta_a_achieved: float | None = None
    efficiencies: np.ndarray | None = None
    psi_star: float | None = None
    wall_time: float = 0.0
    lp: CutLP | None = field(default=None, repr=False, compare=False)


@dataclass
class EkOptimum:
    k: int
    value: float
    design: Design
    report: SolveReport


@dataclass
class SweepPoint:
    a: float
    phi_d: float | None
    phi_a: float | None
    eff_d: float | None
    eff_a: float | None
    stop_reason: StopReason | None
    error: str | None = None


@dataclass
class EfficiencySweep:
    points: list[SweepPoint]
    phi_d_star: float
    phi_a_star: float


def thread_count() -> int:
    """Worker count for parallel sweeps: OPTDESIGN_THREADS or the CPU count."""
    env = os.environ.get("OPTDESIGN_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(
                f"OPTDESIGN_THREADS must be an integer, got {env!r}"
            ) from None
        if n < 1:
            raise ValueError("OPTDESIGN_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1


class _CutStore:
    """Cut book-keeping with duplicate suppression.

    A newly generated cut that matches an existing one within
    ``DUPLICATE_TOL`` in max-norm adds nothing to the LP and signals that the
    loop has stalled.  Stored cuts live in one growable array so the
    comparison is a single vectorized pass even with thousands of cuts.
    """

    def __init__(self):
        self._arr: np.ndarray | None = None
        self._n = 0

    def is_duplicate(self, coeffs: np.ndarray) -> bool:
        if self._n == 0:
            return False
        gaps = np.abs(self._arr[: self._n] - coeffs).max(axis=1)
        return bool(gaps.min() <= DUPLICATE_TOL)

    def remember(self, coeffs: np.ndarray) -> None:
        c = np.asarray(coeffs, dtype=float)
        if self._arr is None:
            self._arr = np.empty((64, c.size))
        elif self._n == self._arr.shape[0]:
            grown = np.empty((2 * self._n, c.size))
            grown[: self._n] = self._arr
            self._arr = grown
        self._arr[self._n] = c
        self._n += 1


def _cuts_from(criterion, space, mu, gamma, origin, tie_window=None):
    """Cut(s) at reference mu, regularizing singular references with gamma*I.

    Returns ``(cuts, regularized)``.  The ridge path only exists for D and A
    (and their prior averages); eigenvalue-sum criteria never invert the
    information matrix, which is asserted here rather than assumed.
    """
    kw = {}
    if tie_window is not None and isinstance(
        criterion, (EkOptimality, MaximinEfficiency)
    ):
        kw["tie_window"] = tie_window
    try:
        got = cut(criterion, space, mu, origin=origin, **kw)
        return (got if isinstance(got, list) else [got]), False
    except NearSingularError:
        if isinstance(criterion, (EkOptimality, MaximinEfficiency)):
            raise RuntimeError(
                "eigenvalue-sum cuts cannot hit the singular path"
            ) from None
        if gamma <= 0:
            raise
    if isinstance(criterion, AveragedCriterion):
        infos = [
            info_matrix(s, mu).regularized(gamma) for s, _ in criterion.atoms
        ]
        spaces = [s for s, _ in criterion.atoms]
        weights = [w for _, w in criterion.atoms]
        got = ave_cut(criterion.base, spaces, weights, infos,
                      origin=origin, singular_rtol=0.0)
    else:
        info = info_matrix(space, mu).regularized(gamma)
        got = cut(criterion, space, info, origin=origin, singular_rtol=0.0)
    return (got if isinstance(got, list) else [got]), True


def _design_from_vertex(xi) -> Design:
    """LP vertices are feasible to ~1e-8; Design demands 1e-9, so normalize."""
    w = np.maximum(np.asarray(xi, dtype=float), 0.0)
    return Design(w / w.sum())


def _eigen_family(criterion) -> bool:
    """Criteria whose cuts come from eigenvectors (they chatter under ties)."""
    if isinstance(criterion, (EkOptimality, MaximinEfficiency)):
        return True
    return isinstance(criterion, AveragedCriterion) and isinstance(
        criterion.base, EkOptimality
    )


def _check_space(criterion, space: DesignSpace) -> None:
    if isinstance(criterion, AveragedCriterion):
        if space.labels != criterion.atoms[0][0].labels:
            raise ValueError(
                "space labels do not match the prior atoms' candidate points"
            )


def _final_equivalence(criterion, space, design):
    if not isinstance(criterion, (DOptimality, AOptimality, EkOptimality)):
        return None, None
    try:
        gap = equivalence_gap(criterion, space, design)
    except NearSingularError:
        return None, None
    return gap.value, gap.reliable


def solve(criterion, space: DesignSpace, config: SolveConfig | None = None,
          equality_rows=None) -> SolveReport:
    """Maximize one criterion over the designs of ``space``.

    ``equality_rows`` optionally adds linear equality constraints
    ``sum_x c(x) xi(x) = rhs`` (resource/cost restrictions) as
    ``(coefficients, rhs)`` pairs; they can make the problem infeasible,
    which is reported rather than raised.
    """
    config = config or SolveConfig()
    _check_space(criterion, space)
    started = time.perf_counter()
    prob = CutLP(space.n_points)
    for coeffs, rhs in equality_rows or []:
        prob.add_equality_row(coeffs, rhs)
    store = _CutStore()
    regularized = False

    initials = config.initial_designs or [uniform_design(space)]
    for idx, mu in enumerate(initials):
        cuts, reg = _cuts_from(criterion, space, mu, config.gamma, f"init[{idx}]")
        regularized |= reg
        for c in cuts:
            if not store.is_duplicate(c.coefficients):
                store.remember(c.coefficients)
                prob.add_objective_cut(c.coefficients)

    name = criterion.name
    trace: list[TraceEntry] = []
    best_val = -np.inf
    best_design = None
    stalls = 0
    upper = None
    iterations = 0
    smooth_w = None  # running average of LP vertices (eigenvalue criteria)
    restricted = bool(equality_rows)

    def _certify(design):
        # the equivalence theorem characterizes optima over the full simplex;
        # extra equality rows restrict it, so the gap certifies nothing there
        if restricted or design is None:
            return (None, None)
        return _final_equivalence(criterion, space, design)

    def _report(reason, design, value, gap, eq=(None, None), diagnostic=None):
        rep = SolveReport(
            criterion=name,
            stop_reason=reason,
            design=design,
            phi_value=value,
            upper_bound=upper,
            gap=gap,
            iterations=iterations,
            equivalence_gap=eq[0],
            equivalence_reliable=eq[1],
            trace=trace if config.record_trace else [],
            regularized=regularized,
            diagnostic=diagnostic,
            wall_time=time.perf_counter() - started,
        )
        rep.lp = prob
        return rep

    for it in range(1, config.max_iter + 1):
        iterations = it
        try:
            sol = solve_lp(prob)
        except RuntimeError as err:
            # The master keeps every cut, and the dense simplex ran out of
            # precision on this one.  All bounds certified so far stay valid,
            # so degrade to the iteration-limit outcome instead of raising.
            return _report(
                StopReason.ITER_LIMIT,
                best_design,
                best_val if best_design is not None else None,
                (upper - best_val) if upper is not None and best_design is not None else None,
                eq=_final_equivalence(criterion, space, best_design)
                if best_design is not None
                else (None, None),
                diagnostic=f"master LP lost numerical precision ({err}); "
                "best design so far returned with the last certified bound",
            )
        if sol.status is LPStatus.INFEASIBLE:
            return _report(
                StopReason.INFEASIBLE_CONSTRAINT,
                best_design,
                best_val if best_design is not None else None,
                None,
                diagnostic="equality rows admit no design",
            )
        if sol.status is not LPStatus.OPTIMAL:
            return _report(
                StopReason.ITER_LIMIT,
                best_design,
                best_val if best_design is not None else None,
                (upper - best_val)
                if upper is not None and best_design is not None
                else None,
                eq=_final_equivalence(criterion, space, best_design)
                if best_design is not None
                else (None, None),
                diagnostic=f"master LP stopped ({sol.status.value}); "
                "best design so far returned with the last certified bound",
            )
        xi = _design_from_vertex(sol.xi)
        val = phi(criterion, space, xi)
        upper = sol.t_star
        gap = upper - val
        if config.record_trace:
            trace.append(TraceEntry(it, upper, val, gap))
        if val > best_val:
            best_val, best_design = val, xi

        if gap < config.epsilon:
            return _report(
                StopReason.GAP_BELOW_EPSILON, xi, val, gap,
                eq=_final_equivalence(criterion, space, xi),
            )
        if config.stop_on_equivalence is not None and isinstance(
            criterion, (DOptimality, AOptimality, EkOptimality)
        ):
            eq_val, eq_rel = _final_equivalence(criterion, space, xi)
            if eq_val is not None and eq_rel and eq_val < config.stop_on_equivalence:
                return _report(
                    StopReason.EQUIVALENCE_STOP, xi, val, gap, eq=(eq_val, eq_rel)
                )

        cuts, reg = _cuts_from(criterion, space, xi, config.gamma, f"iter[{it}]")
        regularized |= reg
        if _eigen_family(criterion):
            # Eigenvector cuts from successive LP vertices flap between the
            # members of a nearly degenerate eigenspace.  The running vertex
            # average sits near the center of the optimal face, where the
            # spectrum is balanced, so its cuts pin the whole eigenspace;
            # cuts from any reference design are exact minorants, so this
            # only tightens the master.
            smooth_w = xi.w.copy() if smooth_w is None else 0.5 * (smooth_w + xi.w)
            smooth = Design(smooth_w / smooth_w.sum())
            extra, reg = _cuts_from(
                criterion, space, smooth, config.gamma, f"smooth[{it}]"
            )
            regularized |= reg
            cuts = cuts + extra
        added = 0

        def _admit(new_cuts):
            nonlocal added
            for c in new_cuts:
                if not store.is_duplicate(c.coefficients):
                    store.remember(c.coefficients)
                    prob.add_objective_cut(c.coefficients)
                    added += 1

        _admit(cuts)
        if added == 0 and _eigen_family(criterion):
            # The familiar minorants at this iterate are all in the master
            # already.  Near-degenerate eigenvalues still hide unexplored
            # frames, so retry with progressively wider tie windows before
            # conceding a stall; wide-window frames remain exact minorants.
            wide = EK_WINDOW_RTOL
            refs = [xi] if smooth_w is None else [
                xi, Design(smooth_w / smooth_w.sum())
            ]
            while added == 0 and wide < 1e-3:
                wide *= 100.0
                for ref in refs:
                    extra, reg = _cuts_from(
                        criterion, space, ref, config.gamma,
                        f"widen[{it}]", tie_window=wide,
                    )
                    regularized |= reg
                    _admit(extra)
        if added == 0:
            stalls += 1
            if stalls >= 3:
                return _report(
                    StopReason.ITER_LIMIT,
                    best_design,
                    best_val,
                    upper - best_val,
                    eq=_final_equivalence(criterion, space, best_design),
                    diagnostic=(
                        "cut generation stalled: three consecutive iterations "
                        "produced only duplicate cuts while the gap exceeded "
                        "epsilon"
                    ),
                )
        else:
            stalls = 0

    return _report(
        StopReason.ITER_LIMIT,
        best_design,
        best_val,
        (upper - best_val) if upper is not None else None,
        eq=_final_equivalence(criterion, space, best_design),
        diagnostic="iteration budget exhausted; best design so far returned",
    )


def solve_ek_sweep(space: DesignSpace, config: SolveConfig | None = None,
                   parallel: bool = False) -> list[EkOptimum]:
    """Optimal eigenvalue-sum values E_k(opt) for every k = 1..p.

    Each k is solved independently; afterwards every returned design is
    evaluated under every k and the best value is reported per k.  Because
    phi_{E(k+1)} >= phi_{E_k} pointwise, the reported sequence is
    nondecreasing by construction while staying within the solver tolerance
    of the true optima (the raw per-solve reports remain attached).
    """
    config = config or SolveConfig()
    p = space.dim_p

    def _one(k):
        return solve(EkOptimality(k), space, config)

    ks = range(1, p + 1)
    if parallel and thread_count() > 1:
        with ThreadPoolExecutor(max_workers=min(thread_count(), p)) as pool:
            reports = list(pool.map(_one, ks))
    else:
        reports = [_one(k) for k in ks]

    designs = [r.design for r in reports]
    out = []
    for k in ks:
        crit = EkOptimality(k)
        vals = [phi(crit, space, d) for d in designs]
        best = int(np.argmax(vals))
        out.append(EkOptimum(k, float(vals[best]), designs[best], reports[k - 1]))
    values = np.array([o.value for o in out])
    if np.any(np.diff(values) < -1e-9):
        raise RuntimeError(f"E_k optima not nondecreasing: {values}")
    return out


def solve_maximin(space: DesignSpace, config: SolveConfig | None = None,
                  precomputed_ek=None) -> SolveReport:
    """Design maximizing the worst E_k-efficiency over k = 1..p.

    ``precomputed_ek`` supplies the per-k optimal values, either as floats or
    as the :class:`EkOptimum` records of :func:`solve_ek_sweep`; when omitted
    a full sweep pre-pass computes them.  The report's ``efficiencies`` hold
    the per-k efficiencies of the final design and ``psi_star`` their minimum
    (also ``phi_value``).
    """
    config = config or SolveConfig()
    if precomputed_ek is None:
        normalizers = [o.value for o in solve_ek_sweep(space, config)]
    else:
        normalizers = [getattr(o, "value", o) for o in precomputed_ek]
    criterion = MaximinEfficiency(normalizers)
    report = solve(criterion, space, config)
    if report.design is not None:
        lam = info_matrix(space, report.design).spectral.eigenvalues
        report.efficiencies = np.cumsum(lam) / criterion.normalizers
        report.psi_star = float(np.min(report.efficiencies))
    return report


_INFEASIBLE_LEVEL_HINT = (
    "no design reaches the prescribed A-level; it may exceed the best "
    "attainable value -- solve criterion A unconstrained to obtain it"
)


def solve_d_given_a(space: DesignSpace, a: float,
                    config: SolveConfig | None = None,
                    equality_rows=None) -> SolveReport:
    """Maximize D-optimality among designs with A-value at least ``a``.

    Both cut families are generated from the same iterate: the D cut joins
    the objective block and the A cut enters as the level constraint
    ``sum_x h_A(mu, x) xi(x) >= a``.  The run stops once the D gap is below
    epsilon *and* the A slack ``phi_A(xi) - a`` reaches ``config.delta_a``,
    the latter measured with the master LP's feasibility tolerance (an
    active floor is approached from below by ~1e-8 scale).  An infeasible
    master LP means no design satisfies the accumulated level cuts, which
    certifies the level is unattainable.
    """
    config = config or SolveConfig()
    a = float(a)
    if not np.isfinite(a) or a < 0:
        raise ValueError(f"A-level must be a nonnegative real, got {a!r}")
    started = time.perf_counter()
    d_crit, a_crit = DOptimality(), AOptimality()
    name = f"D|A>={a:g}"
    prob = CutLP(space.n_points)
    for coeffs, rhs in equality_rows or []:
        prob.add_equality_row(coeffs, rhs)
    obj_store, lvl_store = _CutStore(), _CutStore()
    regularized = False

    def _add_pair(mu, origin):
        nonlocal regularized
        added = 0
        dcuts, reg_d = _cuts_from(d_crit, space, mu, config.gamma, origin)
        acuts, reg_a = _cuts_from(a_crit, space, mu, config.gamma, origin)
        regularized |= reg_d or reg_a
        for c in dcuts:
            if not obj_store.is_duplicate(c.coefficients):
                obj_store.remember(c.coefficients)
                prob.add_objective_cut(c.coefficients)
                added += 1
        for c in acuts:
            if not lvl_store.is_duplicate(c.coefficients):
                lvl_store.remember(c.coefficients)
                prob.add_level_cut(c.coefficients, a)
                added += 1
        return added

    for idx, mu in enumerate(config.initial_designs or [uniform_design(space)]):
        _add_pair(mu, f"init[{idx}]")

    trace: list[TraceEntry] = []
    best = None  # (phi_d, design, phi_a) among iterates meeting the A slack
    last = None
    stalls = 0
    upper = None
    iterations = 0

    def _report(reason, design, val_d, val_a, diagnostic=None):
        # the plain D equivalence gap certifies the result only when the
        # A-level ends up slack (the constraint did not bind); at an active
        # level the LP sandwich is the certificate and the unconstrained gap
        # would just measure the distance to the unconstrained D-optimum
        eq_val, eq_rel = (None, None)
        slack = val_a is not None and val_a > a + 1e-6 * (1.0 + abs(a))
        if design is not None and reason is StopReason.GAP_BELOW_EPSILON and slack:
            eq_val, eq_rel = _final_equivalence(d_crit, space, design)
        rep = SolveReport(
            criterion=name,
            stop_reason=reason,
            design=design,
            phi_value=val_d,
            upper_bound=upper,
            gap=(upper - val_d) if (upper is not None and val_d is not None) else None,
            iterations=iterations,
            equivalence_gap=eq_val,
            equivalence_reliable=eq_rel,
            trace=trace if config.record_trace else [],
            regularized=regularized,
            diagnostic=diagnostic,
            a_target=a,
            a_value=val_a,
            delta_a_achieved=(val_a - a) if val_a is not None else None,
            wall_time=time.perf_counter() - started,
        )
        rep.lp = prob
        return rep

    for it in range(1, config.max_iter + 1):
        iterations = it
        try:
            sol = solve_lp(prob)
        except RuntimeError as err:
            chosen = best or last
            return _report(
                StopReason.ITER_LIMIT,
                chosen[1] if chosen else None,
                chosen[0] if chosen else None,
                chosen[2] if chosen else None,
                diagnostic=f"master LP lost numerical precision ({err}); "
                "best design so far returned with the last certified bound",
            )
        if sol.status is LPStatus.INFEASIBLE:
            design = best[1] if best else None
            return _report(
                StopReason.INFEASIBLE_CONSTRAINT,
                design,
                best[0] if best else None,
                best[2] if best else None,
                diagnostic=_INFEASIBLE_LEVEL_HINT,
            )
        if sol.status is not LPStatus.OPTIMAL:
            chosen = best or last
            return _report(
                StopReason.ITER_LIMIT,
                chosen[1] if chosen else None,
                chosen[0] if chosen else None,
                chosen[2] if chosen else None,
                diagnostic=f"master LP stopped ({sol.status.value}); "
                "best design so far returned with the last certified bound",
            )
        xi = _design_from_vertex(sol.xi)
        val_d = phi(d_crit, space, xi)
        val_a = phi(a_crit, space, xi)
        upper = sol.t_star
        gap_d = upper - val_d
        gap_a = val_a - a
        if config.record_trace:
            trace.append(TraceEntry(it, upper, val_d, gap_d, val_a, gap_a))
        last = (val_d, xi, val_a)
        # LP vertices approach an active level from below by the master's
        # own feasibility tolerance (~1e-8 scale), so the floor counts as met
        # within that slop; delta_a adds the user's margin on top of it
        feas_tol = 1e-8 * (1.0 + abs(a))
        a_ok = gap_a >= config.delta_a - feas_tol
        if a_ok and (best is None or val_d > best[0]):
            best = last

        if gap_d < config.epsilon and a_ok:
            return _report(StopReason.GAP_BELOW_EPSILON, xi, val_d, val_a)

        if _add_pair(xi, f"iter[{it}]") == 0:
            stalls += 1
            if stalls >= 3:
                chosen = best or last
                return _report(
                    StopReason.ITER_LIMIT,
                    chosen[1],
                    chosen[0],
                    chosen[2],
                    diagnostic=(
                        "cut generation stalled before both stop conditions "
                        "held (duplicate cuts three iterations in a row)"
                    ),
                )
        else:
            stalls = 0

    chosen = best or last
    hint = "" if best else "; the A slack never exceeded delta_a -- " + _INFEASIBLE_LEVEL_HINT
    return _report(
        StopReason.ITER_LIMIT,
        chosen[1] if chosen else None,
        chosen[0] if chosen else None,
        chosen[2] if chosen else None,
        diagnostic="iteration budget exhausted" + hint,
    )


def efficiency_sweep(space: DesignSpace, a_values,
                     config: SolveConfig | None = None,
                     references: tuple[float, float] | None = None,
                     parallel: bool = False) -> EfficiencySweep:
    """D/A efficiency trade-off across a grid of A-level floors.

    ``references`` are the unconstrained optima (phi_D*, phi_A*); they are
    computed on the fly when omitted.  A failing grid point is recorded with
    its error and the sweep continues.
    """
    config = config or SolveConfig()
    a_values = [float(a) for a in a_values]
    if references is None:
        phi_d_star = solve(DOptimality(), space, config).phi_value
        phi_a_star = solve(AOptimality(), space, config).phi_value
    else:
        phi_d_star, phi_a_star = (float(v) for v in references)
    if not phi_d_star or not phi_a_star or phi_d_star <= 0 or phi_a_star <= 0:
        raise ValueError("reference optima must be positive")

    def _one(a):
        try:
            rep = solve_d_given_a(space, a, config)
        except Exception as exc:  # record and move on; a sweep must not die
            return SweepPoint(a, None, None, None, None, None, repr(exc))
        if rep.design is None:
            return SweepPoint(
                a, None, None, None, None, rep.stop_reason, rep.diagnostic
            )
        return SweepPoint(
            a,
            rep.phi_value,
            rep.a_value,
            rep.phi_value / phi_d_star,
            rep.a_value / phi_a_star,
            rep.stop_reason,
        )

    if parallel and thread_count() > 1:
        with ThreadPoolExecutor(max_workers=min(thread_count(), 8)) as pool:
            points = list(pool.map(_one, a_values))
    else:
        points = [_one(a) for a in a_values]
    return EfficiencySweep(points, phi_d_star, phi_a_star)
