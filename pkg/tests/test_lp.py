import time

import numpy as np
import pytest
from scipy.optimize import linprog

from optdesign.lp import CutLP, LPStatus, dump_lp, solve_lp


def reference_solve(prob):
    """Independent solve of the same master via scipy's HiGHS interface.

    Variables z = (xi, t); maximize t  <=>  minimize -t.
    """
    h, g, a, e, b = prob.blocks()
    n = prob.n_points
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub, b_ub = [], []
    for row in h:  # h.xi >= t  <=>  t - h.xi <= 0
        a_ub.append(np.append(-row, 1.0))
        b_ub.append(0.0)
    for row, lvl in zip(g, a):  # g.xi >= lvl
        a_ub.append(np.append(-row, 0.0))
        b_ub.append(-lvl)
    a_eq = np.hstack([e, np.zeros((e.shape[0], 1))])
    res = linprog(
        c,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=a_eq,
        b_eq=b,
        bounds=[(0, None)] * n + [(None, None)],
        method="highs",
    )
    return res


def random_problem(rng, n=8, nj=5, nl=0, scale=1.0):
    prob = CutLP(n)
    for _ in range(nj):
        prob.add_objective_cut(rng.normal(size=n) * scale)
    for _ in range(nl):
        g = np.abs(rng.normal(size=n)) * scale
        prob.add_level_cut(g, 0.3 * float(g.mean()))
    return prob


# --- basics -----------------------------------------------------------------

def test_single_cut_optimum_is_best_point():
    prob = CutLP(6)
    h = np.array([0.1, 0.9, 0.4, 0.9, 0.2, 0.0])
    prob.add_objective_cut(h)
    sol = solve_lp(prob)
    assert sol.status is LPStatus.OPTIMAL
    assert sol.t_star == pytest.approx(0.9, abs=1e-12)
    assert sol.xi.sum() == pytest.approx(1.0, abs=1e-9)
    # all mass on argmax points
    assert sol.xi[[1, 3]].sum() == pytest.approx(1.0, abs=1e-9)


def test_input_validation():
    with pytest.raises(ValueError):
        CutLP(0)
    prob = CutLP(4)
    with pytest.raises(ValueError):
        solve_lp(prob)  # no objective cut yet
    with pytest.raises(ValueError):
        prob.add_objective_cut(np.ones(3))
    with pytest.raises(ValueError):
        prob.add_objective_cut([np.inf, 0, 0, 0])
    with pytest.raises(ValueError):
        prob.add_level_cut(np.ones(4), np.nan)
    prob.add_objective_cut(np.ones(4))
    with pytest.raises(ValueError):
        solve_lp(prob, orientation="sideways")


@pytest.mark.parametrize("orientation", ["primal", "dual"])
def test_matches_reference_solver(orientation):
    rng = np.random.default_rng(42)
    for trial in range(30):
        prob = random_problem(
            rng,
            n=int(rng.integers(3, 12)),
            nj=int(rng.integers(1, 9)),
            nl=int(rng.integers(0, 3)),
            scale=float(10.0 ** rng.integers(-2, 3)),
        )
        ref = reference_solve(prob)
        sol = solve_lp(prob, orientation=orientation)
        if ref.status == 2:
            assert sol.status is LPStatus.INFEASIBLE
            continue
        assert sol.status is LPStatus.OPTIMAL, f"trial {trial}"
        scale = 1.0 + abs(ref.fun)
        assert sol.t_star == pytest.approx(-ref.fun, abs=1e-7 * scale)


def test_orientations_agree():
    rng = np.random.default_rng(7)
    for _ in range(20):
        prob = random_problem(rng, n=10, nj=6, nl=1)
        a = solve_lp(prob, orientation="primal")
        b = solve_lp(prob, orientation="dual")
        assert a.status is b.status is LPStatus.OPTIMAL
        assert a.t_star == pytest.approx(b.t_star, abs=1e-8 * (1 + abs(a.t_star)))
        assert a.orientation == "primal" and b.orientation == "dual"


def test_row_generation_agrees_with_direct():
    rng = np.random.default_rng(11)
    n = 40
    prob = CutLP(n)
    for _ in range(700):  # past the direct-solve threshold
        prob.add_objective_cut(rng.normal(size=n) + 2.0)
    direct = solve_lp(prob, orientation="dual")
    auto = solve_lp(prob)
    assert auto.orientation == "rowgen"
    assert auto.status is LPStatus.OPTIMAL
    assert auto.t_star == pytest.approx(direct.t_star, abs=2e-8 * (1 + abs(direct.t_star)))
    # row generation must still satisfy every cut it never activated
    h, g, a, e, b = prob.blocks()
    assert float((h @ auto.xi - auto.t_star).min()) >= -1e-7 * (1 + abs(auto.t_star))


# --- monotonicity under new cuts ---------------------------------------------

def test_adding_cuts_never_raises_optimum():
    rng = np.random.default_rng(3)
    prob = random_problem(rng, n=9, nj=2)
    prev = solve_lp(prob).t_star
    for _ in range(15):
        prob.add_objective_cut(rng.normal(size=9))
        cur = solve_lp(prob).t_star
        assert cur <= prev + 1e-9 * (1.0 + abs(prev))
        prev = cur


def test_warm_start_reuses_basis():
    rng = np.random.default_rng(5)
    prob = random_problem(rng, n=12, nj=3)
    solve_lp(prob, orientation="dual")
    prob.add_objective_cut(rng.normal(size=12))
    warm = solve_lp(prob, orientation="dual")
    cold = CutLP(12)
    for cut_row in prob._objective:
        cold.add_objective_cut(cut_row)
    cold_sol = solve_lp(cold, orientation="dual")
    assert warm.t_star == pytest.approx(cold_sol.t_star, abs=1e-9)
    assert warm.pivots <= cold_sol.pivots


# --- level cuts and feasibility ----------------------------------------------

def test_level_cut_binds():
    # two points; objective prefers point 0, level constraint forces point 1
    prob = CutLP(2)
    prob.add_objective_cut([1.0, 0.0])
    prob.add_level_cut([0.0, 1.0], 0.6)
    sol = solve_lp(prob)
    assert sol.status is LPStatus.OPTIMAL
    assert sol.xi[1] == pytest.approx(0.6, abs=1e-9)
    assert sol.t_star == pytest.approx(0.4, abs=1e-9)
    assert sol.dual_values is not None


def test_infeasible_level_detected():
    prob = CutLP(3)
    prob.add_objective_cut([1.0, 1.0, 1.0])
    prob.add_level_cut([0.1, 0.2, 0.3], 0.5)  # max attainable is 0.3
    for orientation in ("primal", "dual", None):
        sol = solve_lp(prob, orientation=orientation)
        assert sol.status is LPStatus.INFEASIBLE
        assert sol.xi is None and sol.t_star is None


def test_extra_equality_row():
    # pin xi_0 = 0.25 exactly
    prob = CutLP(4)
    prob.add_objective_cut([1.0, 0.0, 0.0, 0.0])
    e = np.zeros(4)
    e[0] = 1.0
    prob.add_equality_row(e, 0.25)
    sol = solve_lp(prob)
    assert sol.status is LPStatus.OPTIMAL
    assert sol.xi[0] == pytest.approx(0.25, abs=1e-10)
    assert sol.t_star == pytest.approx(0.25, abs=1e-10)


def test_contradictory_equalities_are_infeasible():
    prob = CutLP(3)
    prob.add_objective_cut([1.0, 2.0, 3.0])
    e = np.zeros(3)
    e[0] = 1.0
    prob.add_equality_row(e, 0.8)
    prob.add_equality_row(e, 0.1)
    sol = solve_lp(prob)
    assert sol.status is LPStatus.INFEASIBLE


# --- conditioning -------------------------------------------------------------

def test_scaling_invariance():
    rng = np.random.default_rng(13)
    base = random_problem(rng, n=8, nj=6)
    ref = solve_lp(base).t_star
    for factor in (1e-6, 1e-4, 1e4, 1e6):
        scaled = CutLP(8)
        for row in base._objective:
            scaled.add_objective_cut(row * factor)
        got = solve_lp(scaled).t_star
        assert got == pytest.approx(ref * factor, rel=1e-8)


def test_degenerate_ties_resolve():
    # many identical cuts => massively degenerate vertex; must not cycle
    prob = CutLP(5)
    h = np.array([0.3, 0.7, 0.7, 0.1, 0.7])
    for _ in range(20):
        prob.add_objective_cut(h.copy())
    sol = solve_lp(prob)
    assert sol.status is LPStatus.OPTIMAL
    assert sol.t_star == pytest.approx(0.7, abs=1e-10)


def test_performance_contract():
    """24,000 candidate points x 150 cuts solves inside a minute."""
    rng = np.random.default_rng(99)
    n = 24_000
    prob = CutLP(n)
    for _ in range(150):
        prob.add_objective_cut(rng.normal(size=n) + 3.0)
    t0 = time.perf_counter()
    sol = solve_lp(prob)
    elapsed = time.perf_counter() - t0
    assert sol.status is LPStatus.OPTIMAL
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    h, _, _, _, _ = prob.blocks()
    assert float((h @ sol.xi).min()) >= sol.t_star - 1e-7 * (1 + abs(sol.t_star))


def test_dump_lp_renders_all_rows():
    prob = CutLP(3)
    prob.add_objective_cut([1.0, 2.0, 3.0])
    prob.add_level_cut([0.5, 0.5, 0.0], 0.25)
    text = dump_lp(prob)
    assert "3 design weights" in text
    assert "obj[0]" in text and ">= t" in text
    assert "lvl[0]" in text and ">= 0.25" in text
    assert "eq[0]" in text and "== 1" in text
    assert "xi >= 0" in text
