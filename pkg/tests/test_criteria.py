import numpy as np
import pytest

from optdesign.criteria import (
    AOptimality,
    AveragedCriterion,
    Cut,
    DOptimality,
    EkOptimality,
    MaximinEfficiency,
    cut,
    equivalence_gap,
    info_matrix,
    phi,
)
from optdesign.models import Design, compartment_model, poly_model

from conftest import random_design


def info_of(space, design):
    m = np.zeros((space.dim_p, space.dim_p))
    for x, w in enumerate(design.w):
        f = space.features[x]
        m += w * np.outer(f, f)
    return m


def cut_value(criterion, space, mu, xi, **kw):
    """sum_x H(mu, x) xi(x); multi-cut criteria take the tightest minorant."""
    cuts = cut(criterion, space, mu, **kw)
    if isinstance(cuts, Cut):
        cuts = [cuts]
    return min(float(c.coefficients @ xi.w) for c in cuts)


# --- phi oracles ----------------------------------------------------------

def test_phi_d_matches_det_oracle(poly2_small):
    rng = np.random.default_rng(0)
    for _ in range(25):
        d = random_design(rng, poly2_small.n_points)
        m = info_of(poly2_small, d)
        want = np.linalg.det(m) ** (1.0 / 3.0)
        assert phi(DOptimality(), poly2_small, d) == pytest.approx(want, rel=1e-10)


def test_phi_a_matches_trace_oracle(poly2_small):
    rng = np.random.default_rng(1)
    for _ in range(25):
        d = random_design(rng, poly2_small.n_points)
        m = info_of(poly2_small, d)
        want = 1.0 / np.trace(np.linalg.inv(m))
        assert phi(AOptimality(), poly2_small, d) == pytest.approx(want, rel=1e-9)


def test_phi_ek_matches_eigh_oracle(poly2_small):
    rng = np.random.default_rng(2)
    for _ in range(25):
        d = random_design(rng, poly2_small.n_points)
        lam = np.linalg.eigvalsh(info_of(poly2_small, d))
        for k in (1, 2, 3):
            want = float(np.sum(lam[:k]))
            assert phi(EkOptimality(k), poly2_small, d) == pytest.approx(want, abs=1e-10)


def test_phi_singular_designs(poly2_small):
    d = Design(np.eye(poly2_small.n_points)[0])  # one support point, rank 1
    assert phi(DOptimality(), poly2_small, d) == 0.0
    assert phi(AOptimality(), poly2_small, d) == 0.0
    assert phi(EkOptimality(1), poly2_small, d) == 0.0  # smallest eigenvalue 0


def test_phi_maximin_is_min_normalized_ek(poly2_small):
    rng = np.random.default_rng(3)
    normalizers = [0.2, 1.0, 3.0]
    crit = MaximinEfficiency(normalizers)
    for _ in range(10):
        d = random_design(rng, poly2_small.n_points)
        lam = np.linalg.eigvalsh(info_of(poly2_small, d))
        want = min(np.sum(lam[:k]) / normalizers[k - 1] for k in (1, 2, 3))
        assert phi(crit, poly2_small, d) == pytest.approx(want, abs=1e-10)


def test_phi_averaged_is_prior_mean(compartment):
    thetas = [(21.8, 0.05884, 4.298), (20.0, 0.06, 4.0)]
    grid = np.asarray(compartment.labels, dtype=float)
    spaces = [compartment_model(theta0=t, grid=grid) for t in thetas]
    crit = AveragedCriterion(DOptimality(), [(spaces[0], 0.3), (spaces[1], 0.7)])
    rng = np.random.default_rng(4)
    d = random_design(rng, compartment.n_points)
    want = 0.3 * phi(DOptimality(), spaces[0], d) + 0.7 * phi(DOptimality(), spaces[1], d)
    assert phi(crit, spaces[0], d) == pytest.approx(want, rel=1e-12)


# --- the cutting-plane inequality (Theorem 1) ------------------------------

CRITERIA = [DOptimality(), AOptimality(), EkOptimality(1), EkOptimality(2),
            EkOptimality(3)]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: c.name)
def test_minorant_and_self_cut(poly2_small, criterion):
    """phi(xi) <= sum_x H(mu,x) xi(x), with equality at xi = mu (200 pairs)."""
    rng = np.random.default_rng(7)
    n = poly2_small.n_points
    for trial in range(200):
        mu = random_design(rng, n, sparse=trial % 3 == 0)
        xi = random_design(rng, n)
        if phi(DOptimality(), poly2_small, mu) <= 1e-12:
            continue  # singular references need the solver's ridge path
        val = phi(criterion, poly2_small, xi)
        lin = cut_value(criterion, poly2_small, mu, xi)
        assert val <= lin + 1e-9 * (1.0 + abs(lin))
        self_val = phi(criterion, poly2_small, mu)
        self_lin = cut_value(criterion, poly2_small, mu, mu)
        assert self_lin == pytest.approx(self_val, abs=1e-9 * (1 + abs(self_val)))


def test_minorant_maximin(poly2_small):
    crit = MaximinEfficiency([0.2, 1.0, 3.0])
    rng = np.random.default_rng(8)
    n = poly2_small.n_points
    for _ in range(100):
        mu = random_design(rng, n)
        xi = random_design(rng, n)
        val = phi(crit, poly2_small, xi)
        lin = cut_value(crit, poly2_small, mu, xi)
        assert val <= lin + 1e-9 * (1.0 + abs(lin))
    mu = random_design(rng, n)
    assert cut_value(crit, poly2_small, mu, mu) == pytest.approx(
        phi(crit, poly2_small, mu), abs=1e-9)


def test_minorant_averaged(compartment):
    grid = np.asarray(compartment.labels, dtype=float)
    spaces = [compartment_model(theta0=t, grid=grid)
              for t in [(21.8, 0.05884, 4.298), (23.0, 0.055, 4.6)]]
    crit = AveragedCriterion(AOptimality(), [(spaces[0], 0.5), (spaces[1], 0.5)])
    rng = np.random.default_rng(9)
    for _ in range(50):
        mu = random_design(rng, compartment.n_points)
        xi = random_design(rng, compartment.n_points)
        val = phi(crit, spaces[0], xi)
        lin = cut_value(crit, spaces[0], mu, xi)
        assert val <= lin + 1e-9 * (1.0 + abs(lin))


def test_ek_tie_window_cuts_are_minorants(qcube2):
    """Near-tied spectra emit one cut per eigenvector window; all stay valid."""
    space, _ = qcube2
    rng = np.random.default_rng(10)
    crit = EkOptimality(2)
    for _ in range(50):
        mu = random_design(rng, space.n_points)
        cuts = cut(crit, space, mu, tie_window=0.5)  # force wide windows
        cuts = [cuts] if isinstance(cuts, Cut) else cuts
        assert len(cuts) >= 1
        for xi in (random_design(rng, space.n_points) for _ in range(5)):
            val = phi(crit, space, xi)
            for c in cuts:
                assert val <= float(c.coefficients @ xi.w) + 1e-9


def test_cut_coefficients_shape_and_tags(poly2_small):
    c = cut(DOptimality(), poly2_small, uniform := Design(np.full(11, 1 / 11)),
            origin="it3")
    assert c.kind == "D" and c.origin == "it3"
    assert c.coefficients.shape == (poly2_small.n_points,)


# --- equivalence certificate ----------------------------------------------

def test_equivalence_gap_zero_at_known_optima(poly2_small):
    # D-optimal quadratic design: mass 1/3 on {-1, 0, 1}
    w = np.zeros(11)
    w[[0, 5, 10]] = 1.0 / 3.0
    gap = equivalence_gap(DOptimality(), poly2_small, Design(w))
    assert gap.value == pytest.approx(0.0, abs=1e-12)
    # A-optimal quadratic design: (0.25, 0.5, 0.25)
    w = np.zeros(11)
    w[[0, 10]] = 0.25
    w[5] = 0.5
    gap = equivalence_gap(AOptimality(), poly2_small, Design(w))
    assert gap.value == pytest.approx(0.0, abs=1e-12)


def test_equivalence_gap_positive_off_optimum(poly2_small):
    rng = np.random.default_rng(11)
    d = random_design(rng, 11)
    assert equivalence_gap(DOptimality(), poly2_small, d).value > 1e-3


def test_equivalence_gap_flags_ties(qcube2):
    space, _ = qcube2
    # the uniform design on the symmetric 3x3 grid has lambda_4 == lambda_5
    # exactly (coordinate-exchange symmetry), so the E_4 subgradient is not
    # unique and the certificate must say so
    u = Design(np.full(space.n_points, 1.0 / space.n_points))
    lam = info_matrix(space, u).spectral.eigenvalues
    assert lam[4] - lam[3] <= 1e-12 * lam[-1]
    gap = equivalence_gap(EkOptimality(4), space, u)
    assert not gap.reliable
    # a clean spectral gap at the cutoff stays reliable
    assert equivalence_gap(EkOptimality(1), space, u).reliable


# --- AVE degeneracy ---------------------------------------------------------

def test_averaged_point_mass_prior_degenerates(compartment):
    """A one-atom prior must reproduce the local criterion exactly."""
    grid = np.asarray(compartment.labels, dtype=float)
    atom = compartment_model(theta0=(21.8, 0.05884, 4.298), grid=grid)
    rng = np.random.default_rng(13)
    for base in (DOptimality(), AOptimality(), EkOptimality(2)):
        ave = AveragedCriterion(base, [(atom, 1.0)])
        for _ in range(20):
            d = random_design(rng, compartment.n_points)
            assert phi(ave, atom, d) == pytest.approx(
                phi(base, atom, d), abs=1e-9 * (1 + phi(base, atom, d)))
        mu = random_design(rng, compartment.n_points)
        xi = random_design(rng, compartment.n_points)
        assert cut_value(ave, atom, mu, xi) == pytest.approx(
            cut_value(base, atom, mu, xi), abs=1e-9)


def test_averaged_criterion_validation(compartment):
    grid = np.asarray(compartment.labels, dtype=float)
    atom = compartment_model(theta0=(21.8, 0.05884, 4.298), grid=grid)
    with pytest.raises(ValueError):
        AveragedCriterion(DOptimality(), [(atom, 0.4)])  # weights not 1
    with pytest.raises(TypeError):
        AveragedCriterion(MaximinEfficiency([1.0]), [(atom, 1.0)])


def test_maximin_normalizer_validation():
    with pytest.raises(ValueError):
        MaximinEfficiency([1.0, -2.0])
    with pytest.raises(ValueError):
        MaximinEfficiency([])
