import numpy as np
import pytest

from optdesign.models import (
    Design,
    DesignSpace,
    compartment_model,
    compartment_response,
    custom_space,
    grid_points,
    linearized_space,
    mixture,
    point_mass,
    poly_model,
    qcube_model,
    qcube_symmetric_space,
    redistribute_uniform,
    uniform_design,
)


# --- grids ---------------------------------------------------------------

def test_grid_points_includes_endpoint():
    g = grid_points(-1.0, 1.0, 0.01)
    assert g.size == 201
    assert g[0] == -1.0
    assert g[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(g) > 0)


def test_grid_points_compartment_style():
    g = grid_points(0.001, 24.0, 0.001)
    assert g.size == 24000


def test_grid_points_validation():
    with pytest.raises(ValueError):
        grid_points(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        grid_points(1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        grid_points(0.0, float("nan"), 0.1)


# --- designs -------------------------------------------------------------

def test_design_validates_simplex():
    with pytest.raises(ValueError):
        Design([0.5, 0.2])  # does not sum to one
    with pytest.raises(ValueError):
        Design([1.5, -0.5])
    d = Design([0.25, 0.75])
    with pytest.raises(ValueError):
        d.w[0] = 1.0  # frozen


def test_design_clamps_vertex_noise():
    # LP vertices carry -1e-12-scale negatives; Design absorbs them
    d = Design([1.0 + 1e-12, -1e-12])
    assert d.w[1] == 0.0
    assert d.w.sum() == pytest.approx(1.0, abs=1e-15)


def test_from_exact_weights_round_trip():
    w = np.array([0.2, 0.30000000000000004, 0.5])
    d = Design.from_exact_weights(w)
    assert np.array_equal(d.w, w)  # bit-for-bit, no renormalization


def test_support_and_trimmed():
    d = Design([0.5, 1e-9, 0.5 - 1e-9])
    assert list(d.support()) == [0, 2]
    t = d.trimmed()
    assert t.w[1] == 0.0
    assert t.w.sum() == pytest.approx(1.0, abs=1e-15)


def test_mixture_and_point_mass(poly2_small):
    a = point_mass(poly2_small, -1.0)
    b = point_mass(poly2_small, 1.0)
    m = mixture([a, b], [0.25, 0.75])
    assert m.w[0] == pytest.approx(0.25)
    assert m.w[-1] == pytest.approx(0.75)
    with pytest.raises(ValueError):
        point_mass(poly2_small, 0.123)  # not a grid point


def test_uniform_design(poly2_small):
    u = uniform_design(poly2_small)
    assert np.allclose(u.w, 1.0 / poly2_small.n_points)


# --- model spaces --------------------------------------------------------

@pytest.mark.filterwarnings("ignore:feature matrix")
def test_poly_model_features_are_monomials():
    sp = poly_model(3, [-0.5, 0.25, 1.0])
    x = np.array([-0.5, 0.25, 1.0])
    want = np.stack([np.ones(3), x, x**2, x**3], axis=1)
    assert np.allclose(sp.features, want)
    assert sp.dim_p == 4


@pytest.mark.filterwarnings("ignore:feature matrix")
def test_qcube_features_full_quadratic():
    pts = np.array([[0.3, -0.7]])
    sp = qcube_model(2, pts)
    row = sp.features[0]
    x1, x2 = 0.3, -0.7
    # a full quadratic has 1, linears, squares and the cross term (p = 6)
    assert sp.dim_p == 6
    assert sorted(row) == pytest.approx(sorted([1.0, x1, x2, x1 * x1, x2 * x2, x1 * x2]))


def test_qcube_symmetric_space_classes():
    sp, sup = qcube_symmetric_space(3)
    assert sp.n_points == 27
    assert sp.dim_p == 10
    sizes = [len(c) for c in sup.classes]
    assert sizes == [1, 6, 12, 8]  # points with 0..3 nonzero coordinates
    for i, cls in enumerate(sup.classes):
        for idx in cls:
            label = sp.labels[idx]
            assert sum(1 for v in label if v != 0.0) == i


def test_class_masses_and_redistribute():
    sp, sup = qcube_symmetric_space(2)
    rng = np.random.default_rng(5)
    d = Design(rng.dirichlet(np.ones(sp.n_points)))
    masses = sup.class_masses(d)
    assert masses.sum() == pytest.approx(1.0, abs=1e-12)
    r = redistribute_uniform(d, sup)
    assert np.allclose(sup.class_masses(r), masses, atol=1e-12)
    for cls in sup.classes:
        assert np.allclose(r.w[cls], r.w[cls][0])  # uniform inside each class


def test_compartment_jacobian_matches_finite_differences():
    sp = compartment_model()
    theta0 = np.array([21.8, 0.05884, 4.298])
    rng = np.random.default_rng(6)
    idx = rng.choice(sp.n_points, size=12, replace=False)
    x = np.array([sp.labels[i] for i in idx])
    h = 1e-6
    for j, e in enumerate(np.eye(3)):
        fd = (compartment_response(theta0 + h * e, x)
              - compartment_response(theta0 - h * e, x)) / (2 * h)
        assert np.allclose(sp.features[idx, j], fd, atol=1e-5)


def test_linearized_space_finite_difference_fallback():
    theta0 = np.array([1.0, 2.0])

    def response(theta, x):
        return theta[0] * np.exp(-theta[1] * x)

    labels = [0.1, 0.5, 1.0]
    sp = linearized_space(response, theta0, labels)
    x = np.asarray(labels)
    want = np.stack([np.exp(-2.0 * x), -1.0 * x * np.exp(-2.0 * x)], axis=1)
    assert np.allclose(sp.features, want, atol=1e-6)


def test_custom_space_shapes():
    f = np.arange(6.0).reshape(3, 2)
    sp = custom_space(f, labels=["a", "b", "c"])
    assert sp.n_points == 3 and sp.dim_p == 2
    assert sp.labels == ["a", "b", "c"]
    with pytest.raises(ValueError):
        custom_space(f, labels=["a"])  # label count mismatch


def test_rank_deficient_space_warns():
    with pytest.warns(UserWarning, match="rank below"):
        qcube_model(2, np.array([[-1.0, -1.0], [0.0, 1.0], [1.0, 0.5]]))


def test_design_space_rejects_bad_features():
    with pytest.raises(ValueError):
        DesignSpace(["a"], np.empty((0, 2)))
    with pytest.raises(ValueError):
        DesignSpace(["a", "b"], np.ones((1, 2)))  # label/row mismatch
