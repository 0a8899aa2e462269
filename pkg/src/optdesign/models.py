"""Finite design spaces, probability designs, and the built-in model families.

A design space couples a list of candidate points (labels) with the regression
feature vector f(x) of each point, stacked as an (n_points, p) matrix.  A
design is a probability vector over those points.  Three model families cover
the usual benchmarks -- univariate polynomial regression, the full quadratic
response surface on a q-cube, and a three-parameter exponential compartment
model linearized at a nominal parameter -- plus raw feature matrices and a
finite-difference linearization for arbitrary user responses.
"""

from __future__ import annotations

import itertools
import math
import warnings

import numpy as np

__all__ = [
    "DesignSpace",
    "Design",
    "SymmetricSupport",
    "grid_points",
    "poly_model",
    "qcube_model",
    "qcube_symmetric_space",
    "compartment_model",
    "compartment_response",
    "custom_space",
    "linearized_space",
    "uniform_design",
    "point_mass",
    "mixture",
    "redistribute_uniform",
]

#: Default nominal parameter for the compartment model benchmark.
COMPARTMENT_THETA0 = (21.8, 0.05884, 4.298)

#: Weights below this are hidden from formatted reports (raw data keeps them).
SUPPORT_DISPLAY_TOL = 1e-6


class DesignSpace:
    """Candidate points plus their feature rows.

    Labels identify points in reports and must be unique; they can be floats
    (grids), tuples (factorial points) or strings.  The feature matrix is
    frozen after construction.  A feature matrix whose rank is below p cannot
    carry a nonsingular information matrix for any design, which is almost
    always a modelling mistake, so construction warns about it.
    """

    def __init__(self, labels, features, name: str = ""):
        f = np.array(features, dtype=float)
        if f.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("feature matrix entries must be finite")
        labels = list(labels)
        if len(labels) != f.shape[0]:
            raise ValueError(
                f"{len(labels)} labels for {f.shape[0]} feature rows"
            )
        if f.shape[0] == 0 or f.shape[1] == 0:
            raise ValueError("design space needs at least one point and one feature")
        self._index = {}
        for i, lab in enumerate(labels):
            if lab in self._index:
                raise ValueError(f"duplicate point label {lab!r}")
            self._index[lab] = i
        f.flags.writeable = False
        self.labels = labels
        self.features = f
        self.name = name or "space"
        if np.linalg.matrix_rank(f) < f.shape[1]:
            warnings.warn(
                f"feature matrix of {self.name} has rank below p={f.shape[1]}; "
                "no design can be nonsingular",
                stacklevel=2,
            )

    @property
    def n_points(self) -> int:
        return self.features.shape[0]

    @property
    def dim_p(self) -> int:
        return self.features.shape[1]

    def label_index(self, label) -> int:
        try:
            return self._index[label]
        except (KeyError, TypeError):
            pass
        # grids carry float labels; accept a numeric query that matches a
        # point to within rounding of the grid arithmetic
        if isinstance(label, (int, float)) and not isinstance(label, bool):
            numeric = self._numeric_labels()
            if numeric is not None:
                i = int(np.argmin(np.abs(numeric - label)))
                if abs(numeric[i] - label) <= 1e-9 * max(1.0, abs(label)):
                    return i
        raise ValueError(f"unknown point label {label!r} in {self.name}")

    def _numeric_labels(self):
        if not hasattr(self, "_numeric_cache"):
            try:
                arr = np.asarray(self.labels, dtype=float)
                self._numeric_cache = arr if arr.ndim == 1 else None
            except (TypeError, ValueError):
                self._numeric_cache = None
        return self._numeric_cache

    def __repr__(self):
        return (
            f"DesignSpace({self.name!r}, n_points={self.n_points}, p={self.dim_p})"
        )


class Design:
    """A probability vector over the points of a design space.

    Weights must be nonnegative up to a -1e-12 slack (tiny negative entries
    from LP vertices are clamped to zero) and sum to one within 1e-9; after
    clamping the vector is renormalized exactly.  The stored array is frozen.
    """

    __slots__ = ("w",)

    def __init__(self, weights):
        w = np.array(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-D vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        lo = float(w.min())
        if lo < -1e-12:
            raise ValueError(f"negative design weight {lo:.3e} below tolerance")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"design weights sum to {total!r}, expected 1")
        w = np.maximum(w, 0.0)
        w /= w.sum()
        w.flags.writeable = False
        self.w = w

    def __len__(self):
        return self.w.shape[0]

    @classmethod
    def from_exact_weights(cls, weights) -> "Design":
        """Rebuild a design from weights emitted by an earlier `Design`.

        Validates the simplex constraints but skips the renormalization
        step, so serialized weight vectors reload bit-for-bit (dividing by a
        sum within an ulp of 1 would perturb every entry).
        """
        w = np.array(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-D vector")
        if float(w.min()) < 0.0 or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("weights are not a stored probability vector")
        w.flags.writeable = False
        design = object.__new__(cls)
        design.w = w
        return design

    def support(self, tol: float = SUPPORT_DISPLAY_TOL) -> np.ndarray:
        """Indices of points whose weight exceeds ``tol``."""
        return np.nonzero(self.w > tol)[0]

    def trimmed(self, tol: float = SUPPORT_DISPLAY_TOL) -> "Design":
        """Copy with weights <= ``tol`` dropped and the rest renormalized."""
        w = np.where(self.w > tol, self.w, 0.0)
        return Design(w / w.sum())

    def __repr__(self):
        return f"Design(n={len(self)}, support={self.support().size})"


def grid_points(start: float, stop: float, step: float) -> np.ndarray:
    """Evenly spaced grid start, start+step, ..., up to stop (inclusive-ish).

    The number of points is derived from the span so accumulated float error
    cannot drop or duplicate the endpoint; each point is computed as
    start + k*step.
    """
    if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)):
        raise ValueError("grid bounds and step must be finite")
    if step <= 0:
        raise ValueError(f"grid step must be positive, got {step!r}")
    if stop < start:
        raise ValueError(f"empty grid: stop {stop!r} below start {start!r}")
    raw = (stop - start) / step
    count = int(math.floor(raw + 1e-9 * max(1.0, raw))) + 1
    return start + step * np.arange(count)


def poly_model(degree: int, grid) -> DesignSpace:
    """Polynomial regression f(x) = (1, x, ..., x^degree) on a point grid."""
    if degree < 1:
        raise ValueError(f"polynomial degree must be >= 1, got {degree}")
    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("grid must be a nonempty 1-D array of points")
    features = np.vander(x, degree + 1, increasing=True)
    return DesignSpace(
        [float(v) for v in x], features, name=f"poly{degree}[{x.size}]"
    )


def _qcube_features(pts: np.ndarray) -> np.ndarray:
    """Quadratic response-surface features on q factors.

    Column order: intercept, the q squares, the q linear terms, then the
    q(q-1)/2 pairwise products in lexicographic (i < j) order.
    """
    n, q = pts.shape
    cols = [np.ones(n)]
    cols.extend(pts[:, i] ** 2 for i in range(q))
    cols.extend(pts[:, i] for i in range(q))
    cols.extend(
        pts[:, i] * pts[:, j] for i, j in itertools.combinations(range(q), 2)
    )
    return np.column_stack(cols)


def qcube_model(q: int, points) -> DesignSpace:
    """Full quadratic model on user-supplied points of the q-cube [-1, 1]^q."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != q:
        raise ValueError(f"points must have shape (n, {q})")
    if pts.size == 0:
        raise ValueError("need at least one point")
    labels = [tuple(float(v) for v in row) for row in pts]
    return DesignSpace(labels, _qcube_features(pts), name=f"qcube{q}[{len(labels)}]")


def qcube_symmetric_space(q: int):
    """The sign-symmetric candidate set {-1, 0, 1}^q with its orbit structure.

    Points are ordered by the number of nonzero coordinates and then
    lexicographically, so the orbit classes C_0, ..., C_q occupy contiguous
    index ranges.  Returns ``(space, support)`` where ``support`` groups the
    point indices by class.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    pts = sorted(
        itertools.product((-1.0, 0.0, 1.0), repeat=q),
        key=lambda t: (sum(v != 0 for v in t), t),
    )
    arr = np.array(pts)
    space = qcube_model(q, arr)
    nonzeros = np.array([sum(v != 0 for v in t) for t in pts])
    classes = tuple(np.nonzero(nonzeros == i)[0] for i in range(q + 1))
    return space, SymmetricSupport(q, classes)


class SymmetricSupport:
    """Orbit classes of {-1, 0, 1}^q under coordinate sign changes.

    Class i collects the points with exactly i nonzero coordinates; its size
    is binom(q, i) * 2^i.  Aggregated class masses are the natural summary of
    a design on this set, and spreading each class's mass uniformly over the
    class preserves any criterion that is invariant under the symmetry group.
    """

    def __init__(self, q: int, classes):
        self.q = q
        self.classes = tuple(np.asarray(c, dtype=int) for c in classes)
        for i, cls in enumerate(self.classes):
            expect = math.comb(q, i) * 2**i
            if cls.size != expect:
                raise ValueError(
                    f"class {i} has {cls.size} points, expected {expect}"
                )

    @property
    def n_points(self) -> int:
        return sum(c.size for c in self.classes)

    def class_masses(self, design: Design) -> np.ndarray:
        """Total design weight carried by each class C_0, ..., C_q."""
        if len(design) != self.n_points:
            raise ValueError(
                f"design has {len(design)} weights, support covers {self.n_points}"
            )
        return np.array([float(design.w[c].sum()) for c in self.classes])

    def __repr__(self):
        return f"SymmetricSupport(q={self.q})"


def redistribute_uniform(design: Design, support: SymmetricSupport) -> Design:
    """Spread each orbit class's mass uniformly over the class's points."""
    masses = support.class_masses(design)
    w = np.empty(len(design))
    for cls, mass in zip(support.classes, masses):
        w[cls] = mass / cls.size
    return Design(w)


def compartment_response(theta, x):
    """Mean response theta1 * (exp(-theta2 x) - exp(-theta3 x))."""
    t1, t2, t3 = (float(v) for v in theta)
    x = np.asarray(x, dtype=float)
    return t1 * (np.exp(-t2 * x) - np.exp(-t3 * x))


def compartment_model(theta0=COMPARTMENT_THETA0, grid=None) -> DesignSpace:
    """Compartment model linearized at ``theta0`` on positive time points.

    The feature vector is the parameter gradient of the mean response,
    f(x) = (e^{-t2 x} - e^{-t3 x}, -t1 x e^{-t2 x}, t1 x e^{-t3 x}).
    """
    t1, t2, t3 = (float(v) for v in theta0)
    if t2 == t3:
        raise ValueError("rate constants theta2 and theta3 must differ")
    if grid is None:
        grid = grid_points(0.01, 24.0, 0.01)
    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("grid must be a nonempty 1-D array of time points")
    if np.any(x <= 0):
        raise ValueError("compartment sampling times must be positive")
    e2 = np.exp(-t2 * x)
    e3 = np.exp(-t3 * x)
    features = np.column_stack([e2 - e3, -t1 * x * e2, t1 * x * e3])
    return DesignSpace(
        [float(v) for v in x], features, name=f"compartment[{x.size}]"
    )


def custom_space(features, labels=None, name: str = "custom") -> DesignSpace:
    """Design space straight from a feature matrix; labels default to 0..n-1."""
    f = np.asarray(features, dtype=float)
    if labels is None:
        labels = list(range(f.shape[0])) if f.ndim == 2 else []
    return DesignSpace(labels, f, name=name)


def linearized_space(response, theta0, labels, jacobian=None, name: str = "linearized"):
    """Design space for a parametric response linearized at ``theta0``.

    ``response(theta, x)`` must accept a parameter vector and a 1-D array of
    points and return the mean responses.  When no analytic ``jacobian`` is
    supplied the parameter gradient is estimated by central differences with
    step 1e-6 * max(1, |theta_i|) per coordinate.
    """
    theta0 = np.asarray(theta0, dtype=float)
    x = np.asarray(labels, dtype=float)
    if jacobian is not None:
        features = np.asarray(jacobian(theta0, x), dtype=float)
    else:
        cols = []
        for i in range(theta0.size):
            h = 1e-6 * max(1.0, abs(theta0[i]))
            up = theta0.copy()
            dn = theta0.copy()
            up[i] += h
            dn[i] -= h
            cols.append((response(up, x) - response(dn, x)) / (2.0 * h))
        features = np.column_stack(cols)
    return DesignSpace([float(v) for v in x], features, name=name)


def uniform_design(space: DesignSpace) -> Design:
    """Equal weight on every candidate point."""
    n = space.n_points
    return Design(np.full(n, 1.0 / n))


def point_mass(space: DesignSpace, label) -> Design:
    """All weight on a single labelled point."""
    w = np.zeros(space.n_points)
    w[space.label_index(label)] = 1.0
    return Design(w)


def mixture(designs, coefficients) -> Design:
    """Convex combination of designs on a common space."""
    designs = list(designs)
    coef = np.asarray(coefficients, dtype=float)
    if len(designs) == 0 or coef.shape != (len(designs),):
        raise ValueError("need one coefficient per design")
    if np.any(coef < 0) or abs(coef.sum() - 1.0) > 1e-9:
        raise ValueError("mixture coefficients must be a probability vector")
    n = len(designs[0])
    if any(len(d) != n for d in designs):
        raise ValueError("designs live on different spaces")
    w = np.zeros(n)
    for c, d in zip(coef, designs):
        w += c * d.w
    return Design(w)
