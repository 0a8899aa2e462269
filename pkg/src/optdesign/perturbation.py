"""Criterion objectives written through finite parameter perturbations.

Instead of the information matrix, a criterion can be expressed through the
response differences along p pairwise-orthogonal parameter perturbations
delta_1, ..., delta_p around a nominal theta_0:

    n_i(xi) = sum_x (eta(theta_0 + delta_i, x) - eta(theta_0, x))^2 xi(x)

    eD:  [(1/p) sum_i n_i] / [prod_j |delta_j|^2]^(1/p)
    eA:  [sum_i |delta_i|^2 n_i] / [sum_j |delta_j|^2]^2
    eEk: sum over the first k tuple components of n_i / |delta_i|^2

For a linear response these objectives dominate the matrix criteria for every
valid tuple, and the tuple built from a reference design mu -- perturbations
u_i/sqrt(lambda_i) along the eigenvectors of M(mu) -- turns each objective
into exactly the linear cut sum_x h(mu, x) xi(x).  That makes these
evaluators an independent route to the same numbers the cutting-plane solver
uses, and a meaningful design tool for genuinely nonlinear responses where
the local information matrix is only an approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import AOptimality, DOptimality, EkOptimality
from .linalg import NearSingularError, SINGULAR_RTOL
from .models import Design, DesignSpace
from . import criteria

__all__ = ["PerturbationTuple", "extended_objective", "tuple_from_design"]

#: Pairwise-orthogonality tolerance, relative to the perturbation norms.
ORTHO_RTOL = 1e-10


@dataclass(frozen=True)
class PerturbationTuple:
    """Nominal parameter plus p pairwise-orthogonal perturbation rows."""

    theta0: np.ndarray
    deltas: np.ndarray

    def __post_init__(self):
        theta0 = np.asarray(self.theta0, dtype=float)
        deltas = np.asarray(self.deltas, dtype=float)
        if theta0.ndim != 1:
            raise ValueError("theta0 must be a vector")
        p = theta0.size
        if deltas.shape != (p, p):
            raise ValueError(
                f"deltas must be a ({p}, {p}) array of perturbation rows"
            )
        if not (np.all(np.isfinite(theta0)) and np.all(np.isfinite(deltas))):
            raise ValueError("tuple entries must be finite")
        norms = np.linalg.norm(deltas, axis=1)
        if np.any(norms == 0):
            raise ValueError("every perturbation must be nonzero")
        gram = np.abs(deltas @ deltas.T)
        np.fill_diagonal(gram, 0.0)
        bound = ORTHO_RTOL * np.outer(norms, norms)
        if np.any(gram > bound):
            worst = float(np.max(gram / np.maximum(np.outer(norms, norms), 1e-300)))
            raise ValueError(
                f"perturbations are not pairwise orthogonal (relative inner "
                f"product up to {worst:.3e})"
            )
        theta0 = theta0.copy()
        deltas = deltas.copy()
        theta0.flags.writeable = False
        deltas.flags.writeable = False
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "deltas", deltas)

    @property
    def p(self) -> int:
        return self.theta0.size


def _response_diffs(tup: PerturbationTuple, space: DesignSpace, response):
    """(n_points, p) matrix of response differences, one column per delta_i."""
    if response is None:
        # linear response eta(theta, x) = f(x).theta
        if space.dim_p != tup.p:
            raise ValueError(
                f"tuple dimension {tup.p} does not match p={space.dim_p}"
            )
        return space.features @ tup.deltas.T
    x = np.asarray(space.labels, dtype=float)
    base = np.asarray(response(tup.theta0, x), dtype=float)
    cols = [
        np.asarray(response(tup.theta0 + d, x), dtype=float) - base
        for d in tup.deltas
    ]
    return np.column_stack(cols)


def extended_objective(base, space: DesignSpace, design: Design,
                       tup: PerturbationTuple, response=None) -> float:
    """Evaluate the eD/eA/eEk objective of a design at a perturbation tuple.

    ``base`` selects the flavor (DOptimality -> eD and so on).  With
    ``response=None`` the space's feature rows define a linear response;
    otherwise ``response(theta, x)`` is called with the nominal and the
    perturbed parameters on the space's (numeric) labels.
    """
    diffs = _response_diffs(tup, space, response)
    if len(design) != space.n_points:
        raise ValueError("design does not match the candidate points")
    n_i = design.w @ (diffs * diffs)
    d_i = np.sum(tup.deltas * tup.deltas, axis=1)
    p = tup.p
    if isinstance(base, DOptimality):
        return float(np.mean(n_i) / np.exp(np.mean(np.log(d_i))))
    if isinstance(base, AOptimality):
        return float((d_i @ n_i) / np.sum(d_i) ** 2)
    if isinstance(base, EkOptimality):
        if base.k > p:
            raise ValueError(f"k={base.k} exceeds tuple dimension {p}")
        return float(np.sum(n_i[: base.k] / d_i[: base.k]))
    raise TypeError(f"unsupported objective {base!r}")


def tuple_from_design(space: DesignSpace, mu, theta0=None) -> PerturbationTuple:
    """The canonical tuple of a reference design: rows u_i / sqrt(lambda_i).

    Ordered by ascending eigenvalue of the reference information matrix, so
    the first k components of the eEk objective line up with the k smallest
    eigenvalues.  At this tuple each extended objective of any design xi
    collapses to the cut value sum_x h(mu, x) xi(x) of the matching matrix
    criterion.  Requires a nonsingular reference.
    """
    info = mu if isinstance(mu, criteria.InfoMatrix) else criteria.info_matrix(space, mu)
    dec = info.spectral
    lam = dec.eigenvalues
    lam_max = float(np.max(np.abs(lam)))
    if lam_max == 0.0 or float(lam[0]) <= SINGULAR_RTOL * lam_max:
        raise NearSingularError(float(lam[0]), lam_max)
    if theta0 is None:
        theta0 = np.zeros(dec.dim)
    deltas = (dec.eigenvectors / np.sqrt(lam)).T
    return PerturbationTuple(theta0, deltas)
