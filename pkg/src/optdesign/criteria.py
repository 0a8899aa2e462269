"""Design criteria: values, linear minorant (cut) coefficients, optimality gaps.

Every criterion here is a concave, positively homogeneous function of the
information matrix M(xi) = sum_x f(x) f(x)^T xi(x):

* D-optimality            det(M)^(1/p)
* A-optimality            1 / trace(M^-1)           (0 for singular M)
* E_k-optimality          sum of the k smallest eigenvalues of M
* maximin efficiency      min_k  E_k(xi) / E_k(opt) over k = 1..p
* prior average           sum_theta  pi(theta) * phi(M_theta(xi))

Each admits an exact linearization: for a reference design mu there are
coefficients h(mu, x) with  phi(xi) <= sum_x h(mu, x) xi(x)  for every design
xi, with equality at xi = mu.  phi is therefore the lower envelope of these
linear functions, which is what the cutting-plane solver exploits.  ``cut``
produces the coefficient vectors; the reference may be a design or a raw
information matrix (any symmetric positive definite matrix yields a valid
upper minorant -- only the touching property needs mu itself).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import (
    NearSingularError,
    SINGULAR_RTOL,
    SpectralDecomp,
    SymMatrix,
    sym_eig,
)
from .models import Design, DesignSpace

__all__ = [
    "DOptimality",
    "AOptimality",
    "EkOptimality",
    "MaximinEfficiency",
    "AveragedCriterion",
    "InfoMatrix",
    "Cut",
    "OptimalityGap",
    "info_matrix",
    "phi",
    "cut",
    "ave_cut",
    "equivalence_gap",
]

#: Relative eigenvalue separation below which the E_k directional test is
#: ambiguous (the k-th eigenspace is not well defined).
EK_TIE_RTOL = 1e-8

#: Wider separation under which E_k cut generation treats eigenvalues as a
#: tie block and emits one cut per frame window.  Frames from approximate
#: ties are still exact minorants (any orthonormal k-frame is), and covering
#: a nearly degenerate eigenspace stops the cut directions from flapping
#: between its almost-equal eigenvectors.
EK_WINDOW_RTOL = 1e-7


@dataclass(frozen=True)
class DOptimality:
    """det(M)^(1/p): maximizes the information volume."""

    name = "D"

    def __str__(self):
        return "D"


@dataclass(frozen=True)
class AOptimality:
    """1/trace(M^-1): minimizes the average parameter variance."""

    name = "A"

    def __str__(self):
        return "A"


@dataclass(frozen=True)
class EkOptimality:
    """Sum of the k smallest eigenvalues of M (k = 1 is classical E-optimality)."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @property
    def name(self) -> str:
        return f"E{self.k}"

    def __str__(self):
        return self.name


class MaximinEfficiency:
    """Worst E_k-efficiency over k = 1..p, each scaled by its optimum.

    ``normalizers`` are the per-k optimal values E_k(opt); they must all be
    strictly positive for the efficiencies to make sense.
    """

    name = "maximin-eff"

    def __init__(self, normalizers):
        norm = np.array(normalizers, dtype=float)
        if norm.ndim != 1 or norm.size == 0:
            raise ValueError("normalizers must be a nonempty vector")
        if np.any(norm <= 0) or not np.all(np.isfinite(norm)):
            raise ValueError("normalizers must be finite and positive")
        norm.flags.writeable = False
        self.normalizers = norm

    @property
    def p(self) -> int:
        return self.normalizers.size

    def __repr__(self):
        return f"MaximinEfficiency(p={self.p})"


class AveragedCriterion:
    """Prior-weighted average of a base criterion across linearization points.

    ``atoms`` pairs one design space per prior point with its weight; the
    spaces must enumerate the same candidate points in the same order (only
    the feature rows differ).  Weights must form a probability vector.
    """

    def __init__(self, base, atoms):
        if not isinstance(base, (DOptimality, AOptimality, EkOptimality)):
            raise TypeError(f"unsupported base criterion {base!r}")
        atoms = [(space, float(w)) for space, w in atoms]
        if not atoms:
            raise ValueError("prior needs at least one atom")
        weights = np.array([w for _, w in atoms])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("prior weights must be nonnegative and sum to 1")
        first = atoms[0][0]
        for space, _ in atoms[1:]:
            if space.n_points != first.n_points or space.labels != first.labels:
                raise ValueError("prior atoms must share one candidate point list")
        self.base = base
        self.atoms = atoms

    @property
    def name(self) -> str:
        return f"ave-{self.base.name}"

    @property
    def n_points(self) -> int:
        return self.atoms[0][0].n_points

    def __repr__(self):
        return f"AveragedCriterion({self.base.name}, atoms={len(self.atoms)})"


class InfoMatrix:
    """Information matrix of a design with a cached spectral decomposition."""

    def __init__(self, matrix: SymMatrix, source: Design | None = None):
        if not isinstance(matrix, SymMatrix):
            matrix = SymMatrix(matrix)
        self.matrix = matrix
        self.source = source

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @cached_property
    def spectral(self):
        return sym_eig(self.matrix)

    def regularized(self, gamma: float) -> "InfoMatrix":
        """M + gamma*I, the standard rescue for near-singular references."""
        m = self.matrix.a
        return InfoMatrix(SymMatrix(m + gamma * np.eye(m.shape[0])))

    def __repr__(self):
        return f"InfoMatrix(dim={self.dim})"


@dataclass(frozen=True)
class Cut:
    """One linear minorant: phi(xi) <= coefficients . xi for all designs xi.

    ``kind`` records the generating criterion ("D", "A", "E3", ...),
    ``normalizer`` any divisor already applied (maximin efficiency cuts), and
    ``origin`` a free-form tag for traceability.
    """

    coefficients: np.ndarray
    kind: str
    normalizer: float = 1.0
    origin: str | None = None

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("cut coefficients must be a finite 1-D vector")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)


@dataclass(frozen=True)
class OptimalityGap:
    """Equivalence-theorem gap; ``reliable`` is False when the directional
    test is ill-posed (tied E_k eigenvalues)."""

    value: float
    reliable: bool = True

    def __float__(self):
        return self.value


def _weights(design) -> np.ndarray:
    """Accept a Design or a raw (possibly unnormalized) weight vector."""
    if isinstance(design, Design):
        return design.w
    w = np.asarray(design, dtype=float)
    if w.ndim != 1:
        raise ValueError("weights must be a 1-D vector")
    return w


def info_matrix(space: DesignSpace, design) -> InfoMatrix:
    """M = sum_x f(x) f(x)^T xi(x) for a design or raw weight vector."""
    w = _weights(design)
    if w.shape[0] != space.n_points:
        raise ValueError(
            f"{w.shape[0]} weights for {space.n_points} candidate points"
        )
    m = (space.features * w[:, None]).T @ space.features
    src = design if isinstance(design, Design) else None
    return InfoMatrix(SymMatrix(m), source=src)


def _as_info(space, mu) -> InfoMatrix:
    if isinstance(mu, InfoMatrix):
        return mu
    return info_matrix(space, mu)


def _inv_factors(info: InfoMatrix, rtol: float = SINGULAR_RTOL):
    """Eigen data for M^-1; raises NearSingularError like linalg.inverse.

    ``rtol=0`` accepts any strictly positive spectrum -- the escape hatch for
    explicitly regularized references, whose smallest eigenvalue is at least
    the ridge by construction even when that is tiny relative to lambda_max.
    """
    dec = info.spectral
    lam = dec.eigenvalues
    lam_max = float(np.max(np.abs(lam)))
    if lam_max == 0.0 or float(lam[0]) <= rtol * lam_max:
        raise NearSingularError(float(lam[0]), lam_max)
    return lam, dec.eigenvectors


def phi(criterion, space, design) -> float:
    """Criterion value of a design (or raw weight vector, or InfoMatrix).

    Positively homogeneous of degree one in the weights for D/A/E_k, so raw
    unnormalized vectors are meaningful inputs.  Singular information
    matrices give 0 for D and A, never an error.
    """
    if isinstance(criterion, AveragedCriterion):
        return _phi_averaged(criterion, design)
    if isinstance(design, InfoMatrix):
        info = design
    else:
        info = _as_info(space, design)
    lam = info.spectral.eigenvalues
    if isinstance(criterion, DOptimality):
        zero_tol = 1e-14 * float(np.max(np.abs(lam)))
        if lam[0] <= zero_tol:
            return 0.0
        return float(np.exp(np.mean(np.log(lam))))
    if isinstance(criterion, AOptimality):
        lam_max = float(np.max(np.abs(lam)))
        if lam_max == 0.0 or float(lam[0]) <= SINGULAR_RTOL * lam_max:
            return 0.0
        return float(1.0 / np.sum(1.0 / lam))
    if isinstance(criterion, EkOptimality):
        k = _check_k(criterion.k, lam.size)
        return max(float(np.sum(lam[:k])), 0.0)
    if isinstance(criterion, MaximinEfficiency):
        if criterion.p != lam.size:
            raise ValueError(
                f"normalizers of length {criterion.p} for p={lam.size}"
            )
        return float(np.min(np.cumsum(lam) / criterion.normalizers))
    raise TypeError(f"unsupported criterion {criterion!r}")


def _phi_averaged(criterion: AveragedCriterion, design) -> float:
    if isinstance(design, InfoMatrix):
        raise TypeError("averaged criteria need the design, not a single matrix")
    return sum(
        w * phi(criterion.base, space, design) for space, w in criterion.atoms
    )


def _check_k(k: int, p: int) -> int:
    if k > p:
        raise ValueError(f"k={k} exceeds matrix dimension p={p}")
    return k


def _cut_coeffs(criterion, space: DesignSpace, info: InfoMatrix,
                rtol: float = SINGULAR_RTOL) -> np.ndarray:
    """Coefficient vector h with phi(xi) <= h . xi, touching at the reference."""
    f = space.features
    if isinstance(criterion, DOptimality):
        lam, u = _inv_factors(info, rtol)
        droot = float(np.exp(np.mean(np.log(lam))))
        g = f @ (u / lam)
        # (det M)^(1/p)/p * f^T M^-1 f, vectorized over the candidate rows
        return (droot / lam.size) * np.einsum("ij,ij->i", g, f @ u)
    if isinstance(criterion, AOptimality):
        lam, u = _inv_factors(info, rtol)
        trace_inv = float(np.sum(1.0 / lam))
        g = f @ (u / lam)
        return np.einsum("ij,ij->i", g, g) / trace_inv**2
    if isinstance(criterion, EkOptimality):
        dec = info.spectral
        k = _check_k(criterion.k, dec.dim)
        g = f @ dec.eigenvectors[:, :k]
        return np.einsum("ij,ij->i", g, g)
    raise TypeError(f"unsupported criterion {criterion!r}")


def cut(criterion, space, mu, origin: str | None = None,
        singular_rtol: float = SINGULAR_RTOL, tie_window: float | None = None):
    """Linear minorant coefficients generated at reference ``mu``.

    ``mu`` may be a Design or an InfoMatrix (e.g. a regularized matrix).  For
    D and A a numerically singular reference raises NearSingularError -- the
    caller decides whether to regularize; nothing happens silently (a caller
    that has already added a ridge passes ``singular_rtol=0`` to accept any
    positive spectrum).  Returns a single :class:`Cut`, except for
    :class:`MaximinEfficiency` which yields the list of p efficiency-scaled
    E_k cuts, and for eigenvalue ties where one cut per minimizing frame
    comes back.  ``tie_window`` overrides the relative separation treated as
    a tie (default ``EK_WINDOW_RTOL``); wider windows produce more (still
    exact) minorants.
    """
    if isinstance(criterion, AveragedCriterion):
        spaces = [s for s, _ in criterion.atoms]
        weights = [w for _, w in criterion.atoms]
        return ave_cut(
            criterion.base, spaces, weights, mu,
            origin=origin, singular_rtol=singular_rtol,
        )
    info = _as_info(space, mu)
    if isinstance(criterion, MaximinEfficiency):
        dec = info.spectral
        if criterion.p != dec.dim:
            raise ValueError(f"normalizers of length {criterion.p} for p={dec.dim}")
        g = space.features @ dec.eigenvectors
        sq = g * g
        cuts = []
        for k in range(1, criterion.p + 1):
            norm = float(criterion.normalizers[k - 1])
            for idx in _ek_frames(dec, k, tie_window):
                cuts.append(
                    Cut(
                        sq[:, idx].sum(axis=1) / norm,
                        kind=f"E{k}",
                        normalizer=norm,
                        origin=origin,
                    )
                )
        return cuts
    if isinstance(criterion, EkOptimality):
        frames = _ek_frames(info.spectral, criterion.k, tie_window)
        if len(frames) > 1:
            g = space.features @ info.spectral.eigenvectors
            sq = g * g
            return [
                Cut(sq[:, idx].sum(axis=1), kind=criterion.name, origin=origin)
                for idx in frames
            ]
    coeffs = _cut_coeffs(criterion, space, info, singular_rtol)
    return Cut(coeffs, kind=criterion.name, origin=origin)


def _ek_frames(dec: SpectralDecomp, k: int,
               window: float | None = None) -> list[np.ndarray]:
    """Index sets of eigenvector k-frames whose span minimizes tr(V^T M V).

    Any orthonormal k-frame V yields a valid E_k minorant (Ky Fan), and when
    the k-th eigenvalue is tied every frame completing the bottom set inside
    the tie block is minimizing.  Emitting one cut per contiguous window of
    the block covers the whole eigenspace at once, which removes the
    subspace chatter that stalls convergence under eigenvalue multiplicity.
    """
    lam = dec.eigenvalues
    k = _check_k(k, lam.size)
    tol = (window or EK_WINDOW_RTOL) * max(1.0, float(np.max(np.abs(lam))))
    pivot = lam[k - 1]
    k0 = int(np.searchsorted(lam, pivot - tol, side="left"))
    k1 = int(np.searchsorted(lam, pivot + tol, side="right")) - 1
    need = k - k0  # frame members drawn from the tie block
    fixed = np.arange(k0)
    return [
        np.concatenate([fixed, np.arange(k0 + shift, k0 + shift + need)])
        for shift in range(k1 - k0 - need + 2)
    ]


def ave_cut(base, spaces, prior_weights, mu, origin: str | None = None,
            singular_rtol: float = SINGULAR_RTOL) -> Cut:
    """Prior-averaged cut: the weighted sum of per-atom base cuts.

    Averaging linear minorants of the per-atom criteria gives an exact
    linearization of the averaged criterion, so the cutting-plane machinery
    applies unchanged.  ``mu`` is a Design on the shared candidate points or
    a list of per-atom InfoMatrix references (the regularization path).
    """
    spaces = list(spaces)
    weights = np.asarray(prior_weights, dtype=float)
    if len(spaces) == 0 or weights.shape != (len(spaces),):
        raise ValueError("need one prior weight per atom space")
    first = spaces[0]
    for s in spaces[1:]:
        if s.n_points != first.n_points or s.labels != first.labels:
            raise ValueError("prior atoms must share one candidate point list")
    if isinstance(mu, (list, tuple)):
        if len(mu) != len(spaces):
            raise ValueError("need one reference matrix per atom")
        infos = [_as_info(s, m) for s, m in zip(spaces, mu)]
    else:
        infos = [_as_info(s, mu) for s in spaces]
    total = np.zeros(first.n_points)
    for s, w, info in zip(spaces, weights, infos):
        total += w * _cut_coeffs(base, s, info, singular_rtol)
    return Cut(total, kind=f"ave-{base.name}", origin=origin)


def equivalence_gap(criterion, space, design) -> OptimalityGap:
    """Equivalence-theorem optimality certificate for D, A and E_k.

    The gap is zero exactly at an optimal design; small values certify near
    optimality.  For E_k the directional derivative needs a well-separated
    k-th eigenvalue: with lambda_k ~ lambda_(k+1) the value is still
    returned but flagged ``reliable=False``.
    """
    info = _as_info(space, design)
    f = space.features
    if isinstance(criterion, DOptimality):
        lam, u = _inv_factors(info)
        g = f @ (u / lam)
        variance = np.einsum("ij,ij->i", g, f @ u)
        return OptimalityGap(abs(float(np.max(variance)) - lam.size))
    if isinstance(criterion, AOptimality):
        lam, u = _inv_factors(info)
        g = f @ (u / lam)
        quad = np.einsum("ij,ij->i", g, g)
        return OptimalityGap(abs(float(np.max(quad)) - float(np.sum(1.0 / lam))))
    if isinstance(criterion, EkOptimality):
        dec = info.spectral
        lam = dec.eigenvalues
        k = _check_k(criterion.k, lam.size)
        g = f @ dec.eigenvectors[:, :k]
        directional = np.einsum("ij,ij->i", g, g)
        value = abs(float(np.sum(lam[:k])) - float(np.max(directional)))
        reliable = True
        if k < lam.size:
            scale = float(np.max(np.abs(lam)))
            reliable = (lam[k] - lam[k - 1]) > EK_TIE_RTOL * max(scale, 1e-300)
        return OptimalityGap(value, reliable)
    raise TypeError(f"no equivalence certificate for criterion {criterion!r}")
