"""Symmetric matrix helpers: eigendecomposition, inverse, determinant root.

Information matrices in this package are small (p is rarely above 15), dense
and symmetric.  Eigenvalues are computed with a cyclic Jacobi sweep, which is
deterministic across platforms for a given input matrix -- the same problem
always produces bit-identical spectra, which keeps solver traces and LP bases
reproducible.  numpy is used for storage and the vectorized row updates only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SymMatrix",
    "SpectralDecomp",
    "NearSingularError",
    "JacobiConvergenceError",
    "sym_eig",
    "inverse",
    "det_root",
]

#: Relative eigenvalue threshold below which a matrix is treated as singular.
SINGULAR_RTOL = 1e-12

_MAX_SWEEPS = 60
_OFF_RTOL = 1e-15


class NearSingularError(ArithmeticError):
    """Raised when a matrix inverse is requested too close to singularity."""

    def __init__(self, lambda_min, lambda_max=None):
        self.lambda_min = float(lambda_min)
        self.lambda_max = None if lambda_max is None else float(lambda_max)
        msg = f"matrix is numerically singular (lambda_min={self.lambda_min:.6e}"
        if self.lambda_max is not None:
            msg += f", lambda_max={self.lambda_max:.6e}"
        super().__init__(msg + ")")


class JacobiConvergenceError(RuntimeError):
    """Jacobi sweep budget exhausted (practically unreachable for p <= 50)."""


class SymMatrix:
    """A dense symmetric matrix with exactly symmetric storage.

    The constructor symmetrizes its input as 0.5*(A + A.T), which is bitwise
    symmetric in IEEE arithmetic, and freezes the underlying array so shared
    instances are safe across threads.
    """

    __slots__ = ("a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        a = 0.5 * (a + a.T)
        a.flags.writeable = False
        self.a = a

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def __repr__(self):
        return f"SymMatrix(dim={self.dim})"


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigenvalues in ascending order and the matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def _as_array(m) -> np.ndarray:
    if isinstance(m, SymMatrix):
        return m.a
    return SymMatrix(m).a


def sym_eig(m) -> SpectralDecomp:
    """Full spectral decomposition of a symmetric matrix via cyclic Jacobi.

    Returns eigenvalues sorted ascending with eigenvector columns in the
    matching order.  Deterministic: identical input bits give identical
    output bits.
    """
    a = _as_array(m).copy()
    p = a.shape[0]
    v = np.eye(p)
    if p == 1:
        return SpectralDecomp(a[0, :1].copy(), v)

    iu = np.triu_indices(p, k=1)
    scale = np.sqrt(np.sum(a * a))
    if scale == 0.0:
        return SpectralDecomp(np.zeros(p), v)
    off_target = (_OFF_RTOL * scale) ** 2

    for sweep in range(_MAX_SWEEPS):
        off2 = float(np.sum(a[iu] ** 2))
        if off2 <= off_target:
            break
        # During the first sweeps only annihilate entries that matter; the
        # classical threshold keeps the rotation count low without hurting
        # the quadratic convergence of the later full sweeps.
        thresh = 0.2 * off2 / (p * p) if sweep < 3 else 0.0
        for i in range(p - 1):
            for j in range(i + 1, p):
                apq = a[i, j]
                if apq * apq <= thresh or apq == 0.0:
                    continue
                app, aqq = a[i, i], a[j, j]
                theta = 0.5 * (aqq - app) / apq
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) if theta != 0 else 1.0
                    t /= abs(theta) + np.hypot(theta, 1.0)
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                tau = s / (1.0 + c)

                row_i = a[i].copy()
                row_j = a[j].copy()
                a[i] = row_i - s * (row_j + tau * row_i)
                a[j] = row_j + s * (row_i - tau * row_j)
                a[:, i] = a[i]
                a[:, j] = a[j]
                a[i, i] = app - t * apq
                a[j, j] = aqq + t * apq
                a[i, j] = a[j, i] = 0.0

                col_i = v[:, i].copy()
                col_j = v[:, j].copy()
                v[:, i] = col_i - s * (col_j + tau * col_i)
                v[:, j] = col_j + s * (col_i - tau * col_j)
    else:
        raise JacobiConvergenceError(
            f"no convergence after {_MAX_SWEEPS} sweeps (dim={p})"
        )

    lam = np.diag(a).copy()
    order = np.argsort(lam, kind="stable")
    return SpectralDecomp(lam[order], np.ascontiguousarray(v[:, order]))


def inverse(m, rtol: float = SINGULAR_RTOL) -> SymMatrix:
    """Inverse of a symmetric positive definite matrix.

    Raises :class:`NearSingularError` when the smallest eigenvalue does not
    exceed ``rtol`` times the spectral radius, so callers can decide how to
    regularize instead of silently amplifying noise.
    """
    dec = sym_eig(m)
    lam = dec.eigenvalues
    lam_max = float(np.max(np.abs(lam)))
    lam_min = float(lam[0])
    if lam_max == 0.0 or lam_min <= rtol * lam_max:
        raise NearSingularError(lam_min, lam_max)
    u = dec.eigenvectors
    return SymMatrix((u / lam) @ u.T)


def det_root(m) -> float:
    """p-th root of the determinant of a p x p PSD matrix, 0 if singular.

    Computed in the log domain, exp(mean(log lambda_i)), so large p and
    widely spread eigenvalues do not overflow.  Any eigenvalue at or below
    numerical zero (1e-14 of the spectral radius) makes the result 0.0.
    """
    lam = sym_eig(m).eigenvalues
    zero_tol = 1e-14 * float(np.max(np.abs(lam)))
    if lam[0] <= zero_tol:
        return 0.0
    return float(np.exp(np.mean(np.log(lam))))
