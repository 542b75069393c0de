"""Small dense linear algebra: solves, spectra, definiteness, norms and the Lyapunov solve.

Sized for the handful-of-agents problems this package deals with (n up to ~50).
Eigen-decompositions go through LAPACK via numpy; elimination, Cholesky-style
definiteness and the Kronecker Lyapunov solve are done here so their pivot
thresholds are explicit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinAlgError",
    "SingularMatrixError",
    "NotPositiveStableError",
    "Spectrum",
    "solve_linear",
    "inverse",
    "eigenvalues",
    "symmetric_eigenvalues",
    "is_positive_definite",
    "spectral_norm",
    "kron",
    "solve_lyapunov",
    "lyapunov_residual",
]

PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-10
STABILITY_TOL = 1e-10
ZERO_EIG_TOL = 1e-8
MAX_DIM = 50


class LinAlgError(ArithmeticError):
    pass


class SingularMatrixError(LinAlgError):
    pass


class NotPositiveStableError(LinAlgError):
    pass


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    tolerance: float

    def __len__(self):
        return len(self.values)

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def zero_count(self) -> int:
        """Algebraic multiplicity of the zero eigenvalue under ``tolerance``."""
        return int(np.sum(np.abs(self.values) < self.tolerance))

    def sorted(self) -> np.ndarray:
        return self.values[np.lexsort((self.values.imag, self.values.real))]


def _square(a, name="a") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinAlgError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LinAlgError(f"{name} has non-finite entries")
    return a


def _symmetric(a) -> np.ndarray:
    a = _square(a)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise LinAlgError("matrix is not symmetric")
    return a


def _eliminate(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Gaussian elimination with partial pivoting on a copy; returns (x, min/max pivot ratio)."""
    m = a.shape[0]
    a = a.copy()
    b = b.copy()
    pivots = np.empty(m)
    for col in range(m):
        p = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[p, col]) <= PIVOT_TOL:
            raise SingularMatrixError(f"pivot {abs(a[p, col]):.3e} at column {col} is below {PIVOT_TOL}")
        if p != col:
            a[[col, p]] = a[[p, col]]
            b[[col, p]] = b[[p, col]]
        pivots[col] = abs(a[col, col])
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(factors, a[col, col:])
        b[col + 1:] -= np.outer(factors, b[col]).reshape(b[col + 1:].shape)
    x = np.empty_like(b)
    for row in range(m - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    ratio = float(pivots.min() / pivots.max()) if m else 1.0
    return x, ratio


def solve_linear(a, b) -> np.ndarray:
    a = _square(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != a.shape[0]:
        raise LinAlgError(f"right-hand side has {b.shape[0]} rows, matrix has {a.shape[0]}")
    x, _ = _eliminate(a, b)
    return x


def inverse(a, *, return_pivot_ratio: bool = False):
    a = _square(a)
    x, ratio = _eliminate(a, np.eye(a.shape[0]))
    return (x, ratio) if return_pivot_ratio else x


def eigenvalues(a, tolerance: float | None = None) -> Spectrum:
    """All eigenvalues of a general square matrix.

    The zero-classification tolerance defaults to ``1e-8`` times the largest
    absolute entry (or ``1e-8`` for the zero matrix).
    """
    a = _square(a)
    if a.shape[0] > MAX_DIM:
        raise LinAlgError(f"dimension {a.shape[0]} exceeds supported maximum {MAX_DIM}")
    if tolerance is None:
        tolerance = ZERO_EIG_TOL * max(1.0, float(np.abs(a).max(initial=0.0)))
    try:
        vals = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:  # QR iteration failed to converge
        raise LinAlgError(f"eigenvalue iteration did not converge: {exc}") from exc
    return Spectrum(np.asarray(vals, dtype=complex), float(tolerance))


def symmetric_eigenvalues(a) -> np.ndarray:
    a = _symmetric(a)
    return np.linalg.eigvalsh((a + a.T) / 2)


def is_positive_definite(a) -> bool:
    """Cholesky factorization with every pivot above ``1e-12``."""
    a = _symmetric(a)
    m = a.shape[0]
    l = np.zeros_like(a)
    for j in range(m):
        d = a[j, j] - l[j, :j] @ l[j, :j]
        if d <= PIVOT_TOL:
            return False
        l[j, j] = np.sqrt(d)
        l[j + 1:, j] = (a[j + 1:, j] - l[j + 1:, :j] @ l[j, :j]) / l[j, j]
    return True


def spectral_norm(a) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return 0.0
    g = a.T @ a if a.shape[0] >= a.shape[1] else a @ a.T
    top = float(np.linalg.eigvalsh((g + g.T) / 2)[-1])
    return float(np.sqrt(max(top, 0.0)))


def kron(a, b) -> np.ndarray:
    return np.kron(np.atleast_2d(np.asarray(a, dtype=float)), np.atleast_2d(np.asarray(b, dtype=float)))


def lyapunov_residual(p, h) -> float:
    p = np.asarray(p, dtype=float)
    h = np.asarray(h, dtype=float)
    return float(np.abs(p @ h + h.T @ p - np.eye(h.shape[0])).max(initial=0.0))


def solve_lyapunov(h) -> np.ndarray:
    """Symmetric ``P`` with ``P H + H^T P = I`` for positive stable ``H``.

    Solved through the column-major vectorization
    ``(H^T kron I + I kron H^T) vec(P) = vec(I)`` and symmetrized.
    """
    h = _square(h, "h")
    n = h.shape[0]
    spec = eigenvalues(h)
    if np.any(spec.real <= STABILITY_TOL):
        worst = spec.values[np.argmin(spec.real)]
        raise NotPositiveStableError(
            f"H is not positive stable (eigenvalue {worst:.6g} has real part <= {STABILITY_TOL})"
        )
    eye = np.eye(n)
    system = kron(h.T, eye) + kron(eye, h.T)
    vec_p = solve_linear(system, eye.reshape(-1, order="F"))
    p = vec_p.reshape((n, n), order="F")
    return (p + p.T) / 2
