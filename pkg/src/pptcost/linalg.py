"""Dense complex-Hermitian matrix kernel.

Operators are plain 2-D numpy arrays. Functions that need Hermitian input
symmetrize it first, raising :class:`NotHermitianError` when the deviation
exceeds ``herm_tol`` relative to the largest entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotHermitianError, NumericalError

HERM_TOL = 1e-10
PSD_TOL = 1e-8


@dataclass(frozen=True)
class BipartiteShape:
    """Local dimensions ``(dim_a, dim_b)`` of a bipartite cut."""

    dim_a: int
    dim_b: int

    def __post_init__(self):
        if int(self.dim_a) != self.dim_a or int(self.dim_b) != self.dim_b:
            raise DimensionError("local dimensions must be integers")
        if self.dim_a < 1 or self.dim_b < 1:
            raise DimensionError(f"local dimensions must be >= 1, got {self.dim_a}x{self.dim_b}")

    @property
    def total(self) -> int:
        return self.dim_a * self.dim_b

    @property
    def d(self) -> int:
        """Minimal local dimension."""
        return min(self.dim_a, self.dim_b)

    def __mul__(self, other: "BipartiteShape") -> "BipartiteShape":
        return BipartiteShape(self.dim_a * other.dim_a, self.dim_b * other.dim_b)


def as_matrix(x) -> np.ndarray:
    m = np.asarray(x)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def hermitize(h, herm_tol: float = HERM_TOL) -> np.ndarray:
    """Return ``(h + h^dagger)/2`` after checking ``h`` is Hermitian within tolerance."""
    m = as_matrix(h)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if dev > herm_tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    out = 0.5 * (m + m.conj().T)
    if np.isrealobj(m):
        return out.astype(float)
    return out


def kron(x, y) -> np.ndarray:
    """Kronecker product; the first factor carries the coarse index."""
    return np.kron(as_matrix(x), as_matrix(y))


def _check_shape(x: np.ndarray, shape: BipartiteShape) -> None:
    if x.shape != (shape.total, shape.total):
        raise DimensionError(
            f"operator of shape {x.shape} does not act on a {shape.dim_a}x{shape.dim_b} system"
        )


def partial_transpose(x, shape: BipartiteShape) -> np.ndarray:
    """Transpose the B factor in the computational basis.

    Works for any square matrix (not only Hermitian ones) since it is a
    pure entry permutation.
    """
    m = as_matrix(x)
    _check_shape(m, shape)
    da, db = shape.dim_a, shape.dim_b
    t = m.reshape(da, db, da, db).transpose(0, 3, 2, 1)
    return t.reshape(shape.total, shape.total)


def partial_transpose_index(shape: BipartiteShape) -> np.ndarray:
    """Flat-index permutation ``perm`` with ``pt(X).ravel() == X.ravel()[perm]``."""
    n = shape.total
    idx = np.arange(n * n).reshape(n, n)
    return partial_transpose(idx, shape).ravel()


def bipartite_kron(x, shape_x: BipartiteShape, y, shape_y: BipartiteShape):
    """Tensor product of two bipartite operators regrouped as ``(AA')(BB')``.

    Returns ``(matrix, shape)`` where ``shape`` is ``(dA*dA', dB*dB')`` so that
    the partial transpose on the combined B system is the usual one.
    """
    mx, my = as_matrix(x), as_matrix(y)
    _check_shape(mx, shape_x)
    _check_shape(my, shape_y)
    a1, b1, a2, b2 = shape_x.dim_a, shape_x.dim_b, shape_y.dim_a, shape_y.dim_b
    t = np.kron(mx, my).reshape(a1, b1, a2, b2, a1, b1, a2, b2)
    t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7)
    out_shape = shape_x * shape_y
    return t.reshape(out_shape.total, out_shape.total), out_shape


def eig_hermitian(h, herm_tol: float = HERM_TOL):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    m = hermitize(h, herm_tol)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from exc
    return w, v


def eigvalsh(h, herm_tol: float = HERM_TOL) -> np.ndarray:
    m = hermitize(h, herm_tol)
    try:
        return np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition did not converge: {exc}") from exc


def trace_norm(h, herm_tol: float = HERM_TOL) -> float:
    return float(np.sum(np.abs(eigvalsh(h, herm_tol))))


def abs_hermitian(h, herm_tol: float = HERM_TOL) -> np.ndarray:
    """``|h| = sqrt(h^dagger h)`` via the spectral decomposition."""
    w, v = eig_hermitian(h, herm_tol)
    out = (v * np.abs(w)) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def positive_part(h, herm_tol: float = HERM_TOL) -> np.ndarray:
    w, v = eig_hermitian(h, herm_tol)
    out = (v * np.clip(w, 0.0, None)) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def negative_part(h, herm_tol: float = HERM_TOL) -> np.ndarray:
    """``h_-`` with ``h = h_+ - h_-`` and both parts PSD."""
    return positive_part(-as_matrix(h), herm_tol)


def hadamard(x, y) -> np.ndarray:
    mx, my = as_matrix(x), as_matrix(y)
    if mx.shape != my.shape:
        raise DimensionError(f"shape mismatch {mx.shape} vs {my.shape}")
    return mx * my


def min_eigenvalue(h, herm_tol: float = HERM_TOL) -> float:
    return float(eigvalsh(h, herm_tol)[0])


def is_psd(h, tol: float = PSD_TOL, herm_tol: float = HERM_TOL) -> bool:
    return min_eigenvalue(h, herm_tol) >= -tol


def random_hermitian(dim: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    """Hermitian matrix with i.i.d. Gaussian entries (GUE/GOE-like)."""
    g = rng.standard_normal((dim, dim))
    if not real:
        g = g + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + g.conj().T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
