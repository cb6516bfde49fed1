"""Bipartite density matrices: constructors, validation and file I/O."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import linalg
from .errors import DimensionCapError, DimensionError, ValidationError
from .linalg import BipartiteShape

PSD_TOL = 1e-8
TRACE_TOL = 1e-9
DEFAULT_MAX_DIM = 256


def max_dim_default() -> int:
    env = os.environ.get("PPTCOST_MAX_DIM")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_MAX_DIM


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density operator on a bipartite cut.

    Parameters
    ----------
    matrix : array_like
        ``D x D`` Hermitian, PSD, unit-trace matrix. It is symmetrized on
        construction and stored read-only.
    shape : BipartiteShape
        Local dimensions with ``dim_a * dim_b == D``.
    """

    matrix: np.ndarray
    shape: BipartiteShape
    label: str = field(default="", compare=False)

    def __post_init__(self):
        m = linalg.hermitize(self.matrix)
        if m.shape[0] != self.shape.total:
            raise DimensionError(
                f"matrix is {m.shape[0]}x{m.shape[0]} but cut is "
                f"{self.shape.dim_a}x{self.shape.dim_b}"
            )
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"trace is {tr!r}, expected 1")
        lam = linalg.min_eigenvalue(m)
        if lam < -PSD_TOL:
            raise ValidationError(f"not positive semidefinite (min eigenvalue {lam:.3e})")
        m = np.array(m, copy=True)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.shape.total

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix) or not np.any(self.matrix.imag)

    def pt(self) -> np.ndarray:
        """Partial transpose on B."""
        return linalg.partial_transpose(self.matrix, self.shape)

    def transformed(self, u: np.ndarray) -> "DensityMatrix":
        """Return ``u rho u^dagger`` on the same cut."""
        return DensityMatrix(u @ self.matrix @ u.conj().T, self.shape)

    def __repr__(self):
        name = self.label or "DensityMatrix"
        return f"<{name} {self.shape.dim_a}x{self.shape.dim_b}>"


@dataclass(frozen=True)
class PunchCardSpec:
    """Data ``(a, q)`` defining a punch-card state.

    ``a`` must be PSD and ``q`` a symmetric 0/1 mask with unit diagonal.
    """

    a: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        a = linalg.hermitize(self.a)
        q = np.asarray(self.q)
        if a.shape != q.shape:
            raise DimensionError(f"a is {a.shape} but q is {q.shape}")
        if linalg.min_eigenvalue(a) < -PSD_TOL:
            raise ValidationError("a must be positive semidefinite")
        if np.iscomplexobj(q) or not np.all((q == 0) | (q == 1)):
            raise ValidationError("q entries must be exactly 0 or 1")
        if not np.array_equal(q, q.T):
            raise ValidationError("q must be symmetric")
        if not np.all(np.diag(q) == 1):
            raise ValidationError("q must have unit diagonal")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "q", q.astype(float))

    @property
    def d(self) -> int:
        return self.a.shape[0]


PI0_SPEC_A = np.ones((3, 3))
PI0_SPEC_Q = np.array([[1, 0, 1], [0, 1, 1], [1, 1, 1]], dtype=float)


def pure_from_schmidt(lambdas: Sequence[float], shape: BipartiteShape | None = None) -> DensityMatrix:
    """Projector onto ``sum_i sqrt(lambda_i) |i>|i>``.

    Parameters
    ----------
    lambdas : sequence of float
        Schmidt coefficients (a probability vector).
    shape : BipartiteShape, optional
        Defaults to a square cut of size ``len(lambdas)``.
    """
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.size == 0:
        raise ValidationError("need at least one Schmidt coefficient")
    if shape is None:
        shape = BipartiteShape(lam.size, lam.size)
    if np.any(lam < 0) or abs(lam.sum() - 1.0) > TRACE_TOL:
        raise ValidationError("Schmidt coefficients must be a probability vector")
    if lam.size > shape.d:
        raise ValidationError(f"{lam.size} Schmidt coefficients exceed local dimension {shape.d}")
    psi = np.zeros(shape.total)
    for i, x in enumerate(lam):
        psi[i * shape.dim_b + i] = np.sqrt(x)
    return DensityMatrix(np.outer(psi, psi), shape, label="pure")


def max_entangled(d: int) -> DensityMatrix:
    if d < 1:
        raise DimensionError("d must be >= 1")
    rho = pure_from_schmidt(np.full(d, 1.0 / d))
    return DensityMatrix(rho.matrix, rho.shape, label=f"phi{d}")


def isotropic(v: float, d: int = 2) -> DensityMatrix:
    """Mixture ``v * Phi_d + (1 - v) * I / d^2``, valid for ``-1/(d^2-1) <= v <= 1``."""
    phi = max_entangled(d).matrix
    m = v * phi + (1 - v) * np.eye(d * d) / (d * d)
    return DensityMatrix(m, BipartiteShape(d, d), label="isotropic")


def punch_card(spec: PunchCardSpec) -> DensityMatrix:
    d = spec.d
    a, q = spec.a, spec.q
    m = np.zeros((d * d, d * d), dtype=a.dtype)
    diag_idx = np.arange(d) * (d + 1)
    m[np.ix_(diag_idx, diag_idx)] = a
    for i in range(d):
        for j in range(d):
            if i != j:
                k = i * d + j
                m[k, k] = q[i, j] * abs(a[i, j])
    norm = float(np.trace(m).real)
    if norm <= 0:
        raise ValidationError("punch-card normalization is zero")
    return DensityMatrix(m / norm, BipartiteShape(d, d), label="punchcard")


def punch_card_pi0() -> DensityMatrix:
    return punch_card(PunchCardSpec(PI0_SPEC_A, PI0_SPEC_Q))


def punch_card_pt_blocks(spec: PunchCardSpec) -> list[np.ndarray]:
    """Blocks of the partial transpose of a punch-card state.

    The partial transpose is (up to a permutation) the direct sum of the
    1x1 diagonal block ``diag(a_ii)`` and one 2x2 block per pair ``i < j``
    acting on ``span{|ij>, |ji>}``.
    """
    a, q = spec.a, spec.q
    d = spec.d
    norm = float(np.trace(a).real) + sum(
        q[i, j] * abs(a[i, j]) for i in range(d) for j in range(d) if i != j
    )
    blocks = [np.diag(np.diag(a).real) / norm]
    for i in range(d):
        for j in range(i + 1, d):
            w = q[i, j] * abs(a[i, j])
            blocks.append(np.array([[w, a[i, j]], [np.conj(a[i, j]), w]]) / norm)
    return blocks


def binegativity_defect(rho: DensityMatrix) -> float:
    """Minimum eigenvalue of ``|rho^Gamma|^Gamma``; negative means non-zero bi-negativity."""
    b = linalg.partial_transpose(linalg.abs_hermitian(rho.pt()), rho.shape)
    return linalg.min_eigenvalue(b)


def kron_states(x: DensityMatrix, y: DensityMatrix, max_dim: int | None = None) -> DensityMatrix:
    """``x (x) y`` on the cut ``(A A') : (B B')``."""
    cap = max_dim_default() if max_dim is None else max_dim
    if x.dim * y.dim > cap:
        raise DimensionCapError(f"product dimension {x.dim * y.dim} exceeds cap {cap}")
    m, shape = linalg.bipartite_kron(x.matrix, x.shape, y.matrix, y.shape)
    return DensityMatrix(m, shape)


def tensor_power(rho: DensityMatrix, n: int, max_dim: int | None = None) -> DensityMatrix:
    if n < 1:
        raise ValueError("n must be >= 1")
    cap = max_dim_default() if max_dim is None else max_dim
    if rho.dim ** n > cap:
        raise DimensionCapError(f"dimension {rho.dim}^{n} exceeds cap {cap}")
    out = rho
    for _ in range(n - 1):
        out = kron_states(out, rho, max_dim=cap)
    return out


def random_density(shape: BipartiteShape, rank: int | None = None, seed: int = 0) -> DensityMatrix:
    """Random state ``G G^dagger / Tr(G G^dagger)`` with complex Gaussian ``G`` of size ``D x rank``."""
    n = shape.total
    rank = n if rank is None else rank
    if not 1 <= rank <= n:
        raise ValueError(f"rank must be in [1, {n}]")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityMatrix(m, shape, label="random")


def random_psd(dim: int, rank: int | None = None, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    return g @ g.conj().T


# -- state files ---------------------------------------------------------------


def _fmt_rows(m: np.ndarray) -> str:
    rows = ["[" + ", ".join(format(float(x), ".16e") for x in row) + "]" for row in m]
    return "[\n    " + ",\n    ".join(rows) + "\n  ]"


def dumps_state(rho: DensityMatrix) -> str:
    m = np.asarray(rho.matrix, dtype=complex)
    return (
        "{\n"
        f'  "dim_a": {rho.shape.dim_a},\n'
        f'  "dim_b": {rho.shape.dim_b},\n'
        f'  "matrix_real": {_fmt_rows(m.real)},\n'
        f'  "matrix_imag": {_fmt_rows(m.imag)}\n'
        "}\n"
    )


def write_state(rho: DensityMatrix, path) -> None:
    Path(path).write_text(dumps_state(rho))


def loads_state(text: str) -> DensityMatrix:
    """Parse a state document.

    Raises ``ValueError`` (or ``json.JSONDecodeError``) for malformed input,
    :class:`DimensionError` for inconsistent sizes and
    :class:`ValidationError` if the matrix is not a density matrix.
    """
    doc = json.loads(text)
    try:
        shape = BipartiteShape(int(doc["dim_a"]), int(doc["dim_b"]))
        re = np.asarray(doc["matrix_real"], dtype=float)
        im = np.asarray(doc.get("matrix_imag", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed state document: {exc}") from exc
    n = shape.total
    if re.shape != (n, n) or im.shape != (n, n):
        raise DimensionError(
            f"matrix shape {re.shape}/{im.shape} does not match cut {shape.dim_a}x{shape.dim_b}"
        )
    m = re + 1j * im if np.any(im) else re
    return DensityMatrix(m, shape)


def read_state(path) -> DensityMatrix:
    return loads_state(Path(path).read_text())
