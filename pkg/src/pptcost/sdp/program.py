"""Block SDP programs in equality form and a builder for matrix-valued constraints.

A :class:`ConicProgram` is

    minimize    sum_b Tr[C_b X_b]
    subject to  sum_b Tr[A_{j,b} X_b] = r_j,   j = 1..m
                X_b >= 0

with Hermitian (or real symmetric) coefficient matrices.  Each block's
coefficients are stored as a sparse ``m x n_b^2`` matrix whose row ``j`` is
the row-major flattening of ``A_{j,b}``.  The dual is

    maximize    r^T y
    subject to  Z_b = C_b - sum_j y_j A_{j,b} >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionError
from ..linalg import BipartiteShape


@dataclass(frozen=True)
class Block:
    name: str
    dim: int


@dataclass(frozen=True, eq=False)
class ConicProgram:
    blocks: tuple
    objective: dict
    constraints: dict
    rhs: np.ndarray
    real: bool = True
    groups: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = self.rhs.shape[0]
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("right-hand side has non-finite entries")
        for blk in self.blocks:
            a = self.constraints.get(blk.name)
            if a is not None and a.shape != (m, blk.dim * blk.dim):
                raise DimensionError(f"constraint matrix for block {blk.name} has shape {a.shape}")
            c = self.objective.get(blk.name)
            if c is not None:
                if c.shape != (blk.dim, blk.dim):
                    raise DimensionError(f"objective for block {blk.name} has shape {c.shape}")
                if np.max(np.abs(c - c.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(c))):
                    raise ValueError(f"objective for block {blk.name} is not Hermitian")

    @property
    def num_constraints(self) -> int:
        return int(self.rhs.shape[0])

    @property
    def block_names(self) -> list[str]:
        return [b.name for b in self.blocks]

    def block(self, name: str) -> Block:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)

    def cost(self, name: str) -> np.ndarray:
        c = self.objective.get(name)
        if c is None:
            n = self.block(name).dim
            return np.zeros((n, n), dtype=float if self.real else complex)
        return c

    def group_slice(self, name: str) -> slice:
        for g, s in self.groups:
            if g == name:
                return s
        raise KeyError(name)

    def apply(self, xs: dict) -> np.ndarray:
        """Evaluate ``A(X)``, the vector of constraint left-hand sides."""
        out = np.zeros(self.num_constraints)
        for blk in self.blocks:
            a = self.constraints.get(blk.name)
            if a is None:
                continue
            # Tr(A X) = vec(A) . vec(X^T)
            v = a @ np.asarray(xs[blk.name]).T.ravel()
            out += np.real(v)
        return out

    def adjoint(self, y: np.ndarray) -> dict:
        """Evaluate ``A^*(y)`` blockwise."""
        out = {}
        for blk in self.blocks:
            a = self.constraints.get(blk.name)
            n = blk.dim
            if a is None:
                out[blk.name] = np.zeros((n, n), dtype=float if self.real else complex)
                continue
            out[blk.name] = np.asarray(a.T @ y).reshape(n, n)
        return out

    def objective_value(self, xs: dict) -> float:
        total = 0.0
        for blk in self.blocks:
            c = self.objective.get(blk.name)
            if c is not None:
                total += float(np.real(np.sum(c.T * xs[blk.name])))
        return total

    def dump(self) -> str:
        """Human-readable listing of blocks, objective and constraints, for debugging."""
        lines = [f"blocks {len(self.blocks)} constraints {self.num_constraints} real {int(self.real)}"]
        for blk in self.blocks:
            lines.append(f"block {blk.name} {blk.dim}")
        for blk in self.blocks:
            c = self.objective.get(blk.name)
            if c is None:
                continue
            for i, j in zip(*np.nonzero(c)):
                lines.append(f"c {blk.name} {i} {j} {_fmt(c[i, j])}")
        for blk in self.blocks:
            a = self.constraints.get(blk.name)
            if a is None:
                continue
            coo = a.tocoo()
            n = blk.dim
            for r, f, v in zip(coo.row, coo.col, coo.data):
                lines.append(f"a {r} {blk.name} {f // n} {f % n} {_fmt(v)}")
        for j, r in enumerate(self.rhs):
            if r != 0:
                lines.append(f"b {j} {r:.17g}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    v = complex(v)
    if v.imag == 0:
        return f"{v.real:.17g}"
    return f"{v.real:.17g}{v.imag:+.17g}j"


# -- test-matrix bases ---------------------------------------------------------


def _basis_coo(dim: int, kind: str, real: bool):
    """COO description ``(elem, i, j, val)`` of a family of test matrices.

    ``herm``  orthonormal basis of Hermitian (real: symmetric) matrices.
    ``skew``  probes the anti-Hermitian part (``i`` times the Hermitian basis;
              real: antisymmetric basis).
    ``full``  every matrix entry, real and imaginary parts separately.
    """
    s = 1.0 / np.sqrt(2.0)
    iu, ju = np.triu_indices(dim, k=1)
    npair = iu.size
    elems, rows, cols, vals = [], [], [], []
    count = 0

    def add(e, i, j, v):
        elems.append(e)
        rows.append(i)
        cols.append(j)
        vals.append(v)

    if kind in ("herm", "skew"):
        if kind == "skew" and real:
            e = np.arange(npair)
            add(e, iu, ju, np.full(npair, s))
            add(e, ju, iu, np.full(npair, -s))
            count = npair
        else:
            f = 1j if kind == "skew" else 1.0
            d = np.arange(dim)
            add(d, d, d, np.full(dim, f, dtype=complex))
            e = dim + np.arange(npair)
            add(e, iu, ju, np.full(npair, f * s, dtype=complex))
            add(e, ju, iu, np.full(npair, f * s, dtype=complex))
            count = dim + npair
            if not real:
                e = count + np.arange(npair)
                add(e, iu, ju, np.full(npair, -1j * f * s))
                add(e, ju, iu, np.full(npair, 1j * f * s))
                count += npair
    elif kind == "full":
        ii, jj = np.divmod(np.arange(dim * dim), dim)
        add(np.arange(dim * dim), ii, jj, np.ones(dim * dim, dtype=complex))
        count = dim * dim
        if not real:
            add(count + np.arange(dim * dim), ii, jj, np.full(dim * dim, -1j))
            count += dim * dim
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    out = [np.concatenate(x) for x in (elems, rows, cols, vals)]
    if real:
        out[3] = out[3].real.astype(float)
    return out[0], out[1], out[2], out[3], count


def hermitian_basis(dim: int, real: bool = False) -> list[np.ndarray]:
    """Dense orthonormal basis used for Hermitian matrix equations."""
    e, i, j, v, count = _basis_coo(dim, "herm", real)
    out = [np.zeros((dim, dim), dtype=float if real else complex) for _ in range(count)]
    for a, b, c, x in zip(e, i, j, v):
        out[a][b, c] = x
    return out


def _pt_indices(i, j, shape: BipartiteShape):
    ai, bi = np.divmod(i, shape.dim_b)
    aj, bj = np.divmod(j, shape.dim_b)
    return ai * shape.dim_b + bj, aj * shape.dim_b + bi


@dataclass
class Term:
    """One summand ``scale * T(X_block[r0:r0+size, c0:c0+size])`` of a matrix equation.

    ``pt`` selects the partial transpose ``T`` on the given cut; ``None`` means identity.
    """

    block: str
    scale: complex = 1.0
    pt: BipartiteShape | None = None
    r0: int = 0
    c0: int = 0
    size: int | None = None


class ProgramBuilder:
    """Incrementally assemble a :class:`ConicProgram`.

    Matrix equations ``sum_t T_t(X_t) = R`` are expanded into scalar
    constraints by pairing them with a basis of test matrices.
    """

    def __init__(self, real: bool = False):
        self.real = real
        self._blocks: list[Block] = []
        self._objective: dict = {}
        self._coo: dict = {}
        self._rhs: list[np.ndarray] = []
        self._groups: list = []
        self._m = 0
        self.meta: dict = {}

    def add_block(self, name: str, dim: int) -> None:
        if any(b.name == name for b in self._blocks):
            raise ValueError(f"duplicate block {name!r}")
        self._blocks.append(Block(name, int(dim)))
        self._coo[name] = ([], [], [])

    def _dim(self, name: str) -> int:
        for b in self._blocks:
            if b.name == name:
                return b.dim
        raise KeyError(name)

    def set_objective(self, name: str, c) -> None:
        c = np.asarray(c)
        n = self._dim(name)
        if c.shape != (n, n):
            raise DimensionError(f"objective shape {c.shape} does not match block {name} ({n})")
        if self.real:
            if np.iscomplexobj(c) and np.any(c.imag):
                raise ValueError("complex objective in a real program")
            c = np.real(c).astype(float)
        self._objective[name] = 0.5 * (c + c.conj().T)

    def add_equation(self, terms: Sequence[Term], rhs=None, kind: str = "herm", group: str | None = None) -> slice:
        """Add the scalar constraints expressing one matrix equation.

        Parameters
        ----------
        terms : sequence of Term
            All terms must have the same sub-block size.
        rhs : array_like, optional
            Right-hand side matrix; zero if omitted.
        kind : {"herm", "skew", "full"}
            Which test basis to use (see ``_basis_coo``).
        group : str, optional
            Label recorded in ``ConicProgram.groups``.

        Returns
        -------
        slice
            Indices of the new constraints.
        """
        sizes = set()
        for t in terms:
            sizes.add(t.size if t.size is not None else self._dim(t.block))
        if len(sizes) != 1:
            raise DimensionError("terms of one equation must share a size")
        size = sizes.pop()
        elem, bi, bj, bv, count = _basis_coo(size, kind, self.real)
        start = self._m

        for t in terms:
            n = self._dim(t.block)
            if t.r0 + size > n or t.c0 + size > n:
                raise DimensionError(f"sub-block exceeds block {t.block}")
            i, j = bi, bj
            if t.pt is not None:
                if t.pt.total != size:
                    raise DimensionError("partial-transpose cut does not match sub-block")
                i, j = _pt_indices(i, j, t.pt)
            v = t.scale * bv
            # Tr(F X_sub) = Tr(F_hat X) with F_hat[c0+i, r0+j] = F[i, j]; then hermitize
            p, q = t.c0 + i, t.r0 + j
            rows, cols, vals = self._coo[t.block]
            rows += [start + elem, start + elem]
            cols += [p * n + q, q * n + p]
            vals += [0.5 * v, 0.5 * np.conj(v)]

        if rhs is None:
            r = np.zeros(count)
        else:
            rm = np.asarray(rhs)
            if rm.shape != (size, size):
                raise DimensionError(f"rhs shape {rm.shape} does not match equation size {size}")
            # Re Tr(F R) = Re sum_ij F_ij R_ji
            contrib = np.real(bv * rm[bj, bi])
            r = np.bincount(elem, weights=contrib, minlength=count)
        self._rhs.append(r)
        self._m += count
        sl = slice(start, self._m)
        if group is not None:
            self._groups.append((group, sl))
        return sl

    def build(self) -> ConicProgram:
        m = self._m
        constraints = {}
        for blk in self._blocks:
            rows, cols, vals = self._coo[blk.name]
            n = blk.dim
            if not rows:
                continue
            r = np.concatenate(rows)
            c = np.concatenate(cols)
            v = np.concatenate(vals)
            if self.real:
                v = np.real(v).astype(float)
            a = sp.csr_matrix((v, (r, c)), shape=(m, n * n))
            a.sum_duplicates()
            a.data[np.abs(a.data) < 1e-15] = 0
            a.eliminate_zeros()
            a.sort_indices()
            constraints[blk.name] = a
        rhs = np.concatenate(self._rhs) if self._rhs else np.zeros(0)
        return ConicProgram(
            blocks=tuple(self._blocks),
            objective=dict(self._objective),
            constraints=constraints,
            rhs=rhs,
            real=self.real,
            groups=tuple(self._groups),
            meta=dict(self.meta),
        )


def dual_matrix(y: np.ndarray, dim: int, real: bool = False) -> np.ndarray:
    """Reassemble ``sum_k y_k E_k`` over the Hermitian test basis of size ``dim``."""
    elem, i, j, v, count = _basis_coo(dim, "herm", real)
    if y.shape[0] != count:
        raise DimensionError(f"expected {count} multipliers, got {y.shape[0]}")
    out = np.zeros((dim, dim), dtype=float if real else complex)
    np.add.at(out, (i, j), v * y[elem])
    return out


def embed_complex(program: ConicProgram) -> ConicProgram:
    """Real symmetric program with the same optimal value.

    Each complex ``n x n`` block becomes a real ``2n x 2n`` block and each
    coefficient ``H`` becomes ``(1/2) [[Re H, -Im H], [Im H, Re H]]`` so that
    traces against embedded variables are preserved.
    """
    if program.real:
        return program
    constraints = {}
    objective = {}
    blocks = []
    for blk in program.blocks:
        n = blk.dim
        blocks.append(Block(blk.name, 2 * n))
        a = program.constraints.get(blk.name)
        if a is not None:
            coo = a.tocoo()
            i, j = np.divmod(coo.col, n)
            re, im = 0.5 * coo.data.real, 0.5 * coo.data.imag
            n2 = 2 * n
            rows = np.concatenate([coo.row] * 4)
            cols = np.concatenate([i * n2 + j, (i + n) * n2 + j + n, i * n2 + j + n, (i + n) * n2 + j])
            vals = np.concatenate([re, re, -im, im])
            e = sp.csr_matrix((vals, (rows, cols)), shape=(program.num_constraints, n2 * n2))
            e.sum_duplicates()
            e.eliminate_zeros()
            e.sort_indices()
            constraints[blk.name] = e
        c = program.objective.get(blk.name)
        if c is not None:
            objective[blk.name] = 0.5 * np.block([[c.real, -c.imag], [c.imag, c.real]])
    return ConicProgram(
        blocks=tuple(blocks),
        objective=objective,
        constraints=constraints,
        rhs=program.rhs.copy(),
        real=True,
        groups=program.groups,
        meta=dict(program.meta, embedded=True),
    )


def unembed(x: np.ndarray) -> np.ndarray:
    """Inverse of the real embedding for a (not necessarily structured) ``2n x 2n`` matrix."""
    n = x.shape[0] // 2
    a, b = x[:n, :n], x[:n, n:]
    c, d = x[n:, :n], x[n:, n:]
    return 0.5 * ((a + d) + 1j * (c - b))


def embed_matrix(h: np.ndarray) -> np.ndarray:
    """``[[Re H, -Im H], [Im H, Re H]]`` (no 1/2 factor)."""
    h = np.asarray(h, dtype=complex)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def trace_norm_program(h) -> ConicProgram:
    """Equality-form program whose optimum is ``-||h||_1``.

    Blocks ``V, W >= 0`` with ``V + W = 1`` and objective ``-Tr[h (V - W)]``.
    The dual multipliers reassemble to ``-Y`` where ``Y`` solves
    ``min Tr Y : -Y <= h <= Y``.
    """
    h = np.asarray(h)
    n = h.shape[0]
    real = not (np.iscomplexobj(h) and np.any(h.imag))
    b = ProgramBuilder(real=real)
    b.add_block("V", n)
    b.add_block("W", n)
    b.set_objective("V", -h)
    b.set_objective("W", h)
    b.add_equation([Term("V"), Term("W")], np.eye(n), group="unit")
    b.meta.update(kind="trace_norm")
    return b.build()

