"""Single-block reformulation of a chi-hierarchy program.

The chain ``S_0..S_p`` is packed into one PSD variable

    X = diag(X_0, ..., X_p),   X_i = [[H_i, K_i], [L_i, M_i]]  (each D x D)

with linear equalities forcing ``X_i = [[S_i, S_{i-1}^G], [S_{i-1}^G, S_i]]``:

1. off-diagonal ``2D x 2D`` blocks vanish,
2. ``H_i = M_i`` and ``K_i = L_i``,
3. ``K_i = H_{i-1}^G`` for ``i >= 1``,
4. ``K_0 = rho^G``.

A block of that shape is PSD exactly when ``S_i +- S_{i-1}^G >= 0``, so
minimizing ``Tr S_p`` (``C = diag(0, ..., 0, 1/2)``) over it gives ``chi_p``.
"""

from __future__ import annotations

import numpy as np

from .program import ConicProgram, ProgramBuilder, Term

GROUPS = ("offdiag", "symmetry", "chain", "anchor")


def standard_form(program: ConicProgram) -> ConicProgram:
    """Rewrite a chi program (see ``hierarchy.chi_program``) as one PSD block.

    The result minimizes ``chi_p`` itself rather than its negative.
    """
    meta = program.meta
    if meta.get("kind") != "chi":
        raise ValueError("standard_form expects a chi-hierarchy program")
    p = int(meta["level"])
    shape = meta["shape"]
    rho_pt = np.asarray(meta["rho_pt"])
    dim = shape.total
    n = 2 * (p + 1) * dim
    b = ProgramBuilder(real=program.real)
    b.add_block("X", n)
    c = np.zeros((n, n))
    c[2 * p * dim:, 2 * p * dim:] = 0.5 * np.eye(2 * dim)
    b.set_objective("X", c)

    def off(i):
        return 2 * i * dim

    for i in range(p + 1):
        for j in range(i + 1, p + 1):
            b.add_equation([Term("X", 1.0, None, off(i), off(j), 2 * dim)], kind="full",
                           group=f"offdiag{i}_{j}")
    for i in range(p + 1):
        o = off(i)
        b.add_equation([Term("X", 1.0, None, o, o, dim), Term("X", -1.0, None, o + dim, o + dim, dim)],
                       group=f"symmetry{i}h")
        b.add_equation([Term("X", 1.0, None, o, o + dim, dim), Term("X", -1.0, None, o + dim, o, dim)],
                       kind="skew", group=f"symmetry{i}k")
    for i in range(1, p + 1):
        b.add_equation([Term("X", 1.0, None, off(i), off(i) + dim, dim),
                        Term("X", -1.0, shape, off(i - 1), off(i - 1), dim)], group=f"chain{i}")
    b.add_equation([Term("X", 1.0, None, 0, dim, dim)], rho_pt, group="anchor")
    b.meta.update(kind="chi_standard", level=p, shape=shape)
    return b.build()


def group_counts(program: ConicProgram) -> dict:
    """Number of scalar equality constraints in each of the four families."""
    out = dict.fromkeys(GROUPS, 0)
    for name, sl in program.groups:
        for g in GROUPS:
            if name.startswith(g):
                out[g] += sl.stop - sl.start
    return out


def matrix_equation_count(p: int, dim: int) -> int:
    """Equation count ``(p+1)(p+3) D^2`` obtained by charging ``D^2`` per matrix equation.

    Off-diagonal blocks are charged once per ordered pair, symmetry twice
    per diagonal block, one per chain link and one for the anchor.  The
    scalar count of :func:`standard_form` is larger because an off-diagonal
    ``2D x 2D`` block carries ``4 D^2`` complex entries.
    """
    offdiag = p * (p + 1)
    symmetry = 2 * (p + 1)
    chain = p
    anchor = 1
    return (offdiag + symmetry + chain + anchor) * dim * dim


def chain_from_block(x: np.ndarray, p: int, dim: int) -> list:
    """Read ``S_0..S_p`` off a solved standard-form block."""
    return [x[2 * i * dim:(2 * i + 1) * dim, 2 * i * dim:(2 * i + 1) * dim] for i in range(p + 1)]
