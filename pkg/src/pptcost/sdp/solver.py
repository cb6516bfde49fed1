"""Primal-dual interior-point solver for :class:`ConicProgram`.

Infeasible-start Mehrotra predictor-corrector with the HKM search direction.
Complex programs are solved through their real embedding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .. import _kernels
from ..errors import NumericalError
from .program import ConicProgram, embed_complex, embed_matrix, unembed

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible-detected"
ITERATION_CAP = "iteration-cap"


@dataclass(frozen=True)
class SolverConfig:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iters: int = 200
    step_fraction: float = 0.98

    def __post_init__(self):
        if not (self.gap_tol > 0 and self.feas_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True, eq=False)
class ConicSolution:
    """Final iterate of a solve.

    ``primal_value`` is the objective at ``primal_blocks`` and ``dual_value``
    is ``r^T y``; for a minimization the optimum lies between them up to the
    reported residuals.
    """

    status: str
    primal_value: float
    dual_value: float
    primal_blocks: dict
    dual_multipliers: np.ndarray
    dual_slacks: dict
    gap: float
    residual: float
    primal_residual: float
    dual_residual: float
    iterations: int
    history: tuple = field(default=(), repr=False)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class _Layout:
    """Per-block data for the Schur assembly, computed once per solve."""

    def __init__(self, program: ConicProgram):
        self.names = program.block_names
        self.dims = {b.name: b.dim for b in program.blocks}
        self.a = {}
        self.pads = {}
        for name in self.names:
            a = program.constraints.get(name)
            if a is None or a.nnz == 0:
                continue
            a = a.tocsr().astype(float)
            self.a[name] = a
            self.pads[name] = _kernels.pad_block(a, self.dims[name])
        self.c = {n: np.asarray(program.cost(n), dtype=float) for n in self.names}
        self.b = np.asarray(program.rhs, dtype=float)
        self.m = self.b.shape[0]
        self.nsum = sum(self.dims.values())

    def apply(self, xs):
        out = np.zeros(self.m)
        for name, a in self.a.items():
            out += a @ xs[name].ravel()
        return out

    def adjoint(self, y):
        out = {}
        for name in self.names:
            n = self.dims[name]
            a = self.a.get(name)
            out[name] = np.zeros((n, n)) if a is None else (a.T @ y).reshape(n, n)
        return out


def _sym(x):
    return 0.5 * (x + x.T)


def _chol_inv(z):
    """Inverse of a symmetric positive definite matrix via Cholesky."""
    try:
        c = sla.cho_factor(z, lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise NumericalError("dual slack lost positive definiteness") from exc
    inv = sla.cho_solve(c, np.eye(z.shape[0]), check_finite=False)
    return _sym(inv)


def _max_step(x, dx):
    """Largest ``a`` with ``x + a dx >= 0`` (``inf`` when unbounded)."""
    try:
        lo = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    li = sla.solve_triangular(lo, np.eye(x.shape[0]), lower=True, check_finite=False)
    w = np.linalg.eigvalsh(_sym(li @ dx @ li.T))
    lam = w[0]
    if lam >= 0:
        return np.inf
    return -1.0 / lam


def _initial_point(lay: _Layout):
    """Scaled identity start in the spirit of SDPT3."""
    anorm = {}
    for name, a in lay.a.items():
        anorm[name] = np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
    rownorm = np.sqrt(sum(v ** 2 for v in anorm.values())) if anorm else np.zeros(lay.m)
    xs, zs = {}, {}
    for name in lay.names:
        n = lay.dims[name]
        xi = max(10.0, np.sqrt(n))
        if lay.m:
            xi = max(xi, n * float(np.max((1 + np.abs(lay.b)) / (1 + rownorm))))
        eta = max(10.0, np.sqrt(n), float(np.linalg.norm(lay.c[name])))
        if name in anorm and anorm[name].size:
            eta = max(eta, float(np.max(anorm[name])))
        xs[name] = xi * np.eye(n)
        zs[name] = eta * np.eye(n)
    return xs, np.zeros(lay.m), zs


def _schur(lay: _Layout, xs, zis):
    m = np.zeros((lay.m, lay.m))
    for name, (active, rows, cols, vals, counts) in lay.pads.items():
        mb = _kernels.schur_block(xs[name], zis[name], rows, cols, vals, counts)
        m[np.ix_(active, active)] += mb
    return m


def _factor(m):
    scale = max(1.0, float(np.max(np.abs(np.diag(m))))) if m.size else 1.0
    reg = 0.0
    for _ in range(8):
        try:
            return sla.cho_factor(m + reg * np.eye(m.shape[0]), lower=True, check_finite=False)
        except sla.LinAlgError:
            reg = scale * (1e-14 if reg == 0.0 else reg * 100 / scale)
    raise NumericalError("Schur complement matrix is not positive definite")


def _direction(lay, fac, xs, zis, rp, rd, sigma_mu, corr):
    """HKM direction for target ``sigma_mu`` with optional second-order term ``corr``."""
    rhs = rp.copy()
    base = {}
    for name in lay.names:
        x, zi = xs[name], zis[name]
        t = sigma_mu * zi - x - x @ rd[name] @ zi
        if corr is not None:
            t = t - corr[name] @ zi
        base[name] = t
    rhs -= lay.apply({n: _sym(v) for n, v in base.items()})
    dy = sla.cho_solve(fac, rhs, check_finite=False) if lay.m else rhs
    aty = lay.adjoint(dy)
    dxs, dzs = {}, {}
    for name in lay.names:
        dz = rd[name] - aty[name]
        dzs[name] = _sym(dz)
        dxs[name] = _sym(base[name] + xs[name] @ aty[name] @ zis[name])
    return dxs, dy, dzs


def _steps(lay, xs, zs, dxs, dzs, frac):
    ap = min((_max_step(xs[n], dxs[n]) for n in lay.names), default=np.inf)
    ad = min((_max_step(zs[n], dzs[n]) for n in lay.names), default=np.inf)
    return min(1.0, frac * ap), min(1.0, frac * ad)


def _inner(xs, zs):
    return float(sum(np.sum(xs[n] * zs[n]) for n in xs))


def _solve_real(program: ConicProgram, config: SolverConfig, start=None):
    lay = _Layout(program)
    if start is not None:
        xs, y, zs = start
    else:
        xs, y, zs = _initial_point(lay)
    bnorm = 1.0 + float(np.linalg.norm(lay.b))
    cnorm = 1.0 + float(np.sqrt(sum(np.sum(c * c) for c in lay.c.values())))
    history = []
    status = ITERATION_CAP
    it = 0
    best = None
    stall = 0

    def measures(xs, y, zs):
        rp = lay.b - lay.apply(xs)
        aty = lay.adjoint(y)
        rd = {n: lay.c[n] - zs[n] - aty[n] for n in lay.names}
        pobj = float(sum(np.sum(lay.c[n] * xs[n]) for n in lay.names))
        dobj = float(lay.b @ y)
        pres = float(np.linalg.norm(rp)) / bnorm
        dres = float(np.sqrt(sum(np.sum(r * r) for r in rd.values()))) / cnorm
        return rp, rd, pobj, dobj, pres, dres

    while True:
        rp, rd, pobj, dobj, pres, dres = measures(xs, y, zs)
        gap = abs(pobj - dobj)
        mu = _inner(xs, zs) / lay.nsum
        history.append((it, pobj, dobj, pres, dres, mu))
        log.debug("it %3d pobj %.10e dobj %.10e pres %.2e dres %.2e mu %.2e", it, pobj, dobj, pres, dres, mu)
        score = max(gap / config.gap_tol, pres / config.feas_tol, dres / config.feas_tol)
        if best is None or score < best[0]:
            best = (score, it, xs, y, zs, pobj, dobj, pres, dres)
            stall = 0
        else:
            stall += 1
        if gap <= config.gap_tol and pres <= config.feas_tol and dres <= config.feas_tol:
            status = OPTIMAL
            break
        nx = max(float(np.linalg.norm(xs[n])) for n in lay.names)
        nz = max(float(np.linalg.norm(zs[n])) for n in lay.names)
        if nx > 1e10 or nz > 1e10 or abs(dobj) > 1e12 or abs(pobj) > 1e12:
            status = INFEASIBLE
            break
        if it >= config.max_iters or stall > 10:
            break
        it += 1

        zis = {n: _chol_inv(zs[n]) for n in lay.names}
        fac = _factor(_schur(lay, xs, zis))

        # predictor
        dxa, dya, dza = _direction(lay, fac, xs, zis, rp, rd, 0.0, None)
        ap, ad = _steps(lay, xs, zs, dxa, dza, 1.0)
        mu_aff = _inner({n: xs[n] + ap * dxa[n] for n in lay.names},
                        {n: zs[n] + ad * dza[n] for n in lay.names}) / lay.nsum
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        # corrector
        corr = {n: dxa[n] @ dza[n] for n in lay.names}
        dxs, dy, dzs = _direction(lay, fac, xs, zis, rp, rd, sigma * mu, corr)
        ap, ad = _steps(lay, xs, zs, dxs, dzs, config.step_fraction)
        if ap < 1e-12 and ad < 1e-12:
            break
        xs = {n: _sym(xs[n] + ap * dxs[n]) for n in lay.names}
        zs = {n: _sym(zs[n] + ad * dzs[n]) for n in lay.names}
        y = y + ad * dy

    if status != OPTIMAL and best is not None:
        _, _, xs, y, zs, pobj, dobj, pres, dres = best
    return dict(
        status=status, xs=xs, y=y, zs=zs, pobj=pobj, dobj=dobj,
        pres=pres, dres=dres, iterations=it, history=tuple(history),
    )


def solve(program: ConicProgram, config: SolverConfig | None = None, start=None) -> ConicSolution:
    """Solve ``program`` to the tolerances in ``config``.

    Parameters
    ----------
    program : ConicProgram
    config : SolverConfig, optional
    start : tuple, optional
        ``(X blocks, y, Z blocks)`` strictly feasible interior point in the
        program's own (possibly complex) space. Used only if every block is
        positive definite.

    Returns
    -------
    ConicSolution
        Never raises on non-convergence; inspect ``status``.
    """
    config = config or SolverConfig()
    real_prog = embed_complex(program)
    rstart = None
    if start is not None:
        xs0, y0, zs0 = start
        if not program.real:
            xs0 = {k: embed_matrix(v) for k, v in xs0.items()}
            zs0 = {k: 0.5 * embed_matrix(v) for k, v in zs0.items()}
        try:
            for v in list(xs0.values()) + list(zs0.values()):
                np.linalg.cholesky(v)
            rstart = ({k: np.asarray(v, float) for k, v in xs0.items()}, np.asarray(y0, float),
                      {k: np.asarray(v, float) for k, v in zs0.items()})
        except np.linalg.LinAlgError:
            rstart = None
    out = _solve_real(real_prog, config, rstart)
    xs, zs = out["xs"], out["zs"]
    if not program.real:
        # X = unembed(X~); Z~ = (1/2) embed(Z) so Z = 2 unembed(Z~)
        xs = {k: unembed(v) for k, v in xs.items()}
        zs = {k: 2.0 * unembed(v) for k, v in zs.items()}
        xs = {k: 0.5 * (v + v.conj().T) for k, v in xs.items()}
        zs = {k: 0.5 * (v + v.conj().T) for k, v in zs.items()}
    gap = abs(out["pobj"] - out["dobj"])
    return ConicSolution(
        status=out["status"],
        primal_value=out["pobj"],
        dual_value=out["dobj"],
        primal_blocks=xs,
        dual_multipliers=out["y"],
        dual_slacks=zs,
        gap=gap,
        residual=max(out["pres"], out["dres"]),
        primal_residual=out["pres"],
        dual_residual=out["dres"],
        iterations=out["iterations"],
        history=out["history"],
    )
