"""The chi and kappa SDP hierarchies and the certified PPT-cost bracket.

For a bipartite state ``rho`` the level-``p`` chi quantity is

    chi_p(rho) = min Tr S_p
                 s.t. -S_i <= S_{i-1}^G <= S_i,  i = 0..p,   S_{-1} = rho,

and the level-``q`` kappa quantity adds ``S_{q-1}^G >= 0`` to the chain
``i = 0..q-1`` and minimizes ``Tr S_{q-1}``. Here ``^G`` is the partial
transpose on B.  Logarithms of these numbers (in bits) bracket the
zero-error PPT entanglement cost.

Every program is posed in equality form over the multiplier blocks
``V_i, W_i >= 0`` of the chain constraints.  The primal chain ``S_i`` is read
off the dual multipliers of the solve, so one solve yields a lower bound (the
multiplier objective) and an upper bound (the chain objective) at once.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionError, SolverError, ValidationError
from .linalg import BipartiteShape
from .sdp import ConicSolution, ProgramBuilder, SolverConfig, Term, dual_matrix, solve
from .sdp.solver import INFEASIBLE, OPTIMAL
from .states import DensityMatrix

LN2 = math.log(2.0)


# -- certificates --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """Multiplier chain ``V_0..V_k, W_0..W_k`` (plus terminal slacks).

    ``value`` is a certified lower bound on the primal quantity after
    accounting for the equality residuals; ``raw_value`` is the multiplier
    objective itself.
    """

    v: tuple
    w: tuple
    value: float
    raw_value: float
    residual: float
    slacks: dict = field(default_factory=dict)
    solution: ConicSolution | None = field(default=None, repr=False)

    @property
    def log_value(self) -> float:
        return math.log2(self.value) if self.value > 0 else -math.inf


@dataclass(frozen=True, eq=False)
class ChainCertificate:
    """Feasible (up to tolerance) chain ``S_0..S_k`` for a chi or kappa level.

    Attributes
    ----------
    level : int
        ``p`` for chi, ``q`` for kappa.
    chain : tuple of ndarray
    value : float
        Trace of the last chain element.
    lower, upper : float
        Certified bracket on the exact quantity.
    """

    kind: str
    level: int
    chain: tuple
    value: float
    lower: float
    upper: float
    dual: DualCertificate | None = None
    iterations: int = 0

    @property
    def log_value(self) -> float:
        return math.log2(self.value)

    @property
    def log_lower(self) -> float:
        return math.log2(self.lower) if self.lower > 0 else -math.inf

    @property
    def log_upper(self) -> float:
        return math.log2(self.upper)

    def chain_violation(self, rho: DensityMatrix) -> float:
        """Largest eigenvalue deficit across the chain inequalities."""
        return _chain_deficits(rho, self.chain, self.kind == "kappa")[1]


ChiCertificate = ChainCertificate
KappaCertificate = ChainCertificate


@dataclass(frozen=True)
class CostEstimate:
    epsilon: float
    level_used: int
    lower_bits: float
    upper_bits: float
    point_estimate: float
    gap_bound_bits: float
    chi_upper_bits: float
    kappa_upper_bits: float | None
    iterations: int

    @property
    def width(self) -> float:
        return self.upper_bits - self.lower_bits

    def contains(self, bits: float, tol: float = 0.0) -> bool:
        return self.lower_bits - tol <= bits <= self.upper_bits + tol


# -- closed-form quantities ----------------------------------------------------


def log_negativity(rho: DensityMatrix) -> float:
    """``log2 ||rho^G||_1`` in bits."""
    return math.log2(linalg.trace_norm(rho.pt()))


def convergence_gap(d: int, p: int) -> float:
    """Additive distance in bits between level ``p`` of the chi hierarchy and the cost."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if p < 1:
        raise ValueError("p must be >= 1")
    r = (1.0 - 2.0 / d) ** p
    return -math.log1p(-r) / LN2


def required_level(d: int, epsilon: float) -> int:
    """Smallest level whose chi value is guaranteed within ``epsilon`` of the cost."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if d == 2:
        return 1
    level = math.log2(2 * d / epsilon) / (-math.log2(1 - 2 / d))
    return max(1, math.ceil(level))


def continuity_bound(d: int, trace_distance: float) -> float:
    """``log2(1 + 2 d t)``: how far the cost can move between states at trace distance ``t``."""
    if not 0.0 <= trace_distance <= 1.0:
        raise ValueError("trace distance must lie in [0, 1]")
    return math.log2(1.0 + 2.0 * d * trace_distance)


def eps_p(chi_value: float, kappa_value: float) -> float:
    """Relative gap ``1 - chi_p / kappa_p`` between matching levels."""
    return 1.0 - chi_value / kappa_value


def kappa_chi_bound(d: int, chi_p: float, chi_prev: float) -> float:
    """Upper bound ``(d/2) chi_p - (d/2 - 1) chi_{p-1}`` on ``kappa_p``."""
    return 0.5 * d * chi_p - (0.5 * d - 1.0) * chi_prev


# -- program builders ----------------------------------------------------------


def _names(k):
    return [f"V{i}" for i in range(k)], [f"W{i}" for i in range(k)]


def _chain_equations(b, vs, ws, shape, dim):
    """``V_i + W_i - (V_{i+1} - W_{i+1})^G = 0`` for consecutive pairs."""
    for i in range(len(vs) - 1):
        b.add_equation(
            [Term(vs[i]), Term(ws[i]), Term(vs[i + 1], -1.0, shape), Term(ws[i + 1], 1.0, shape)],
            group=f"link{i}",
        )


def _base_builder(rho: DensityMatrix, k: int, kind: str, level: int):
    shape, dim = rho.shape, rho.dim
    b = ProgramBuilder(real=rho.is_real)
    vs, ws = _names(k)
    for v, w in zip(vs, ws):
        b.add_block(v, dim)
        b.add_block(w, dim)
    pt = rho.pt()
    if b.real:
        pt = pt.real
    b.set_objective(vs[0], -pt)
    b.set_objective(ws[0], pt)
    b.meta.update(kind=kind, level=level, rho_pt=pt, shape=shape)
    _chain_equations(b, vs, ws, shape, dim)
    return b, vs, ws


def chi_program(rho: DensityMatrix, p: int):
    """Equality-form program with optimum ``-chi_p(rho)``.

    Blocks ``V_0..V_p, W_0..W_p``; constraints chain consecutive pairs and
    end with ``V_p + W_p = 1``. Multiplier group ``link{i}`` (``i < p``) and
    ``last`` reassemble to ``-S_i``.
    """
    b, vs, ws = _base_builder(rho, p + 1, "chi", p)
    b.add_equation([Term(vs[-1]), Term(ws[-1])], np.eye(rho.dim), group=f"link{p}")
    return b.build()


def chi_dual_program(rho: DensityMatrix, p: int):
    """Reduced multiplier program with one fewer ``(V, W)`` pair (``p >= 1``).

    The last pair must satisfy ``-1 <= (V_{p-1} + W_{p-1})^G <= 1``, imposed
    through slack blocks ``P`` and ``Q``.
    """
    if p < 1:
        raise ValueError("reduced multiplier form needs p >= 1")
    b, vs, ws = _base_builder(rho, p, "chi_dual", p)
    dim, shape = rho.dim, rho.shape
    b.add_block("P", dim)
    b.add_block("Q", dim)
    one = np.eye(dim)
    b.add_equation([Term(vs[-1], 1.0, shape), Term(ws[-1], 1.0, shape), Term("P")], one, group="upper")
    b.add_equation([Term(vs[-1], -1.0, shape), Term(ws[-1], -1.0, shape), Term("Q")], one, group="lower")
    return b.build()


def kappa_program(rho: DensityMatrix, q: int):
    """Optimum ``-kappa_q(rho)``; terminal ``V_{q-1} + W_{q-1} + Z^G = 1``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    b, vs, ws = _base_builder(rho, q, "kappa", q)
    b.add_block("Z", rho.dim)
    b.add_equation([Term(vs[-1]), Term(ws[-1]), Term("Z", 1.0, rho.shape)], np.eye(rho.dim),
                   group=f"link{q - 1}")
    return b.build()


def kappa_dual_program(rho: DensityMatrix, q: int):
    """Optimum ``-kappa_q(rho)``; terminal ``(V_{q-1} + W_{q-1})^G + P = 1``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    b, vs, ws = _base_builder(rho, q, "kappa_dual", q)
    b.add_block("P", rho.dim)
    b.add_equation([Term(vs[-1], 1.0, rho.shape), Term(ws[-1], 1.0, rho.shape), Term("P")],
                   np.eye(rho.dim), group="upper")
    return b.build()


def dmax_program(t, shape: BipartiteShape):
    """Optimum ``-min{Tr L : L >= T, L >= 0, L^G >= 0}``; terminal ``P + Q + R^G = 1``."""
    t = linalg.hermitize(t)
    real = not (np.iscomplexobj(t) and np.any(t.imag))
    if real:
        t = np.real(t)
    b = ProgramBuilder(real=real)
    for name in "PQR":
        b.add_block(name, shape.total)
    b.set_objective("P", -t)
    b.add_equation([Term("P"), Term("Q"), Term("R", 1.0, shape)], np.eye(shape.total), group="link0")
    b.meta.update(kind="dmax", shape=shape)
    return b.build()


# -- interior starting points --------------------------------------------------


def _slater_pairs(k, dim, scale=1.0):
    """``V_i = 2 c_i 1``, ``W_i = c_i 1`` with ``c_i = scale * 3^{-(k-i)}``; ``V_{k-1}+W_{k-1} = scale``."""
    out = {}
    for i in range(k):
        c = scale * 3.0 ** (-(k - i))
        out[f"V{i}"] = 2.0 * c * np.eye(dim)
        out[f"W{i}"] = c * np.eye(dim)
    return out


def _identity_multipliers(program, values: dict):
    """Multiplier vector with group ``g`` set to ``-values[g] * 1``."""
    y = np.zeros(program.num_constraints)
    for g, sl in program.groups:
        if g in values:
            dim = _group_dim(program, sl)
            y[sl.start: sl.start + dim] = -values[g]
    return y


def _group_dim(program, sl) -> int:
    n = sl.stop - sl.start
    dim = int(round(math.sqrt(n))) if not program.real else int(round((math.sqrt(8 * n + 1) - 1) / 2))
    return dim


def _start(program, xs, svals):
    y = _identity_multipliers(program, svals)
    aty = program.adjoint(y)
    zs = {b.name: program.cost(b.name) - aty[b.name] for b in program.blocks}
    return xs, y, zs


def _chi_start(program, p, dim):
    xs = _slater_pairs(p + 1, dim)
    return _start(program, xs, {f"link{i}": 2.0 * (i + 1) for i in range(p + 1)})


def _chi_dual_start(program, p, dim):
    xs = _slater_pairs(p, dim, 0.5)
    xs["P"] = 0.5 * np.eye(dim)
    xs["Q"] = 1.5 * np.eye(dim)
    sv = {f"link{i}": 2.0 * (i + 1) for i in range(p - 1)}
    sv.update(upper=2.0 * p + 1.0, lower=1.0)
    return _start(program, xs, sv)


def _kappa_start(program, q, dim, terminal):
    xs = _slater_pairs(q, dim, 0.5)
    xs[terminal] = 0.5 * np.eye(dim)
    sv = {f"link{i}": 2.0 * (i + 1) for i in range(q)}
    if terminal == "P":
        sv["upper"] = 2.0 * q
    return _start(program, xs, sv)


# -- bounds from a solve -------------------------------------------------------


def _group_residual_norms(program, sol: ConicSolution):
    """Operator norms of the equality residual of every constraint group."""
    r = program.rhs - program.apply(sol.primal_blocks)
    out = {}
    for g, sl in program.groups:
        dim = _group_dim(program, sl)
        mat = dual_matrix(r[sl], dim, program.real)
        out[g] = float(np.max(np.abs(linalg.eigvalsh(mat)))) if dim else 0.0
    return out


def _chain_from_multipliers(program, sol, count):
    y = sol.dual_multipliers
    chain = []
    for i in range(count):
        sl = program.group_slice(f"link{i}")
        dim = _group_dim(program, sl)
        chain.append(-dual_matrix(y[sl], dim, program.real))
    return chain


def _chain_deficits(rho: DensityMatrix, chain, kappa: bool):
    """Per-link eigenvalue deficits of the chain inequalities and the largest one."""
    prev = rho.matrix
    defs = []
    for s in chain:
        pg = linalg.partial_transpose(prev, rho.shape)
        lo = min(linalg.min_eigenvalue(s - pg), linalg.min_eigenvalue(s + pg))
        defs.append(max(0.0, -lo))
        prev = s
    extra = 0.0
    if kappa:
        extra = max(0.0, -linalg.min_eigenvalue(linalg.partial_transpose(chain[-1], rho.shape)))
    worst = max(defs + [extra]) if defs else extra
    return (defs, extra), worst


def _repaired_upper(rho, chain, kappa):
    """Trace bound after shifting the chain by multiples of the identity until feasible."""
    (defs, extra), _ = _chain_deficits(rho, chain, kappa)
    t = 0.0
    for dlt in defs:
        t += dlt
    t = max(t, extra)
    return float(np.trace(chain[-1]).real) + rho.dim * t


def _certified_lower(raw, res_norms):
    total = sum(res_norms.values())
    if raw >= 0:
        return raw / (1.0 + total)
    return raw * (1.0 + total)


def _run(program, config, start, what):
    sol = solve(program, config, start=start)
    if sol.status == INFEASIBLE:
        raise SolverError(f"{what}: solver reported infeasibility on an always-feasible program", sol)
    if sol.status != OPTIMAL:
        raise SolverError(
            f"{what}: no convergence in {sol.iterations} iterations "
            f"(gap {sol.gap:.2e}, residual {sol.residual:.2e})", sol)
    return sol


def _multiplier_cert(program, sol, k, slack_names=()):
    vs = tuple(sol.primal_blocks[f"V{i}"] for i in range(k))
    ws = tuple(sol.primal_blocks[f"W{i}"] for i in range(k))
    raw = -sol.primal_value
    res = _group_residual_norms(program, sol)
    slacks = {n: sol.primal_blocks[n] for n in slack_names}
    return DualCertificate(
        v=vs, w=ws, value=_certified_lower(raw, res), raw_value=raw,
        residual=sum(res.values()), slacks=slacks, solution=sol,
    )


def _config(config):
    return config if config is not None else SolverConfig()


def _check_level(p, minimum, label):
    if int(p) != p or p < minimum:
        raise ValueError(f"{label} must be an integer >= {minimum}")


def _chi0(rho: DensityMatrix) -> ChainCertificate:
    pt = rho.pt()
    w, u = linalg.eig_hermitian(pt)
    s0 = (u * np.abs(w)) @ u.conj().T
    val = float(np.sum(np.abs(w)))
    pos = (u * (w >= 0)) @ u.conj().T
    neg = (u * (w < 0)) @ u.conj().T
    dual = DualCertificate(v=(pos,), w=(neg,), value=val, raw_value=val, residual=0.0)
    return ChainCertificate("chi", 0, (s0,), val, val, val, dual, 0)


# -- evaluators ----------------------------------------------------------------


def chi(rho: DensityMatrix, p: int, config: SolverConfig | None = None) -> ChainCertificate:
    """Level ``p`` of the chi hierarchy with a certified bracket.

    Level 0 is the trace norm of the partial transpose and is evaluated in
    closed form.
    """
    _check_level(p, 0, "p")
    if p == 0:
        return _chi0(rho)
    config = _config(config)
    prog = chi_program(rho, p)
    sol = _run(prog, config, _chi_start(prog, p, rho.dim), f"chi_{p}")
    chain = _chain_from_multipliers(prog, sol, p + 1)
    dual = _multiplier_cert(prog, sol, p + 1)
    value = float(np.trace(chain[-1]).real)
    upper = _repaired_upper(rho, chain, kappa=False)
    return ChainCertificate("chi", p, tuple(chain), value, dual.value, upper, dual, sol.iterations)


def chi_dual(rho: DensityMatrix, p: int, config: SolverConfig | None = None) -> DualCertificate:
    """Lower bound on ``chi_p`` from the reduced multiplier program (``p >= 1``)."""
    _check_level(p, 1, "p")
    config = _config(config)
    prog = chi_dual_program(rho, p)
    sol = _run(prog, config, _chi_dual_start(prog, p, rho.dim), f"chi_{p} multipliers")
    return _multiplier_cert(prog, sol, p, ("P", "Q"))


def kappa(rho: DensityMatrix, q: int, config: SolverConfig | None = None) -> ChainCertificate:
    """Level ``q`` of the kappa hierarchy with a certified bracket."""
    _check_level(q, 1, "q")
    config = _config(config)
    prog = kappa_program(rho, q)
    sol = _run(prog, config, _kappa_start(prog, q, rho.dim, "Z"), f"kappa_{q}")
    chain = _chain_from_multipliers(prog, sol, q)
    dual = _multiplier_cert(prog, sol, q, ("Z",))
    value = float(np.trace(chain[-1]).real)
    upper = _repaired_upper(rho, chain, kappa=True)
    return ChainCertificate("kappa", q, tuple(chain), value, dual.value, upper, dual, sol.iterations)


def kappa_dual(rho: DensityMatrix, q: int, config: SolverConfig | None = None) -> DualCertificate:
    """Lower bound on ``kappa_q`` with terminal condition ``(V + W)^G <= 1``."""
    _check_level(q, 1, "q")
    config = _config(config)
    prog = kappa_dual_program(rho, q)
    sol = _run(prog, config, _kappa_start(prog, q, rho.dim, "P"), f"kappa_{q} multipliers")
    return _multiplier_cert(prog, sol, q, ("P",))


def e_kappa(rho: DensityMatrix, config: SolverConfig | None = None) -> float:
    """``log2 kappa_1(rho)`` in bits."""
    return kappa(rho, 1, config).log_value


def dmax_ppt(t, shape: BipartiteShape, config: SolverConfig | None = None):
    """Smallest trace of a PPT operator dominating ``t``.

    Returns
    -------
    value : float
        ``min Tr L`` over ``L >= t``, ``L >= 0``, ``L^G >= 0``.
    l : ndarray
        The optimal ``L``.
    """
    t = linalg.hermitize(t)
    if t.shape != (shape.total, shape.total):
        raise DimensionError("operator does not match the cut")
    config = _config(config)
    if linalg.min_eigenvalue(t) < -config.feas_tol:
        raise ValidationError("operator must be positive semidefinite")
    prog = dmax_program(t, shape)
    dim = shape.total
    xs = {n: np.eye(dim) / 3.0 for n in "PQR"}
    lmax = max(1.0, float(linalg.eigvalsh(t)[-1]))
    sol = _run(prog, config, _start(prog, xs, {"link0": 2.0 * lmax + 1.0}), "dmax")
    y = sol.dual_multipliers[prog.group_slice("link0")]
    lop = -dual_matrix(y, _group_dim(prog, prog.group_slice("link0")), prog.real)
    value = float(np.trace(lop).real)
    bound = shape.d * float(np.trace(t).real)
    if value > bound + max(1e-6, 10 * config.gap_tol) * max(1.0, bound):
        raise SolverError(f"dmax value {value} exceeds the dimension bound {bound}", sol)
    return value, lop


def ppt_cost(rho: DensityMatrix, epsilon: float, config: SolverConfig | None = None,
             with_kappa: bool | None = None) -> CostEstimate:
    """Bracket the zero-error PPT entanglement cost to within ``epsilon`` bits.

    The level is chosen so that the chi value sits within ``epsilon / 2`` of the
    cost, and the solve tolerance is ``epsilon ln(2) / 2``. The lower end is
    the certified chi lower bound; the upper end is the smaller of the
    chi upper bound plus the convergence gap and, when computed, the kappa
    upper bound at the same level.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    d = rho.shape.d
    if d == 1:
        return CostEstimate(epsilon, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0)
    base = _config(config)
    gap_tol = min(base.gap_tol, epsilon * LN2 / 2) if config is not None else epsilon * LN2 / 2
    cfg = SolverConfig(gap_tol=gap_tol, feas_tol=min(base.feas_tol, gap_tol),
                       max_iters=base.max_iters, step_fraction=base.step_fraction)
    p = required_level(d, epsilon)
    if with_kappa is None:
        with_kappa = rho.dim <= 36
    c = chi(rho, p, cfg)
    g = 0.0 if d == 2 else convergence_gap(d, p)
    lower = max(0.0, c.log_lower)
    chi_up = c.log_upper + g
    upper = chi_up
    kap_up = None
    iters = c.iterations
    if with_kappa:
        k = kappa(rho, p, cfg)
        kap_up = k.log_upper
        upper = min(upper, kap_up)
        iters += k.iterations
    upper = min(upper, math.log2(d))
    upper = max(upper, lower)
    return CostEstimate(
        epsilon=epsilon, level_used=p, lower_bits=lower, upper_bits=upper,
        point_estimate=0.5 * (lower + upper), gap_bound_bits=g,
        chi_upper_bits=chi_up, kappa_upper_bits=kap_up, iterations=iters,
    )


@dataclass(frozen=True)
class SweepRow:
    p: int
    e_chi_bits: float
    e_kappa_bits: float
    eps_p: float
    gap_bound_bits: float
    iters: int
    seconds: float


def sweep_level(rho: DensityMatrix, p: int, config: SolverConfig | None = None) -> SweepRow:
    """Evaluate chi_p and kappa_p for one level of a sweep."""
    t0 = time.perf_counter()
    c = chi(rho, p, config)
    k = kappa(rho, p, config)
    d = rho.shape.d
    g = convergence_gap(d, p) if d >= 2 else 0.0
    return SweepRow(
        p=p, e_chi_bits=c.log_value, e_kappa_bits=k.log_value,
        eps_p=eps_p(c.value, k.value), gap_bound_bits=g,
        iters=c.iterations + k.iterations, seconds=time.perf_counter() - t0,
    )
