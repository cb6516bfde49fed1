import numpy as np
import pytest
import scipy.sparse as sp

from pptcost import hierarchy, linalg, states
from pptcost.linalg import BipartiteShape
from pptcost.sdp import (
    ConicProgram,
    ProgramBuilder,
    SolverConfig,
    Term,
    dual_matrix,
    embed_complex,
    group_counts,
    hermitian_basis,
    matrix_equation_count,
    solve,
    standard_form,
    trace_norm_program,
)
from pptcost.sdp.program import Block, embed_matrix, unembed
from pptcost.sdp.solver import INFEASIBLE, ITERATION_CAP, OPTIMAL
from pptcost.sdp.standard_form import chain_from_block

PAULI_Y = np.array([[0, -1j], [1j, 0]])


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(gap_tol=0)
    with pytest.raises(ValueError):
        SolverConfig(step_fraction=1.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iters=0)


def test_hermitian_basis_orthonormal():
    for real in (False, True):
        basis = hermitian_basis(3, real)
        assert len(basis) == (6 if real else 9)
        gram = np.array([[np.trace(a @ b).real for b in basis] for a in basis])
        assert np.allclose(gram, np.eye(len(basis)))
        for e in basis:
            assert np.allclose(e, e.conj().T)


def test_dual_matrix_inverts_coordinates(rng):
    h = linalg.random_hermitian(3, rng)
    y = np.array([np.trace(e @ h).real for e in hermitian_basis(3)])
    assert np.allclose(dual_matrix(y, 3), h)


def test_builder_rejects_bad_input():
    b = ProgramBuilder(real=True)
    b.add_block("X", 2)
    with pytest.raises(ValueError):
        b.add_block("X", 3)
    with pytest.raises(Exception):
        b.set_objective("X", np.eye(3))
    with pytest.raises(ValueError):
        b.set_objective("X", PAULI_Y)
    with pytest.raises(Exception):
        b.add_equation([Term("X", size=2), Term("X", size=1)])
    with pytest.raises(ValueError):
        b.add_equation([Term("X")], kind="bogus")


def test_program_rejects_non_hermitian_objective():
    with pytest.raises(ValueError):
        ConicProgram(blocks=(Block("X", 2),), objective={"X": np.array([[0.0, 1.0], [0.0, 0.0]])},
                     constraints={}, rhs=np.zeros(0))


def test_embed_real_program_duplicates_blocks():
    prog = trace_norm_program(np.diag([1.0, -1.0]))
    assert prog.real
    assert embed_complex(prog) is prog
    cprog = ProgramBuilder(real=False)
    cprog.add_block("X", 2)
    cprog.set_objective("X", np.diag([1.0, 2.0]))
    cprog.add_equation([Term("X")], np.eye(2))
    e = embed_complex(cprog.build())
    c = e.objective["X"]
    assert np.allclose(c, 0.5 * np.diag([1.0, 2.0, 1.0, 2.0]))


def test_embed_one_by_one_block():
    h = np.array([[2.0 + 0j]])
    e = embed_matrix(h)
    assert np.allclose(e, 2 * np.eye(2))
    h = np.array([[1.0, 1j], [-1j, 1.0]])
    w = np.linalg.eigvalsh(embed_matrix(h))
    assert np.allclose(w, np.repeat(np.linalg.eigvalsh(h), 2))
    assert np.allclose(unembed(embed_matrix(h)), h)


def test_pauli_y_trace_norm_via_embedding():
    sol = solve(trace_norm_program(PAULI_Y))
    assert sol.ok
    assert abs(sol.dual_value + 2.0) < 1e-8
    assert abs(sol.primal_value + 2.0) < 1e-8


def test_trace_norm_diag():
    sol = solve(trace_norm_program(np.diag([1.0, -1.0])))
    assert sol.status == OPTIMAL
    assert abs(sol.primal_value + 2) < 1e-8


def test_chi0_program_on_ebit():
    sol = solve(hierarchy.chi_program(states.max_entangled(2), 0))
    assert sol.ok and abs(sol.dual_value + 2) < 1e-8


def test_kappa1_program_on_pi0(pi0):
    sol = solve(hierarchy.kappa_program(pi0, 1))
    assert sol.ok
    assert abs(-sol.dual_value - 2 ** 0.5145) < 1e-2


@pytest.mark.parametrize("seed", range(3))
def test_weak_duality_and_replay(seed, cfg):
    rho = states.random_density(BipartiteShape(2, 3), 2, seed)
    prog = hierarchy.chi_program(rho, 2)
    sol = solve(prog, cfg)
    assert sol.ok
    assert sol.dual_value <= sol.primal_value + cfg.gap_tol
    assert sol.gap <= cfg.gap_tol and sol.residual <= cfg.feas_tol
    r = prog.rhs - prog.apply(sol.primal_blocks)
    assert np.linalg.norm(r) / (1 + np.linalg.norm(prog.rhs)) <= 10 * cfg.feas_tol
    for x in sol.primal_blocks.values():
        assert linalg.min_eigenvalue(x) >= -cfg.feas_tol


def test_solver_is_deterministic(cfg):
    rho = states.random_density(BipartiteShape(2, 2), 3, 9)
    prog = hierarchy.kappa_program(rho, 2)
    a, b = solve(prog, cfg), solve(prog, cfg)
    assert a.history == b.history
    assert np.array_equal(a.dual_multipliers, b.dual_multipliers)
    for k in a.primal_blocks:
        assert np.array_equal(a.primal_blocks[k], b.primal_blocks[k])


def test_iteration_cap_status():
    sol = solve(trace_norm_program(np.diag([1.0, -1.0])), SolverConfig(max_iters=2))
    assert sol.status == ITERATION_CAP
    assert not sol.ok


def test_infeasible_program_detected():
    # X >= 0 with Tr X = -1 has no solution
    b = ProgramBuilder(real=True)
    b.add_block("X", 2)
    b.set_objective("X", np.eye(2))
    prog = b.build()
    prog = ConicProgram(
        blocks=prog.blocks, objective=prog.objective,
        constraints={"X": sp.csr_matrix(np.eye(2).reshape(1, 4))}, rhs=np.array([-1.0]), real=True,
    )
    sol = solve(prog)
    assert sol.status == INFEASIBLE


def test_warm_start_is_used_when_interior():
    prog = trace_norm_program(np.diag([1.0, -1.0]))
    xs = {"V": 0.5 * np.eye(2), "W": 0.5 * np.eye(2)}
    y = np.array([-2.0, -2.0, 0.0])
    aty = prog.adjoint(y)
    zs = {n: prog.cost(n) - aty[n] for n in ("V", "W")}
    sol = solve(prog, start=(xs, y, zs))
    assert sol.ok and sol.history[0][3] < 1e-14


def test_dump_lists_everything():
    text = trace_norm_program(np.diag([1.0, -1.0])).dump()
    lines = text.splitlines()
    assert lines[0].startswith("blocks 2 constraints 3")
    assert any(l.startswith("a ") for l in lines)
    assert any(l.startswith("b ") for l in lines)
    assert any(l.startswith("c V") for l in lines)


def test_standard_form_ebit_p0():
    prog = hierarchy.chi_program(states.max_entangled(2), 0)
    sf = standard_form(prog)
    assert [b.dim for b in sf.blocks] == [8]
    sol = solve(sf)
    assert sol.ok and abs(sol.primal_value - 2) < 1e-7


def test_standard_form_objective_support():
    rho = states.random_density(BipartiteShape(2, 2), 4, 1)
    sf = standard_form(hierarchy.chi_program(rho, 2))
    c = sf.objective["X"]
    d = 4
    assert np.all(c[: 2 * 2 * d, :] == 0) and np.all(c[:, : 2 * 2 * d] == 0)
    assert np.allclose(c[2 * 2 * d:, 2 * 2 * d:], 0.5 * np.eye(2 * d))


def test_standard_form_constraint_counts():
    p, d = 1, 4
    rho = states.random_density(BipartiteShape(2, 2), 4, 1)
    counts = group_counts(standard_form(hierarchy.chi_program(rho, p)))
    assert matrix_equation_count(p, d) == (p + 1) * (p + 3) * d * d == 128
    # symmetry, chain and anchor families match the D^2-per-equation tally exactly
    assert counts["symmetry"] == 2 * (p + 1) * d * d
    assert counts["chain"] == p * d * d
    assert counts["anchor"] == d * d
    # each vanishing 2D x 2D block has 4 D^2 complex entries, counted once per unordered pair
    assert counts["offdiag"] == 4 * p * (p + 1) * d * d
    assert sum(counts.values()) == (p + 1) * (4 * p + 3) * d * d


def test_standard_form_rejects_other_programs():
    with pytest.raises(ValueError):
        standard_form(trace_norm_program(np.eye(2)))


@pytest.mark.parametrize("cut, rank, seed, p", [
    ((2, 2), 2, 0, 1), ((2, 2), 4, 1, 2), ((2, 3), 2, 2, 1), ((3, 3), 2, 3, 1), ((3, 3), 9, 4, 2),
])
def test_standard_form_agrees_with_block_form(cut, rank, seed, p, cfg):
    rho = states.random_density(BipartiteShape(*cut), rank, seed)
    prog = hierarchy.chi_program(rho, p)
    block = solve(prog, cfg)
    sf = solve(standard_form(prog), cfg)
    assert block.ok and sf.ok
    assert abs(sf.primal_value - (-block.dual_value)) <= 2 * cfg.gap_tol
    chain = chain_from_block(sf.primal_blocks["X"], p, rho.dim)
    assert abs(np.trace(chain[-1]).real - sf.primal_value) < 1e-9
