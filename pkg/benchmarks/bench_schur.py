"""Compare the compiled and numpy Schur-complement kernels.

Usage::

    python benchmarks/bench_schur.py [--repeat 3] [--full-solve]

For each test program the Schur matrix of every block is assembled at a
random positive definite iterate with both kernels; the script reports the
best wall time and the largest entrywise disagreement. ``--full-solve`` also
times a complete two-copy punch-card solve under each backend.
"""

import argparse
import time

import numpy as np

from pptcost import _kernels, hierarchy, states
from pptcost.linalg import BipartiteShape
from pptcost.sdp import embed_complex


def _spd(n, rng):
    g = rng.standard_normal((n, n))
    return g @ g.T / n + np.eye(n)


def cases():
    pi0 = states.punch_card_pi0()
    yield "kappa_1 pi0 (9x9, real)", hierarchy.kappa_program(pi0, 1)
    rho = states.random_density(BipartiteShape(3, 3), 9, 0)
    yield "chi_3 random 3x3 (complex)", hierarchy.chi_program(rho, 3)
    rho = states.random_density(BipartiteShape(4, 4), 16, 0)
    yield "chi_1 random 4x4 (complex)", hierarchy.chi_program(rho, 1)
    yield "kappa_1 pi0^2 (81x81, real)", hierarchy.kappa_program(states.tensor_power(pi0, 2), 1)


def bench_program(prog, repeat, rng):
    prog = embed_complex(prog)
    work = []
    for blk in prog.blocks:
        a = prog.constraints.get(blk.name)
        if a is None:
            continue
        pads = _kernels.pad_block(a.astype(float), blk.dim)
        work.append((_spd(blk.dim, rng), np.linalg.inv(_spd(blk.dim, rng)), pads))

    def run(fn):
        best, out = np.inf, None
        for _ in range(repeat):
            t0 = time.perf_counter()
            out = [fn(x, zi, *pads[1:]) for x, zi, pads in work]
            best = min(best, time.perf_counter() - t0)
        return best, out

    t_py, m_py = run(_kernels.schur_block_python)
    if _kernels._schur_compiled is None:
        return prog.num_constraints, t_py, None, None
    t_c, m_c = run(_kernels._schur_compiled)
    err = max(float(np.max(np.abs(a - b))) for a, b in zip(m_py, m_c))
    return prog.num_constraints, t_py, t_c, err


def full_solve(backend):
    saved = _kernels._schur_compiled
    if backend == "python":
        _kernels._schur_compiled = None
    try:
        two = states.tensor_power(states.punch_card_pi0(), 2)
        t0 = time.perf_counter()
        cert = hierarchy.kappa(two, 1)
        return time.perf_counter() - t0, cert.log_value, cert.iterations
    finally:
        _kernels._schur_compiled = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--full-solve", action="store_true")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"compiled kernel available: {_kernels._schur_compiled is not None}")
    print(f"{'program':32s} {'m':>6s} {'numpy [s]':>10s} {'compiled [s]':>13s} {'speedup':>8s} {'max diff':>9s}")
    for name, prog in cases():
        m, t_py, t_c, err = bench_program(prog, args.repeat, rng)
        if t_c is None:
            print(f"{name:32s} {m:6d} {t_py:10.4f} {'-':>13s}")
        else:
            print(f"{name:32s} {m:6d} {t_py:10.4f} {t_c:13.4f} {t_py / t_c:8.1f} {err:9.1e}")
    if args.full_solve:
        for backend in ("compiled", "python"):
            if backend == "compiled" and _kernels._schur_compiled is None:
                continue
            sec, val, its = full_solve(backend)
            print(f"full kappa_1(pi0^2) solve [{backend}]: {sec:.1f} s, {its} iterations, {val:.6f} bits")


if __name__ == "__main__":
    main()
