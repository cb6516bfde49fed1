import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pptcost import cli, states
from pptcost.linalg import BipartiteShape


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, (json.loads(out) if out.strip() else None), err


def test_negativity_of_phi3(capsys):
    code, rep, _ = run_json(capsys, "compute", "--state", "phi:3", "--measure", "negativity")
    assert code == 0
    assert abs(rep["value_bits"] - math.log2(3)) < 1e-12
    assert rep["input"] == {"builtin": "phi:3"}
    assert rep["status"] == "ok"


def test_kappa1_of_pi0(capsys):
    code, rep, _ = run_json(capsys, "compute", "--state", "punchcard:pi0", "--measure", "kappa:1")
    assert code == 0
    assert abs(rep["value_bits"] - 0.5145) < 0.01
    assert rep["residual"] <= 1e-7
    assert rep["lower_bits"] <= rep["value_bits"] <= rep["upper_bits"]


def test_cost_of_product_state(capsys):
    code, rep, _ = run_json(capsys, "compute", "--state", "pure:1", "--measure", "cost:0.01")
    assert code == 0
    assert rep["lower_bits"] <= 0.0 <= rep["upper_bits"]


@pytest.mark.parametrize("measure", ["chi:0", "chi:2", "dmax", "cost:0.05"])
def test_other_measures(capsys, measure):
    code, rep, _ = run_json(capsys, "compute", "--state", "isotropic:0.8", "--measure", measure)
    assert code == 0
    assert all(math.isfinite(v) for v in rep.values() if isinstance(v, float))


def test_text_report(capsys):
    code, out, _ = run(capsys, "compute", "--state", "phi:2", "--measure", "chi:1")
    assert code == 0
    assert "value_bits" in out and "status" in out


def test_json_is_byte_identical(capsys):
    argv = ("compute", "--state", "random:2,3,2,7", "--measure", "chi:1", "--json")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    assert "seconds" not in json.loads(first)


def test_timing_flag_adds_seconds(capsys):
    _, rep, _ = run_json(capsys, "compute", "--state", "phi:2", "--measure", "negativity", "--timing")
    assert rep["seconds"] >= 0


@pytest.mark.parametrize(
    "argv",
    [
        ("compute", "--state", "nosuchstate", "--measure", "negativity"),
        ("compute", "--state", "phi:x", "--measure", "negativity"),
        ("compute", "--state", "phi:2", "--measure", "chi:a"),
        ("compute", "--state", "phi:2", "--measure", "kappa:0"),
        ("compute", "--state", "phi:2", "--measure", "cost:-1"),
        ("compute", "--state", "phi:2", "--measure", "entropy"),
        ("compute", "--state", "phi:2"),
        ("sweep", "--state", "phi:2", "--p-max", "0"),
        ("frobnicate",),
    ],
)
def test_parse_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as info:
        sys.exit(cli.main(list(argv)))
    assert info.value.code == cli.EXIT_PARSE


def test_validation_error_exit_3(capsys):
    code, _, err = run(capsys, "compute", "--state", "pure:0.5,0.6", "--measure", "negativity")
    assert code == cli.EXIT_VALIDATION
    assert "validation" in err


def test_dimension_cap_exit_5(capsys, monkeypatch):
    code, _, _ = run(capsys, "compute", "--state", "phi:9", "--measure", "negativity", "--max-dim", "64")
    assert code == cli.EXIT_DIMCAP
    monkeypatch.setenv("PPTCOST_MAX_DIM", "8")
    code, _, _ = run(capsys, "compute", "--state", "phi:3", "--measure", "negativity")
    assert code == cli.EXIT_DIMCAP
    # the flag wins over the environment
    code, _, _ = run(capsys, "compute", "--state", "phi:3", "--measure", "negativity", "--max-dim", "9")
    assert code == 0


def test_solver_failure_exit_4(capsys):
    code, _, err = run(capsys, "compute", "--state", "punchcard:pi0", "--measure", "chi:2", "--max-iters", "2")
    assert code == cli.EXIT_SOLVER
    assert "solver" in err


def test_gap_tol_precedence(monkeypatch):
    args = cli.build_parser().parse_args(["compute", "--state", "phi:2", "--measure", "negativity"])
    assert cli.solver_config(args).gap_tol == 1e-8
    monkeypatch.setenv("PPTCOST_GAP_TOL", "1e-6")
    assert cli.solver_config(args).gap_tol == 1e-6
    args.gap_tol = 1e-7
    assert cli.solver_config(args).gap_tol == 1e-7
    monkeypatch.setenv("PPTCOST_GAP_TOL", "abc")
    args.gap_tol = None
    with pytest.raises(cli.ParseError):
        cli.solver_config(args)


def test_state_file_roundtrip(capsys, tmp_path):
    rho = states.random_density(BipartiteShape(2, 2), 2, 3)
    f = tmp_path / "s.json"
    states.write_state(rho, f)
    code, rep, _ = run_json(capsys, "compute", "--state", str(f), "--measure", "negativity")
    assert code == 0
    assert rep["input"] == {"file": str(f)}


def test_validate_valid_file(capsys, tmp_path):
    f = tmp_path / "ok.json"
    states.write_state(states.random_density(BipartiteShape(2, 2), 4, 0), f)
    code, rep, _ = run_json(capsys, "validate", str(f))
    assert code == 0
    assert rep["valid"] and rep["zero_binegativity"]
    assert rep["binegativity_defect"] >= -1e-8


def test_validate_trace_09(capsys, tmp_path):
    f = tmp_path / "bad.json"
    doc = {"dim_a": 2, "dim_b": 2, "matrix_real": (0.9 * np.eye(4) / 4).tolist(), "matrix_imag": np.zeros((4, 4)).tolist()}
    f.write_text(json.dumps(doc))
    code, _, _ = run(capsys, "validate", str(f))
    assert code == cli.EXIT_VALIDATION


def test_validate_pi0_flags_binegativity(capsys, tmp_path):
    f = tmp_path / "pi0.json"
    states.write_state(states.punch_card_pi0(), f)
    code, rep, _ = run_json(capsys, "validate", str(f))
    assert code == 0
    assert rep["binegativity_defect"] < 0
    assert rep["note"] == "non-zero bi-negativity"


@pytest.mark.parametrize("content", ["{not json", '{"dim_a": 2}', '{"dim_a": 2, "dim_b": 2, "matrix_real": [[1]]}'])
def test_validate_parse_errors(capsys, tmp_path, content):
    f = tmp_path / "x.json"
    f.write_text(content)
    assert run(capsys, "validate", str(f))[0] == cli.EXIT_PARSE


def test_validate_missing_file(capsys, tmp_path):
    assert run(capsys, "validate", str(tmp_path / "none.json"))[0] == cli.EXIT_PARSE


def test_sweep_phi2_constant(capsys, tmp_path):
    f = tmp_path / "t.csv"
    code, rep, _ = run_json(capsys, "sweep", "--state", "phi:2", "--p-max", "3", "--csv", str(f))
    assert code == 0
    with open(f, newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == cli.CSV_COLUMNS
    assert len(rows) == 4
    for r in rows[1:]:
        rec = dict(zip(rows[0], r))
        assert abs(float(rec["e_chi_bits"]) - 1) < 1e-7
        assert abs(float(rec["e_kappa_bits"]) - 1) < 1e-7
        assert float(rec["gap_bound_bits"]) == 0.0
        assert float(rec["seconds"]) >= 0
    assert all("seconds" not in r for r in rep["rows"])


def test_sweep_monotone_and_gap_ratio(capsys):
    code, rep, _ = run_json(capsys, "sweep", "--state", "random:3,3,2,0", "--p-max", "3")
    assert code == 0
    rows = rep["rows"]
    chi = [r["e_chi_bits"] for r in rows]
    kap = [r["e_kappa_bits"] for r in rows]
    tol = 3e-8
    assert all(b >= a - tol for a, b in zip(chi, chi[1:]))
    assert all(b <= a + tol for a, b in zip(kap, kap[1:]))
    gaps = [r["gap_bound_bits"] for r in rows]
    for p, g in enumerate(gaps, start=1):
        assert abs(g - math.log2(1 / (1 - 3.0 ** -p))) < 1e-15
    # successive ratios increase towards 1/3
    ratios = [b / a for a, b in zip(gaps, gaps[1:])]
    assert all(r < 1 / 3 for r in ratios)
    assert ratios == sorted(ratios)


def test_sweep_jobs_match_serial(capsys):
    _, serial, _ = run_json(capsys, "sweep", "--state", "punchcard:pi0", "--p-max", "2")
    _, parallel, _ = run_json(capsys, "sweep", "--state", "punchcard:pi0", "--p-max", "2", "--jobs", "2")
    assert serial == parallel


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "pptcost.cli", "compute", "--state", "phi:2", "--measure", "negativity", "--json"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert abs(json.loads(proc.stdout)["value_bits"] - 1.0) < 1e-12


@pytest.mark.slow
def test_counterexample_command(capsys):
    code, rep, _ = run_json(capsys, "counterexample")
    assert code == 0
    assert abs(rep["e_kappa_pi0_bits"] - 0.5145) < 0.01
    assert abs(rep["e_kappa_pi0_x2_bits"] - 1.001) < 0.02
    assert rep["margin_bits"] >= 0.01
    assert abs(rep["e_n_pi0_bits"] - math.log2(9 / 7)) < 1e-12
    assert rep["binegativity_defect_pi0"] < 0
