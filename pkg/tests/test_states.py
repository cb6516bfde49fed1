import json
import math
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pptcost import linalg, states
from pptcost.errors import DimensionCapError, DimensionError, ValidationError
from pptcost.hierarchy import log_negativity
from pptcost.linalg import BipartiteShape
from pptcost.states import DensityMatrix, PunchCardSpec

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def schmidt_vectors(max_len=4):
    return st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=max_len).filter(
        lambda v: sum(v) > 1e-3).map(lambda v: list(np.asarray(v) / sum(v)))


def test_density_validation():
    s = BipartiteShape(2, 2)
    with pytest.raises(ValidationError):
        DensityMatrix(0.9 * np.eye(4) / 4, s)
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([0.6, 0.6, -0.2, 0.0]), s)
    with pytest.raises(DimensionError):
        DensityMatrix(np.eye(3) / 3, s)
    rho = DensityMatrix(np.eye(4) / 4, s)
    assert not rho.matrix.flags.writeable


def test_pure_from_schmidt_examples():
    prod = states.pure_from_schmidt([1.0])
    assert prod.dim == 1 and log_negativity(prod) == 0.0
    prod = states.pure_from_schmidt([1.0, 0.0])
    assert abs(log_negativity(prod)) < 1e-12
    phi = states.pure_from_schmidt([0.5, 0.5])
    assert np.isclose(linalg.trace_norm(phi.pt()), 2.0)
    psi = states.pure_from_schmidt([0.9, 0.1])
    assert abs(linalg.trace_norm(psi.pt()) - (math.sqrt(0.9) + math.sqrt(0.1)) ** 2) < 1e-12
    assert np.isclose((math.sqrt(0.9) + math.sqrt(0.1)) ** 2, 1.6)


def test_pure_from_schmidt_rejects_bad_vectors():
    with pytest.raises(ValidationError):
        states.pure_from_schmidt([0.5, 0.6])
    with pytest.raises(ValidationError):
        states.pure_from_schmidt([1.2, -0.2])
    with pytest.raises(ValidationError):
        states.pure_from_schmidt([0.5, 0.3, 0.2], BipartiteShape(2, 4))


@given(schmidt_vectors())
def test_pure_state_trace_norm_closed_form(lam):
    psi = states.pure_from_schmidt(lam)
    expect = np.sum(np.sqrt(lam)) ** 2
    assert abs(linalg.trace_norm(psi.pt()) - expect) < 1e-9
    assert states.binegativity_defect(psi) >= -1e-8


def test_max_entangled():
    one = states.max_entangled(1)
    assert one.dim == 1 and log_negativity(one) == 0.0
    phi2 = states.max_entangled(2)
    v = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(phi2.matrix, np.outer(v, v))
    assert abs(log_negativity(states.max_entangled(3)) - math.log2(3)) < 1e-12


def test_isotropic_negativity():
    rho = states.isotropic(2 / 3)
    # eigenvalues of the partial transpose: 5/12 (x3) and -1/4
    assert abs(log_negativity(rho) - math.log2(1.5)) < 1e-12


def test_punch_card_pi0_normalization(pi0):
    assert pi0.shape == BipartiteShape(3, 3)
    m = pi0.matrix
    # 3 diagonal A entries + 4 surviving off-diagonal weights
    assert np.isclose(m[0, 0], 1 / 7)
    assert np.isclose(m[0, 4], 1 / 7)
    assert m[1, 1] == 0.0 and m[3, 3] == 0.0
    assert np.isclose(m[2, 2], 1 / 7) and np.isclose(m[5, 5], 1 / 7)


def test_punch_card_classical_case():
    rho = states.punch_card(PunchCardSpec(np.eye(3), np.ones((3, 3))))
    assert np.allclose(rho.matrix, np.diag([1, 0, 0, 0, 1, 0, 0, 0, 1]) / 3)
    assert linalg.is_psd(rho.pt())


@pytest.mark.parametrize(
    "a, q",
    [
        (np.ones((2, 2)), np.array([[1, 2], [2, 1]])),
        (np.ones((2, 2)), np.array([[1, 1], [0, 1]])),
        (np.ones((2, 2)), np.array([[0, 1], [1, 1]])),
        (np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones((2, 2))),
        (np.ones((2, 2)), np.ones((3, 3))),
    ],
)
def test_punch_card_spec_validation(a, q):
    with pytest.raises((ValidationError, DimensionError)):
        PunchCardSpec(a, q)


@given(seeds)
def test_punch_card_pt_block_spectrum(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q = np.triu(rng.integers(0, 2, (d, d)), 1)
    q = q + q.T + np.eye(d, dtype=int)
    spec = PunchCardSpec(g @ g.conj().T, q)
    rho = states.punch_card(spec)
    blocks = states.punch_card_pt_blocks(spec)
    from_blocks = np.sort(np.concatenate([np.linalg.eigvalsh(b) for b in blocks]))
    full = linalg.eigvalsh(rho.pt())
    # the permutation also leaves d^2 - d - d(d-1) = 0 extra zeros; sizes match
    assert from_blocks.size == full.size
    assert np.allclose(from_blocks, full, atol=1e-9)


def test_binegativity_examples(pi0):
    assert states.binegativity_defect(pi0) < 0
    psi = states.random_density(BipartiteShape(3, 3), 1, 0)
    assert states.binegativity_defect(psi) >= -1e-8


@given(seeds)
def test_two_qubit_states_have_zero_binegativity(seed):
    rank = seed % 4 + 1
    rho = states.random_density(BipartiteShape(2, 2), rank, seed)
    assert states.binegativity_defect(rho) >= -1e-8


def test_tensor_power(pi0):
    assert states.tensor_power(pi0, 1) is pi0
    two = states.tensor_power(pi0, 2)
    assert two.shape == BipartiteShape(9, 9)
    assert np.isclose(np.trace(two.matrix), 1.0)
    with pytest.raises(DimensionCapError):
        states.tensor_power(pi0, 3)
    with pytest.raises(DimensionCapError):
        states.tensor_power(pi0, 2, max_dim=80)


def test_tensor_power_respects_env_cap(pi0, monkeypatch):
    monkeypatch.setenv("PPTCOST_MAX_DIM", "50")
    with pytest.raises(DimensionCapError):
        states.tensor_power(pi0, 2)


@given(seeds)
def test_negativity_additive_on_two_copies(seed):
    rho = states.random_density(BipartiteShape(2, 2), 2, seed)
    two = states.tensor_power(rho, 2)
    assert abs(log_negativity(two) - 2 * log_negativity(rho)) < 1e-9


def test_random_density_determinism():
    s = BipartiteShape(2, 3)
    a = states.random_density(s, 6, 11)
    b = states.random_density(s, 6, 11)
    assert np.array_equal(a.matrix, b.matrix)
    assert linalg.min_eigenvalue(a.matrix) > 0
    pure = states.random_density(s, 1, 2)
    assert np.sum(linalg.eigvalsh(pure.matrix) > 1e-10) == 1
    with pytest.raises(ValueError):
        states.random_density(s, 7, 0)


def test_state_file_roundtrip(tmp_path):
    rho = states.random_density(BipartiteShape(2, 3), 3, 5)
    path = tmp_path / "s.json"
    states.write_state(rho, path)
    back = states.read_state(path)
    assert back.shape == rho.shape
    assert np.array_equal(back.matrix, rho.matrix)
    doc = json.loads(path.read_text())
    assert set(doc) == {"dim_a", "dim_b", "matrix_real", "matrix_imag"}
    # every float carries at least 17 significant digits
    mantissas = re.findall(r"(-?\d\.\d+)e[+-]\d+", path.read_text())
    assert mantissas and all(len(m.lstrip("-").replace(".", "")) >= 17 for m in mantissas)


def test_state_file_rejects_mismatch_and_bad_trace(tmp_path):
    rho = states.max_entangled(2)
    text = states.dumps_state(rho)
    doc = json.loads(text)
    doc["dim_b"] = 3
    with pytest.raises(DimensionError):
        states.loads_state(json.dumps(doc))
    doc = json.loads(text)
    doc["matrix_real"] = (0.9 * np.asarray(doc["matrix_real"])).tolist()
    with pytest.raises(ValidationError):
        states.loads_state(json.dumps(doc))
    with pytest.raises(ValueError):
        states.loads_state('{"dim_a": 2}')
