import json

import numpy as np
import pytest

from bqcnn.ansatz import (
    BranchingCircuit,
    CircuitError,
    broadcast_params,
    build_bqcnn,
    build_qcnn,
    defer_measurements,
    forward_branch,
    invert_branch,
    outcome_bits,
    parameter_count,
)
from bqcnn.core import Statevector, qubit_probability
from bqcnn.engine import classify_batch, deferred_state, run_exact

from conftest import random_state


def count_oracle(n, full):
    """Independent count: a line of m live qubits gets m-1 brick SU(4) gates and
    m/2 pooling SU(2) rotations; each pooling level multiplies nodes by 2^(m/2)."""
    total, nodes, m = 0, 1, n
    while m > 2:
        total += nodes * (15 * (m - 1) + 3 * (m // 2))
        if full:
            nodes *= 2 ** (m // 2)
        m //= 2
    return total + nodes * 15


def test_four_qubit_counts():
    assert parameter_count(build_qcnn(4)) == 66
    assert parameter_count(build_bqcnn(4)) == 111


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_counts_match_oracle(n):
    assert build_qcnn(n).n_params == count_oracle(n, False)
    assert build_bqcnn(n).n_params == count_oracle(n, True)


def test_wider_counts():
    assert build_qcnn(2).n_params == build_bqcnn(2).n_params == 15
    assert build_qcnn(8).n_params == 183
    assert build_bqcnn(8).n_params == 1893
    assert build_bqcnn(16).n_params > 50_000


def test_unsupported_width():
    for n in (3, 6, 32):
        with pytest.raises(CircuitError):
            build_qcnn(n)
    with pytest.raises(CircuitError):
        build_bqcnn(4, 0)


def test_limit_one_is_qcnn(rng):
    lim, q = build_bqcnn(8, 1), build_qcnn(8)
    assert lim.n_params == q.n_params
    p = rng.uniform(0, 6, q.n_params)
    states = np.stack([random_state(8, rng) for _ in range(3)])
    np.testing.assert_allclose(classify_batch(lim, p, states), classify_batch(q, p, states), atol=1e-12)


def test_limit_between_qcnn_and_full():
    counts = [build_bqcnn(8, k).n_params for k in (1, 2, 4, 16)]
    assert counts[0] == 183 and counts[-1] == 1893
    assert counts == sorted(counts)


@pytest.mark.parametrize("circuit", [build_qcnn(4), build_bqcnn(4), build_bqcnn(8), build_bqcnn(8, 3)])
def test_slots_are_a_bijection(circuit):
    hits = np.zeros(circuit.n_params, dtype=int)
    for *_, sl in circuit.iter_slots():
        hits[sl] += 1
    assert np.all(hits == 1)


def test_stage_geometry():
    c = build_bqcnn(8)
    st0 = c.stages[0]
    assert st0.pooled == (1, 3, 5, 7) and st0.kept == (0, 2, 4, 6)
    assert st0.conv_pairs[:4] == ((0, 1), (2, 3), (4, 5), (6, 7))
    assert c.stages[1].live == (0, 2, 4, 6) and c.stages[1].pool == ((2, 0), (6, 4))
    assert c.stages[-1].live == (0, 4) and c.stages[-1].conv_pairs == ((0, 4),)
    assert c.stages[-1].is_classification


def test_paths_and_children():
    c = build_bqcnn(4)
    assert c.nodes_on_path(["00"]) == [0, 0]
    assert c.nodes_on_path(["10"]) == [0, 1]
    assert c.nodes_on_path(["01"]) == [0, 2]
    with pytest.raises(CircuitError):
        c.nodes_on_path(["0"])
    with pytest.raises(CircuitError):
        c.nodes_on_path([])


def test_invert_branch_is_inverse(rng):
    c = build_bqcnn(4)
    p = rng.uniform(0, 6, c.n_params)
    for path in (["00"], ["11"], ["01"]):
        u = forward_branch(c, p, path).unitary(4)
        v = invert_branch(c, p, path).unitary(4)
        np.testing.assert_allclose(v @ u, np.eye(16), atol=1e-12)


def test_branch_round_trip_lands_on_basis_state(rng):
    c = build_bqcnn(8)
    p = rng.uniform(0, 6, c.n_params)
    x = 0b10110101
    path = [outcome_bits(sum(((x >> q) & 1) << j for j, q in enumerate(st.pooled)), len(st.pool))
            for st in c.stages[:-1]]
    psi = Statevector.basis(8, x).tensor()
    back = forward_branch(c, p, path).run(invert_branch(c, p, path).run(psi, 8), 8)
    np.testing.assert_allclose(back.reshape(-1), Statevector.basis(8, x).amplitudes, atol=1e-12)


@pytest.mark.parametrize("circuit", [build_bqcnn(4), build_qcnn(4), build_bqcnn(4, 2)])
def test_deferred_matches_exact(circuit, rng):
    params = rng.uniform(0, 2 * np.pi, (100, circuit.n_params))
    state = Statevector(4, random_state(4, rng))
    deferred = qubit_probability(deferred_state(circuit, params, state), 0, 4)
    batch = classify_batch(circuit, params, state.amplitudes[None])[:, 0]
    np.testing.assert_allclose(deferred, batch, atol=1e-10)
    for k in range(0, 100, 25):
        assert run_exact(circuit, params[k], state).p1 == pytest.approx(batch[k], abs=1e-10)


def test_deferred_sequence_is_unitary(rng):
    c = build_bqcnn(4)
    u = defer_measurements(c, rng.uniform(0, 6, c.n_params)).unitary(4)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(16), atol=1e-12)


def test_broadcast_reproduces_qcnn(rng):
    q, b = build_qcnn(8), build_bqcnn(8)
    p = rng.uniform(0, 6, q.n_params)
    pb = broadcast_params(q, p, b)
    states = np.stack([random_state(8, rng) for _ in range(4)])
    np.testing.assert_allclose(classify_batch(b, pb, states), classify_batch(q, p, states), atol=1e-12)


def test_json_description():
    c = build_bqcnn(4)
    doc = json.loads(json.dumps(c.to_dict()))
    assert doc["n_params"] == 111 and doc["policy"] == "full"
    assert len(doc["nodes"]) == 5
    root = doc["nodes"][0]
    assert root["pooled"] == [1, 3] and root["kept"] == [0, 2]
    assert sorted(root["children"]) == ["00", "01", "10", "11"]
    assert sorted(root["children"].values()) == [1, 2, 3, 4]
    assert all(n["children"] == {} for n in doc["nodes"][1:])
    assert [n["param_offset"] for n in doc["nodes"]] == [0, 51, 66, 81, 96]
    again = BranchingCircuit.from_dict(doc)
    assert again.n_params == 111 and again.branching == c.branching


def test_json_refuses_huge_trees():
    with pytest.raises(CircuitError):
        build_bqcnn(16).to_dict(max_nodes=1000)


def test_wrong_parameter_length():
    with pytest.raises(CircuitError):
        build_qcnn(4).check_params(np.zeros(65))
