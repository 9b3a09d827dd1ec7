"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also repeated in the terminal summary.
"""

from collections import Counter

import numpy as np
import pytest

from bqcnn.ansatz import broadcast_params, build_bqcnn, build_qcnn
from bqcnn.core import PauliString, Statevector, expectation
from bqcnn.datagen import generate
from bqcnn.engine import classify_batch, run_exact, sample_trajectories
from bqcnn.expressibility import estimate, haar_bin_mass
from bqcnn.gates import compile_cnot, compile_ms, phase_aligned_distance, su4
from bqcnn.optimizer import GAConfig, mae_cost, train
from bqcnn.physics import CouplingPoint, cluster_ground_state, spt_dataset, string_order

from conftest import random_state

KL_TARGET = {"bqcnn": 0.0072, "qcnn": 0.0163}
ARTIFICIAL_QCNN_TARGET = 0.838
SPT_TARGET = {"bqcnn": 0.743, "qcnn": 0.706}


def test_criterion_1_parameter_counts(acceptance_report):
    q, b = build_qcnn(4).n_params, build_bqcnn(4, "full").n_params
    ok = (q, b) == (66, 111)
    acceptance_report(1, "parameter counts", ok, f"qcnn={q} (66), bqcnn={b} (111)")
    assert ok


def test_criterion_2_expressibility_ordering(acceptance_report):
    kls = {"bqcnn": [], "qcnn": []}
    for seed in range(5):
        for name, circuit in (("bqcnn", build_bqcnn(8)), ("qcnn", build_qcnn(8))):
            kls[name].append(estimate(circuit, n_pairs=4500, n_bins=500, seed=seed)[0])
    ordered = all(b < q for b, q in zip(kls["bqcnn"], kls["qcnn"]))
    pooled = {k: float(np.mean(v)) for k, v in kls.items()}
    banded = all(KL_TARGET[k] / 2 <= pooled[k] <= 2 * KL_TARGET[k] for k in pooled)
    detail = (f"bqcnn KL {np.round(kls['bqcnn'], 4).tolist()} pooled {pooled['bqcnn']:.4f}; "
              f"qcnn KL {np.round(kls['qcnn'], 4).tolist()} pooled {pooled['qcnn']:.4f}")
    acceptance_report(2, "expressibility ordering", ordered and banded, detail)
    assert ordered and banded


def _final_correctness(circuit, ds, seed):
    _, hist = train(circuit, ds, GAConfig(generations=500, seed=seed))
    return hist.final_correctness


def test_criterion_3_artificial_training(acceptance_report):
    finals = {"bqcnn": [], "qcnn": []}
    for seed in (0, 1, 2):
        ds, _ = generate(4, seed)
        finals["bqcnn"].append(_final_correctness(build_bqcnn(4), ds, seed))
        finals["qcnn"].append(_final_correctness(build_qcnn(4), ds, seed))
    b, q = float(np.mean(finals["bqcnn"])), float(np.mean(finals["qcnn"]))
    ok = b >= q + 0.03 and b >= 0.85 and abs(q - ARTIFICIAL_QCNN_TARGET) <= 0.05
    acceptance_report(3, "artificial training", ok,
                      f"bqcnn {b:.4f} {np.round(finals['bqcnn'], 4).tolist()}, "
                      f"qcnn {q:.4f} {np.round(finals['qcnn'], 4).tolist()}, gap {b - q:+.4f}")
    assert ok


def test_criterion_4_spt_training(acceptance_report):
    ds = spt_dataset(16)
    b = _final_correctness(build_bqcnn(4), ds, 0)
    q = _final_correctness(build_qcnn(4), ds, 0)
    ok = b >= q and abs(b - SPT_TARGET["bqcnn"]) <= 0.05 and abs(q - SPT_TARGET["qcnn"]) <= 0.05
    acceptance_report(4, "SPT training", ok, f"bqcnn {b:.4f} (0.743), qcnn {q:.4f} (0.706)")
    assert ok


def test_criterion_5_perfect_classifiability(acceptance_report):
    worst_cost, worst_gram = 0.0, 0.0
    circuit = build_bqcnn(4)
    for seed in range(25):
        ds, params = generate(4, seed)
        worst_cost = max(worst_cost, float(mae_cost(circuit, params, ds)))
        s = ds.states()
        worst_gram = max(worst_gram, float(np.abs(s.conj() @ s.T - np.eye(len(ds))).max()))
    ok = worst_cost <= 1e-9 and worst_gram <= 1e-8
    acceptance_report(5, "perfect classifiability", ok,
                      f"max |1 - correctness| {worst_cost:.2e}, max Gram deviation {worst_gram:.2e}")
    assert ok


def _tv(records, result):
    counts = Counter((tuple(r.branch_path), r.classification_bit) for r in records)
    exact = {}
    for path, (prob, c1) in result.per_branch.items():
        exact[(path, 1)], exact[(path, 0)] = prob * c1, prob * (1 - c1)
    keys = set(counts) | set(exact)
    return 0.5 * sum(abs(counts.get(k, 0) / len(records) - exact.get(k, 0.0)) for k in keys)


def test_criterion_6_equivalences(acceptance_report):
    rng = np.random.default_rng(6)
    # (a) all branches equal reproduces the QCNN
    q, b = build_qcnn(4), build_bqcnn(4)
    worst_a = 0.0
    for _ in range(100):
        p = rng.uniform(0, 2 * np.pi, q.n_params)
        s = random_state(4, rng)[None]
        worst_a = max(worst_a, abs(float(classify_batch(b, broadcast_params(q, p, b), s)[0])
                                   - float(classify_batch(q, p, s)[0])))
    # (b) sampled trajectories against exact enumeration
    worst_b = 0.0
    for k, circuit in enumerate((b, q)):
        p = rng.uniform(0, 2 * np.pi, circuit.n_params)
        s = Statevector(4, random_state(4, rng))
        worst_b = max(worst_b, _tv(sample_trajectories(circuit, p, s, 10_000, seed=k), run_exact(circuit, p, s)))
    # (c) compiled two-qubit circuits
    worst_c = 0.0
    for _ in range(1000):
        t = rng.uniform(0, 2 * np.pi, 15)
        ref = su4(t)
        worst_c = max(worst_c,
                      phase_aligned_distance(compile_cnot(t).local_matrix((0, 1)), ref),
                      phase_aligned_distance(compile_ms(t).local_matrix((0, 1)), ref))
    ok = worst_a <= 1e-9 and worst_b <= 0.03 and worst_c <= 1e-9
    acceptance_report(6, "equivalence oracles", ok,
                      f"(a) {worst_a:.2e}  (b) TV {worst_b:.4f}  (c) {worst_c:.2e}")
    assert ok


def test_criterion_7_physics_fixtures(acceptance_report):
    e0, cluster = cluster_ground_state(4, CouplingPoint())
    zyyz = expectation(cluster, PauliString.parse("Z0 Y1 Y2 Z3"))
    _, trivial = cluster_ground_state(4, CouplingPoint(h=10.0))
    order_h10 = string_order(trivial)
    rng = np.random.default_rng(7)
    worst_sum = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 12))
        edges = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, int(rng.integers(1, 600)))), [1.0]])
        edges = np.unique(edges)
        total = sum(haar_bin_mass(lo, hi, n) for lo, hi in zip(edges[:-1], edges[1:]))
        worst_sum = max(worst_sum, abs(total - 1.0))
    ok = abs(zyyz - 1) <= 1e-9 and abs(e0 + 2) <= 1e-10 and order_h10 < 1e-2 and worst_sum <= 1e-12
    acceptance_report(7, "physics fixtures", ok,
                      f"<ZYYZ>={zyyz:.12f}, E0={e0:.12f}, O(h=10)={order_h10:.2e}, Haar sum dev {worst_sum:.1e}")
    assert ok
