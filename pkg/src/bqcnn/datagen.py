"""Perfectly classifiable datasets made by running circuit branches backwards.

Basis state ``|x>`` is pushed through the inverse of the branch whose pooling
outcomes equal ``x``'s own bits on the pooled qubits. Run forward, the
resulting state routes back along that branch deterministically (pooling
rotations never change their controls' Z populations) and ends at ``|x>``, so
qubit 0 reads ``x & 1`` with certainty.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .ansatz import BranchingCircuit, invert_branch, outcome_bits
from .core import Statevector
from .physics import LabeledDataset, LabeledItem


def random_parameters(circuit, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, 2 * np.pi, circuit.n_params)


def param_digest(params) -> str:
    return hashlib.sha256(np.ascontiguousarray(params, dtype="<f8").tobytes()).hexdigest()[:16]


def branch_path_for(circuit: BranchingCircuit, x: int) -> list[str]:
    path = []
    for st in circuit.stages[:-1]:
        o = sum(((x >> q) & 1) << j for j, q in enumerate(st.pooled))
        path.append(outcome_bits(o, len(st.pool)))
    return path


def artificial_dataset(circuit: BranchingCircuit, params, seed: int | None = None) -> LabeledDataset:
    params = circuit.check_params(params)
    n = circuit.n_qubits
    digest = param_digest(params)
    items = []
    for x in range(2**n):
        path = branch_path_for(circuit, x)
        psi = invert_branch(circuit, params, path).run(Statevector.basis(n, x).tensor(), n)
        items.append(LabeledItem(Statevector(n, psi.reshape(-1)), x & 1, {
            "basis_state": x,
            "branch_path": path,
            "seed": seed,
            "param_digest": digest,
        }))
    meta = {
        "kind": "artificial",
        "seed": seed,
        "generator": {
            "n_qubits": n,
            "policy": circuit.policy,
            "branch_limit": circuit.branch_limit,
            "param_digest": digest,
            "params": [float(v) for v in params],
        },
    }
    return LabeledDataset(n, items, meta)


def generate(n_qubits: int = 4, seed: int = 0, policy="full") -> tuple[LabeledDataset, np.ndarray]:
    from .ansatz import build_bqcnn, build_qcnn

    circuit = build_qcnn(n_qubits) if policy == "qcnn" else build_bqcnn(n_qubits, policy)
    params = random_parameters(circuit, seed)
    return artificial_dataset(circuit, params, seed), params
