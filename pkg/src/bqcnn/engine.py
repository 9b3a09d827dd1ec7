"""Execution of branching circuits.

Two views of the same semantics:

* :func:`run_exact` enumerates every pooling outcome, projecting rather than
  sampling, and records each full path's probability and conditional readout.
* :func:`run_trajectory` samples outcomes with collapse, one shot at a time.

:func:`classify_batch` is the training hot path. It evaluates many parameter
sets on many input states at once and never renormalizes: the readout
probability is a sum of squared norms of projected, unnormalized branches. Outcomes routed to the same
child are merged into one projected tensor, since the child never touches the
pooled qubits and their patterns are orthogonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import BranchingCircuit, outcome_bits
from .core import Statevector, apply_tensor, project, qubit_probability
from .gates import controlled_su2, su4

PRUNE_PROB = 1e-14


@dataclass
class TrajectoryRecord:
    branch_path: list
    classification_bit: int
    level_probabilities: list
    readout_probability: float

    @property
    def probability(self) -> float:
        return float(np.prod(self.level_probabilities)) * self.readout_probability


@dataclass
class ClassificationResult:
    p1: float
    per_branch: dict = field(default_factory=dict)  # path tuple -> (path probability, conditional p1)


def _node_tensor(circuit: BranchingCircuit, params, level, node, psi):
    """Apply one node's conv gates and pooling rotations to a register tensor.

    ``params`` is ``(n_params,)`` or ``(K, n_params)``; in the batched case the
    tensor's leading axis is ``K``.
    """
    n = circuit.n_qubits
    st = circuit.stages[level]
    for g, pair in enumerate(st.conv_pairs):
        psi = apply_tensor(psi, su4(params[..., circuit.conv_slot(level, node, g)]), pair, n)
    for r, (m, k) in enumerate(st.pool):
        psi = apply_tensor(psi, controlled_su2(params[..., circuit.pool_slot(level, node, r)]), (m, k), n)
    return psi


def _outcome_mask(stage, outcomes, n_qubits):
    """0/1 mask over the register selecting any of the given pooled-bit patterns."""
    idx = np.arange(2**n_qubits)
    keep = np.zeros(2**n_qubits, dtype=bool)
    for o in outcomes:
        hit = np.ones(2**n_qubits, dtype=bool)
        for j, q in enumerate(stage.pooled):
            hit &= ((idx >> q) & 1) == ((o >> j) & 1)
        keep |= hit
    return keep.reshape((2,) * n_qubits)


def classify_batch(circuit: BranchingCircuit, params, states) -> np.ndarray:
    """Readout probabilities ``p1`` for every parameter set and input state.

    ``params``: ``(n_params,)`` or ``(K, n_params)``.
    ``states``: ``(S, 2**n)`` amplitude rows.
    Returns ``(S,)`` or ``(K, S)`` respectively.
    """
    params = circuit.check_params(params)
    batched = params.ndim == 2
    n = circuit.n_qubits
    states = np.asarray(states, dtype=complex).reshape(-1, *(2,) * n)
    if batched:
        psi = np.broadcast_to(states, (params.shape[0],) + states.shape).copy()
    else:
        psi = states
    masks = _child_masks(circuit)

    def descend(level, node, psi):
        psi = _node_tensor(circuit, params, level, node, psi)
        st = circuit.stages[level]
        if st.is_classification:
            return qubit_probability(psi, circuit.classification_qubit, n)
        b = circuit.branching[level]
        if b == 1:
            return descend(level + 1, node, psi)
        total = 0.0
        for child, mask in enumerate(masks[level]):
            total = total + descend(level + 1, node * b + child, psi * mask)
        return total

    return descend(0, 0, psi)


_MASK_CACHE: dict = {}


def _child_masks(circuit):
    key = (circuit.n_qubits, circuit.branching)
    if key not in _MASK_CACHE:
        masks = []
        for lvl, st in enumerate(circuit.stages[:-1]):
            b = circuit.branching[lvl]
            groups = [[o for o in range(2 ** len(st.pool)) if o % b == c] for c in range(b)]
            masks.append([_outcome_mask(st, g, circuit.n_qubits) for g in groups])
        _MASK_CACHE[key] = masks
    return _MASK_CACHE[key]


def run_exact(circuit: BranchingCircuit, params, state: Statevector) -> ClassificationResult:
    """Depth-first enumeration over all pooling outcomes."""
    params = circuit.check_params(params)
    if params.ndim != 1:
        raise ValueError("run_exact takes a single parameter vector")
    if state.n_qubits != circuit.n_qubits:
        raise ValueError(f"input has {state.n_qubits} qubits, circuit expects {circuit.n_qubits}")
    n = circuit.n_qubits
    per_branch = {}

    def descend(level, node, psi, path, prob):
        psi = _node_tensor(circuit, params, level, node, psi)
        st = circuit.stages[level]
        if st.is_classification:
            p1 = float(qubit_probability(psi, circuit.classification_qubit, n))
            per_branch[tuple(path)] = (prob, p1)
            return
        b = circuit.branching[level]
        for o in range(2 ** len(st.pool)):
            sub = psi
            for j, q in enumerate(st.pooled):
                sub = project(sub, q, (o >> j) & 1)
            p = float(np.vdot(sub, sub).real)
            if p * prob < PRUNE_PROB:
                continue
            descend(level + 1, node * b + circuit.child_index(level, o), sub / np.sqrt(p),
                    path + [outcome_bits(o, len(st.pool))], prob * p)

    descend(0, 0, state.tensor(), [], 1.0)
    p1 = sum(p * c for p, c in per_branch.values())
    return ClassificationResult(float(p1), per_branch)


def classify(circuit: BranchingCircuit, params, state: Statevector) -> float:
    return run_exact(circuit, params, state).p1


def _node_gates(circuit, params, level, node):
    st = circuit.stages[level]
    ops = [(su4(params[circuit.conv_slot(level, node, g)]), pair) for g, pair in enumerate(st.conv_pairs)]
    ops += [(controlled_su2(params[circuit.pool_slot(level, node, r)]), mk) for r, mk in enumerate(st.pool)]
    return ops


def run_trajectory(circuit: BranchingCircuit, params, state: Statevector,
                   rng: np.random.Generator, gate_cache: dict | None = None) -> TrajectoryRecord:
    """One shot: sample each pooling outcome with collapse, follow its child, read out.

    ``gate_cache`` lets repeated shots with the same parameters reuse node gates.
    """
    params = circuit.check_params(params)
    if state.n_qubits != circuit.n_qubits:
        raise ValueError(f"input has {state.n_qubits} qubits, circuit expects {circuit.n_qubits}")
    n = circuit.n_qubits
    node = 0
    path, level_probs = [], []
    psi = state.tensor()
    for level, st in enumerate(circuit.stages):
        key = (level, node)
        ops = gate_cache.get(key) if gate_cache is not None else None
        if ops is None:
            ops = _node_gates(circuit, params, level, node)
            if gate_cache is not None:
                gate_cache[key] = ops
        for matrix, targets in ops:
            psi = apply_tensor(psi, matrix, targets, n)
        if st.is_classification:
            p1 = float(qubit_probability(psi, circuit.classification_qubit, n))
            bit = int(rng.random() < p1)
            return TrajectoryRecord(path, bit, level_probs, p1 if bit else 1.0 - p1)
        outcome, prob = 0, 1.0
        for j, q in enumerate(st.pooled):
            p1 = min(max(float(qubit_probability(psi, q, n)), 0.0), 1.0)
            bit = int(rng.random() < p1)
            p = p1 if bit else 1.0 - p1
            psi = project(psi, q, bit) / np.sqrt(p)
            prob *= p
            outcome |= bit << j
        path.append(outcome_bits(outcome, len(st.pool)))
        level_probs.append(prob)
        node = node * circuit.branching[level] + circuit.child_index(level, outcome)
    raise AssertionError("circuit has no classification stage")


def sample_trajectories(circuit, params, state, shots: int, seed: int) -> list[TrajectoryRecord]:
    """``shots`` independent trajectories, shot ``i`` seeded from ``(seed, i)``."""
    params = circuit.check_params(params)
    cache: dict = {}
    return [run_trajectory(circuit, params, state, np.random.default_rng([seed, i]), cache) for i in range(shots)]


def deferred_state(circuit: BranchingCircuit, params, state: Statevector | None = None) -> np.ndarray:
    """Final register tensor of the measurement-deferred unitary (batched over params)."""
    from .ansatz import defer_measurements

    params = circuit.check_params(params)
    n = circuit.n_qubits
    start = Statevector.zero(n) if state is None else state
    psi = start.tensor()
    if params.ndim == 2:
        psi = np.broadcast_to(psi, (params.shape[0],) + psi.shape).copy()
    return defer_measurements(circuit, params).run(psi, n)

