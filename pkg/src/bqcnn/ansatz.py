"""QCNN / branching-QCNN circuit description.

A circuit is a stack of stages. Stage ``L`` acts on its live qubits with a brick
of nearest-neighbour SU(4) convolutions (even-offset pairs, then odd-offset
pairs), then pools: every odd-position live qubit is measured and controls an
SU(2) rotation on the live qubit just before it. The even-position qubits stay
live. The final stage has two live qubits, a single convolution and no pooling;
qubit 0 is read out.

The branch tree is implicit. Each pooling level ``L`` has a branching factor
``b_L``: a node there has ``b_L`` children and the pooling outcome ``o`` (an
integer whose bit ``j`` is the result on the ``j``-th pooled qubit) selects
child ``o mod b_L``. QCNN is ``b_L = 1`` everywhere; the full bQCNN uses
``b_L = 2**m_L``.

Nodes are numbered level by level: a node's index at level ``L + 1`` is
``parent_index * b_L + child``. Parameter slots follow the same order, all of
level 0 first, then every level-1 node in index order, and so on. Inside a node
the conv gates come first (15 angles each) followed by the pooling rotations
(3 angles each).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .gates import SU2_PARAMS, SU4_PARAMS, GateSequence, controlled_su2, su4

SUPPORTED_WIDTHS = (2, 4, 8, 16)


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Stage:
    level: int
    live: tuple
    conv_pairs: tuple
    pool: tuple  # ((measured, kept), ...)

    @property
    def pooled(self) -> tuple:
        return tuple(m for m, _ in self.pool)

    @property
    def kept(self) -> tuple:
        return self.live[0::2] if self.pool else self.live

    @property
    def is_classification(self) -> bool:
        return not self.pool

    @property
    def n_params(self) -> int:
        return SU4_PARAMS * len(self.conv_pairs) + SU2_PARAMS * len(self.pool)

    def conv_range(self, gate: int) -> tuple[int, int]:
        start = SU4_PARAMS * gate
        return start, start + SU4_PARAMS

    def pool_range(self, rot: int) -> tuple[int, int]:
        start = SU4_PARAMS * len(self.conv_pairs) + SU2_PARAMS * rot
        return start, start + SU2_PARAMS


def _brick_pairs(live: Sequence[int]) -> tuple:
    even = [(live[i], live[i + 1]) for i in range(0, len(live) - 1, 2)]
    odd = [(live[i], live[i + 1]) for i in range(1, len(live) - 1, 2)]
    return tuple(even + odd)


def build_stages(n_qubits: int) -> tuple:
    if n_qubits not in SUPPORTED_WIDTHS:
        raise CircuitError(f"unsupported width {n_qubits}; expected one of {SUPPORTED_WIDTHS}")
    stages = []
    live = tuple(range(n_qubits))
    while True:
        pairs = _brick_pairs(live)
        if len(live) == 2:
            stages.append(Stage(len(stages), live, pairs, ()))
            return tuple(stages)
        pool = tuple((live[i + 1], live[i]) for i in range(0, len(live), 2))
        stages.append(Stage(len(stages), live, pairs, pool))
        live = live[0::2]


def outcome_bits(outcome: int, n_bits: int) -> str:
    """Character ``j`` is the result on the ``j``-th pooled qubit."""
    return "".join(str((outcome >> j) & 1) for j in range(n_bits))


def outcome_from_bits(bits) -> int:
    if isinstance(bits, (int, np.integer)):
        return int(bits)
    return sum(int(c) << j for j, c in enumerate(bits))


class BranchingCircuit:
    """Immutable QCNN/bQCNN tree description.

    ``policy`` is ``"qcnn"``, ``"full"`` or ``"limit"`` (with ``branch_limit``).
    """

    classification_qubit = 0

    def __init__(self, n_qubits: int, policy: str = "full", branch_limit: int | None = None):
        if policy not in ("qcnn", "full", "limit"):
            raise CircuitError(f"unknown branch policy {policy!r}")
        if policy == "limit" and (branch_limit is None or branch_limit < 1):
            raise CircuitError("limit policy needs branch_limit >= 1")
        self.n_qubits = n_qubits
        self.policy = policy
        self.branch_limit = branch_limit if policy == "limit" else None
        self.stages = build_stages(n_qubits)
        branching = []
        for st in self.stages[:-1]:
            n_out = 2 ** len(st.pool)
            if policy == "qcnn":
                branching.append(1)
            elif policy == "full":
                branching.append(n_out)
            else:
                branching.append(min(branch_limit, n_out))
        self.branching = tuple(branching)

    def __repr__(self):
        extra = f", k={self.branch_limit}" if self.branch_limit else ""
        return f"BranchingCircuit(n={self.n_qubits}, {self.policy}{extra}, params={self.n_params})"

    @property
    def n_levels(self) -> int:
        return len(self.stages)

    @property
    def is_qcnn(self) -> bool:
        return all(b == 1 for b in self.branching)

    def nodes_at(self, level: int) -> int:
        return int(np.prod(self.branching[:level], dtype=object)) if level else 1

    @cached_property
    def level_offsets(self) -> tuple:
        offsets = [0]
        for lvl, st in enumerate(self.stages):
            offsets.append(offsets[-1] + self.nodes_at(lvl) * st.n_params)
        return tuple(offsets)

    @property
    def n_params(self) -> int:
        return self.level_offsets[-1]

    def child_index(self, level: int, outcome) -> int:
        return outcome_from_bits(outcome) % self.branching[level]

    def node_offset(self, level: int, node: int) -> int:
        if not 0 <= node < self.nodes_at(level):
            raise CircuitError(f"node {node} does not exist at level {level}")
        return self.level_offsets[level] + node * self.stages[level].n_params

    def conv_slot(self, level: int, node: int, gate: int) -> slice:
        base = self.node_offset(level, node)
        lo, hi = self.stages[level].conv_range(gate)
        return slice(base + lo, base + hi)

    def pool_slot(self, level: int, node: int, rot: int) -> slice:
        base = self.node_offset(level, node)
        lo, hi = self.stages[level].pool_range(rot)
        return slice(base + lo, base + hi)

    def nodes_on_path(self, path: Sequence) -> list[int]:
        """Node index at each level for a sequence of pooling outcomes."""
        if len(path) != self.n_levels - 1:
            raise CircuitError(f"path needs {self.n_levels - 1} outcomes, got {len(path)}")
        nodes = [0]
        for lvl, out in enumerate(path):
            o = outcome_from_bits(out)
            if isinstance(out, str) and len(out) != len(self.stages[lvl].pool):
                raise CircuitError(f"outcome {out!r} has wrong length for level {lvl}")
            if not 0 <= o < 2 ** len(self.stages[lvl].pool):
                raise CircuitError(f"outcome {out!r} invalid at level {lvl}")
            nodes.append(nodes[-1] * self.branching[lvl] + self.child_index(lvl, o))
        return nodes

    def iter_slots(self) -> Iterator[tuple]:
        """Yield ``(level, node, kind, index, slice)`` for every parameter slot."""
        for lvl, st in enumerate(self.stages):
            for node in range(self.nodes_at(lvl)):
                for g in range(len(st.conv_pairs)):
                    yield lvl, node, "conv", g, self.conv_slot(lvl, node, g)
                for r in range(len(st.pool)):
                    yield lvl, node, "pool", r, self.pool_slot(lvl, node, r)

    def stage_breakdown(self) -> list[dict]:
        rows = []
        for lvl, st in enumerate(self.stages):
            nodes = self.nodes_at(lvl)
            rows.append({
                "level": lvl,
                "live": list(st.live),
                "nodes": nodes,
                "conv_gates_per_node": len(st.conv_pairs),
                "pool_rotations_per_node": len(st.pool),
                "params_per_node": st.n_params,
                "params": nodes * st.n_params,
            })
        return rows

    def to_dict(self, max_nodes: int = 100_000) -> dict:
        """JSON description ``{n_qubits, policy, nodes: [...]}``; node ids are list positions."""
        total = sum(self.nodes_at(lvl) for lvl in range(self.n_levels))
        if total > max_nodes:
            raise CircuitError(f"tree has {total} nodes; refusing to serialize more than {max_nodes}")
        nodes, first_id = [], [0]
        for lvl in range(self.n_levels):
            first_id.append(first_id[-1] + self.nodes_at(lvl))
        for lvl, st in enumerate(self.stages):
            for node in range(self.nodes_at(lvl)):
                children = {}
                if not st.is_classification:
                    for o in range(2 ** len(st.pool)):
                        child = node * self.branching[lvl] + self.child_index(lvl, o)
                        children[outcome_bits(o, len(st.pool))] = first_id[lvl + 1] + child
                nodes.append({
                    "id": first_id[lvl] + node,
                    "level": lvl,
                    "conv_pairs": [list(p) for p in st.conv_pairs],
                    "pooled": list(st.pooled),
                    "kept": list(st.kept),
                    "param_offset": self.node_offset(lvl, node),
                    "children": children,
                })
        return {
            "n_qubits": self.n_qubits,
            "policy": self.policy,
            "branch_limit": self.branch_limit,
            "n_params": self.n_params,
            "classification_qubit": self.classification_qubit,
            "nodes": nodes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BranchingCircuit":
        return cls(data["n_qubits"], data["policy"], data.get("branch_limit"))

    def check_params(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.shape[-1] != self.n_params:
            raise CircuitError(f"expected {self.n_params} parameters, got {params.shape[-1]}")
        return params


def build_qcnn(n_qubits: int) -> BranchingCircuit:
    return BranchingCircuit(n_qubits, "qcnn")


def build_bqcnn(n_qubits: int, branch_policy="full") -> BranchingCircuit:
    """``branch_policy`` is ``"full"`` or an integer cap ``k`` on children per node."""
    if branch_policy == "full":
        return BranchingCircuit(n_qubits, "full")
    k = int(branch_policy)
    if k < 1:
        raise CircuitError("branch limit must be >= 1")
    return BranchingCircuit(n_qubits, "limit", k)


def parameter_count(circuit: BranchingCircuit) -> int:
    return circuit.n_params


def broadcast_params(src: BranchingCircuit, src_params, dst: BranchingCircuit) -> np.ndarray:
    """Copy parameters of ``src`` into every branch of ``dst`` (same geometry).

    Child ``j`` of a ``dst`` node takes the parameters of child ``j mod b`` of
    the matching ``src`` node, so a QCNN's single branch fills every bQCNN branch.
    """
    if src.n_qubits != dst.n_qubits:
        raise CircuitError("circuits have different widths")
    src_params = src.check_params(src_params)
    out = np.empty(src_params.shape[:-1] + (dst.n_params,))
    for lvl, st in enumerate(dst.stages):
        for node in range(dst.nodes_at(lvl)):
            # recover child indices, then fold each into the source's branching
            digits, rem = [], node
            for b in reversed(dst.branching[:lvl]):
                digits.append(rem % b)
                rem //= b
            src_node = 0
            for b_src, d in zip(src.branching[:lvl], reversed(digits)):
                src_node = src_node * b_src + d % b_src
            lo = dst.node_offset(lvl, node)
            s_lo = src.node_offset(lvl, src_node)
            out[..., lo:lo + st.n_params] = src_params[..., s_lo:s_lo + st.n_params]
    return out


def _node_ops(circuit, params, level, node, seq: GateSequence, controls=()):
    st = circuit.stages[level]
    for g, pair in enumerate(st.conv_pairs):
        seq.append(su4(params[..., circuit.conv_slot(level, node, g)]), pair, controls,
                   label=f"conv[{level}:{node}:{g}]")
    for r, (m, k) in enumerate(st.pool):
        seq.append(controlled_su2(params[..., circuit.pool_slot(level, node, r)]), (m, k), controls,
                   label=f"pool[{level}:{node}:{r}]")


def forward_branch(circuit: BranchingCircuit, params, path: Sequence) -> GateSequence:
    """Unitary gate list of one branch, pooling realized as controlled SU(2)."""
    params = circuit.check_params(params)
    nodes = circuit.nodes_on_path(path)
    seq = GateSequence()
    for lvl, node in enumerate(nodes):
        _node_ops(circuit, params, lvl, node, seq)
    return seq


def invert_branch(circuit: BranchingCircuit, params, path: Sequence) -> GateSequence:
    return forward_branch(circuit, params, path).inverse()


def defer_measurements(circuit: BranchingCircuit, params) -> GateSequence:
    """Single unitary sequence with branch choices turned into multi-controlled gates.

    Gates of a node reached through outcome pattern ``o`` are controlled on the
    pooled qubits holding ``o``. Levels with one branch add no controls.
    ``params`` may be batched, ``(K, n_params)``.
    """
    params = circuit.check_params(params)
    seq = GateSequence()

    def emit(level, node, controls):
        _node_ops(circuit, params, level, node, seq, controls)
        st = circuit.stages[level]
        if st.is_classification:
            return
        b = circuit.branching[level]
        if b == 1:
            emit(level + 1, node, controls)
            return
        for o in range(2 ** len(st.pool)):
            bits = tuple((m, (o >> j) & 1) for j, m in enumerate(st.pooled))
            emit(level + 1, node * b + circuit.child_index(level, o), controls + bits)

    emit(0, 0, ())
    return seq
