"""Cluster-model Hamiltonian, string order parameter and the SPT training set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PauliString, Statevector, expectation, ground_state

MAX_SITES = 6
TRANSITION = 0.5


@dataclass(frozen=True)
class CouplingPoint:
    h: float = 0.0
    g: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.h) and np.isfinite(self.g)):
            raise ValueError(f"couplings must be finite: h={self.h}, g={self.g}")


@dataclass
class LabeledItem:
    state: Statevector
    label: int
    provenance: dict


@dataclass
class LabeledDataset:
    n_qubits: int
    items: list
    meta: dict

    def __post_init__(self):
        for it in self.items:
            if it.label not in (0, 1):
                raise ValueError(f"non-binary label {it.label!r}")
            if it.state.n_qubits != self.n_qubits:
                raise ValueError("dataset mixes register widths")

    def __len__(self):
        return len(self.items)

    def states(self) -> np.ndarray:
        return np.stack([it.state.amplitudes for it in self.items])

    def labels(self) -> np.ndarray:
        return np.array([it.label for it in self.items], dtype=float)


def pauli_matrix(n_sites: int, ops: dict) -> np.ndarray:
    return PauliString(tuple(sorted(ops.items()))).matrix(n_sites)


def build_hamiltonian(n_sites: int, point: CouplingPoint) -> np.ndarray:
    """``-sum ZXZ - h sum X - g sum XXX`` with open boundaries.

    Three-site terms run over every window ``(j, j+1, j+2)`` inside the chain.
    """
    if n_sites > MAX_SITES:
        raise ValueError(f"at most {MAX_SITES} sites supported, got {n_sites}")
    if n_sites < 3:
        raise ValueError(f"need at least 3 sites for a ZXZ term, got {n_sites}")
    dim = 2**n_sites
    h = np.zeros((dim, dim), dtype=complex)
    for j in range(n_sites - 2):
        h -= pauli_matrix(n_sites, {j: "Z", j + 1: "X", j + 2: "Z"})
        if point.g:
            h -= point.g * pauli_matrix(n_sites, {j: "X", j + 1: "X", j + 2: "X"})
    if point.h:
        for j in range(n_sites):
            h -= point.h * pauli_matrix(n_sites, {j: "X"})
    return h


def string_order_operator(n_sites: int) -> PauliString:
    """``Z Y X ... X Y Z`` across the chain."""
    if n_sites < 4:
        raise ValueError(f"string order needs at least 4 sites, got {n_sites}")
    ops = [(0, "Z"), (1, "Y")] + [(i, "X") for i in range(2, n_sites - 2)] + [(n_sites - 2, "Y"), (n_sites - 1, "Z")]
    return PauliString(tuple(ops))


def string_order(state: Statevector) -> float:
    return expectation(state, string_order_operator(state.n_qubits))


def cluster_ground_state(n_sites: int, point: CouplingPoint) -> tuple[float, Statevector]:
    return ground_state(build_hamiltonian(n_sites, point), string_order_operator(n_sites))


def phase_label(order_param: float) -> int:
    """0 for the SPT side (order parameter at or above 0.5), 1 for trivial."""
    return 0 if order_param >= TRANSITION else 1


def coupling_grid(n_points: int) -> list[CouplingPoint]:
    """Field branch ``g = 0, h in [0, pi/2)`` then three-site branch ``h = 0, g in [0, pi)``."""
    if n_points < 2:
        raise ValueError("need at least 2 points per branch")
    field = [CouplingPoint(h=k * (np.pi / 2) / n_points, g=0.0) for k in range(n_points)]
    three = [CouplingPoint(h=0.0, g=k * np.pi / n_points) for k in range(n_points)]
    return field + three


def spt_dataset(n_points_per_branch: int = 16, n_sites: int = 4) -> LabeledDataset:
    items = []
    for idx, pt in enumerate(coupling_grid(n_points_per_branch)):
        energy, state = cluster_ground_state(n_sites, pt)
        order = string_order(state)
        items.append(LabeledItem(state, phase_label(order), {
            "index": idx,
            "branch": "field" if idx < n_points_per_branch else "three_site",
            "h": pt.h,
            "g": pt.g,
            "energy": energy,
            "order_param": order,
        }))
    return LabeledDataset(n_sites, items, {"kind": "spt", "n_points_per_branch": n_points_per_branch})
