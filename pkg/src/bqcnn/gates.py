"""Parameterized SU(2)/SU(4) gates and their CNOT / Molmer-Sorensen compilations.

All constructors broadcast over leading axes of the angle array, so
``su4(angles)`` with ``angles.shape == (K, 15)`` returns ``(K, 4, 4)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import PAULI, apply_controlled_tensor, check_unitary

SU2_PARAMS = 3
SU4_PARAMS = 15

#: sign ``s`` of the trapped-ion entangler MS = exp(-i s pi XX / 4)
MS_SIGN = 1

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
"""CNOT with the first target as control."""

_XX = np.kron(PAULI["X"], PAULI["X"])
_YY = np.kron(PAULI["Y"], PAULI["Y"])
_ZZ = np.kron(PAULI["Z"], PAULI["Z"])


def rz(theta):
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def ry(theta):
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def rx(theta):
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -1j * s
    out[..., 1, 0] = -1j * s
    out[..., 1, 1] = c
    return out


def su2(angles):
    """``Rz(a) Ry(b) Rz(c)`` for ``angles = (a, b, c)``."""
    angles = np.asarray(angles, dtype=float)
    if angles.shape[-1] != SU2_PARAMS:
        raise ValueError(f"su2 takes 3 angles, got {angles.shape[-1]}")
    return rz(angles[..., 0]) @ ry(angles[..., 1]) @ rz(angles[..., 2])


def kron2(a, b):
    """Batched Kronecker product of 2x2 matrices."""
    return np.einsum("...ij,...kl->...ikjl", a, b).reshape(a.shape[:-2] + (4, 4))


def two_qubit_core(a, b, c):
    """``exp(-i (a XX + b YY + c ZZ) / 2)``; the three terms commute."""
    a, b, c = (np.asarray(x, dtype=float)[..., None, None] for x in (a, b, c))
    eye = np.eye(4)
    fx = np.cos(a / 2) * eye - 1j * np.sin(a / 2) * _XX
    fy = np.cos(b / 2) * eye - 1j * np.sin(b / 2) * _YY
    fz = np.cos(c / 2) * eye - 1j * np.sin(c / 2) * _ZZ
    return fx @ fy @ fz


def su4(angles):
    """15-angle KAK form ``(A1 x A2) core(t13, t14, t15) (A3 x A4)``."""
    angles = np.asarray(angles, dtype=float)
    if angles.shape[-1] != SU4_PARAMS:
        raise ValueError(f"su4 takes 15 angles, got {angles.shape[-1]}")
    outer = kron2(su2(angles[..., 0:3]), su2(angles[..., 3:6]))
    inner = kron2(su2(angles[..., 6:9]), su2(angles[..., 9:12]))
    core = two_qubit_core(angles[..., 12], angles[..., 13], angles[..., 14])
    return outer @ core @ inner


def controlled_su2(angles):
    """Block-diagonal ``diag(I, su2(angles))``; the first target is the control."""
    u = su2(angles)
    out = np.zeros(u.shape[:-2] + (4, 4), dtype=complex)
    out[..., 0, 0] = out[..., 1, 1] = 1.0
    out[..., 2:, 2:] = u
    return out


def ms_gate(sign: int = MS_SIGN):
    return np.cos(np.pi / 4) * np.eye(4) - 1j * sign * np.sin(np.pi / 4) * _XX


# ---------------------------------------------------------------------------
# Gate sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GateOp:
    """One gate: ``matrix`` on ``targets``, active only where every
    ``(qubit, bit)`` in ``controls`` matches. ``matrix`` may carry a leading
    batch axis (one gate per parameter set)."""

    matrix: np.ndarray
    targets: tuple
    controls: tuple = ()
    label: str = ""

    def __post_init__(self):
        arity = 1 if self.matrix.shape[-1] == 2 else 2
        if len(self.targets) != arity:
            raise ValueError(f"{self.label or 'gate'}: arity {arity} but targets {self.targets}")

    @property
    def arity(self) -> int:
        return len(self.targets)

    def dagger(self) -> "GateOp":
        return GateOp(np.swapaxes(self.matrix.conj(), -1, -2), self.targets, self.controls, self.label + "^dag")


@dataclass
class GateSequence:
    ops: list = field(default_factory=list)
    basis_tag: str = "abstract"

    def __iter__(self):
        return iter(self.ops)

    def __len__(self):
        return len(self.ops)

    def append(self, matrix, targets, controls=(), label=""):
        self.ops.append(GateOp(np.asarray(matrix, dtype=complex), tuple(targets), tuple(controls), label))

    def two_qubit_count(self) -> int:
        return sum(op.arity == 2 for op in self.ops)

    def inverse(self) -> "GateSequence":
        return GateSequence([op.dagger() for op in reversed(self.ops)], self.basis_tag)

    def run(self, psi: np.ndarray, n_qubits: int) -> np.ndarray:
        """Apply every op to a register tensor (see :mod:`bqcnn.core`)."""
        for op in self.ops:
            psi = apply_controlled_tensor(psi, op.matrix, op.targets, op.controls, n_qubits)
        return psi

    def unitary(self, n_qubits: int) -> np.ndarray:
        dim = 2**n_qubits
        cols = np.eye(dim, dtype=complex).reshape((dim,) + (2,) * n_qubits)
        out = self.run(cols, n_qubits).reshape(dim, dim)
        return out.T

    def local_matrix(self, targets: Sequence[int]) -> np.ndarray:
        """Product matrix in the gate convention: ``targets[0]`` is the most
        significant local bit. ``targets`` must cover every qubit touched."""
        k = len(targets)
        relabel = {q: k - 1 - j for j, q in enumerate(targets)}
        moved = GateSequence(
            [
                GateOp(op.matrix, tuple(relabel[t] for t in op.targets),
                       tuple((relabel[q], b) for q, b in op.controls), op.label)
                for op in self.ops
            ],
            self.basis_tag,
        )
        return moved.unitary(k)


def phase_aligned_distance(u: np.ndarray, ref: np.ndarray) -> float:
    """Max entry deviation after removing the global phase of ``u`` relative to ``ref``.

    The phase is read off the entry where ``ref`` has the largest modulus.
    """
    idx = np.unravel_index(np.argmax(np.abs(ref)), ref.shape)
    ratio = u[idx] / ref[idx]
    if abs(ratio) < 1e-12:
        return float(np.abs(u - ref).max())
    ratio /= abs(ratio)
    return float(np.abs(u / ratio - ref).max())


def _local_layer(seq: GateSequence, angles_a, angles_b, q0, q1):
    for angles, q in ((angles_a, q0), (angles_b, q1)):
        seq.append(rz(angles[2]), [q], label="rz")
        seq.append(ry(angles[1]), [q], label="ry")
        seq.append(rz(angles[0]), [q], label="rz")


def compile_cnot(angles: Sequence[float], targets=(0, 1)) -> GateSequence:
    """Three-CNOT circuit equal to ``su4(angles)`` up to global phase."""
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (SU4_PARAMS,):
        raise ValueError(f"compile_cnot takes 15 angles, got shape {angles.shape}")
    q0, q1 = targets
    a, b, c = angles[12:15]
    h = np.pi / 2
    seq = GateSequence(basis_tag="cnot")
    _local_layer(seq, angles[6:9], angles[9:12], q0, q1)
    seq.append(rz(h), [q1], label="rz")
    seq.append(CNOT, [q1, q0], label="cnot")
    seq.append(rz(c + h), [q0], label="rz")
    seq.append(ry(a + h), [q1], label="ry")
    seq.append(CNOT, [q0, q1], label="cnot")
    seq.append(ry(-b - h), [q1], label="ry")
    seq.append(CNOT, [q1, q0], label="cnot")
    seq.append(rz(-h), [q0], label="rz")
    _local_layer(seq, angles[0:3], angles[3:6], q0, q1)
    return seq


def compile_ms(angles: Sequence[float], targets=(0, 1), sign: int = MS_SIGN) -> GateSequence:
    """Rewrite each CNOT of :func:`compile_cnot` as
    ``Ry(pi/2)_c MS Rx(-s pi/2)_c Rx(s pi/2)_t Ry(-pi/2)_c``."""
    if sign not in (1, -1):
        raise ValueError("MS sign must be +1 or -1")
    h = np.pi / 2
    ms = ms_gate(sign)
    seq = GateSequence(basis_tag="ms")
    for op in compile_cnot(angles, targets):
        if op.label != "cnot":
            seq.ops.append(op)
            continue
        ctl, tgt = op.targets
        seq.append(ry(-h), [ctl], label="ry")
        seq.append(rx(-sign * h), [ctl], label="rx")
        seq.append(rx(sign * h), [tgt], label="rx")
        seq.append(ms, [ctl, tgt], label="ms")
        seq.append(ry(h), [ctl], label="ry")
    return seq


def gate_matrix(matrix) -> np.ndarray:
    """Validate a 1- or 2-qubit gate matrix."""
    return check_unitary(matrix)
