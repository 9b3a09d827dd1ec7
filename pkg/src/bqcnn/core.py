"""Statevector substrate: gate application, measurement, Pauli expectations and
dense Hermitian ground states.

Qubit 0 is the least significant bit of a basis-state label, so ``|10>`` written
as a 2-qubit ket means qubit 1 set and qubit 0 clear (integer 2).

Internally a register of ``n`` qubits is an ndarray whose last ``n`` axes each
have length 2, with qubit ``q`` living on axis ``ndim - 1 - q``. Any leading axes
are batch axes; this lets one call evolve many states, or many parameter sets,
at once. A 2-qubit gate on targets ``[a, b]`` acts on the local index
``2 * bit(a) + bit(b)``, i.e. its matrix is ``kron(on_a, on_b)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class QuantumStateError(ValueError):
    """Raised for malformed states, gates or qubit indices."""


@dataclass(frozen=True, eq=False)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.n_qubits:
            raise QuantumStateError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, got {amps.size}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise QuantumStateError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "Statevector":
        if not 0 <= index < 2**n_qubits:
            raise QuantumStateError(f"basis index {index} out of range for {n_qubits} qubits")
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_array(cls, amplitudes, normalize: bool = False) -> "Statevector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size)))
        if 2**n != amps.size:
            raise QuantumStateError(f"length {amps.size} is not a power of two")
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def inner(self, other: "Statevector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "Statevector") -> float:
        return abs(self.inner(other)) ** 2

    def __len__(self):
        return self.amplitudes.size


@dataclass(frozen=True)
class PauliString:
    """Pauli product given as ``((site, "X"|"Y"|"Z"), ...)`` with identity elsewhere."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((int(s), str(p).upper()) for s, p in self.terms)
        sites = [s for s, _ in terms]
        if any(b <= a for a, b in zip(sites, sites[1:])):
            raise QuantumStateError(f"Pauli sites must be strictly increasing: {sites}")
        if any(s < 0 for s in sites):
            raise QuantumStateError("negative Pauli site")
        if any(p not in "XYZ" or len(p) != 1 for _, p in terms):
            raise QuantumStateError(f"unknown Pauli operator in {terms}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """Parse ``"Z0 Y1 Y2 Z3"``."""
        terms = [(int(tok[1:]), tok[0]) for tok in text.split()]
        return cls(tuple(sorted(terms)))

    def max_site(self) -> int:
        return self.terms[-1][0] if self.terms else -1

    def matrix(self, n_qubits: int) -> np.ndarray:
        _check_sites(self, n_qubits)
        ops = dict(self.terms)
        out = np.ones((1, 1), dtype=complex)
        # kron order: most significant qubit first
        for q in reversed(range(n_qubits)):
            out = np.kron(out, PAULI[ops.get(q, "I")])
        return out

    def __str__(self):
        return " ".join(f"{p}{s}" for s, p in self.terms) or "I"


def _check_sites(op: PauliString, n_qubits: int) -> None:
    if op.max_site() >= n_qubits:
        raise QuantumStateError(f"Pauli site {op.max_site()} out of range for {n_qubits} qubits")


def check_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    d = m.shape[-1]
    if m.shape[-2:] != (d, d) or d not in (2, 4):
        raise QuantumStateError(f"gate must be 2x2 or 4x4, got shape {m.shape}")
    err = np.abs(np.swapaxes(m.conj(), -1, -2) @ m - np.eye(d)).max()
    if err > tol:
        raise QuantumStateError(f"gate is not unitary (max |U^dag U - I| = {err:.3g})")
    return m


def _validate_targets(targets: Sequence[int], n_qubits: int, arity: int | None = None) -> tuple:
    targets = tuple(int(t) for t in targets)
    if arity is not None and len(targets) != arity:
        raise QuantumStateError(f"gate of arity {arity} given {len(targets)} targets")
    if len(set(targets)) != len(targets):
        raise QuantumStateError(f"duplicate target qubits {targets}")
    for t in targets:
        if not 0 <= t < n_qubits:
            raise QuantumStateError(f"qubit {t} out of range for {n_qubits} qubits")
    return targets


def apply_tensor(psi: np.ndarray, matrix: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """Apply ``matrix`` on ``targets`` of a batched register tensor.

    ``matrix`` is either ``(d, d)`` shared by every batch element, or
    ``(K, d, d)`` with ``K`` equal to the leading axis of ``psi``.
    """
    k = len(targets)
    nd = psi.ndim
    axes = [nd - 1 - t for t in targets]
    dest = list(range(nd - k, nd))
    moved = np.moveaxis(psi, axes, dest)
    shape = moved.shape
    if matrix.ndim == 2:
        flat = moved.reshape(-1, 2**k)
        out = flat @ matrix.T
    else:
        flat = moved.reshape(shape[0], -1, 2**k)
        out = flat @ np.swapaxes(matrix, -1, -2)
    return np.moveaxis(out.reshape(shape), dest, axes)


def apply_controlled_tensor(psi, matrix, targets, controls, n_qubits):
    """Like :func:`apply_tensor`, restricted to the subspace where each
    ``(qubit, bit)`` in ``controls`` holds. Returns a new array."""
    if not controls:
        return apply_tensor(psi, matrix, targets, n_qubits)
    out = psi.copy()
    nd = psi.ndim
    index = [slice(None)] * nd
    for q, bit in controls:
        index[nd - 1 - q] = int(bit)
    index = tuple(index)
    sub = out[index]
    # remaining qubits keep their relative order; renumber targets to the sub-register
    ctl = sorted(q for q, _ in controls)
    remap = {q: q - sum(c < q for c in ctl) for q in range(n_qubits) if q not in ctl}
    out[index] = apply_tensor(sub, matrix, [remap[t] for t in targets], n_qubits - len(ctl))
    return out


def apply(state: Statevector, gate: np.ndarray, targets: Sequence[int]) -> Statevector:
    gate = check_unitary(gate)
    arity = 1 if gate.shape[-1] == 2 else 2
    targets = _validate_targets(targets, state.n_qubits, arity)
    psi = apply_tensor(state.tensor(), gate, targets, state.n_qubits)
    return Statevector(state.n_qubits, psi.reshape(-1))


def qubit_probability(psi: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Probability that ``qubit`` reads 1, per batch element (unnormalized input allowed)."""
    axis = psi.ndim - 1 - qubit
    ones = np.take(psi, 1, axis=axis)
    return (np.abs(ones) ** 2).reshape(ones.shape[: psi.ndim - n_qubits] + (-1,)).sum(-1)


def project(psi: np.ndarray, qubit: int, bit: int) -> np.ndarray:
    """Zero every amplitude where ``qubit`` differs from ``bit`` (no renormalization)."""
    out = psi.copy()
    index = [slice(None)] * psi.ndim
    index[psi.ndim - 1 - qubit] = 1 - bit
    out[tuple(index)] = 0
    return out


def measure(state: Statevector, qubit: int, rng: np.random.Generator) -> tuple[int, Statevector]:
    """Projective Z measurement with collapse."""
    _validate_targets([qubit], state.n_qubits)
    psi = state.tensor()
    p1 = float(qubit_probability(psi, qubit, state.n_qubits))
    p0 = float(np.vdot(psi, psi).real) - p1
    if p0 < 1e-12 and p1 < 1e-12:
        raise QuantumStateError("both measurement outcomes have vanishing probability")
    bit = int(rng.random() < p1)
    p = p1 if bit else p0
    post = project(psi, qubit, bit) / np.sqrt(p)
    return bit, Statevector(state.n_qubits, post.reshape(-1))


def expectation(state: Statevector, op: PauliString) -> float:
    _check_sites(op, state.n_qubits)
    psi = state.tensor()
    phi = psi
    for site, name in op.terms:
        phi = apply_tensor(phi, PAULI[name], [site], state.n_qubits)
    value = np.vdot(psi, phi)
    if abs(value.imag) > 1e-10:
        raise QuantumStateError(f"expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


# ---------------------------------------------------------------------------
# Dense Hermitian eigensolver
# ---------------------------------------------------------------------------


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalization of a Hermitian matrix.

    Each rotation first removes the phase of the pivot ``a[p, q]`` with a
    diagonal unitary, then zeroes it with a real Givens rotation. Returns
    ascending eigenvalues and the matching eigenvectors as columns.
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.abs(a).max(), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(np.triu(a, 1)) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300 or r < 1e-18 * scale:
                    continue
                phase = apq / r
                # D = diag(.., conj(phase) at q, ..): makes a[p, q] real positive
                a[q, :] *= phase
                a[:, q] *= phase.conjugate()
                v[:, q] *= phase.conjugate()
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise np.linalg.LinAlgError("Jacobi iteration did not converge")
    evals = np.real(np.diag(a))
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]


def fix_global_phase(vec: np.ndarray, cutoff: float = 1e-8) -> np.ndarray:
    """Rotate so the first amplitude with modulus above ``cutoff`` is real positive."""
    idx = np.flatnonzero(np.abs(vec) > cutoff)
    if idx.size == 0:
        return vec
    lead = vec[idx[0]]
    out = vec * (abs(lead) / lead)
    out[idx[0]] = abs(lead)
    return out


def ground_state(hamiltonian: np.ndarray, degeneracy_resolver: PauliString | None = None,
                 degeneracy_tol: float = 1e-9) -> tuple[float, Statevector]:
    """Lowest eigenpair of a Hermitian matrix.

    When the ground space is degenerate (within ``degeneracy_tol`` times the
    spectral range) the returned vector is the one maximizing the resolver's
    expectation inside that space.
    """
    h = np.asarray(hamiltonian, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise QuantumStateError(f"Hamiltonian must be square, got {h.shape}")
    if h.shape[0] > 64:
        raise QuantumStateError("dense ground-state solver limited to dimension 64")
    if np.abs(h - h.conj().T).max() > 1e-10:
        raise QuantumStateError("Hamiltonian is not Hermitian")
    evals, evecs = jacobi_eigh(h)
    spread = evals[-1] - evals[0]
    ground = np.flatnonzero(evals - evals[0] <= degeneracy_tol * spread)
    energy = float(evals[0])
    if ground.size == 1 or degeneracy_resolver is None:
        vec = evecs[:, 0]
    else:
        sub = evecs[:, ground]
        n = int(round(np.log2(h.shape[0])))
        o = degeneracy_resolver.matrix(n)
        restricted = sub.conj().T @ o @ sub
        restricted = (restricted + restricted.conj().T) / 2
        _, coeffs = jacobi_eigh(restricted)
        vec = sub @ coeffs[:, -1]
    vec = fix_global_phase(vec / np.linalg.norm(vec))
    return energy, Statevector.from_array(vec)


def statevectors_from_rows(rows: Iterable) -> list[Statevector]:
    return [Statevector.from_array(r) for r in rows]
