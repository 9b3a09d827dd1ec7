"""Expressibility: KL divergence of sampled state fidelities from the Haar law.

For ``N`` qubits a Haar-random pair of pure states has fidelity density
``(2**N - 1) (1 - F)**(2**N - 2)``, whose CDF is ``1 - (1 - F)**(2**N - 1)``.
Bin masses are taken from the CDF, so there is no midpoint discretization bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import BranchingCircuit
from .core import apply_tensor
from .engine import deferred_state
from .gates import SU2_PARAMS, SU4_PARAMS, su2, su4

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class TemplateCircuit:
    """Plain layered circuit: ``gates`` is a list of ``("su2", (q,))`` or
    ``("su4", (a, b))`` entries applied in order, each with fresh angles."""

    n_qubits: int
    gates: tuple = ()
    name: str = "template"

    @property
    def n_params(self) -> int:
        return sum(SU2_PARAMS if kind == "su2" else SU4_PARAMS for kind, _ in self.gates)

    def run(self, params, states) -> np.ndarray:
        """Apply the circuit to amplitude rows ``states`` ``(S, 2**n)``.

        ``params`` is ``(P,)`` or ``(K, P)``; returns ``(S, 2**n)`` or ``(K, S, 2**n)``.
        """
        params = np.asarray(params, dtype=float)
        if params.shape[-1] != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {params.shape[-1]}")
        states = np.asarray(states, dtype=complex).reshape(-1, *(2,) * self.n_qubits)
        psi = states
        if params.ndim == 2:
            psi = np.broadcast_to(states, (params.shape[0],) + states.shape).copy()
        pos = 0
        for kind, targets in self.gates:
            width = SU2_PARAMS if kind == "su2" else SU4_PARAMS
            gate = (su2 if kind == "su2" else su4)(params[..., pos:pos + width])
            psi = apply_tensor(psi, gate, targets, self.n_qubits)
            pos += width
        return psi.reshape(psi.shape[: psi.ndim - self.n_qubits] + (-1,))

    def prepare(self, params) -> np.ndarray:
        params = np.atleast_2d(np.asarray(params, dtype=float))
        zero = np.zeros((1, 2**self.n_qubits), dtype=complex)
        zero[0, 0] = 1.0
        return self.run(params, zero)[:, 0]

    def classify(self, params, states) -> np.ndarray:
        """Probability that qubit 0 reads 1 after the circuit."""
        psi = self.run(params, states)
        return (np.abs(psi[..., 1::2]) ** 2).sum(-1)


def empty_circuit(n_qubits: int) -> TemplateCircuit:
    return TemplateCircuit(n_qubits, (), "none")


def prepare_states(circuit, params) -> np.ndarray:
    """Rows ``U(theta)|0...0>`` for a batch of parameter vectors."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if params.shape[-1] != circuit.n_params:
        raise ValueError(f"expected {circuit.n_params} parameters, got {params.shape[-1]}")
    if isinstance(circuit, BranchingCircuit):
        return deferred_state(circuit, params).reshape(params.shape[0], -1)
    return circuit.prepare(params)


def fidelity(circuit, theta, phi) -> float:
    states = prepare_states(circuit, np.stack([np.asarray(theta, float), np.asarray(phi, float)]))
    return float(abs(np.vdot(states[0], states[1])) ** 2)


def haar_cdf(f, n_qubits: int):
    return 1.0 - (1.0 - np.asarray(f, dtype=float)) ** (2**n_qubits - 1)


def haar_bin_mass(lo: float, hi: float, n_qubits: int) -> float:
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"bad bin [{lo}, {hi})")
    return float(haar_cdf(hi, n_qubits) - haar_cdf(lo, n_qubits))


@dataclass
class FidelityHistogram:
    n_bins: int
    counts: np.ndarray
    n_samples: int
    edges: np.ndarray = field(init=False)

    def __post_init__(self):
        self.edges = np.linspace(0.0, 1.0, self.n_bins + 1)
        if int(self.counts.sum()) != self.n_samples:
            raise ValueError("histogram counts do not sum to the sample count")

    @classmethod
    def from_fidelities(cls, fids, n_bins: int) -> "FidelityHistogram":
        fids = np.clip(np.asarray(fids, dtype=float), 0.0, 1.0)
        # F == 1 belongs to the last bin
        idx = np.minimum((fids * n_bins).astype(int), n_bins - 1)
        return cls(n_bins, np.bincount(idx, minlength=n_bins), fids.size)

    def haar_masses(self, n_qubits: int) -> np.ndarray:
        return np.diff(haar_cdf(self.edges, n_qubits))

    def kl_to_haar(self, n_qubits: int) -> float:
        p = self.counts / self.n_samples
        q = self.haar_masses(n_qubits)
        nz = p > 0
        if np.any(q[nz] <= 0):
            # the Haar mass of the top bin underflows for wide registers
            return float("inf")
        return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def sample_pair_params(n_params: int, n_pairs: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform angles on ``[0, 2 pi)``; pair ``i`` draws from its own stream ``(seed, i)``."""
    theta = np.empty((n_pairs, n_params))
    phi = np.empty((n_pairs, n_params))
    for i in range(n_pairs):
        rng = np.random.default_rng([seed, i])
        theta[i] = rng.uniform(0.0, TWO_PI, n_params)
        phi[i] = rng.uniform(0.0, TWO_PI, n_params)
    return theta, phi


def sample_fidelities(circuit, n_pairs: int, seed: int, chunk: int = 256) -> np.ndarray:
    theta, phi = sample_pair_params(circuit.n_params, n_pairs, seed)
    out = np.empty(n_pairs)
    for lo in range(0, n_pairs, chunk):
        hi = min(lo + chunk, n_pairs)
        a = prepare_states(circuit, theta[lo:hi])
        b = prepare_states(circuit, phi[lo:hi])
        out[lo:hi] = np.abs(np.einsum("ki,ki->k", a.conj(), b)) ** 2
    return out


def estimate(circuit, n_pairs: int = 4500, n_bins: int = 500, seed: int = 0) -> tuple[float, FidelityHistogram]:
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    hist = FidelityHistogram.from_fidelities(sample_fidelities(circuit, n_pairs, seed), n_bins)
    return hist.kl_to_haar(circuit.n_qubits), hist
