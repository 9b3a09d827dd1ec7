"""Statevector simulation and genetic-algorithm training of branching QCNNs."""

__version__ = "0.1.0"

from .ansatz import BranchingCircuit, build_bqcnn, build_qcnn, parameter_count  # noqa: E402
from .core import PauliString, Statevector  # noqa: E402

__all__ = ["BranchingCircuit", "PauliString", "Statevector", "build_bqcnn", "build_qcnn", "parameter_count"]
