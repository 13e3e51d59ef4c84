"""Dense state-vector and unitary reference simulation for small chains."""

from __future__ import annotations

import numpy as np

from .circuit import Schedule

MAX_STATE_QUBITS = 12
MAX_UNITARY_QUBITS = 8


class OracleSizeError(ValueError):
    pass


def _apply(psi: np.ndarray, n: int, sites, u: np.ndarray) -> np.ndarray:
    """Apply ``u`` to ``sites`` of a tensor with ``n`` qubit axes first."""
    k = len(sites)
    u = u.reshape((2,) * (2 * k))
    out = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), list(sites)))
    # tensordot puts the gate outputs first; move them back into place
    return np.moveaxis(out, list(range(k)), list(sites))


class DenseOracle:
    """Brute-force reference for schedules on at most a dozen qubits."""

    def __init__(self, n_qubits: int):
        if n_qubits > MAX_STATE_QUBITS:
            raise OracleSizeError(f"dense states are limited to {MAX_STATE_QUBITS} qubits")
        self.n = n_qubits

    def run(self, schedule: Schedule, psi) -> np.ndarray:
        """Evolve a state vector (or a batch, extra trailing axes) through ``schedule``."""
        n = self.n
        if schedule.n_qubits != n:
            raise OracleSizeError("schedule size mismatch")
        psi = np.asarray(psi, dtype=complex)
        extra = psi.shape[1:]
        t = psi.reshape((2,) * n + extra)
        for g in schedule.gates:
            t = _apply(t, n, g.sites, g.matrix())
        return t.reshape((2**n,) + extra)

    def unitary(self, schedule: Schedule) -> np.ndarray:
        if self.n > MAX_UNITARY_QUBITS:
            raise OracleSizeError(f"dense unitaries are limited to {MAX_UNITARY_QUBITS} qubits")
        return self.run(schedule, np.eye(2**self.n, dtype=complex))


def basis_state(bits) -> np.ndarray:
    bits = [int(b) for b in bits]
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)), 2) if bits else 0] = 1.0
    return v


def dft_matrix(n: int) -> np.ndarray:
    """``F[k, j] = exp(2 pi i j k / M) / sqrt(M)`` with ``M = 2**n``."""
    m = 2**n
    idx = np.arange(m)
    return np.exp(2j * np.pi * np.outer(idx, idx) / m) / np.sqrt(m)


def born_probabilities(psi: np.ndarray) -> np.ndarray:
    p = np.abs(psi) ** 2
    return p / p.sum()
