"""Spin-chain Hamiltonians assembled from Pauli strings.

All builders return dense Hermitian matrices on 2**n dimensions with qubit 1
as the most significant bit. Periodic models wrap indices modulo n.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import linalg

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """A scaled product of single-qubit Paulis on an n-qubit register.

    letters maps 1-based qubit indices to 'X', 'Y' or 'Z'; omitted qubits
    carry the identity.
    """

    n: int
    letters: tuple[tuple[int, str], ...]
    coeff: float = 1.0

    def __init__(self, n: int, letters: Mapping[int, str], coeff: float = 1.0):
        if n < 1:
            raise ValueError("need at least one qubit")
        items = tuple(sorted(letters.items()))
        for q, p in items:
            if not 1 <= q <= n:
                raise ValueError(f"qubit index {q} outside 1..{n}")
            if p not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli letter {p!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "letters", items)
        object.__setattr__(self, "coeff", float(coeff))


def pauli_matrix(ps: PauliString) -> np.ndarray:
    """Dense matrix of a Pauli string."""
    lookup = dict(ps.letters)
    factors = [PAULI[lookup.get(q, "I")] for q in range(1, ps.n + 1)]
    return ps.coeff * linalg.kron(factors)


def pauli_sum(strings: Sequence[PauliString]) -> np.ndarray:
    """Dense sum of Pauli strings sharing one register size."""
    if not strings:
        raise ValueError("empty Pauli sum")
    n = strings[0].n
    if any(ps.n != n for ps in strings):
        raise ValueError("all strings must act on the same register")
    out = np.zeros((2**n, 2**n), dtype=complex)
    for ps in strings:
        out += pauli_matrix(ps)
    return out


def ising(n: int, h: float) -> np.ndarray:
    """Transverse-field Ising ring: sum_i Z_i Z_{i+1} + h sum_i X_i.

    Periodic boundary; for n=2 both bond terms hit the same pair, so the
    coupling there is effectively doubled.
    """
    if n < 2:
        raise ValueError("need at least two qubits")
    terms = []
    for i in range(1, n + 1):
        j = i % n + 1
        terms.append(PauliString(n, {i: "Z", j: "Z"}))
        terms.append(PauliString(n, {i: "X"}, coeff=h))
    return pauli_sum(terms)


def schwinger(
    n: int, mu: float, w: float = 1.0, g: float = 1.0, eps0: float = 0.0
) -> np.ndarray:
    """Lattice gauge chain with open hopping terms and a staggered mass.

    H = w sum_{j<n} (X_j X_{j+1} + Y_j Y_{j+1})
        + (mu/2) sum_j (-1)^j Z_j
        + g sum_j (eps0 - (1/2) sum_{l<=j} (Z_l + (-1)^j I)).

    The field term is implemented exactly as written above, including the
    staggered identity shift inside the nested sum; the shift only moves the
    spectrum's offset. With this convention the third term reduces to a
    linearly varying longitudinal field, so the ground family changes smoothly
    across mu without a sharp critical feature.
    """
    if n < 2 or n % 2:
        raise ValueError("chain length must be even and at least 2")
    d = 2**n
    out = np.zeros((d, d), dtype=complex)
    for j in range(1, n):
        out += w * pauli_matrix(PauliString(n, {j: "X", j + 1: "X"}))
        out += w * pauli_matrix(PauliString(n, {j: "Y", j + 1: "Y"}))
    for j in range(1, n + 1):
        out += (mu / 2.0) * (-1) ** j * pauli_matrix(PauliString(n, {j: "Z"}))
    eye = np.eye(d, dtype=complex)
    for j in range(1, n + 1):
        field = eps0 * eye
        for l in range(1, j + 1):
            field -= 0.5 * (pauli_matrix(PauliString(n, {l: "Z"})) + (-1) ** j * eye)
        out += g * field
    return out


def cluster(n: int, x: float, eps: float = 1e-2) -> np.ndarray:
    """Interpolated cluster ring with a small symmetry-breaking field.

    H(x) = -cos(pi x / 2) sum_i Z_i X_{i+1} Z_{i+2}
           - sin(pi x / 2) sum_i X_i - eps sum_i Z_i,
    indices periodic. At x=1 (and eps=0) the ground state is |+>^n; at x=0
    the three-body stabilizer terms dominate.
    """
    if n < 3:
        raise ValueError("need at least three qubits")
    cx = np.cos(np.pi * x / 2.0)
    sx = np.sin(np.pi * x / 2.0)
    terms = []
    for i in range(1, n + 1):
        j = i % n + 1
        k = j % n + 1
        terms.append(PauliString(n, {i: "Z", j: "X", k: "Z"}, coeff=-cx))
        terms.append(PauliString(n, {i: "X"}, coeff=-sx))
        terms.append(PauliString(n, {i: "Z"}, coeff=-eps))
    return pauli_sum(terms)
