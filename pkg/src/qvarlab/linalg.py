"""Dense linear algebra helpers shared by the rest of the package.

Conventions used everywhere: states live in 2**n dimensional complex spaces,
qubit 1 is the most significant bit of the basis index, eigenvalues come back
sorted ascending, and eigenvector phases are fixed so the first component of
magnitude above 1e-10 is real and positive.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

HERMITICITY_TOL = 1e-12
PHASE_TOL = 1e-10
LYAPUNOV_MIN_EIG = 1e-12


@dataclass(frozen=True)
class EigenSystem:
    """Eigendecomposition of a Hermitian matrix.

    values are real and ascending; column k of vectors pairs with values[k].
    """

    values: np.ndarray
    vectors: np.ndarray


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermiticity_defect(a) -> float:
    """Max-norm distance from A to its own adjoint."""
    a = as_matrix(a)
    return float(np.abs(a - a.conj().T).max())


def require_hermitian(a, tol: float = HERMITICITY_TOL) -> np.ndarray:
    a = as_matrix(a)
    defect = hermiticity_defect(a)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    return a


def hermitianize(a) -> np.ndarray:
    """Symmetrized (A + A^dag)/2."""
    a = as_matrix(a)
    return 0.5 * (a + a.conj().T)


def kron(*ops) -> np.ndarray:
    """Kronecker product of the operands, left factor most significant."""
    if len(ops) == 1 and isinstance(ops[0], (list, tuple)):
        ops = tuple(ops[0])
    if not ops:
        raise ValueError("kron needs at least one operand")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def _check_qubit_dim(a: np.ndarray, n: int) -> None:
    if a.shape[0] != 2**n:
        raise ValueError(f"matrix dimension {a.shape[0]} does not match n={n} qubits")


def partial_trace(a, n: int, discard: Iterable[int]) -> np.ndarray:
    """Trace out the 1-based qubits listed in discard from an n-qubit operator.

    Remaining qubits keep their relative order.
    """
    a = as_matrix(a)
    _check_qubit_dim(a, n)
    discard = sorted(set(discard))
    if any(q < 1 or q > n for q in discard):
        raise ValueError(f"discard indices must lie in 1..{n}, got {discard}")
    if len(discard) == n:
        return np.array([[np.trace(a)]], dtype=complex)

    tensor = a.reshape([2] * (2 * n))
    # pair bra axis q-1 with ket axis n+q-1 for every discarded qubit
    for offset, q in enumerate(discard):
        ax = q - 1 - offset
        nq = n - offset
        tensor = np.trace(tensor, axis1=ax, axis2=nq + ax)
    keep = n - len(discard)
    return tensor.reshape(2**keep, 2**keep)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first component above PHASE_TOL is real positive."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = np.flatnonzero(np.abs(col) > PHASE_TOL)
        if idx.size == 0:
            continue
        pivot = col[idx[0]]
        out[:, k] = col * (pivot.conj() / abs(pivot))
    return out


def herm_eig(a, tol: float = HERMITICITY_TOL) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix with deterministic phases.

    The input is checked against tol, symmetrized, and handed to the dense
    Hermitian eigensolver. Phases follow the module convention; for degenerate
    spectra the basis within an eigenspace is whatever the solver returns.
    """
    a = require_hermitian(a, tol)
    values, vectors = np.linalg.eigh(hermitianize(a))
    return EigenSystem(values=values, vectors=_fix_phases(vectors))


def herm_fn(a, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    f receives the eigenvalue array and may return complex values (so gate
    exponentials work). Non-finite results mean f is undefined somewhere on
    the spectrum and raise.
    """
    es = herm_eig(a)
    with np.errstate(invalid="ignore", divide="ignore"):
        fvals = np.asarray(f(es.values))
    if fvals.shape != es.values.shape:
        raise ValueError("f must map the eigenvalue array elementwise")
    if not np.all(np.isfinite(fvals)):
        bad = es.values[~np.isfinite(fvals)]
        raise ValueError(f"function undefined at eigenvalue(s) {bad}")
    return (es.vectors * fvals) @ es.vectors.conj().T


def solve_lyapunov(a, b) -> np.ndarray:
    """Solve A X + X A = B for Hermitian A, B with A strictly positive.

    Solved in the eigenbasis of A: X_ij = B_ij / (a_i + a_j). A minimum
    eigenvalue at or below 1e-12 makes the problem singular and raises.
    """
    a = require_hermitian(a)
    b = require_hermitian(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    es = herm_eig(a)
    if es.values.min() <= LYAPUNOV_MIN_EIG:
        raise ValueError(
            f"A must be strictly positive (min eigenvalue {es.values.min():.3e})"
        )
    v = es.vectors
    btil = v.conj().T @ b @ v
    denom = es.values[:, None] + es.values[None, :]
    x = v @ (btil / denom) @ v.conj().T
    return hermitianize(x)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR of a complex Gaussian matrix."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
