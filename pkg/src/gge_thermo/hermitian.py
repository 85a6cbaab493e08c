"""Hermitian eigendecomposition with a fixed phase convention, plus
degeneracy clustering and basis-change helpers.

Eigenvectors are normalised so that the largest-magnitude component of each
column is real and positive, which makes repeated runs reproducible.  All
routines are pure functions; nothing mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_ATOL = 1e-12
UNITARY_ATOL = 1e-10
DEGENERACY_TOL = 1e-9

__all__ = [
    "HERMITIAN_ATOL",
    "UNITARY_ATOL",
    "DEGENERACY_TOL",
    "EigenSystem",
    "DegeneracyPartition",
    "hermiticity_defect",
    "require_hermitian",
    "require_unitary",
    "eigh",
    "cluster_degenerate",
    "conjugate",
]


def hermiticity_defect(matrix) -> float:
    """Largest entrywise magnitude of M - M†."""
    m = np.asarray(matrix)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def require_hermitian(matrix, atol: float = HERMITIAN_ATOL, name: str = "matrix") -> np.ndarray:
    """Validate Hermiticity within ``atol`` and return the symmetrised copy."""
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    defect = hermiticity_defect(m)
    if defect > atol:
        raise ValueError(
            f"{name} is not Hermitian: max asymmetry {defect:.3e} exceeds tolerance {atol:.1e}"
        )
    return 0.5 * (m + m.conj().T)


def require_unitary(matrix, atol: float = UNITARY_ATOL, name: str = "matrix") -> np.ndarray:
    """Validate U†U = 1 within ``atol`` (max entrywise deviation)."""
    u = np.asarray(matrix, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {u.shape}")
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) if u.size else 0.0
    if defect > atol:
        raise ValueError(
            f"{name} is not unitary: max deviation {defect:.3e} exceeds tolerance {atol:.1e}"
        )
    return u


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and the unitary whose k-th column is the
    eigenvector of the k-th eigenvalue."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def reconstruct(self) -> np.ndarray:
        """A diag(values) A†."""
        return (self.vectors * self.values) @ self.vectors.conj().T


@dataclass(frozen=True)
class DegeneracyPartition:
    """Index groups of near-degenerate eigenvalues and the tolerance used."""

    groups: tuple[tuple[int, ...], ...]
    tol: float

    def labels(self) -> np.ndarray:
        """Group label per index; handy for building block masks."""
        n = sum(len(g) for g in self.groups)
        out = np.empty(n, dtype=int)
        for label, group in enumerate(self.groups):
            for i in group:
                out[i] = label
        return out


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    # Anchor each column on its largest-magnitude entry (first one on ties).
    idx = np.argmax(np.abs(vectors), axis=0)
    anchors = vectors[idx, np.arange(vectors.shape[1])]
    mags = np.abs(anchors)
    safe = np.where(mags > 0.0, mags, 1.0)
    phases = np.where(mags > 0.0, anchors / safe, 1.0)
    return vectors * phases.conj()


def eigh(matrix, atol: float = HERMITIAN_ATOL) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, phases fixed as above.

    Rejects inputs whose asymmetry exceeds ``atol``, reporting the defect.
    """
    h = require_hermitian(matrix, atol=atol)
    values, vectors = np.linalg.eigh(h)
    return EigenSystem(values=values, vectors=_fix_phases(vectors))


def cluster_degenerate(values, tol: float = DEGENERACY_TOL) -> DegeneracyPartition:
    """Group ascending-sorted values; a gap larger than ``tol`` starts a new
    group.  Empty input yields an empty partition."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError("values must be one-dimensional")
    if v.size and np.any(np.diff(v) < 0):
        raise ValueError("values must be sorted in ascending order")
    groups: list[tuple[int, ...]] = []
    start = 0
    for i in range(1, v.size):
        if v[i] - v[i - 1] > tol:
            groups.append(tuple(range(start, i)))
            start = i
    if v.size:
        groups.append(tuple(range(start, v.size)))
    return DegeneracyPartition(groups=tuple(groups), tol=tol)


def conjugate(matrix, unitary, atol: float = UNITARY_ATOL) -> np.ndarray:
    """U M U† for unitary U.  Preserves spectrum, trace and Frobenius norm."""
    m = np.asarray(matrix, dtype=complex)
    u = require_unitary(unitary, atol=atol, name="unitary")
    if m.ndim != 2 or m.shape != u.shape:
        raise ValueError(f"dimension mismatch: matrix {m.shape} vs unitary {u.shape}")
    return u @ m @ u.conj().T
