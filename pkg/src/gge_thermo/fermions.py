"""Quadratic fermion Hamiltonians and Gaussian states via correlation
matrices.

Conventions
-----------
A particle-number conserving Hamiltonian is specified by a Hermitian
coefficient matrix ``c``::

    H = sum_ij c[i, j] a_i^dag a_j,        c = A diag(eps) A^dag

The columns of ``A`` are the normal modes, with single-particle energies
``eps`` sorted ascending.  States enter only through the correlation matrix

    gamma[i, j] = <a_i^dag a_j>

whose mode-basis form is ``gamma_eta = A.T @ gamma @ A.conj()``; its real
diagonal holds the mode populations ``p_k``.  The mean energy is
``sum_ij c[i, j] * gamma[i, j]`` and, for a Gaussian state, the entropy is
the sum of binary entropies of the eigenvalues of ``gamma``.

Equilibration maps
------------------
``Exact(t)``
    Unitary evolution for a hold time ``t``; spectrum preserving.
``TimeAverageGGE``
    Dephasing in the instantaneous mode basis.  For quadratic Hamiltonians
    the infinite-time averaged correlation matrix and the maximum-entropy
    state preserving all mode populations coincide, so one tag covers both.
``Gibbs``
    Fermi-Dirac state at the inverse temperature fixed by conserving the
    mean energy.

Initial states need not be Gaussian: every map consumes and produces only
correlation matrices, so any state with the same second moments gives the
same work accounting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, xlogy

from .hermitian import HERMITIAN_ATOL, eigh, require_hermitian

__all__ = [
    "QuadraticHamiltonian",
    "Exact",
    "TimeAverageGGE",
    "Gibbs",
    "GGE",
    "GIBBS",
    "as_hamiltonian",
    "build_chain",
    "to_mode_basis",
    "from_mode_basis",
    "mode_populations",
    "gibbs_correlation",
    "attainable_energy_range",
    "solve_beta",
    "evolve_exact",
    "dephase_gge",
    "equilibrate",
    "energy",
    "entropy_gaussian",
    "work_of_quench",
]


class QuadraticHamiltonian:
    """Particle-number conserving quadratic Hamiltonian.

    The eigendecomposition of the coefficient matrix is computed once at
    construction and reused by every map that needs the normal modes.
    """

    __slots__ = ("c", "eig")

    def __init__(self, coefficients, atol: float = HERMITIAN_ATOL):
        self.c = require_hermitian(coefficients, atol=atol, name="coefficient matrix")
        self.eig = eigh(self.c, atol=atol)

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def energies(self) -> np.ndarray:
        """Single-particle energies, ascending."""
        return self.eig.values

    @property
    def modes(self) -> np.ndarray:
        """Unitary of normal modes (columns), matching :attr:`energies`."""
        return self.eig.vectors

    def __repr__(self) -> str:  # pragma: no cover
        return f"QuadraticHamiltonian(n={self.n})"


def as_hamiltonian(obj, atol: float = HERMITIAN_ATOL) -> QuadraticHamiltonian:
    """Pass through a QuadraticHamiltonian or wrap a coefficient matrix."""
    if isinstance(obj, QuadraticHamiltonian):
        return obj
    return QuadraticHamiltonian(obj, atol=atol)


@dataclass(frozen=True)
class Exact:
    """Unitary evolution for a fixed hold time."""

    t: float


@dataclass(frozen=True)
class TimeAverageGGE:
    """Dephasing in the instantaneous mode basis."""


@dataclass(frozen=True)
class Gibbs:
    """Fermi-Dirac state at the energy-matching inverse temperature."""


GGE = TimeAverageGGE()
GIBBS = Gibbs()


def build_chain(n: int, eps, g: float) -> QuadraticHamiltonian:
    """Open chain with on-site energies ``eps`` and hopping ``g``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (n,):
        raise ValueError(f"eps must have length {n}, got shape {eps.shape}")
    c = np.zeros((n, n), dtype=complex)
    np.fill_diagonal(c, eps)
    for i in range(n - 1):
        c[i, i + 1] = g
        c[i + 1, i] = g
    return QuadraticHamiltonian(c)


def _check_dims(gamma: np.ndarray, ham: QuadraticHamiltonian) -> None:
    if gamma.shape != (ham.n, ham.n):
        raise ValueError(
            f"dimension mismatch: correlation matrix {gamma.shape} vs Hamiltonian n={ham.n}"
        )


def to_mode_basis(gamma, ham: QuadraticHamiltonian) -> np.ndarray:
    """gamma_eta = A.T @ gamma @ A.conj()."""
    g = np.asarray(gamma, dtype=complex)
    _check_dims(g, ham)
    a = ham.modes
    return a.T @ g @ a.conj()


def from_mode_basis(gamma_eta, ham: QuadraticHamiltonian) -> np.ndarray:
    """Inverse of :func:`to_mode_basis`: gamma = A.conj() @ gamma_eta @ A.T."""
    g = np.asarray(gamma_eta, dtype=complex)
    _check_dims(g, ham)
    a = ham.modes
    return a.conj() @ g @ a.T


def mode_populations(gamma, ham: QuadraticHamiltonian) -> np.ndarray:
    """Diagonal of the mode-basis correlation matrix, p_k = <eta_k^dag eta_k>."""
    return np.real(np.diag(to_mode_basis(gamma, ham)))


def gibbs_correlation(ham: QuadraticHamiltonian, beta: float) -> np.ndarray:
    """Correlation matrix of the thermal state at inverse temperature ``beta``.

    For a quadratic Hamiltonian the thermal state is Gaussian with
    Fermi-Dirac mode occupations p_k = 1 / (1 + exp(beta * eps_k)); no
    approximation is involved.  ``beta`` may be any real number (negative
    values describe population-inverted diagnostics).
    """
    ham = as_hamiltonian(ham)
    p = expit(-float(beta) * ham.energies)
    return from_mode_basis(np.diag(p.astype(complex)), ham)


def attainable_energy_range(ham: QuadraticHamiltonian) -> tuple[float, float]:
    """Open interval of mean energies reachable with mode occupations in (0, 1)."""
    eps = as_hamiltonian(ham).energies
    return float(np.minimum(eps, 0.0).sum()), float(np.maximum(eps, 0.0).sum())


def solve_beta(
    ham: QuadraticHamiltonian,
    target_energy: float,
    *,
    rtol: float = 1e-10,
    bracket: tuple[float, float] = (-64.0, 64.0),
    max_bracket: float = 1e12,
) -> tuple[float, bool]:
    """Inverse temperature whose thermal state has the given mean energy.

    The energy is strictly decreasing in beta, so bracketed root finding
    (geometric bracket expansion followed by Brent iteration, with a Newton
    polish if needed) cannot fail inside the attainable range.

    Returns ``(beta, negative_temperature_flag)``; the flag is set when the
    matched beta is negative, which corresponds to a population-inverted
    target.

    Raises
    ------
    ValueError
        Target outside the attainable open interval.
    RuntimeError
        No convergence after bracket expansion (residual reported).
    """
    ham = as_hamiltonian(ham)
    eps = ham.energies
    lo_e, hi_e = attainable_energy_range(ham)
    t = float(target_energy)
    if not (lo_e < t < hi_e):
        raise ValueError(
            f"target energy {t:.12g} outside the attainable open interval "
            f"({lo_e:.12g}, {hi_e:.12g})"
        )

    def f(beta: float) -> float:
        return float(np.sum(eps * expit(-beta * eps))) - t

    b_lo, b_hi = float(bracket[0]), float(bracket[1])
    f_lo, f_hi = f(b_lo), f(b_hi)  # f decreasing: want f_lo >= 0 >= f_hi
    while f_lo < 0.0 and abs(b_lo) < max_bracket:
        b_lo *= 2.0
        f_lo = f(b_lo)
    while f_hi > 0.0 and abs(b_hi) < max_bracket:
        b_hi *= 2.0
        f_hi = f(b_hi)
    if f_lo < 0.0 or f_hi > 0.0:
        raise RuntimeError(
            "no sign change after bracket expansion; residual "
            f"{min(abs(f_lo), abs(f_hi)):.3e}"
        )
    beta = brentq(f, b_lo, b_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=300)
    tol = rtol * max(1.0, abs(t))
    resid = f(beta)
    if abs(resid) > tol:
        for _ in range(8):
            p = expit(-beta * eps)
            slope = float(-np.sum(eps * eps * p * (1.0 - p)))
            if slope == 0.0:
                break
            beta -= resid / slope
            resid = f(beta)
            if abs(resid) <= tol:
                break
        if abs(resid) > tol:
            raise RuntimeError(
                f"energy matching did not converge: residual {abs(resid):.3e} exceeds {tol:.3e}"
            )
    return float(beta), bool(beta < 0.0)


def evolve_exact(gamma, ham: QuadraticHamiltonian, t: float) -> np.ndarray:
    """Correlation matrix after unitary evolution for time ``t``.

    In the mode basis each entry picks up the phase exp(i t (eps_k - eps_l));
    equivalently gamma -> U gamma U^dag with U = A.conj() exp(i t D) A.T.
    """
    ham = as_hamiltonian(ham)
    g_eta = to_mode_basis(gamma, ham)
    phase = np.exp(1j * float(t) * ham.energies)
    return from_mode_basis(g_eta * np.outer(phase, phase.conj()), ham)


def dephase_gge(gamma, ham: QuadraticHamiltonian) -> np.ndarray:
    """Drop all coherences between normal modes, keeping populations exactly.

    This is simultaneously the infinite-time averaged correlation matrix and
    the maximum-entropy state with every mode population held fixed.  The
    mean energy is conserved because only the mode diagonal carries energy.
    """
    ham = as_hamiltonian(ham)
    p = np.real(np.diag(to_mode_basis(gamma, ham)))
    return from_mode_basis(np.diag(p.astype(complex)), ham)


def equilibrate(gamma, ham: QuadraticHamiltonian, model) -> np.ndarray:
    """Apply one equilibration step under ``ham`` according to ``model``."""
    ham = as_hamiltonian(ham)
    if isinstance(model, Exact):
        return evolve_exact(gamma, ham, model.t)
    if isinstance(model, TimeAverageGGE):
        return dephase_gge(gamma, ham)
    if isinstance(model, Gibbs):
        beta, _ = solve_beta(ham, energy(gamma, ham))
        return gibbs_correlation(ham, beta)
    raise TypeError(f"unknown equilibration model: {model!r}")


def energy(gamma, ham: QuadraticHamiltonian) -> float:
    """Mean energy sum_ij c[i, j] * gamma[i, j] (imaginary round-off dropped)."""
    ham = as_hamiltonian(ham)
    g = np.asarray(gamma, dtype=complex)
    _check_dims(g, ham)
    return float(np.sum(ham.c * g).real)


def entropy_gaussian(gamma, atol: float = 1e-6) -> float:
    """Entropy (nats) of the Gaussian state with this correlation matrix.

    Eigenvalues must lie in [-atol, 1 + atol]; they are clamped to [0, 1]
    before the binary-entropy sum, with 0 log 0 = 0.
    """
    g = require_hermitian(gamma, atol=1e-10, name="correlation matrix")
    d = np.linalg.eigvalsh(g)
    if d.size and (d.min() < -atol or d.max() > 1.0 + atol):
        raise ValueError(
            f"correlation spectrum outside [0, 1]: min {d.min():.3e}, max {d.max():.6f}"
        )
    d = np.clip(d, 0.0, 1.0)
    return float(-np.sum(xlogy(d, d) + xlogy(1.0 - d, 1.0 - d)))


def work_of_quench(gamma, ham_old: QuadraticHamiltonian, ham_new: QuadraticHamiltonian) -> float:
    """Work cost of the quench ham_old -> ham_new on a frozen state.

    Positive values cost energy; negate for the extraction convention.
    """
    ham_old = as_hamiltonian(ham_old)
    ham_new = as_hamiltonian(ham_new)
    if ham_old.n != ham_new.n:
        raise ValueError(f"dimension mismatch: {ham_old.n} vs {ham_new.n}")
    return energy(gamma, ham_new) - energy(gamma, ham_old)
