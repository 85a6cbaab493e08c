"""Shared random-instance builders for the test suite."""

import numpy as np


def make_rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def random_hermitian(n, rng, scale=1.0):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (z + z.conj().T)


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(d, rng, floor=1e-3):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = z @ z.conj().T + floor * np.eye(d)
    return rho / np.trace(rho).real


def random_correlation(n, rng, lo=0.0, hi=1.0):
    w = random_unitary(n, rng)
    p = rng.uniform(lo, hi, n)
    return (w * p) @ w.conj().T
