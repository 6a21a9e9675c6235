"""Truncated Fock-space helpers shared by the optical models."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from ..errors import CutoffError

TAIL_TOL = 1e-10


def default_cutoff(alpha: complex) -> int:
    """Per-mode cutoff ``ceil(|alpha|^2 + 8|alpha| + 20)``."""
    a = abs(alpha)
    return int(math.ceil(a * a + 8 * a + 20))


def poisson_tail(mean: float, cutoff: int) -> float:
    """Probability of more than ``cutoff`` photons in a coherent state."""
    return float(poisson.sf(cutoff, mean))


def check_tail(alpha: complex, cutoff: int, tol: float = TAIL_TOL):
    tail = poisson_tail(abs(alpha) ** 2, cutoff)
    if tail >= tol:
        raise CutoffError(
            f"Fock cutoff {cutoff} leaves {tail:.3e} of |alpha={alpha}|'s weight outside "
            f"(tolerance {tol:g})")
    return tail


def coherent_amplitudes(beta: complex, dim: int) -> np.ndarray:
    """Unnormalized truncation ``e^{-|b|^2/2} b^n / sqrt(n!)`` for ``n < dim``."""
    n = np.arange(dim)
    out = np.zeros(dim, dtype=complex)
    out[0] = np.exp(-abs(beta) ** 2 / 2)
    if beta == 0:
        return out
    # magnitude through logs, phase separately, to stay finite for large n
    logmag = -abs(beta) ** 2 / 2 + n * np.log(abs(beta)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(beta))


def coherent_derivative(beta: complex, dbeta: complex, dim: int) -> np.ndarray:
    """Derivative of :func:`coherent_amplitudes` along ``beta' = dbeta``."""
    c = coherent_amplitudes(beta, dim)
    d = -np.real(np.conj(beta) * dbeta) * c
    d[1:] += dbeta * np.sqrt(np.arange(1, dim)) * c[:-1]
    return d


def normalized(v: np.ndarray, dv_list=()):
    """Normalize ``v`` and carry its derivatives through the normalization."""
    norm = np.linalg.norm(v)
    psi = v / norm
    dpsi = [dv / norm - v * np.real(np.vdot(v, dv)) / norm ** 3 for dv in dv_list]
    return psi, dpsi


def coherent_ket(beta: complex, dim: int, dbetas=()):
    """Renormalized truncated coherent state and its derivatives."""
    return normalized(coherent_amplitudes(beta, dim),
                      [coherent_derivative(beta, db, dim) for db in dbetas])


def fock_ket(n: int, dim: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise CutoffError(f"number state |{n}> does not fit below cutoff {dim - 1}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float))


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
