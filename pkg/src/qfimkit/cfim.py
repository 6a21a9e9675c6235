"""Classical Fisher information of Born-rule outcome statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import FD_STEP, blocks_of, dense, op_dim
from .errors import BoundaryError, DimensionMismatch, ModelError, QuadratureError

P_FLOOR = 1e-12
POVM_SUM_TOL = 1e-10
POVM_PSD_TOL = 1e-12
GL_POINTS = 64
MAX_PANELS = 1024
PANEL_RTOL = 1e-8
NORM_DRIFT_TOL = 1e-6


class Povm:
    """Discrete POVM with PSD effects summing to the identity.

    Projective measurements can be given by their ``basis`` (columns are the
    measured states) instead of explicit effects; probabilities are then
    read off ``B^dag rho B`` without forming one matrix per outcome.
    """

    def __init__(self, effects=None, *, basis=None):
        if (effects is None) == (basis is None):
            raise ValueError("give exactly one of 'effects' or 'basis'")
        self._effects = None
        self.basis = None
        if basis is not None:
            basis = np.asarray(basis, dtype=complex)
            n = basis.shape[0]
            unitary = basis.shape == (n, n) and np.allclose(
                basis.conj().T @ basis, np.eye(n), rtol=0, atol=POVM_SUM_TOL)
            if not unitary:
                raise ValueError("projective basis must be a unitary matrix")
            self.basis = basis
            self._computational = bool(np.array_equal(basis, np.eye(n)))
            return
        effects = tuple(np.asarray(e, dtype=complex) for e in effects)
        if not effects:
            raise ValueError("a POVM needs at least one effect")
        dim = effects[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for e in effects:
            if e.shape != (dim, dim):
                raise DimensionMismatch("POVM effects must share one square shape")
            if np.max(np.abs(e - e.conj().T)) > 1e-12:
                raise ValueError("POVM effects must be Hermitian")
            if np.linalg.eigvalsh(e).min() < -POVM_PSD_TOL:
                raise ValueError("POVM effects must be positive semidefinite")
            total += e
        if np.max(np.abs(total - np.eye(dim))) > POVM_SUM_TOL:
            raise ValueError("POVM effects do not sum to the identity")
        self._effects = effects

    @property
    def effects(self) -> tuple:
        if self._effects is None:
            b = self.basis
            self._effects = tuple(np.outer(b[:, k], b[:, k].conj()) for k in range(b.shape[1]))
        return self._effects

    @property
    def dim(self) -> int:
        return self.basis.shape[0] if self.basis is not None else self._effects[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.basis.shape[1] if self.basis is not None else len(self._effects)

    @classmethod
    def projective(cls, basis) -> "Povm":
        """Rank-one projectors onto the columns of a unitary ``basis``."""
        return cls(basis=basis)

    @classmethod
    def computational(cls, dim: int) -> "Povm":
        return cls(basis=np.eye(dim))

    def raw_probabilities(self, rho) -> np.ndarray:
        if self.basis is not None and self._computational:
            # block-diagonal states never need to be densified for this one
            return np.concatenate([np.real(np.diag(b)) for b in blocks_of(rho)])
        r = dense(rho)
        if self.basis is not None:
            b = self.basis
            return np.real(np.einsum("ik,ij,jk->k", b.conj(), r, b))
        return np.array([np.real(np.sum(r * e.T)) for e in self._effects])


@dataclass(frozen=True)
class OutcomeDensity:
    """Continuous outcome density ``p(x | theta)`` on a finite interval.

    ``density_fn(x, theta)`` must accept an array of outcomes. Integrals use
    ``panels`` equal Gauss-Legendre panels with ``points`` nodes each; the
    panel count is doubled by :func:`cfim_continuous` until converged.
    """

    density_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    support: tuple
    panels: int = 1
    points: int = GL_POINTS

    def nodes(self, panels: int | None = None):
        panels = self.panels if panels is None else panels
        t, w = np.polynomial.legendre.leggauss(self.points)
        a, b = self.support
        edges = np.linspace(a, b, panels + 1)
        half = np.diff(edges)[:, None] / 2
        mid = (edges[:-1] + edges[1:])[:, None] / 2
        return (mid + half * t).ravel(), (half * w).ravel()

    def normalization(self, theta, panels: int | None = None) -> float:
        x, w = self.nodes(panels)
        return float(w @ self.density_fn(x, np.atleast_1d(np.asarray(theta, dtype=float))))


@dataclass(frozen=True)
class CfimResult:
    matrix: np.ndarray
    dropped_mass: float = 0.0
    n_dropped: int = 0
    panels: int = 0
    normalization_error: float = 0.0


def born_probabilities(rho, povm: Povm) -> np.ndarray:
    """``p_x = Tr(rho Pi_x)``; values within ``1e-12`` below zero are clamped to zero."""
    if op_dim(rho) != povm.dim:
        raise DimensionMismatch(f"state has dimension {op_dim(rho)}, POVM {povm.dim}")
    p = povm.raw_probabilities(rho)
    if p.min() < -POVM_PSD_TOL:
        raise ModelError(f"negative outcome probability {p.min():.3e}")
    return np.clip(p, 0.0, None)


def fisher_from_probabilities(p, dp, p_floor: float = P_FLOOR):
    """``F_ij = sum_x dp_i(x) dp_j(x) / p(x)`` over outcomes with ``p(x) > p_floor``.

    ``dp`` has one row per parameter. Returns ``(F, dropped_mass, n_dropped)``.
    """
    p = np.asarray(p, dtype=float)
    dp = np.atleast_2d(np.asarray(dp, dtype=float))
    keep = p > p_floor
    f = (dp[:, keep] / p[keep]) @ dp[:, keep].T
    return (f + f.T) / 2, float(p[~keep].sum()), int(np.count_nonzero(~keep))


def _stencil(model, th, i, h):
    iv = model.domain[i]
    up, down = (th[i] + h) in iv, (th[i] - h) in iv
    e = np.zeros_like(th)
    e[i] = h
    if up and down:
        return th + e, th - e, 2 * h
    if up:
        return th + e, th, h
    if down:
        return th, th - e, h
    raise BoundaryError(f"domain {iv} is narrower than the step {h:g}")


def cfim_discrete(model, theta, povm: Povm, fd_step: float | None = None,
                  p_floor: float = P_FLOOR) -> CfimResult:
    """Classical FIM of measuring ``povm`` on ``rho_theta``.

    Outcome-probability derivatives come from central differences of the
    Born probabilities (one-sided at the domain edge). Outcomes with
    ``p <= p_floor`` are skipped and their mass reported in ``dropped_mass``.
    """
    th = model.point(theta).as_array()
    h0 = model.fd_step if fd_step is None else fd_step
    steps = h0 * np.maximum(1.0, np.abs(th))
    p = born_probabilities(model.state_fn(th), povm)
    dp = []
    for i, h in enumerate(steps):
        hi, lo, width = _stencil(model, th, i, h)
        dp.append((born_probabilities(model.state_fn(hi), povm)
                   - born_probabilities(model.state_fn(lo), povm)) / width)
    f, mass, count = fisher_from_probabilities(p, np.array(dp), p_floor)
    return CfimResult(f, mass, count)


def _continuous_once(density, th, steps, panels, p_floor):
    x, w = density.nodes(panels)
    p = density.density_fn(x, th)
    norms = [w @ p]
    dp = []
    for i, h in enumerate(steps):
        e = np.zeros_like(th)
        e[i] = h
        up, down = density.density_fn(x, th + e), density.density_fn(x, th - e)
        norms += [w @ up, w @ down]
        dp.append((up - down) / (2 * h))
    dp = np.array(dp)
    keep = p > p_floor
    f = (dp[:, keep] * (w[keep] / p[keep])) @ dp[:, keep].T
    drift = float(np.max(np.abs(np.array(norms) - 1.0)))
    return (f + f.T) / 2, float(w[~keep] @ p[~keep]), int(np.count_nonzero(~keep)), drift


def cfim_continuous(density: OutcomeDensity, theta, fd_step: float = FD_STEP,
                    p_floor: float = P_FLOOR) -> CfimResult:
    """``F_ij = int dx (d_i p)(d_j p) / p`` by Gauss-Legendre quadrature.

    The integrand is zeroed where ``p < p_floor``. Panels double until no
    entry moves by more than ``1e-8 * max(1, max|F|)``.

    Raises
    ------
    QuadratureError
        If the density integrates to something further than ``1e-6`` from one
        anywhere on the difference stencil.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    steps = fd_step * np.maximum(1.0, np.abs(th))
    panels = density.panels
    f, mass, count, drift = _continuous_once(density, th, steps, panels, p_floor)
    while True:
        if 2 * panels > MAX_PANELS:
            raise QuadratureError(f"FIM did not converge within {MAX_PANELS} panels")
        f2, mass2, count2, drift2 = _continuous_once(density, th, steps, 2 * panels, p_floor)
        moved = np.max(np.abs(f2 - f))
        panels *= 2
        f, mass, count, drift = f2, mass2, count2, drift2
        if moved <= PANEL_RTOL * max(1.0, np.max(np.abs(f))):
            break
    if drift > NORM_DRIFT_TOL:
        raise QuadratureError(f"density normalization off by {drift:.3e} on the stencil")
    return CfimResult(f, mass, count, panels, drift)


def bin_probabilities(density: OutcomeDensity, theta, edges, points: int = 16) -> np.ndarray:
    """Probability of each bin ``[edges[k], edges[k+1]]``."""
    edges = np.asarray(edges, dtype=float)
    t, w = np.polynomial.legendre.leggauss(points)
    half = np.diff(edges)[:, None] / 2
    mid = (edges[:-1] + edges[1:])[:, None] / 2
    x = mid + half * t
    vals = density.density_fn(x.ravel(), np.atleast_1d(np.asarray(theta, dtype=float)))
    return (vals.reshape(x.shape) * (half * w)).sum(axis=1)


def cfim_binned(density: OutcomeDensity, theta, n_bins: int = 200, fd_step: float = FD_STEP,
                p_floor: float = P_FLOOR) -> CfimResult:
    """FIM of a pixelated detector: ``n_bins`` equal bins across the support."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    edges = np.linspace(*density.support, n_bins + 1)
    p = bin_probabilities(density, th, edges)
    dp = []
    for i, h in enumerate(fd_step * np.maximum(1.0, np.abs(th))):
        e = np.zeros_like(th)
        e[i] = h
        dp.append((bin_probabilities(density, th + e, edges)
                   - bin_probabilities(density, th - e, edges)) / (2 * h))
    f, mass, count = fisher_from_probabilities(p, np.array(dp), p_floor)
    return CfimResult(f, mass, count)

