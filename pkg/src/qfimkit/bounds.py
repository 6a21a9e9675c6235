"""Cramer-Rao-type bounds built from (quantum) Fisher information matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import PINV_RTOL, pseudoinverse
from .errors import RangeError
from .qfim import QfimResult

COND_LIMIT = 1e12
RANGE_TOL = 1e-8
OPTIMISTIC_NOTE = "pseudoinverse bound; may be an overly optimistic lower bound"


@dataclass(frozen=True)
class BoundReport:
    kind: str  # "CRB", "QCRB", "pseudo-CRB", "pseudo-QCRB" or "weighted-scalar"
    value: object  # matrix (ndarray) or float
    trials: int
    singular: bool
    null_directions: tuple = ()
    tolerances: dict = field(default_factory=dict)
    note: str = ""

    @property
    def is_scalar(self) -> bool:
        return np.ndim(self.value) == 0

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.is_scalar:
            out["value"] = float(self.value)
        else:
            out["matrix"] = np.asarray(self.value).tolist()
        out.update({
            "M": self.trials,
            "singular": self.singular,
            "null_directions": [np.asarray(v).tolist() for v in self.null_directions],
            "tolerances": dict(self.tolerances),
        })
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class WeightMatrix:
    """Weight for the scalar bound ``Tr(W Cov)``.

    User weights must be positive definite. Cartan weights may be singular at
    coordinate singularities, in which case ``singular`` is set.
    """

    matrix: np.ndarray
    origin: str = "user"
    singular: bool = False

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weight matrix must be square")
        if np.max(np.abs(w - w.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(w))):
            raise ValueError("weight matrix must be symmetric")
        w = (w + w.T) / 2
        lam_min = np.linalg.eigvalsh(w).min()
        if self.origin == "user" and lam_min <= 0:
            raise ValueError(f"user weight matrix must be positive definite (min eig {lam_min:.3e})")
        object.__setattr__(self, "matrix", w)


def _as_matrix(info) -> np.ndarray:
    if isinstance(info, QfimResult):
        info = info.matrix
    m = np.atleast_2d(np.asarray(info, dtype=float))
    return (m + m.T) / 2


def _spectral(m):
    lam, vec = np.linalg.eigh(m)
    lam_max = lam.max(initial=0.0)
    lam_min = lam.min() if lam.size else 0.0
    cond = lam_max / lam_min if lam_min > lam_max * np.finfo(float).tiny else np.inf
    null = lam <= PINV_RTOL * lam_max if lam_max > 0 else np.ones_like(lam, dtype=bool)
    return lam, vec, cond, vec[:, null]


def _bound(info, trials: int, kind: str) -> BoundReport:
    if trials < 1:
        raise ValueError("number of trials M must be at least 1")
    m = _as_matrix(info)
    lam, vec, cond, null = _spectral(m)
    tol = {"condition_limit": COND_LIMIT, "pinv_rtol": PINV_RTOL}
    if cond < COND_LIMIT:
        return BoundReport(kind, np.linalg.inv(m) / trials, trials, False, (), tol)
    return BoundReport(f"pseudo-{kind}", pseudoinverse(m) / trials, trials, True,
                       tuple(null.T), tol, OPTIMISTIC_NOTE)


def qcrb(q, trials: int = 1) -> BoundReport:
    """Quantum Cramer-Rao bound ``Q^-1 / M``.

    When the condition number reaches ``1e12`` the Moore-Penrose pseudoinverse
    is used instead, the kernel of ``Q`` is returned as ``null_directions`` and
    the report is labelled optimistic.
    """
    return _bound(q, trials, "QCRB")


def crb_classical(f, trials: int = 1) -> BoundReport:
    return _bound(f, trials, "CRB")


def reparametrize(q, jacobian) -> np.ndarray:
    """Pull an information matrix back to new coordinates: ``J^T Q J``.

    ``jacobian[i, a] = d theta_old_i / d theta_new_a``. A singular Jacobian is
    allowed; it is how coordinate singularities enter the QFIM.
    """
    m = _as_matrix(q)
    j = np.atleast_2d(np.asarray(jacobian, dtype=float))
    if not np.all(np.isfinite(j)):
        raise ValueError("Jacobian must be finite")
    out = j.T @ m @ j
    return (out + out.T) / 2


def weighted_bound(q, weight, trials: int = 1) -> float:
    """Scalar bound ``Tr(W Q^-1) / M`` on the weighted mean-square error.

    For singular ``Q`` the pseudoinverse is used, provided ``W`` has no weight
    on the kernel of ``Q``.

    Raises
    ------
    RangeError
        If ``W`` weights a direction the QFIM cannot resolve; no finite bound
        is meaningful for such a probe.
    """
    if trials < 1:
        raise ValueError("number of trials M must be at least 1")
    w = weight if isinstance(weight, WeightMatrix) else WeightMatrix(weight)
    m = _as_matrix(q)
    if w.matrix.shape != m.shape:
        raise ValueError(f"weight shape {w.matrix.shape} does not match QFIM {m.shape}")
    _, _, cond, null = _spectral(m)
    if cond < COND_LIMIT:
        return float(np.trace(w.matrix @ np.linalg.inv(m)) / trials)
    leak = np.linalg.norm(w.matrix @ null) if null.size else 0.0
    if leak > RANGE_TOL * max(1.0, np.linalg.norm(w.matrix)):
        raise RangeError(f"weight matrix has weight {leak:.3e} on a null direction of the QFIM")
    return float(np.trace(w.matrix @ pseudoinverse(m)) / trials)


def cartan_weight_rotation(theta, parametrization: str = "zyz", *, tol: float = 1e-12) -> WeightMatrix:
    """Cartan (bi-invariant) metric ``H^T H`` in an Euler-angle chart."""
    from .zoo.rotation import RotationChart

    h = RotationChart(parametrization).H(theta)
    w = h.T @ h
    singular = abs(np.linalg.det(h)) <= tol
    return WeightMatrix(w, origin="cartan", singular=singular)
