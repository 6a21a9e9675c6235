"""States, statistical models, parameter derivatives and rank utilities.

Every matrix-valued quantity is either a dense ``numpy`` array or a
:class:`BlockDiag`, a block-diagonal operator stored as its diagonal blocks.
Block storage lets models with a conserved quantity (photon-number sectors)
scale past what a dense matrix allows; the algorithms in this package loop
over blocks and treat a dense matrix as a single block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence, Union

import numpy as np
import scipy.linalg

from .errors import BoundaryError, DomainError, ModelError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-12
RANK_TOL = 1e-10
PINV_RTOL = 1e-12
FD_STEP = 1e-5


class BlockDiag:
    """Block-diagonal square operator kept as its list of diagonal blocks."""

    __slots__ = ("blocks",)
    __array_ufunc__ = None  # keep ``ndarray * BlockDiag`` from broadcasting

    def __init__(self, blocks):
        blocks = tuple(np.asarray(b) for b in blocks)
        for b in blocks:
            if b.ndim != 2 or b.shape[0] != b.shape[1]:
                raise ValueError(f"blocks must be square, got shape {b.shape}")
        self.blocks = blocks

    @property
    def dim(self):
        return sum(b.shape[0] for b in self.blocks)

    @property
    def shape(self):
        return (self.dim, self.dim)

    def to_dense(self):
        return scipy.linalg.block_diag(*self.blocks)

    def trace(self):
        return sum(np.trace(b) for b in self.blocks)

    def conj_t(self):
        return BlockDiag(b.conj().T for b in self.blocks)

    def _zip(self, other, op):
        if not isinstance(other, BlockDiag) or len(other.blocks) != len(self.blocks):
            return NotImplemented
        return BlockDiag(op(a, b) for a, b in zip(self.blocks, other.blocks))

    def __add__(self, other):
        return self._zip(other, np.add)

    def __sub__(self, other):
        return self._zip(other, np.subtract)

    def __matmul__(self, other):
        return self._zip(other, np.matmul)

    def __mul__(self, scalar):
        if isinstance(scalar, BlockDiag):
            return NotImplemented
        return BlockDiag(b * scalar for b in self.blocks)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return BlockDiag(b / scalar for b in self.blocks)

    def __neg__(self):
        return BlockDiag(-b for b in self.blocks)

    def __repr__(self):
        sizes = [b.shape[0] for b in self.blocks]
        return f"BlockDiag(dim={self.dim}, block_sizes={sizes})"


Operator = Union[np.ndarray, BlockDiag]


def blocks_of(op) -> tuple:
    """Diagonal blocks of ``op``; a dense matrix is a single block."""
    if isinstance(op, DensityMatrix):
        op = op.entries
    if isinstance(op, BlockDiag):
        return op.blocks
    return (np.asarray(op),)


def same_layout(template, blocks):
    """Rebuild an operator with the storage type of ``template``."""
    if isinstance(template, BlockDiag):
        return BlockDiag(blocks)
    (b,) = blocks
    return b


def dense(op) -> np.ndarray:
    if isinstance(op, DensityMatrix):
        op = op.entries
    if isinstance(op, BlockDiag):
        return op.to_dense()
    return np.asarray(op)


def hermitian_part(op):
    return same_layout(op, [(b + b.conj().T) / 2 for b in blocks_of(op)])


def op_trace(op) -> complex:
    return sum(np.trace(b) for b in blocks_of(op))


def op_dim(op) -> int:
    return sum(b.shape[0] for b in blocks_of(op))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator.

    Construct through :meth:`from_operator` to have the invariants checked.
    """

    entries: Any

    @classmethod
    def from_operator(cls, op, *, check: bool = True) -> "DensityMatrix":
        if isinstance(op, DensityMatrix):
            op = op.entries
        if not isinstance(op, BlockDiag):
            op = np.asarray(op, dtype=complex)
        rho = cls(op)
        if check:
            rho.validate()
        return rho

    @property
    def dim(self) -> int:
        return op_dim(self.entries)

    def validate(self):
        herm = max(np.max(np.abs(b - b.conj().T), initial=0.0) for b in blocks_of(self.entries))
        if herm > HERMITIAN_TOL:
            raise ModelError(f"state is not Hermitian (max |rho - rho^dag| = {herm:.3e})")
        tr = op_trace(self.entries)
        if abs(tr - 1) > TRACE_TOL:
            raise ModelError(f"state trace is {tr.real:.15g}, expected 1")
        lam_min = min(np.linalg.eigvalsh(b).min() for b in blocks_of(self.entries) if b.size)
        if lam_min < -PSD_TOL:
            raise ModelError(f"state is not PSD (min eigenvalue {lam_min:.3e})")

    def eigh(self):
        """Per-block eigendecomposition, as a list of ``(eigenvalues, eigenvectors)``."""
        return [np.linalg.eigh(b) for b in blocks_of(self.entries)]

    def to_dense(self) -> np.ndarray:
        return dense(self.entries)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.to_dense(), dtype=dtype)


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > NORM_TOL:
            raise ModelError(f"state vector has norm {norm:.15g}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class Interval:
    lo: float = -math.inf
    hi: float = math.inf
    closed_lo: bool = True
    closed_hi: bool = True

    def __contains__(self, x) -> bool:
        above = x >= self.lo if self.closed_lo else x > self.lo
        below = x <= self.hi if self.closed_hi else x < self.hi
        return bool(above and below)

    def __str__(self):
        left = "[" if self.closed_lo else "("
        right = "]" if self.closed_hi else ")"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


REAL_LINE = Interval()


@dataclass(frozen=True)
class ParameterPoint:
    values: tuple
    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.values) != len(self.names):
            raise ValueError("values and names must have the same length")

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values))


ThetaLike = Union[ParameterPoint, Mapping[str, float], Sequence[float], np.ndarray, float]


@dataclass(frozen=True)
class StatisticalModel:
    """A family of states ``theta -> rho_theta``.

    Parameters
    ----------
    name
        Registry name of the model.
    param_names
        One identifier per parameter, in the order used by every matrix.
    dim
        Hilbert-space dimension of the (possibly truncated) representation.
    state_fn
        Maps a parameter array to a dense matrix or :class:`BlockDiag`.
    domain
        One :class:`Interval` per parameter.
    derivative_fn
        Optional analytic derivative, returning one operator per parameter.
    ket_fn
        For pure models: maps a parameter array to ``(psi, [dpsi_i])``.
    reference_qfim
        Optional closed-form QFIM used as an oracle.
    fd_step
        Relative central-difference step ``h0``.
    info
        Free-form metadata (construction parameters, cutoffs).
    """

    name: str
    param_names: tuple
    dim: int
    state_fn: Callable[[np.ndarray], Operator]
    domain: tuple
    derivative_fn: Callable[[np.ndarray], list] | None = None
    ket_fn: Callable[[np.ndarray], tuple] | None = None
    reference_qfim: Callable[[np.ndarray], np.ndarray] | None = None
    fd_step: float = FD_STEP
    info: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "param_names", tuple(self.param_names))
        object.__setattr__(self, "domain", tuple(self.domain))
        if len(self.domain) != len(self.param_names):
            raise ValueError("one domain interval per parameter is required")

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def derivative_mode(self) -> str:
        return "analytic" if self.derivative_fn is not None else "central-difference"

    def point(self, theta: ThetaLike) -> ParameterPoint:
        """Coerce ``theta`` to a :class:`ParameterPoint` and check the domain."""
        if isinstance(theta, ParameterPoint):
            if theta.names != self.param_names:
                raise DomainError(f"expected parameters {self.param_names}, got {theta.names}")
            values = theta.values
        elif isinstance(theta, Mapping):
            missing = set(self.param_names) - set(theta)
            extra = set(theta) - set(self.param_names)
            if missing or extra:
                raise DomainError(
                    f"expected parameters {self.param_names}; missing {sorted(missing)}, "
                    f"unknown {sorted(extra)}")
            values = [theta[k] for k in self.param_names]
        else:
            values = np.atleast_1d(np.asarray(theta, dtype=float))
            if values.shape != (self.n_params,):
                raise DomainError(f"expected {self.n_params} parameter values, got {values.shape}")
        pt = ParameterPoint(values, self.param_names)
        for name, v, iv in zip(pt.names, pt.values, self.domain):
            if not math.isfinite(v) or v not in iv:
                raise DomainError(f"{name}={v!r} outside domain {iv}")
        return pt


def evaluate(model: StatisticalModel, theta: ThetaLike, *, check: bool = True) -> DensityMatrix:
    """The state ``rho_theta``, validated against the density-matrix invariants."""
    pt = model.point(theta)
    return DensityMatrix.from_operator(model.state_fn(pt.as_array()), check=check)


class DerivativeList(list):
    """List of ``d rho / d theta_i`` operators.

    ``one_sided`` holds the indices differentiated with a one-sided
    (first-order) stencil because the central stencil left the domain.
    """

    def __init__(self, items, mode: str, one_sided=(), steps=()):
        super().__init__(items)
        self.mode = mode
        self.one_sided = tuple(one_sided)
        self.steps = tuple(steps)


def fd_steps(model: StatisticalModel, theta: np.ndarray, h0: float | None = None) -> np.ndarray:
    h0 = model.fd_step if h0 is None else h0
    return h0 * np.maximum(1.0, np.abs(theta))


def derivatives(model: StatisticalModel, theta: ThetaLike, *, mode: str | None = None,
                h0: float | None = None, on_boundary: str = "fallback") -> DerivativeList:
    """Parameter derivatives of ``rho_theta``.

    ``mode`` is ``"analytic"`` or ``"central"``; by default the analytic
    derivative is used when the model has one. Central differences use the
    step ``h0 * max(1, |theta_i|)``. When the central stencil would leave the
    domain, ``on_boundary="fallback"`` switches to a one-sided difference
    (recorded in ``one_sided``) and ``on_boundary="raise"`` raises
    :class:`BoundaryError`.
    """
    pt = model.point(theta)
    th = pt.as_array()
    if mode is None:
        mode = "analytic" if model.derivative_fn is not None else "central"
    if mode == "analytic":
        if model.derivative_fn is None:
            raise ValueError(f"model {model.name!r} has no analytic derivative")
        ders = [hermitian_part(d) for d in model.derivative_fn(th)]
        return DerivativeList(ders, "analytic")
    if mode != "central":
        raise ValueError(f"unknown derivative mode {mode!r}")

    steps = fd_steps(model, th, h0)
    ders, one_sided = [], []
    for i, (h, iv) in enumerate(zip(steps, model.domain)):
        up_ok, down_ok = (th[i] + h) in iv, (th[i] - h) in iv
        e = np.zeros_like(th)
        e[i] = h
        if up_ok and down_ok:
            d = (model.state_fn(th + e) - model.state_fn(th - e)) / (2 * h)
        elif on_boundary == "raise":
            raise BoundaryError(
                f"central difference for {pt.names[i]} at {th[i]!r} leaves domain {iv}")
        elif up_ok:
            d = (model.state_fn(th + e) - model.state_fn(th)) / h
            one_sided.append(i)
        elif down_ok:
            d = (model.state_fn(th) - model.state_fn(th - e)) / h
            one_sided.append(i)
        else:
            raise BoundaryError(f"domain {iv} of {pt.names[i]} is narrower than the step {h:g}")
        ders.append(hermitian_part(d))
    return DerivativeList(ders, "central", one_sided, steps)


def numerical_rank(m, tol: float = RANK_TOL) -> int:
    """Number of eigenvalues above ``tol * max(|lambda|_max, 1)``."""
    lams = [np.linalg.eigvalsh(b) for b in blocks_of(m) if b.size]
    if not lams:
        return 0
    lam = np.concatenate(lams)
    scale = max(np.max(np.abs(lam)), 1.0)
    return int(np.count_nonzero(lam > tol * scale))


def pseudoinverse(m, tol: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a real symmetric PSD matrix.

    Eigenvalues above ``tol * lambda_max`` are inverted; the rest are zeroed.
    """
    m = np.asarray(m, dtype=float)
    m = (m + m.T) / 2
    lam, vec = np.linalg.eigh(m)
    lam_max = lam.max(initial=0.0)
    if lam_max <= 0:
        return np.zeros_like(m)
    keep = lam > tol * lam_max
    inv = np.zeros_like(lam)
    inv[keep] = 1.0 / lam[keep]
    return (vec * inv) @ vec.T


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random state vector."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
