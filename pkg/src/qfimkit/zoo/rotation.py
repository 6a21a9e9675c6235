"""SU(2) rotations of a spin-j probe in Euler-angle charts.

For ``U(theta)`` a product of three axis rotations, ``d_i U U^dag = -i K_i``
with lab-frame generators ``K_i = sum_k H[k, i] J_k``. The QFIM then factors
as ``Q = 4 H^T C H`` where ``C`` is the generator covariance of the rotated
state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import (
    REAL_LINE, DensityMatrix, PureState, StatisticalModel, commutator, dense,
)
from ..errors import ModelError

EIG_TOL = 1e-12


@dataclass(frozen=True)
class SpinSystem:
    """Spin-``j`` angular momentum in the ``|j, m>`` basis, ``m = j, ..., -j``."""

    j: float
    J1: np.ndarray = field(init=False, repr=False)
    J2: np.ndarray = field(init=False, repr=False)
    J3: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        two_j = round(2 * float(self.j))
        if two_j < 1 or abs(2 * float(self.j) - two_j) > 1e-12:
            raise ModelError(f"spin must be a positive half-integer, got {self.j!r}")
        j = two_j / 2
        m = j - np.arange(two_j + 1)
        # <m+1|J+|m> = sqrt(j(j+1) - m(m+1))
        jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "J1", (jp + jp.conj().T) / 2)
        object.__setattr__(self, "J2", (jp - jp.conj().T) / 2j)
        object.__setattr__(self, "J3", np.diag(m).astype(complex))

    @property
    def dim(self) -> int:
        return int(round(2 * self.j)) + 1

    @property
    def generators(self) -> tuple:
        return (self.J1, self.J2, self.J3)

    def along(self, n) -> np.ndarray:
        """``n . J`` for a real 3-vector ``n``."""
        return sum(c * jk for c, jk in zip(np.asarray(n, dtype=float), self.generators))

    def axis_rotation(self, axis: int, angle: float) -> np.ndarray:
        """``exp(-i angle J_axis)`` with ``axis`` in ``{0, 1, 2}``."""
        lam, vec = np.linalg.eigh(self.generators[axis])
        return (vec * np.exp(-1j * angle * lam)) @ vec.conj().T

    def eigenstate(self, n, m: float | None = None) -> np.ndarray:
        """Eigenvector of ``n . J`` with eigenvalue ``m`` (default the largest)."""
        n = np.asarray(n, dtype=float)
        lam, vec = np.linalg.eigh(self.along(n / np.linalg.norm(n)))
        k = lam.size - 1 if m is None else int(np.argmin(np.abs(lam - m)))
        return vec[:, k]


_AXES = {"zyz": (2, 1, 2), "xyz": (0, 1, 2)}
_NAMES = {"zyz": ("Phi", "Theta", "Psi"), "xyz": ("alpha", "beta", "gamma")}


@dataclass(frozen=True)
class RotationChart:
    """Euler-angle chart ``U = exp(-i a J_p) exp(-i b J_q) exp(-i c J_r)``.

    ``H(theta)`` has one column per angle holding the lab-frame rotation axis
    that the angle drives, so ``det H`` is ``-sin Theta`` (zyz) or
    ``cos beta`` (xyz).
    """

    kind: str = "zyz"

    def __post_init__(self):
        if self.kind not in _AXES:
            raise ModelError(f"unknown Euler chart {self.kind!r}; expected 'zyz' or 'xyz'")

    @property
    def param_names(self) -> tuple:
        return _NAMES[self.kind]

    def H(self, theta) -> np.ndarray:
        a, b, _ = np.asarray(theta, dtype=float)
        if self.kind == "zyz":
            rows = [[0.0, 0.0, 1.0],
                    [-np.sin(a), np.cos(a), 0.0],
                    [np.sin(b) * np.cos(a), np.sin(b) * np.sin(a), np.cos(b)]]
        else:
            rows = [[1.0, 0.0, 0.0],
                    [0.0, np.cos(a), np.sin(a)],
                    [np.sin(b), -np.sin(a) * np.cos(b), np.cos(a) * np.cos(b)]]
        return np.array(rows).T

    def unitary(self, spin: SpinSystem, theta) -> np.ndarray:
        u = np.eye(spin.dim, dtype=complex)
        for axis, angle in zip(_AXES[self.kind], np.asarray(theta, dtype=float)):
            u = u @ spin.axis_rotation(axis, angle)
        return u

    def generators(self, spin: SpinSystem, theta) -> list:
        h = self.H(theta)
        return [spin.along(h[:, i]) for i in range(3)]


def c_matrix(rho, spin: SpinSystem, eig_tol: float = EIG_TOL) -> np.ndarray:
    """Generator covariance ``C_ij`` of ``rho``.

    ``C_ij = 1/2 sum_mn (l_m - l_n)^2 / (l_m + l_n) Re[(J_i)_mn (J_j)_nm]``
    in the eigenbasis of rho, skipping pairs with ``l_m + l_n <= eig_tol``.
    For a pure state this is ``1/2 <{J_i, J_j}> - <J_i><J_j>``.
    """
    r = dense(rho)
    lam, vec = np.linalg.eigh(r)
    s = lam[:, None] + lam[None, :]
    ok = s > eig_tol
    w = np.where(ok, (lam[:, None] - lam[None, :]) ** 2 / np.where(ok, s, 1.0), 0.0)
    js = [vec.conj().T @ jk @ vec for jk in spin.generators]
    c = np.array([[0.5 * np.real(np.sum(w * a * b.T)) for b in js] for a in js])
    return (c + c.T) / 2


def _as_probe(probe):
    if isinstance(probe, PureState):
        return probe.amplitudes, probe.density().entries
    if isinstance(probe, DensityMatrix):
        return None, np.asarray(probe.entries, dtype=complex)
    arr = np.asarray(probe, dtype=complex)
    if arr.ndim == 1:
        psi = PureState(arr).amplitudes
        return psi, np.outer(psi, psi.conj())
    return None, DensityMatrix.from_operator(arr).entries


def rotation_model(spin: SpinSystem, probe, chart: RotationChart | str = "zyz") -> StatisticalModel:
    """Three Euler angles imprinted on ``probe`` by ``U(theta) rho U(theta)^dag``.

    ``probe`` is a state vector, :class:`PureState` or density matrix. The
    analytic derivative is ``-i [K_i, rho_theta]``; ``reference_qfim`` is the
    factored ``4 H^T C(rho_theta) H``.
    """
    if isinstance(chart, str):
        chart = RotationChart(chart)
    psi0, rho0 = _as_probe(probe)
    if rho0.shape != (spin.dim, spin.dim):
        raise ModelError(f"probe has dimension {rho0.shape[0]}, spin-{spin.j} needs {spin.dim}")

    def state_fn(th):
        u = chart.unitary(spin, th)
        return u @ rho0 @ u.conj().T

    def derivative_fn(th):
        rho = state_fn(th)
        return [-1j * commutator(k, rho) for k in chart.generators(spin, th)]

    def reference(th):
        h = chart.H(th)
        return 4 * h.T @ c_matrix(state_fn(th), spin) @ h

    ket_fn = None
    if psi0 is not None:
        def ket_fn(th):
            psi = chart.unitary(spin, th) @ psi0
            return psi, [-1j * (k @ psi) for k in chart.generators(spin, th)]

    return StatisticalModel(
        name="rotation",
        param_names=chart.param_names,
        dim=spin.dim,
        state_fn=state_fn,
        domain=(REAL_LINE,) * 3,
        derivative_fn=derivative_fn,
        ket_fn=ket_fn,
        reference_qfim=reference,
        info={"j": spin.j, "chart": chart.kind, "spin": spin, "rotation_chart": chart},
    )


def factored_qfim(model: StatisticalModel, theta) -> np.ndarray:
    """``4 H^T C H`` for a model built by :func:`rotation_model`."""
    th = model.point(theta).as_array()
    return model.reference_qfim(th)
