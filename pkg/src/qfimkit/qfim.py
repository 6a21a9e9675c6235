"""Symmetric logarithmic derivatives and the quantum Fisher information matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DensityMatrix, PureState, blocks_of, dense, derivatives, evaluate,
    numerical_rank, same_layout,
)
from .errors import InvalidForMixed, SupportLeakError

EIG_TOL = 1e-12
LEAK_TOL = 1e-8


@dataclass(frozen=True)
class SldOperator:
    """Solution ``L`` of ``d rho = (rho L + L rho) / 2`` on the support of rho.

    Components on the kernel-kernel block are set to zero; the QFIM does not
    depend on them.
    """

    matrix: object
    support_projector: object
    support_dim: int
    leak_norm: float = 0.0
    kernel_policy: str = "zero-on-kernel"

    def dense(self) -> np.ndarray:
        return dense(self.matrix)


@dataclass(frozen=True)
class QfimResult:
    matrix: np.ndarray
    slds: tuple = ()
    rank: int = 0
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    condition_number: float = np.inf
    support_dim: int = 0

    @property
    def singular(self) -> bool:
        return not np.isfinite(self.condition_number) or self.condition_number >= 1e12

    def to_dict(self) -> dict:
        return {
            "qfim": self.matrix.tolist(),
            "rank": self.rank,
            "eigenvalues": self.eigenvalues.tolist(),
            "condition_number": _json_float(self.condition_number),
            "support_dim": self.support_dim,
        }


def _json_float(x):
    return float(x) if np.isfinite(x) else None


class _Spectrum:
    """Per-block eigendecomposition of rho with its support.

    An eigenvector is in the support when ``2 lambda > eig_tol``, so the
    kernel is exactly where the diagonal SLD entries are set to zero.
    """

    def __init__(self, rho, eig_tol=EIG_TOL):
        if isinstance(rho, DensityMatrix):
            rho = rho.entries
        self.template = rho
        self.parts = [np.linalg.eigh(b) for b in blocks_of(rho)]
        self.support = [2 * lam > eig_tol for lam, _ in self.parts]

    @property
    def support_dim(self) -> int:
        return int(sum(s.sum() for s in self.support))

    def projector(self):
        return same_layout(self.template, [
            (vec[:, s] @ vec[:, s].conj().T) for (_, vec), s in zip(self.parts, self.support)])

    def sld_eigenbasis(self, drho, eig_tol):
        """SLD blocks expressed in the eigenbasis of rho, plus the kernel leak norm."""
        out, leak = [], 0.0
        for (lam, vec), supp, db in zip(self.parts, self.support, blocks_of(drho)):
            d = vec.conj().T @ db @ vec
            ker = ~supp
            if ker.any():
                leak = max(leak, float(np.max(np.abs(d[np.ix_(ker, ker)]))))
            s = lam[:, None] + lam[None, :]
            ok = s > eig_tol
            out.append(np.where(ok, 2 * d / np.where(ok, s, 1.0), 0.0))
        return out, leak

    def to_lab(self, eig_blocks):
        return same_layout(self.template, [
            vec @ b @ vec.conj().T for (_, vec), b in zip(self.parts, eig_blocks)])


def solve_sld(rho, drho, eig_tol: float = EIG_TOL) -> SldOperator:
    """SLD for one parameter.

    In the eigenbasis of rho, ``L_mn = 2 drho_mn / (lambda_m + lambda_n)`` for
    ``lambda_m + lambda_n > eig_tol`` and zero otherwise.

    Raises
    ------
    SupportLeakError
        If ``drho`` has kernel-kernel entries above ``1e-8``: the rank of the
        state changes here.
    """
    spec = _Spectrum(rho, eig_tol)
    eig_blocks, leak = spec.sld_eigenbasis(drho, eig_tol)
    if leak > LEAK_TOL:
        raise SupportLeakError({0: leak})
    return SldOperator(spec.to_lab(eig_blocks), spec.projector(), spec.support_dim, leak)


def qfim(rho, drho_list, eig_tol: float = EIG_TOL) -> QfimResult:
    """QFIM ``Q_ij = Tr(rho {L_i, L_j}) / 2`` with full diagnostics."""
    spec = _Spectrum(rho, eig_tol)
    n = len(drho_list)
    eig_slds, leaks = [], {}
    for i, d in enumerate(drho_list):
        blocks, leak = spec.sld_eigenbasis(d, eig_tol)
        if leak > LEAK_TOL:
            leaks[i] = leak
        eig_slds.append((blocks, leak))
    if leaks:
        raise SupportLeakError(leaks)

    q = np.zeros((n, n))
    for k, (lam, _) in enumerate(spec.parts):
        for i in range(n):
            li = eig_slds[i][0][k]
            for j in range(i, n):
                lj = eig_slds[j][0][k]
                # Re Tr(rho L_i L_j) with rho diagonal in this basis
                q[i, j] += np.real(np.einsum("m,mn,nm->", lam, li, lj))
    q = np.triu(q) + np.triu(q, 1).T

    projector = spec.projector()
    slds = tuple(SldOperator(spec.to_lab(b), projector, spec.support_dim, leak)
                 for b, leak in eig_slds)
    return _result(q, slds, spec.support_dim)


def _result(q, slds=(), support_dim=0) -> QfimResult:
    q = (q + q.T) / 2
    lam = np.linalg.eigvalsh(q) if q.size else np.zeros(0)
    lam_max = lam.max(initial=0.0)
    lam_min = lam.min() if lam.size else 0.0
    cond = lam_max / lam_min if lam_min > lam_max * np.finfo(float).tiny else np.inf
    return QfimResult(q, tuple(slds), numerical_rank(q) if q.size else 0, lam, float(cond),
                      support_dim)


def qfim_pure(psi, dpsi_list) -> QfimResult:
    """QFIM of a pure-state family from the state vector and its derivatives.

    ``Q_ij = 4 Re<d_i psi|d_j psi> + 4 <d_i psi|psi><d_j psi|psi>``. For a
    normalized family ``<psi|d psi>`` is imaginary, so the product term is real
    and equals ``-4 Re(<d_i psi|psi><psi|d_j psi>)``.
    """
    psi = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    dps = np.array([np.asarray(d, dtype=complex).ravel() for d in dpsi_list])
    n = len(dps)
    if n == 0:
        return _result(np.zeros((0, 0)), support_dim=1)
    gram = dps.conj() @ dps.T  # <d_i psi|d_j psi>
    ov = dps.conj() @ psi  # <d_i psi|psi>
    q = 4 * np.real(gram) + 4 * np.real(np.outer(ov, ov))
    return _result(q, support_dim=1)


def _op(x):
    return x.matrix if isinstance(x, SldOperator) else x


def weak_commutation(rho, l_i, l_j) -> float:
    """``|Tr(rho [L_i, L_j])|``; below ``1e-8`` the parameters are compatible on average."""
    total = 0j
    for r, a, b in zip(blocks_of(rho), blocks_of(_op(l_i)), blocks_of(_op(l_j))):
        total += np.trace(r @ (a @ b - b @ a))
    return float(abs(total))


def pure_saturation_check(psi, l_i, l_j) -> float:
    """``|Im <psi|L_i L_j|psi>|``; zero means the pure-state QCRB is attainable."""
    for l in (l_i, l_j):
        if isinstance(l, SldOperator) and l.support_dim > 1:
            raise InvalidForMixed(f"SLD has support of dimension {l.support_dim}; "
                                  "the saturation condition holds for pure states only")
    psi = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    a = dense(_op(l_i))
    b = dense(_op(l_j))
    return float(abs(np.imag(psi.conj() @ (a @ (b @ psi)))))


def model_qfim(model, theta, *, mode=None, eig_tol: float = EIG_TOL) -> QfimResult:
    """QFIM of ``model`` at ``theta`` through the SLD machinery."""
    rho = evaluate(model, theta)
    return qfim(rho, derivatives(model, theta, mode=mode), eig_tol=eig_tol)
