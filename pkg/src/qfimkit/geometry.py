"""Fidelity, Bures distance and the Bures metric.

Convention: ``d_B(rho, rho + d rho)^2 = sum_ij g_ij d theta_i d theta_j`` with
``d_B^2 = 1 - F``, so ``4 g = Q`` wherever the rank of the state is constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import blocks_of, evaluate, numerical_rank
from .errors import BoundaryError, DimensionMismatch, QfimkitError, SupportLeakError
from .qfim import model_qfim

SQRT_CLAMP = 1e-14
METRIC_STEP = 1e-4
CALIBRATION_RTOL = 5e-4
RICHARDSON_RTOL = 1e-6


def _sqrt_blocks(rho):
    out = []
    for b in blocks_of(rho):
        lam, vec = np.linalg.eigh(b)
        lam = np.where(lam > SQRT_CLAMP, lam, 0.0)
        out.append((vec * np.sqrt(lam)) @ vec.conj().T)
    return out


def _fidelity_sqrt(s1, s2) -> float:
    if len(s1) != len(s2) or any(a.shape != b.shape for a, b in zip(s1, s2)):
        raise DimensionMismatch("states have different dimensions or block layouts")
    # Tr sqrt(sqrt(r1) r2 sqrt(r1)) is the trace norm of sqrt(r1) sqrt(r2);
    # singular values avoid square-rooting tiny eigenvalues a second time.
    root = sum(np.linalg.svd(a @ b, compute_uv=False).sum() for a, b in zip(s1, s2))
    return float(min(max(root * root, 0.0), 1.0))


def fidelity(rho1, rho2) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2``."""
    return _fidelity_sqrt(_sqrt_blocks(rho1), _sqrt_blocks(rho2))


def bures_distance(rho1, rho2) -> float:
    return float(np.sqrt(max(0.0, 1.0 - fidelity(rho1, rho2))))


def _metric_stencil(model, theta, h, on_boundary, f):
    """Symmetric second-difference estimate of ``f`` over the n(n+1)/2 directions.

    ``f(offset)`` must vanish at zero offset to second order, i.e. behave like
    ``offset^T G offset``; returns ``G``.
    """
    th = model.point(theta).as_array()
    n = th.size
    steps = h * np.maximum(1.0, np.abs(th))

    def in_domain(v):
        return all(x in iv for x, iv in zip(th + v, model.domain))

    def quad(v):
        sides = [s for s in (v, -v) if in_domain(s)]
        if len(sides) < 2:
            if on_boundary == "raise" or not sides:
                raise BoundaryError(f"metric stencil at {th.tolist()} leaves the domain")
        return np.mean([f(s) for s in sides])

    g = np.zeros((n, n))
    for i in range(n):
        v = np.zeros(n)
        v[i] = steps[i]
        g[i, i] = quad(v) / steps[i] ** 2
    for i in range(n):
        for j in range(i + 1, n):
            v = np.zeros(n)
            v[i], v[j] = steps[i], steps[j]
            s = quad(v)
            g[i, j] = g[j, i] = (s - g[i, i] * steps[i] ** 2 - g[j, j] * steps[j] ** 2) / (
                2 * steps[i] * steps[j])
    return g


def bures_metric_fd(model, theta, h: float = METRIC_STEP, *, on_boundary: str = "raise",
                    refine: bool = True) -> np.ndarray:
    """Bures metric from second differences of ``1 - F(rho_theta, rho_theta+delta)``.

    ``h`` is relative: the offset along parameter ``i`` is ``h * max(1, |theta_i|)``.
    With ``refine`` the estimate is repeated at ``2h`` and Richardson-combined
    when the two disagree by more than ``1e-6`` relative.
    ``on_boundary="one-sided"`` accepts a single-sided stencil at the edge of
    the domain instead of raising :class:`BoundaryError`.
    """
    pt = model.point(theta)
    th = pt.as_array()
    s0 = _sqrt_blocks(evaluate(model, pt))

    def dist2(offset):
        return 1.0 - _fidelity_sqrt(s0, _sqrt_blocks(evaluate(model, th + offset)))

    g = _metric_stencil(model, th, h, on_boundary, dist2)
    if refine:
        try:
            g2 = _metric_stencil(model, th, 2 * h, on_boundary, dist2)
        except BoundaryError:
            return g
        scale = max(1.0, np.max(np.abs(g)))
        if np.max(np.abs(g - g2)) > RICHARDSON_RTOL * scale:
            g = (4 * g - g2) / 3
    return g


def _vanishing_count(rho) -> int:
    return sum(b.shape[0] for b in blocks_of(rho)) - numerical_rank(rho)


def bures_correction(model, theta, h: float = METRIC_STEP) -> np.ndarray:
    """Twice the parameter Hessian of the eigenvalues that vanish at ``theta``.

    Where the rank drops, ``4 g = Q + correction``; elsewhere the correction is
    zero up to finite-difference noise.
    """
    pt = model.point(theta)
    th = pt.as_array()
    k = _vanishing_count(evaluate(model, pt))
    if k == 0:
        return np.zeros((th.size, th.size))

    def low(offset):
        lam = np.sort(np.concatenate([np.linalg.eigvalsh(b) for b in
                                      blocks_of(evaluate(model, th + offset))]))
        return lam[:k].sum()

    base = low(np.zeros_like(th))
    # the stencil averages f(v) and f(-v), so this yields the Hessian / 2
    return 4 * _metric_stencil(model, th, h, "one-sided", lambda v: low(v) - base)


@dataclass
class DiscontinuityReport:
    path: list
    rank_profile: list
    qfim_profile: list
    bures_profile: list
    mismatch_flags: list
    mismatch_norms: list
    rank_drop_flags: list = field(default_factory=list)
    corrections: list = field(default_factory=list)
    statuses: list = field(default_factory=list)

    def to_dict(self) -> dict:
        rows = []
        for k, pt in enumerate(self.path):
            q = self.qfim_profile[k]
            g = self.bures_profile[k]
            c = self.corrections[k]
            rows.append({
                "theta": pt.as_dict(),
                "rank": self.rank_profile[k],
                "rank_drop": self.rank_drop_flags[k],
                "qfim": None if q is None else q.matrix.tolist(),
                "bures_4g": None if g is None else (4 * g).tolist(),
                "correction": None if c is None else c.tolist(),
                "mismatch": self.mismatch_flags[k],
                "mismatch_norm": _finite_or_none(self.mismatch_norms[k]),
                "status": self.statuses[k],
            })
        return {"points": rows}


def _finite_or_none(x):
    return float(x) if x is not None and np.isfinite(x) else None


def discontinuity_scan(model, path, h: float = METRIC_STEP) -> DiscontinuityReport:
    """Compare the SLD QFIM with ``4 x`` the Bures metric along ``path``.

    A point is flagged when ``max|4 g - Q| > 10 * 5e-4 * max(1, max|Q|)`` or
    when the QFIM cannot be formed because the derivative leaks out of the
    support. Points whose state rank is below the largest rank on the path are
    marked in ``rank_drop_flags`` and carry the eigenvalue-Hessian correction.
    Per-point failures are recorded in ``statuses`` rather than raised.
    """
    pts = [model.point(p) for p in path]
    ranks, qs, gs, flags, norms, statuses = [], [], [], [], [], []
    for pt in pts:
        status = []
        rho = evaluate(model, pt)
        ranks.append(numerical_rank(rho))
        q = None
        try:
            q = model_qfim(model, pt)
        except SupportLeakError as exc:
            status.append(f"support-leak({exc.leak_norm:.3g})")
        g = None
        try:
            g = bures_metric_fd(model, pt, h, on_boundary="one-sided")
        except QfimkitError as exc:
            status.append(f"bures-failed({type(exc).__name__})")
        if q is not None and g is not None:
            norm = float(np.max(np.abs(4 * g - q.matrix)))
            tol = 10 * CALIBRATION_RTOL * max(1.0, float(np.max(np.abs(q.matrix))))
            flag = norm > tol
        else:
            norm, flag = (np.inf, True) if q is None else (None, False)
        if flag:
            status.append("mismatch")
        qs.append(q)
        gs.append(g)
        flags.append(bool(flag))
        norms.append(norm)
        statuses.append(status)

    top = max(ranks) if ranks else 0
    drops = [r < top for r in ranks]
    corrections = []
    for pt, drop, status in zip(pts, drops, statuses):
        corrections.append(bures_correction(model, pt, h) if drop else None)
        if drop:
            status.insert(0, "rank-drop")
    statuses = [";".join(s) if s else "ok" for s in statuses]
    return DiscontinuityReport(pts, ranks, qs, gs, flags, norms, drops, corrections, statuses)
