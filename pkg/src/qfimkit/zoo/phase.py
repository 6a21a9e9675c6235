"""Phase estimation with and without a shared phase reference.

Without a reference the probe is replaced by its average over total-photon
phases (the twirl), which removes every coherence between sectors of
different total photon number. Twirled states are stored as one block per
sector.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from ..core import BlockDiag, REAL_LINE, StatisticalModel, dense
from ..errors import CutoffError, ModelError
from .fock import TAIL_TOL, check_tail, coherent_ket, default_cutoff, fock_ket


class SectorLayout:
    """Basis bookkeeping for a truncated multimode Fock space.

    ``totals[k]`` is the total photon number of basis state ``k``; ``order``
    sorts the basis by total number, which makes twirled operators block
    diagonal.
    """

    def __init__(self, totals):
        self.totals = np.asarray(totals)
        self.order = np.argsort(self.totals, kind="stable")
        sorted_totals = self.totals[self.order]
        self.sectors, starts = np.unique(sorted_totals, return_index=True)
        self.bounds = list(zip(starts, list(starts[1:]) + [len(sorted_totals)]))

    @classmethod
    def product(cls, dims) -> "SectorLayout":
        grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
        return cls(sum(g.ravel() for g in grids))

    @property
    def dim(self) -> int:
        return self.totals.size

    def to_blocks(self, op) -> BlockDiag:
        """Sector blocks of a (twirled) operator given in the product basis."""
        m = dense(op)[np.ix_(self.order, self.order)]
        return BlockDiag(m[a:b, a:b] for a, b in self.bounds)

    def split(self, vec) -> list:
        v = np.asarray(vec)[self.order]
        return [v[a:b] for a, b in self.bounds]


def twirl(rho, dims) -> np.ndarray:
    """Average over ``exp(i phi N)``: zero all entries between different totals.

    The result is idempotent, trace preserving and commutes with ``N``.
    """
    if isinstance(rho, BlockDiag):
        return rho
    layout = SectorLayout.product(dims)
    rho = np.asarray(rho)
    if rho.shape != (layout.dim, layout.dim):
        raise ModelError(f"operator shape {rho.shape} does not match mode dimensions {dims}")
    same = layout.totals[:, None] == layout.totals[None, :]
    return np.where(same, rho, 0)


def _phase_eval(rho0, g, twirled, layout):
    """State and derivative factories for ``U = exp(i theta G)``, ``G = diag(g)``."""
    if twirled:
        blocks = list(layout.to_blocks(rho0).blocks)
        gs = layout.split(g)
    else:
        blocks, gs = [np.asarray(rho0)], [np.asarray(g, dtype=float)]
    diffs = [gb[:, None] - gb[None, :] for gb in gs]

    def rotate(th):
        return [b * np.exp(1j * th[0] * dg) for b, dg in zip(blocks, diffs)]

    def pack(bs):
        return BlockDiag(bs) if twirled else bs[0]

    def state(th):
        return pack(rotate(th))

    def derivative(th):
        return [pack([1j * dg * b for b, dg in zip(rotate(th), diffs)])]

    return state, derivative


def _variance(psi, g):
    w = np.abs(psi) ** 2
    w = w / w.sum()
    mean = w @ g
    return float(w @ (g - mean) ** 2)


def phase_model(probe: str = "coherent", *, alpha: complex = 1.0, alpha_b: complex = 0.0,
                n=(1, 0), state=None, dims=None, referenced: bool = True,
                fock_cutoff=None) -> StatisticalModel:
    """Two-mode phase estimation with ``U = exp(i theta (n_a - n_b))``.

    Parameters
    ----------
    probe
        ``"coherent"`` (amplitudes ``alpha``, ``alpha_b`` in modes a, b),
        ``"number"`` (``|n_a, n_b>``) or ``"custom"`` (``state`` is a vector or
        density matrix on the product space with mode dimensions ``dims``).
    referenced
        With ``False`` the probe is twirled before the phase is imprinted.
    fock_cutoff
        Largest photon number kept per mode, an int or a pair. Coherent probes
        default to ``ceil(|alpha|^2 + 8|alpha| + 20)`` and must leave a tail
        below ``1e-10``.

    Raises
    ------
    CutoffError
        If the cutoff truncates more than the tail tolerance.
    """
    if fock_cutoff is not None and np.ndim(fock_cutoff) == 0:
        fock_cutoff = (int(fock_cutoff), int(fock_cutoff))
    pure = True
    if probe == "coherent":
        cut = fock_cutoff or (default_cutoff(alpha), default_cutoff(alpha_b))
        check_tail(alpha, cut[0])
        check_tail(alpha_b, cut[1])
        dims = (cut[0] + 1, cut[1] + 1)
        psi = np.kron(coherent_ket(alpha, dims[0])[0], coherent_ket(alpha_b, dims[1])[0])
        info = {"probe": "coherent", "alpha": complex(alpha), "alpha_b": complex(alpha_b)}
    elif probe == "number":
        na, nb = (int(k) for k in n)
        cut = fock_cutoff or (na, nb)
        dims = (cut[0] + 1, cut[1] + 1)
        psi = np.kron(fock_ket(na, dims[0]), fock_ket(nb, dims[1]))
        info = {"probe": "number", "n": (na, nb)}
    elif probe == "custom":
        if state is None or dims is None:
            raise ModelError("a custom probe needs both 'state' and 'dims'")
        dims = tuple(int(d) for d in dims)
        state = np.asarray(state, dtype=complex)
        info = {"probe": "custom"}
        if state.ndim == 1:
            psi = state / np.linalg.norm(state)
        else:
            pure, psi = False, None
            rho0 = state
    else:
        raise ModelError(f"unknown phase probe {probe!r}")
    if pure:
        if psi.size != dims[0] * dims[1]:
            raise ModelError(f"probe vector has {psi.size} entries, expected {dims[0] * dims[1]}")
        rho0 = np.outer(psi, psi.conj())

    layout = SectorLayout.product(dims)
    na_idx, nb_idx = np.divmod(np.arange(layout.dim), dims[1])
    g = (na_idx - nb_idx).astype(float)
    state_fn, derivative_fn = _phase_eval(rho0 if referenced else twirl(rho0, dims), g,
                                          not referenced, layout)

    ket_fn = reference = None
    if pure and referenced:
        q = 4 * _variance(psi, g)

        def ket_fn(th):
            ph = np.exp(1j * th[0] * g) * psi
            return ph, [1j * g * ph]

        def reference(th):
            return np.array([[q]])
    elif pure:
        weights = [np.sum(np.abs(v) ** 2) for v in layout.split(psi)]
        q = 4 * sum(w * _variance(v, gb) for w, v, gb in
                    zip(weights, layout.split(psi), layout.split(g)) if w > 0)

        def reference(th):
            return np.array([[q]])

    info.update({"dims": dims, "referenced": referenced})
    return StatisticalModel(
        name="phase",
        param_names=("theta",),
        dim=layout.dim,
        state_fn=state_fn,
        domain=(REAL_LINE,),
        derivative_fn=derivative_fn,
        ket_fn=ket_fn,
        reference_qfim=reference,
        info=info,
    )


def total_cutoff(mean: float, tol: float = TAIL_TOL) -> int:
    """Smallest ``K`` with Poisson tail ``P(N > K) < tol`` at the given mean."""
    k = int(np.ceil(mean))
    while poisson.sf(k, mean) >= tol:
        k += 1
    return k


def _compositions(total: int, parts: int) -> np.ndarray:
    """All ``parts``-tuples of non-negative ints summing to ``total``."""
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + bars + (total + parts - 1,)
        rows.append([edges[k + 1] - edges[k] - 1 for k in range(parts)])
    return np.array(rows, dtype=int).reshape(-1, parts)


def multiphase_coherent(alphas, fock_cutoff: int | None = None, *, twirled: bool = True,
                        generator: str = "reference") -> StatisticalModel:
    """Simultaneous estimation of ``d`` phases with coherent probes in ``d + 1`` modes.

    Mode 0 is the reference arm. With ``generator="reference"`` parameter
    ``theta_i`` multiplies ``n_i``; with ``"relative"`` it multiplies
    ``n_i - n_0``. The twirled probe is a Poisson mixture of multinomial pure
    states, one per total photon number ``N``, stored as sector blocks.

    ``fock_cutoff`` bounds the total photon number. The default is the
    smallest ``K`` with Poisson tail below ``1e-10`` at the mean ``sum |alpha_i|^2``;
    since each mode carries at most the total, the per-mode tails are smaller
    still.
    """
    alphas = np.asarray(alphas, dtype=complex).ravel()
    if alphas.size < 2:
        raise ModelError("multiphase estimation needs at least two modes")
    if generator not in ("reference", "relative"):
        raise ModelError(f"unknown generator convention {generator!r}")
    d = alphas.size - 1
    mean = float(np.sum(np.abs(alphas) ** 2))
    if mean == 0:
        raise ModelError("all modes are in the vacuum")
    k_max = total_cutoff(mean) if fock_cutoff is None else int(fock_cutoff)
    tail = float(poisson.sf(k_max, mean))
    if tail >= TAIL_TOL:
        raise CutoffError(f"total-photon cutoff {k_max} leaves a tail of {tail:.3e}")

    amps = alphas / np.sqrt(mean)
    weights = poisson.pmf(np.arange(k_max + 1), mean)
    weights = weights / weights.sum()
    coeff = np.zeros((d, d + 1))
    coeff[:, 1:] = np.eye(d)
    if generator == "relative":
        coeff[:, 0] = -1.0

    kets, gens = [], []
    for total in range(k_max + 1):
        counts = _compositions(total, d + 1)
        log_mult = gammaln(total + 1) - gammaln(counts + 1).sum(axis=1)
        psi = np.exp(0.5 * log_mult) * np.prod(amps[None, :] ** counts, axis=1)
        kets.append(psi.astype(complex))
        gens.append(counts @ coeff.T)  # (sector size, d)

    def phased(th):
        return [np.exp(1j * (g @ th)) * psi for psi, g in zip(kets, gens)]

    if twirled:
        def state_fn(th):
            return BlockDiag(w * np.outer(v, v.conj()) for w, v in zip(weights, phased(th)))

        def derivative_fn(th):
            out = []
            vs = phased(th)
            for i in range(d):
                out.append(BlockDiag(
                    w * 1j * (g[:, i][:, None] - g[:, i][None, :]) * np.outer(v, v.conj())
                    for w, v, g in zip(weights, vs, gens)))
            return out

        ket_fn = None
    else:
        root = np.sqrt(weights)
        flat_g = np.concatenate(gens)

        def ket_fn(th):
            psi = np.concatenate([r * v for r, v in zip(root, phased(th))])
            return psi, [1j * flat_g[:, i] * psi for i in range(d)]

        def state_fn(th):
            psi = ket_fn(th)[0]
            return np.outer(psi, psi.conj())

        derivative_fn = None

    q_all = np.abs(amps) ** 2
    cov = np.diag(q_all) - (np.outer(q_all, q_all) if twirled else 0)
    q_ref = 4 * mean * coeff @ cov @ coeff.T

    def reference(th):
        return q_ref.copy()

    dim = sum(v.size for v in kets)
    return StatisticalModel(
        name="multiphase_coherent",
        param_names=tuple(f"theta{i}" for i in range(1, d + 1)),
        dim=dim,
        state_fn=state_fn,
        domain=(REAL_LINE,) * d,
        derivative_fn=derivative_fn,
        ket_fn=ket_fn,
        reference_qfim=reference,
        info={"alphas": alphas.tolist(), "total_cutoff": k_max, "twirled": twirled,
              "generator": generator, "tail": tail},
    )


def closed_form_determinant(alphas) -> float:
    """``4^d prod_i |alpha_i|^2 / sum_i |alpha_i|^2`` over all ``d + 1`` modes."""
    a2 = np.abs(np.asarray(alphas, dtype=complex)) ** 2
    return float(4.0 ** (a2.size - 1) * np.prod(a2) / a2.sum())
