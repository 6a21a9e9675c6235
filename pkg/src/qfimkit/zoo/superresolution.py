"""Three incoherent point sources with a known centroid.

Sources sit at ``s + d1``, ``s + d2`` and ``s - d1 - d2``. The image-plane
state is ``rho = (1/3) sum_i |psi_i><psi_i|`` with ``psi_i(x) = psi(x - x_i)``.
For a Gaussian PSF of width ``sigma`` a shifted PSF is a coherent state of
amplitude ``(x_i - s) / (2 sigma)`` in the Hermite-Gauss basis centred on
``s``, which is how the state is represented here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cfim import OutcomeDensity
from ..core import REAL_LINE, StatisticalModel
from ..errors import CutoffError, ModelError
from .fock import coherent_amplitudes, coherent_derivative, normalized

RESIDUAL_TOL = 1e-10
# d x_i / d (d1, d2)
POSITION_JACOBIAN = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])


@dataclass(frozen=True)
class GaussianPsf:
    """``psi(x) = (2 pi sigma^2)^(-1/4) exp(-x^2 / (4 sigma^2))``; ``|psi|^2`` has std ``sigma``."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ModelError(f"PSF width must be positive, got {self.sigma!r}")

    def amplitude_fn(self, x):
        s = self.sigma
        return (2 * np.pi * s * s) ** -0.25 * np.exp(-np.asarray(x) ** 2 / (4 * s * s))

    @property
    def alpha(self) -> float:
        """``<psi|P^2|psi> = 1 / (4 sigma^2)``."""
        return 1.0 / (4 * self.sigma ** 2)

    def overlap(self, dx):
        """``<psi_i|psi_j>`` for sources separated by ``dx = x_i - x_j``."""
        return np.exp(-np.asarray(dx) ** 2 / (8 * self.sigma ** 2))

    def momentum_overlap(self, dx):
        """Real ``b`` with ``<psi_i|P|psi_j> = i b``, for ``dx = x_i - x_j``."""
        return self.overlap(dx) * np.asarray(dx) / (4 * self.sigma ** 2)


def positions(d1: float, d2: float, s: float = 0.0) -> np.ndarray:
    return np.array([s + d1, s + d2, s - d1 - d2])


def overlaps(psf: GaussianPsf, d1: float, d2: float):
    """``(gamma, beta)``: 3x3 matrices of ``<psi_i|psi_j>`` and ``b_ij``."""
    x = positions(d1, d2)
    dx = x[:, None] - x[None, :]
    return psf.overlap(dx), psf.momentum_overlap(dx)


def closed_form_qfim(psf: GaussianPsf, d1: float, d2: float) -> np.ndarray:
    """Closed-form QFIM in ``(d1, d2)`` from the overlaps ``gamma_ij``, ``b_ij``."""
    a = psf.alpha
    g, b = overlaps(psf, d1, d2)
    g12, g13, g23 = g[0, 1], g[0, 2], g[1, 2]
    b21, b23, b13 = b[1, 0], b[1, 2], b[0, 2]
    den = g12 ** 2 + g13 ** 2 + g23 ** 2 + g12 * g13 * g23 - 4

    def q11_of(g12, g23, g13, b21, b23):
        num = (b21 ** 2 * (4 - g12 ** 2) + b23 ** 2 * (4 - g23 ** 2)
               + 2 * b21 * b23 * (g12 * g23 + 2 * g13))
        return 2 / 3 * (4 * a + num / den)

    q11 = q11_of(g12, g23, g13, b21, b23)
    num12 = (b21 ** 2 * (g12 ** 2 - 4) + b13 * b23 * (2 * g12 + g13 * g23)
             + b21 * (b13 * (2 * g23 + g12 * g13) - b23 * (2 * g13 + g12 * g23)))
    q12 = 2 / 3 * (2 * a - num12 / den)
    # swapping d1 and d2 exchanges sources 1 and 2
    g2, b2 = overlaps(psf, d2, d1)
    q22 = q11_of(g2[0, 1], g2[1, 2], g2[0, 2], b2[1, 0], b2[1, 2])
    return np.array([[q11, q12], [q12, q22]])


def _kets(psf, th, dim):
    betas = np.array([th[0], th[1], -th[0] - th[1]]) / (2 * psf.sigma)
    kets, dkets = [], []
    for beta in betas:
        v = coherent_amplitudes(beta, dim)
        residual = 1.0 - np.vdot(v, v).real
        if residual > RESIDUAL_TOL:
            raise CutoffError(
                f"Hermite-Gauss basis of size {dim} misses {residual:.3e} of a PSF shifted "
                f"by {2 * psf.sigma * beta:.4g}")
        psi, (dpsi,) = normalized(v, [coherent_derivative(beta, 1.0 / (2 * psf.sigma), dim)])
        kets.append(psi)
        dkets.append(dpsi)
    return kets, dkets


def superresolution3(psf: GaussianPsf | None = None, s: float = 0.0,
                     basis_dim: int = 40) -> StatisticalModel:
    """Separations ``(d1, d2)`` of three equally bright sources around centroid ``s``.

    The state lives in the first ``basis_dim`` Hermite-Gauss modes; a
    :class:`CutoffError` is raised at points where a shifted PSF loses more
    than ``1e-10`` of its norm to truncation. ``reference_qfim`` is the closed
    form, which stays continuous across ``d1 = -d2/2`` where sources 1 and 3
    coincide and the state loses rank.
    """
    psf = GaussianPsf() if psf is None else psf
    dim = int(basis_dim)

    def state_fn(th):
        kets, _ = _kets(psf, th, dim)
        return sum(np.outer(v, v.conj()) for v in kets) / 3

    def derivative_fn(th):
        kets, dkets = _kets(psf, th, dim)
        out = []
        for a in range(2):
            d = sum(POSITION_JACOBIAN[i, a] * np.outer(dkets[i], kets[i].conj())
                    for i in range(3)) / 3
            out.append(d + d.conj().T)
        return out

    def reference(th):
        return closed_form_qfim(psf, th[0], th[1])

    return StatisticalModel(
        name="superresolution3",
        param_names=("d1", "d2"),
        dim=dim,
        state_fn=state_fn,
        domain=(REAL_LINE, REAL_LINE),
        derivative_fn=derivative_fn,
        reference_qfim=reference,
        info={"sigma": psf.sigma, "s": s, "basis_dim": dim, "psf": psf},
    )


def direct_imaging_density(psf: GaussianPsf | None = None, s: float = 0.0,
                           half_width: float | None = None) -> OutcomeDensity:
    """Image-plane intensity ``p(x | d1, d2) = (1/3) sum_i |psi(x - x_i)|^2``.

    The support is ``[s - half_width, s + half_width]``, ``8 sigma`` by default:
    the intensity of a source within ``2 sigma`` of ``s`` has tails below
    ``1e-7`` there, and 200 pixels across it resolve the PSF finely enough.
    """
    psf = GaussianPsf() if psf is None else psf
    half_width = 8 * psf.sigma if half_width is None else half_width

    def density(x, th):
        x = np.asarray(x, dtype=float)
        pos = positions(th[0], th[1], s)
        return sum(psf.amplitude_fn(x - p) ** 2 for p in pos) / 3

    return OutcomeDensity(density, (s - half_width, s + half_width))
