"""Absorption estimation through the beam splitter ``a -> eta a + sqrt(1 - eta^2) b``.

The transmitted mode is kept and the environment traced out. A coherent
probe stays pure, ``|eta alpha>``; a number state becomes a binomial
mixture of number states with success probability ``eta^2``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import comb

from ..core import Interval, StatisticalModel
from ..errors import ModelError
from .fock import check_tail, coherent_ket, default_cutoff

_CHARTS = {
    # eta(t), d eta / d t
    "eta": (lambda t: t, lambda t: 1.0, Interval(0.0, 1.0)),
    "phi": (np.cos, lambda t: -np.sin(t), Interval(0.0, np.pi / 2)),
}


def binomial_weights(n: int, x: float) -> np.ndarray:
    """``C(n, k) x^k (1 - x)^(n - k)`` for ``k = 0..n``."""
    k = np.arange(n + 1)
    return comb(n, k) * x ** k * (1.0 - x) ** (n - k)


def binomial_weights_dx(n: int, x: float) -> np.ndarray:
    """Derivative of :func:`binomial_weights` in ``x``."""
    k = np.arange(n + 1)
    c = comb(n, k)
    up = np.where(k > 0, k * x ** np.maximum(k - 1, 0), 0.0) * (1.0 - x) ** (n - k)
    down = np.where(n - k > 0, (n - k) * (1.0 - x) ** np.maximum(n - k - 1, 0), 0.0) * x ** k
    return c * (up - down)


def loss_model(probe: str = "coherent", parametrization: str = "eta", *, alpha: complex = 1.0,
               n: int = 1, fock_cutoff: int | None = None) -> StatisticalModel:
    """Transmissivity estimation with a coherent or number-state probe.

    ``parametrization="eta"`` uses the amplitude transmissivity on ``[0, 1]``;
    ``"phi"`` uses ``eta = cos(phi)`` on ``[0, pi/2]``.

    Closed forms: coherent ``Q(eta) = 4|alpha|^2`` and
    ``Q(phi) = 4|alpha|^2 sin(phi)^2``; number state ``Q(eta) = 4n/(1 - eta^2)``
    and ``Q(phi) = 4n``.
    """
    if parametrization not in _CHARTS:
        raise ModelError(f"unknown loss parametrization {parametrization!r}")
    eta_of, deta, domain = _CHARTS[parametrization]

    if probe == "coherent":
        cut = default_cutoff(alpha) if fock_cutoff is None else int(fock_cutoff)
        check_tail(alpha, cut)
        dim = cut + 1

        def ket_fn(th):
            eta = eta_of(th[0])
            psi, (dpsi,) = coherent_ket(eta * alpha, dim, [deta(th[0]) * alpha])
            return psi, [dpsi]

        def state_fn(th):
            psi = ket_fn(th)[0]
            return np.outer(psi, psi.conj())

        def derivative_fn(th):
            psi, (dpsi,) = ket_fn(th)
            d = np.outer(dpsi, psi.conj())
            return [d + d.conj().T]

        a2 = abs(alpha) ** 2
        if parametrization == "eta":
            def reference(th):
                return np.array([[4 * a2]])
        else:
            def reference(th):
                return np.array([[4 * a2 * np.sin(th[0]) ** 2]])
        info = {"probe": "coherent", "alpha": complex(alpha), "fock_cutoff": cut}
    elif probe == "fock":
        n = int(n)
        if n < 0:
            raise ModelError("photon number must be non-negative")
        dim = n + 1
        ket_fn = None

        def state_fn(th):
            return np.diag(binomial_weights(n, eta_of(th[0]) ** 2)).astype(complex)

        def derivative_fn(th):
            eta = eta_of(th[0])
            dx = 2 * eta * deta(th[0])
            return [np.diag(dx * binomial_weights_dx(n, eta ** 2)).astype(complex)]

        if parametrization == "eta":
            def reference(th):
                return np.array([[4 * n / (1 - th[0] ** 2)]])
        else:
            def reference(th):
                return np.array([[4.0 * n]])
        info = {"probe": "fock", "n": n}
    else:
        raise ModelError(f"unknown loss probe {probe!r}")

    info["parametrization"] = parametrization
    return StatisticalModel(
        name="loss",
        param_names=(parametrization,),
        dim=dim,
        state_fn=state_fn,
        domain=(domain,),
        derivative_fn=derivative_fn,
        ket_fn=ket_fn,
        reference_qfim=reference,
        info=info,
    )


def eta_jacobian(phi: float) -> np.ndarray:
    """``d eta / d phi`` as a 1x1 Jacobian for :func:`reparametrize`."""
    return np.array([[-np.sin(phi)]])
