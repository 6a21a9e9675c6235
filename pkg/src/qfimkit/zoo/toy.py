"""Classical-mixture qubit ``rho_p = p|0><0| + (1 - p)|1><1|``."""

from __future__ import annotations

import numpy as np

from ..core import Interval, StatisticalModel


def _state(th):
    p = th[0]
    return np.diag([p, 1.0 - p]).astype(complex)


def _derivative(th):
    return [np.diag([1.0, -1.0]).astype(complex)]


def _reference(th):
    p = th[0]
    return np.array([[1.0 / (p * (1.0 - p))]])


def toy_qubit() -> StatisticalModel:
    """One parameter ``p`` on ``[0, 1]``; ``Q = 1/(p(1-p))`` in the interior.

    At ``p = 0`` and ``p = 1`` the state is pure and its derivative points out
    of the support, so the SLD machinery raises :class:`SupportLeakError`.
    """
    return StatisticalModel(
        name="toy_qubit",
        param_names=("p",),
        dim=2,
        state_fn=_state,
        domain=(Interval(0.0, 1.0),),
        derivative_fn=_derivative,
        reference_qfim=_reference,
        info={},
    )
