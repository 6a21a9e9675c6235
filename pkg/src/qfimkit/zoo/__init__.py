"""Worked estimation models with closed-form reference QFIMs."""

from __future__ import annotations

import dataclasses

import numpy as np

from ..core import random_pure_state
from ..errors import ModelError
from .loss import loss_model
from .phase import multiphase_coherent, phase_model, twirl
from .rotation import RotationChart, SpinSystem, c_matrix, factored_qfim, rotation_model
from .superresolution import (
    GaussianPsf, closed_form_qfim, direct_imaging_density, superresolution3,
)
from .toy import toy_qubit

__all__ = [
    "GaussianPsf", "RotationChart", "SpinSystem", "build_model", "c_matrix",
    "closed_form_qfim", "direct_imaging_density", "factored_qfim", "loss_model",
    "multiphase_coherent", "phase_model", "rotation_model", "superresolution3",
    "toy_qubit", "twirl", "MODEL_NAMES",
]


def as_complex(v) -> complex:
    """JSON-friendly complex: a number or a ``[re, im]`` pair."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ModelError(f"complex values are written as [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _rotation_probe(spec, spin: SpinSystem):
    kind = spec.get("kind", "random")
    if kind == "random":
        return random_pure_state(spin.dim, np.random.default_rng(spec.get("seed", 0)))
    if kind == "eigenstate":
        return spin.eigenstate(spec.get("axis", [1.0, 0.0, 0.0]), spec.get("m"))
    if kind == "vector":
        re = np.asarray(spec["re"], dtype=float)
        im = np.asarray(spec.get("im", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    raise ModelError(f"unknown rotation probe kind {kind!r}")


def _toy(params, opts):
    return toy_qubit()


def _phase(params, opts):
    state = params.get("state")
    if state is not None:
        state = np.asarray([as_complex(v) for v in state])
    return phase_model(
        params.get("probe", "coherent"),
        alpha=as_complex(params.get("alpha", 1.0)),
        alpha_b=as_complex(params.get("alpha_b", 0.0)),
        n=tuple(params.get("n", (1, 0))),
        state=state,
        dims=params.get("dims"),
        referenced=bool(params.get("referenced", True)),
        fock_cutoff=opts.get("fock_cutoff"),
    )


def _multiphase(params, opts):
    if "alphas" not in params:
        raise ModelError("multiphase_coherent needs 'alphas'")
    return multiphase_coherent(
        [as_complex(a) for a in params["alphas"]],
        opts.get("fock_cutoff"),
        twirled=bool(params.get("twirled", True)),
        generator=params.get("generator", "reference"),
    )


def _rotation(params, opts):
    spin = SpinSystem(params.get("j", 1))
    probe = _rotation_probe(params.get("probe", {}), spin)
    return rotation_model(spin, probe, RotationChart(params.get("chart", "zyz")))


def _loss(params, opts):
    return loss_model(
        params.get("probe", "coherent"),
        params.get("parametrization", "eta"),
        alpha=as_complex(params.get("alpha", 1.0)),
        n=int(params.get("n", 1)),
        fock_cutoff=opts.get("fock_cutoff"),
    )


def _superresolution(params, opts):
    return superresolution3(GaussianPsf(float(params.get("sigma", 1.0))),
                            float(params.get("s", 0.0)), int(params.get("basis_dim", 40)))


_BUILDERS = {
    "toy_qubit": _toy,
    "phase": _phase,
    "multiphase_coherent": _multiphase,
    "rotation": _rotation,
    "loss": _loss,
    "superresolution3": _superresolution,
}
MODEL_NAMES = tuple(_BUILDERS)


def build_model(name: str, params: dict | None = None, options: dict | None = None):
    """Construct a zoo model by registry name.

    ``options`` may carry ``fock_cutoff`` and ``fd_step`` (the relative
    central-difference step).
    """
    if name not in _BUILDERS:
        raise ModelError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    options = dict(options or {})
    model = _BUILDERS[name](dict(params or {}), options)
    if options.get("fd_step") is not None:
        step = float(options["fd_step"])
        if not step > 0:
            raise ModelError("fd_step must be positive")
        model = dataclasses.replace(model, fd_step=step)
    return model
