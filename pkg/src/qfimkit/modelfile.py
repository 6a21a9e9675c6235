"""JSON model files.

A model file names a zoo model and its construction parameters::

    {"model": "loss",
     "params": {"probe": "coherent", "alpha": 1.0, "parametrization": "phi"},
     "options": {"fock_cutoff": 30, "fd_step": 1e-5},
     "povm": "computational"}

``povm`` is optional. It is either a keyword (``"computational"``,
``"number"``, ``"direct_imaging"``) or a list of effects, each written as a
row-major list of interleaved real and imaginary parts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cfim import OutcomeDensity, Povm
from .core import StatisticalModel
from .errors import ModelError
from .zoo import build_model
from .zoo.superresolution import GaussianPsf, direct_imaging_density

_KEYS = {"model", "params", "options", "povm"}
_OPTIONS = {"fock_cutoff", "fd_step"}


@dataclass
class ModelSpec:
    name: str
    params: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    povm: object = None

    def build(self) -> StatisticalModel:
        return build_model(self.name, self.params, self.options)


def parse_spec(data) -> ModelSpec:
    if not isinstance(data, dict) or "model" not in data:
        raise ModelError("model file must be a JSON object with a 'model' field")
    unknown = set(data) - _KEYS
    if unknown:
        raise ModelError(f"unknown model-file fields: {sorted(unknown)}")
    options = data.get("options") or {}
    bad = set(options) - _OPTIONS
    if bad:
        raise ModelError(f"unknown options: {sorted(bad)}; allowed: {sorted(_OPTIONS)}")
    return ModelSpec(str(data["model"]), dict(data.get("params") or {}), dict(options),
                     data.get("povm"))


def load_spec(path) -> ModelSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc})") from exc
    return parse_spec(data)


def effect_from_interleaved(values, dim: int | None = None) -> np.ndarray:
    """Rebuild a complex matrix from row-major interleaved ``re, im`` numbers."""
    flat = np.asarray(values, dtype=float).ravel()
    if flat.size % 2:
        raise ModelError("interleaved complex data needs an even number of entries")
    z = flat[0::2] + 1j * flat[1::2]
    n = int(round(np.sqrt(z.size)))
    if n * n != z.size or (dim is not None and n != dim):
        raise ModelError(f"effect with {z.size} entries is not a {dim or n}x{dim or n} matrix")
    return z.reshape(n, n)


def effect_to_interleaved(m) -> list:
    m = np.asarray(m, dtype=complex).ravel()
    return np.column_stack([m.real, m.imag]).ravel().tolist()


def build_measurement(spec: ModelSpec, model: StatisticalModel):
    """The POVM named in the model file: a :class:`Povm` or an :class:`OutcomeDensity`.

    Without an explicit ``povm`` the computational basis of the model's
    representation is used (the number basis for the optical models), and the
    direct-imaging density for ``superresolution3``.
    """
    povm = spec.povm
    if povm is None:
        povm = "direct_imaging" if model.name == "superresolution3" else "computational"
    if isinstance(povm, str):
        if povm in ("computational", "number"):
            return Povm.computational(model.dim)
        if povm == "direct_imaging":
            if model.name != "superresolution3":
                raise ModelError("direct_imaging applies to superresolution3 only")
            return direct_imaging_density(GaussianPsf(model.info["sigma"]), model.info["s"])
        raise ModelError(f"unknown POVM keyword {povm!r}")
    try:
        return Povm([effect_from_interleaved(e, model.dim) for e in povm])
    except ValueError as exc:
        raise ModelError(f"invalid POVM: {exc}") from exc


__all__ = ["ModelSpec", "parse_spec", "load_spec", "build_measurement", "OutcomeDensity",
           "effect_from_interleaved", "effect_to_interleaved"]
