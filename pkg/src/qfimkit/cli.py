"""Command-line front end.

Subcommands ``eval``, ``sweep``, ``scan``, ``cfim``, ``bounds`` and
``mle-demo``. Exit codes: 0 success, 1 usage error, 2 model error (bad model
file, parameter outside the domain, truncation failure), 3 numerical
failure (rank change at the evaluation point, quadrature or range errors).

Random numbers come from numpy's PCG64 generator seeded with ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys

import numpy as np

from .bounds import (
    COND_LIMIT, WeightMatrix, cartan_weight_rotation, crb_classical, qcrb, weighted_bound,
)
from .cfim import OutcomeDensity, cfim_continuous, cfim_discrete
from .core import derivatives, evaluate, numerical_rank
from .errors import DomainError, ModelError, QfimkitError, SupportLeakError
from .geometry import bures_metric_fd, discontinuity_scan
from .modelfile import build_measurement, load_spec
from .qfim import qfim

EXIT_OK, EXIT_USAGE, EXIT_MODEL, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUTS = ("qfim", "cfim", "bures", "bounds")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- argument parsing helpers -------------------------------------------------

def parse_assignments(text: str | None) -> dict:
    """``"a=1,b=2.5"`` -> ``{"a": 1.0, "b": 2.5}``."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"expected k=v, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"{key.strip()}: {value!r} is not a number") from None
    return out


def parse_grid(text: str) -> tuple:
    """``"k=a:b:n"`` (inclusive linspace) or ``"k=v1,v2,..."``."""
    key, sep, body = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise UsageError(f"expected k=a:b:n or k=v1,v2, got {text!r}")
    try:
        if ":" in body:
            a, b, n = body.split(":")
            if float(n) != int(float(n)):
                raise ValueError
            values = np.linspace(float(a), float(b), int(float(n)))
        else:
            values = np.array([float(v) for v in body.split(",") if v.strip()])
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None
    if values.size == 0:
        raise UsageError(f"grid for {key} is empty")
    return key, values


def grid_points(model, at: dict, grids: list) -> list:
    """Points of the product grid in lexicographic order of the model's parameters."""
    if not grids:
        raise UsageError("at least one --grid is required")
    axes = dict(grids)
    if len(axes) != len(grids):
        raise UsageError("a parameter appears in more than one --grid")
    unknown = (set(axes) | set(at)) - set(model.param_names)
    if unknown:
        raise UsageError(f"unknown parameters {sorted(unknown)}; model has {model.param_names}")
    missing = [k for k in model.param_names if k not in axes and k not in at]
    if missing:
        raise UsageError(f"no value for parameters {missing}; use --at or --grid")
    per_param = [axes[k] if k in axes else np.array([at[k]]) for k in model.param_names]
    return [dict(zip(model.param_names, combo)) for combo in itertools.product(*per_param)]


def _theta(model, at: dict) -> dict:
    unknown = set(at) - set(model.param_names)
    missing = [k for k in model.param_names if k not in at]
    if unknown or missing:
        raise UsageError(f"--at must set exactly {', '.join(model.param_names)}")
    return at


def _weight(text, model, theta):
    if text is None:
        return None
    if text == "cartan":
        if model.name != "rotation":
            raise UsageError("--weight cartan applies to the rotation model only")
        th = model.point(theta).as_array()
        return cartan_weight_rotation(th, model.info["chart"])
    try:
        w = np.array(json.loads(text), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise UsageError(f"--weight must be 'cartan' or a JSON matrix: {exc}") from None
    n = len(model.param_names)
    if w.shape != (n, n):
        raise UsageError(f"--weight must be {n}x{n} for this model, got shape {w.shape}")
    try:
        return WeightMatrix(w)
    except ValueError as exc:
        raise UsageError(f"--weight: {exc}") from None


# --- formatting ---------------------------------------------------------------

def _clean(x):
    """Make a structure JSON-safe; non-finite floats become null."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if np.isfinite(x) else None
    return x


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def to_csv(rows: list) -> str:
    columns = []
    for row in rows:
        columns += [c for c in row if c not in columns]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _matrix_cells(prefix: str, m, names) -> dict:
    m = np.asarray(m)
    cells = {}
    for i in range(len(names)):
        for j in range(i, len(names)):
            cells[f"{prefix}_{names[i]}_{names[j]}"] = float(m[i, j])
    return cells


# --- commands -----------------------------------------------------------------

def _qfim_at(model, theta):
    ders = derivatives(model, theta)
    res = qfim(evaluate(model, theta), ders)
    return res, ders


def _cfim_at(model, measurement, theta):
    if isinstance(measurement, OutcomeDensity):
        th = model.point(theta).as_array()
        return cfim_continuous(measurement, th, fd_step=model.fd_step)
    return cfim_discrete(model, theta, measurement)


def cmd_eval(args) -> int:
    model = load_spec(args.model).build()
    theta = _theta(model, parse_assignments(args.at))
    pt = model.point(theta)
    res, ders = _qfim_at(model, pt)
    bound = qcrb(res, trials=args.M)
    payload = {"model": model.name, "theta": pt.as_dict()}
    payload.update(res.to_dict())
    payload.update({
        "state_rank": numerical_rank(evaluate(model, pt)),
        "derivative_mode": ders.mode,
        "one_sided": [pt.names[i] for i in ders.one_sided],
        "singular": bound.singular,
        "bound": bound.to_dict(),
    })
    if model.reference_qfim is not None:
        payload["reference_qfim"] = np.asarray(model.reference_qfim(pt.as_array())).tolist()
    _emit(to_json(payload), args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    model = load_spec(args.model).build()
    theta = _theta(model, parse_assignments(args.at))
    pt = model.point(theta)
    res, _ = _qfim_at(model, pt)
    payload = {"model": model.name, "theta": pt.as_dict(), "qcrb": qcrb(res, args.M).to_dict()}
    w = _weight(args.weight, model, pt)
    if w is not None:
        payload["weighted"] = {
            "weight": w.matrix.tolist(),
            "weight_origin": w.origin,
            "weight_singular": w.singular,
            "value": weighted_bound(res, w, args.M),
        }
    _emit(to_json(payload), args.out)
    return EXIT_OK


def cmd_cfim(args) -> int:
    spec = load_spec(args.model)
    model = spec.build()
    theta = _theta(model, parse_assignments(args.at))
    pt = model.point(theta)
    f = _cfim_at(model, build_measurement(spec, model), pt)
    payload = {"model": model.name, "theta": pt.as_dict(), "cfim": f.matrix.tolist(),
               "dropped_mass": f.dropped_mass, "n_dropped": f.n_dropped,
               "crb": crb_classical(f.matrix, args.M).to_dict()}
    try:
        q = _qfim_at(model, pt)[0].matrix
        payload["qfim"] = q.tolist()
        payload["max_eig_F_minus_Q"] = float(np.linalg.eigvalsh(f.matrix - q).max())
    except SupportLeakError as exc:
        payload["qfim"] = None
        payload["qfim_status"] = f"support-leak({exc.leak_norm:.3g})"
    _emit(to_json(payload), args.out)
    return EXIT_OK


def _sweep_row(model, pt, outputs, measurement, trials):
    row = dict(pt.as_dict())
    status = []
    rho = evaluate(model, pt)
    row["state_rank"] = numerical_rank(rho)
    names = model.param_names
    try:
        res, _ = _qfim_at(model, pt)
        row.update(_matrix_cells("Q", res.matrix, names))
        row.update({"rank": res.rank, "det": float(np.linalg.det(res.matrix)),
                    "cond": res.condition_number})
        if res.condition_number >= COND_LIMIT:
            status.append("singular")
        if "bounds" in outputs:
            b = qcrb(res, trials)
            row["bound_kind"] = b.kind
            row.update(_matrix_cells("B", b.value, names))
    except SupportLeakError as exc:
        status.append(f"support-leak({exc.leak_norm:.3g})")
    if "cfim" in outputs:
        try:
            row.update(_matrix_cells("F", _cfim_at(model, measurement, pt).matrix, names))
        except QfimkitError as exc:
            status.append(f"cfim-failed({type(exc).__name__})")
    if "bures" in outputs:
        try:
            g = bures_metric_fd(model, pt, on_boundary="one-sided")
            row.update(_matrix_cells("G4", 4 * g, names))
        except QfimkitError as exc:
            status.append(f"bures-failed({type(exc).__name__})")
    return row, status


def _outputs(text) -> set:
    chosen = {s.strip() for s in text.split(",") if s.strip()}
    if "all" in chosen:
        return set(OUTPUTS)
    bad = chosen - set(OUTPUTS)
    if bad or not chosen:
        raise UsageError(f"--outputs takes a comma list from {OUTPUTS + ('all',)}")
    return chosen


def cmd_sweep(args) -> int:
    outputs = _outputs(args.outputs)
    spec = load_spec(args.model)
    model = spec.build()
    grids = [parse_grid(g) for g in args.grid or []]
    points = grid_points(model, parse_assignments(args.at), grids)
    measurement = build_measurement(spec, model) if "cfim" in outputs else None

    rows, statuses = [], []
    for theta in points:
        try:
            pt = model.point(theta)
            row, status = _sweep_row(model, pt, outputs, measurement, args.M)
        except QfimkitError as exc:
            row = dict(theta)
            status = [f"{type(exc).__name__}: {exc}"]
        rows.append(row)
        statuses.append(status)
    top = max((r["state_rank"] for r in rows if "state_rank" in r), default=0)
    for row, status in zip(rows, statuses):
        if "state_rank" in row and row["state_rank"] < top:
            status.insert(0, "rank-drop")
        row["status"] = ";".join(status) if status else "ok"
    _emit(to_json({"model": model.name, "rows": rows}) if args.format == "json"
          else to_csv(rows), args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    model = load_spec(args.model).build()
    grids = [parse_grid(g) for g in args.grid or []]
    path = grid_points(model, parse_assignments(args.at), grids)
    report = discontinuity_scan(model, path)
    if args.format == "json":
        _emit(to_json({"model": model.name, **report.to_dict()}), args.out)
        return EXIT_OK
    names = model.param_names
    rows = []
    for k, pt in enumerate(report.path):
        row = dict(pt.as_dict())
        row["rank"] = report.rank_profile[k]
        q, g, c = report.qfim_profile[k], report.bures_profile[k], report.corrections[k]
        if q is not None:
            row.update(_matrix_cells("Q", q.matrix, names))
        if g is not None:
            row.update(_matrix_cells("G4", 4 * g, names))
        if c is not None:
            row.update(_matrix_cells("C", c, names))
        row["mismatch"] = report.mismatch_flags[k]
        norm = report.mismatch_norms[k]
        row["mismatch_norm"] = norm if norm is not None and np.isfinite(norm) else None
        row["status"] = report.statuses[k]
        rows.append(row)
    _emit(to_csv(rows), args.out)
    return EXIT_OK


def mle_demo(p_true: float, trials: int, shots: int, seed: int) -> dict:
    """Binomial maximum-likelihood estimates of ``p`` from the computational measurement.

    Each trial measures ``shots`` copies of the toy qubit; the MLE is the
    observed frequency of outcome 0. The Cramer-Rao value ``p(1-p)/M`` is
    reported only inside ``(0, 1)`` where the Fisher information is finite.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    counts = rng.binomial(shots, p_true, size=trials)
    estimates = counts / shots
    var = float(np.var(estimates, ddof=1)) if trials > 1 else 0.0
    interior = 0.0 < p_true < 1.0
    crb = p_true * (1 - p_true) / shots if interior else None
    return {
        "p_true": p_true, "M": shots, "trials": trials, "seed": seed,
        "generator": "numpy.random.PCG64",
        "mle_mean": float(estimates.mean()), "mle_variance": var,
        "crb": crb,
        "variance_over_crb": var / crb if crb else None,
        "note": None if interior else "Fisher information diverges at the boundary; "
                                      "the Cramer-Rao bound does not apply",
    }


def cmd_mle_demo(args) -> int:
    if not 0.0 <= args.p_true <= 1.0:
        raise UsageError("--p-true must lie in [0, 1]")
    if args.M < 1 or args.trials < 1:
        raise UsageError("--M and --trials must be positive")
    _emit(to_json(mle_demo(args.p_true, args.trials, args.M, args.seed)), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qfimkit", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, at_required=False, fmt=False):
        p.add_argument("--model", required=True, help="JSON model file")
        p.add_argument("--at", required=at_required, help="parameter values k=v,...")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--M", type=int, default=1, help="number of repetitions in bounds")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
            p.add_argument("--grid", action="append",
                           help="k=a:b:n (inclusive linspace) or k=v1,v2,...; repeatable")

    p = sub.add_parser("eval", help="QFIM, diagnostics and QCRB at one point")
    common(p, at_required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bounds", help="QCRB and optional weighted scalar bound")
    common(p, at_required=True)
    p.add_argument("--weight", help="'cartan' or a JSON matrix")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("cfim", help="classical Fisher information of the model-file POVM")
    common(p, at_required=True)
    p.set_defaults(func=cmd_cfim)

    p = sub.add_parser("sweep", help="tabulate quantities over a parameter grid")
    common(p, fmt=True)
    p.add_argument("--outputs", default="qfim", help="comma list of qfim,cfim,bures,bounds,all")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scan", help="compare QFIM with 4x the Bures metric along a path")
    common(p, fmt=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("mle-demo", help="maximum-likelihood estimation of the toy qubit")
    p.add_argument("--p-true", type=float, required=True)
    p.add_argument("--M", type=int, default=100, help="measurements per trial")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mle_demo)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, DomainError, OSError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except QfimkitError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
