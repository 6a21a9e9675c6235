import json

import numpy as np
import pytest

from qfimkit.core import BlockDiag, random_density_matrix, random_pure_state
from qfimkit.errors import BoundaryError, DimensionMismatch
from qfimkit.geometry import (
    bures_correction, bures_distance, bures_metric_fd, discontinuity_scan, fidelity,
)
from qfimkit.qfim import model_qfim
from qfimkit.zoo import GaussianPsf, closed_form_qfim, superresolution3, toy_qubit

COMMUTING_F = (np.sqrt(0.15) + np.sqrt(0.35)) ** 2


def test_fidelity_examples():
    rho = random_density_matrix(3, np.random.default_rng(0))
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(0.0, abs=1e-14)
    assert fidelity(np.diag([0.3, 0.7]), np.diag([0.5, 0.5])) == pytest.approx(COMMUTING_F, abs=1e-12)


def test_bures_distance_examples():
    assert bures_distance(np.eye(2) / 2, np.eye(2) / 2) == pytest.approx(0.0, abs=1e-7)
    assert bures_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == pytest.approx(1.0)
    assert bures_distance(np.diag([0.3, 0.7]), np.diag([0.5, 0.5])) == pytest.approx(
        np.sqrt(1 - COMMUTING_F), abs=1e-10)


def test_fidelity_pure_overlap_and_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = random_pure_state(4, rng), random_pure_state(4, rng)
        ra, rb = np.outer(a, a.conj()), np.outer(b, b.conj())
        assert fidelity(ra, rb) == pytest.approx(abs(np.vdot(a, b)) ** 2, abs=1e-10)
        r1, r2 = random_density_matrix(4, rng), random_density_matrix(4, rng, rank=2)
        assert abs(fidelity(r1, r2) - fidelity(r2, r1)) <= 1e-9


def test_fidelity_commuting_formula():
    rng = np.random.default_rng(2)
    for _ in range(20):
        p, q = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
        assert fidelity(np.diag(p), np.diag(q)) == pytest.approx(np.sum(np.sqrt(p * q)) ** 2,
                                                                 abs=1e-12)


def test_fidelity_blocks_and_mismatch():
    a, b = np.diag([0.2, 0.3]), np.array([[0.5]])
    c, d = np.diag([0.1, 0.6]), np.array([[0.3]])
    f_block = fidelity(BlockDiag([a, b]), BlockDiag([c, d]))
    f_dense = fidelity(np.diag([0.2, 0.3, 0.5]), np.diag([0.1, 0.6, 0.3]))
    assert f_block == pytest.approx(f_dense, abs=1e-14)
    with pytest.raises(DimensionMismatch):
        fidelity(np.eye(2) / 2, np.eye(3) / 3)


def test_bures_triangle_inequality():
    rng = np.random.default_rng(3)
    for _ in range(100):
        dim = int(rng.integers(2, 7))
        r = [random_density_matrix(dim, rng, rank=int(rng.integers(1, dim + 1))) for _ in range(3)]
        assert bures_distance(r[0], r[2]) <= bures_distance(r[0], r[1]) + bures_distance(r[1], r[2]) + 1e-9


def test_toy_metric_quarter_convention():
    g = bures_metric_fd(toy_qubit(), [0.5])
    assert g[0, 0] == pytest.approx(1.0, abs=1e-6)
    for p in (0.1, 0.3, 0.8):
        assert 4 * bures_metric_fd(toy_qubit(), [p])[0, 0] == pytest.approx(1 / (p * (1 - p)),
                                                                           rel=5e-4)


def test_metric_at_boundary():
    with pytest.raises(BoundaryError):
        bures_metric_fd(toy_qubit(), [1.0])
    g = bures_metric_fd(toy_qubit(), [1.0], on_boundary="one-sided")
    # 1 - F = 1 - (1 - d) = d at p = 1: the metric diverges like 1/h
    assert g[0, 0] > 1e3


def test_superresolution_metric_on_crossing_matches_closed_form():
    model = superresolution3()
    th = [-0.5, 1.0]
    g = bures_metric_fd(model, th)
    closed = closed_form_qfim(GaussianPsf(1.0), *th)
    np.testing.assert_allclose(4 * g, closed, atol=5e-4 * np.max(np.abs(closed)))
    q = model_qfim(model, th).matrix
    assert np.max(np.abs(4 * g - q)) > 0.1
    # the eigenvalue-Hessian correction accounts for the gap
    np.testing.assert_allclose(q + bures_correction(model, th), closed, atol=1e-5)


def test_correction_vanishes_at_regular_points():
    # the 40-mode state keeps a 37-dimensional kernel: only difference noise remains
    np.testing.assert_allclose(bures_correction(superresolution3(), [0.4, 0.9]), 0.0, atol=1e-6)
    np.testing.assert_array_equal(bures_correction(toy_qubit(), [0.4]), 0.0)


def test_scan_regular_toy_path():
    report = discontinuity_scan(toy_qubit(), [[p] for p in np.linspace(0.1, 0.9, 9)])
    assert report.rank_profile == [2] * 9
    assert not any(report.mismatch_flags) and not any(report.rank_drop_flags)
    assert report.statuses == ["ok"] * 9


def test_scan_toy_path_to_endpoint():
    report = discontinuity_scan(toy_qubit(), [[0.8], [0.9], [1.0]])
    assert report.rank_profile == [2, 2, 1]
    assert report.rank_drop_flags == [False, False, True]
    assert report.mismatch_flags == [False, False, True]
    assert report.qfim_profile[2] is None
    assert report.statuses[2].startswith("rank-drop;support-leak")


def test_scan_superresolution_crossing_and_json():
    path = [[-0.5 + e, 1.0] for e in (-0.1, 0.0, 0.1)]
    report = discontinuity_scan(superresolution3(), path)
    assert report.rank_profile == [3, 2, 3]
    assert report.mismatch_flags == [False, True, False]
    assert len(report.path) == len(report.bures_profile) == len(report.mismatch_norms) == 3
    payload = json.loads(json.dumps(report.to_dict()))
    assert payload["points"][1]["status"] == "rank-drop;mismatch"
