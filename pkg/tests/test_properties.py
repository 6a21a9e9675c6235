"""Randomized property checks driven by hypothesis."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qfimkit.bounds import qcrb, reparametrize
from qfimkit.cfim import Povm, cfim_discrete
from qfimkit.core import pseudoinverse, random_density_matrix, random_pure_state
from qfimkit.geometry import bures_distance, fidelity
from qfimkit.qfim import model_qfim, qfim
from qfimkit.zoo import SpinSystem, c_matrix, rotation_model, twirl
from qfimkit.zoo.phase import SectorLayout

seeds = st.integers(0, 2 ** 32 - 1)
dims = st.integers(2, 6)


def _hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


@settings(max_examples=50)
@given(seeds, dims, st.integers(1, 3))
def test_qfim_symmetric_psd(seed, dim, n):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(dim, rng, rank=int(rng.integers(1, dim + 1)))
    gens = [_hermitian(rng, dim) for _ in range(n)]
    q = qfim(rho, [-1j * (g @ rho - rho @ g) for g in gens]).matrix
    np.testing.assert_allclose(q, q.T, atol=1e-12)
    assert np.linalg.eigvalsh(q).min() >= -1e-9 * max(1.0, np.abs(q).max())


@settings(max_examples=50)
@given(seeds, st.integers(2, 5), st.integers(1, 5))
def test_pseudoinverse_penrose(seed, n, rank):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, min(rank, n)))
    m = a @ a.T
    p = pseudoinverse(m)
    scale = max(1.0, np.abs(m).max()) * max(1.0, np.abs(p).max())
    np.testing.assert_allclose(m @ p @ m, m, atol=1e-8 * scale)
    np.testing.assert_allclose(p @ m @ p, p, atol=1e-8 * scale)
    np.testing.assert_allclose(m @ p, (m @ p).T, atol=1e-8 * scale)
    np.testing.assert_allclose(p @ m, (p @ m).T, atol=1e-8 * scale)


@settings(max_examples=30)
@given(seeds, st.sampled_from([0.5, 1.0, 1.5]))
def test_data_processing_rotation(seed, j):
    rng = np.random.default_rng(seed)
    spin = SpinSystem(j)
    model = rotation_model(spin, random_pure_state(spin.dim, rng), "xyz")
    th = rng.uniform(-1.0, 1.0, 3)
    basis = np.linalg.qr(rng.normal(size=(spin.dim, spin.dim))
                         + 1j * rng.normal(size=(spin.dim, spin.dim)))[0]
    f = cfim_discrete(model, th, Povm.projective(basis)).matrix
    q = model_qfim(model, th).matrix
    assert np.linalg.eigvalsh(f - q).max() <= 1e-6 * max(1.0, np.abs(q).max())


@settings(max_examples=50)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_reparametrization_rank_law(seed, n, rank):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, min(rank, n)))
    q = a @ a.T
    jac = rng.normal(size=(n, n)) + 3 * np.eye(n)
    if abs(np.linalg.det(jac)) < 1e-3:
        return
    before = np.linalg.matrix_rank(q, tol=1e-9)
    assert np.linalg.matrix_rank(reparametrize(q, jac), tol=1e-9 * np.abs(jac).max() ** 2) == before


@settings(max_examples=50)
@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_twirl_idempotent_trace_preserving(seed, da, db):
    rng = np.random.default_rng(seed)
    dims = (da + 1, db + 1)
    layout = SectorLayout.product(dims)
    rho = random_density_matrix(layout.dim, rng)
    t = twirl(rho, dims)
    np.testing.assert_allclose(twirl(t, dims), t, atol=1e-15)
    assert abs(np.trace(t) - 1) <= 1e-12
    n = np.diag(layout.totals.astype(float))
    assert np.abs(n @ t - t @ n).max() <= 1e-12


@settings(max_examples=50)
@given(seeds, dims)
def test_fidelity_bounds_and_symmetry(seed, dim):
    rng = np.random.default_rng(seed)
    r1 = random_density_matrix(dim, rng, rank=int(rng.integers(1, dim + 1)))
    r2 = random_density_matrix(dim, rng, rank=int(rng.integers(1, dim + 1)))
    f = fidelity(r1, r2)
    assert -1e-12 <= f <= 1 + 1e-12
    assert abs(f - fidelity(r2, r1)) <= 1e-8
    assert 0.0 <= bures_distance(r1, r2) <= 1.0


@settings(max_examples=30)
@given(seeds, st.sampled_from([1.0, 1.5, 2.0]))
def test_c_matrix_psd(seed, j):
    rng = np.random.default_rng(seed)
    spin = SpinSystem(j)
    c = c_matrix(random_density_matrix(spin.dim, rng), spin)
    np.testing.assert_allclose(c, c.T, atol=1e-12)
    assert np.linalg.eigvalsh(c).min() >= -1e-10


@settings(max_examples=30)
@given(st.floats(0.0, 1e-6), st.floats(1e-6, 1.0))
def test_qcrb_singular_flag_threshold(small, large):
    report = qcrb(np.diag([large, small]))
    assert report.singular == (small <= large * 1e-12)
