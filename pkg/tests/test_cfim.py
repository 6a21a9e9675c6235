import numpy as np
import pytest

from qfimkit.cfim import (
    OutcomeDensity, Povm, born_probabilities, cfim_binned, cfim_continuous, cfim_discrete,
    fisher_from_probabilities,
)
from qfimkit.core import random_pure_state
from qfimkit.errors import DimensionMismatch, QuadratureError
from qfimkit.qfim import model_qfim, solve_sld
from qfimkit.zoo import (
    direct_imaging_density, loss_model, phase_model, superresolution3, toy_qubit,
)


def gaussian_location(sigma):
    def density(x, th):
        return np.exp(-(x - th[0]) ** 2 / (2 * sigma ** 2)) / np.sqrt(2 * np.pi * sigma ** 2)

    return OutcomeDensity(density, (-10 * sigma, 10 * sigma))


def test_povm_validation():
    with pytest.raises(ValueError):
        Povm([np.diag([1.0, 0.0])])
    with pytest.raises(ValueError):
        Povm([np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])])
    with pytest.raises(DimensionMismatch):
        Povm([np.eye(2), np.zeros((3, 3))])
    with pytest.raises(ValueError):
        Povm.projective(np.ones((2, 2)))
    assert Povm.computational(3).n_outcomes == 3


def test_born_probabilities_examples():
    np.testing.assert_allclose(
        born_probabilities(toy_qubit().state_fn(np.array([0.3])), Povm.computational(2)), [0.3, 0.7])
    basis = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    np.testing.assert_allclose(born_probabilities(np.eye(2) / 2, Povm.projective(basis)), [0.5, 0.5])
    rho = loss_model("fock", "phi", n=2).state_fn(np.array([np.pi / 4]))
    np.testing.assert_allclose(born_probabilities(rho, Povm.computational(3)), [0.25, 0.5, 0.25])
    with pytest.raises(DimensionMismatch):
        born_probabilities(np.eye(3) / 3, Povm.computational(2))


def test_explicit_effects_match_basis_form():
    rng = np.random.default_rng(0)
    u = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
    psi = random_pure_state(3, rng)
    rho = np.outer(psi, psi.conj())
    fast = born_probabilities(rho, Povm.projective(u))
    slow = born_probabilities(rho, Povm(Povm.projective(u).effects))
    np.testing.assert_allclose(fast, slow, atol=1e-14)
    assert fast.sum() == pytest.approx(1.0, abs=1e-10)


def test_cfim_discrete_examples():
    f = cfim_discrete(toy_qubit(), [0.3], Povm.computational(2))
    assert f.matrix[0, 0] == pytest.approx(1 / 0.21, rel=1e-8)
    assert cfim_discrete(toy_qubit(), [0.5], Povm.computational(2)).matrix[0, 0] == pytest.approx(4.0)
    f = cfim_discrete(loss_model("fock", "phi", n=3), [0.6], Povm.computational(4))
    assert f.matrix[0, 0] == pytest.approx(12.0, rel=1e-8)


def test_dropped_mass_reported():
    f, mass, count = fisher_from_probabilities([0.5, 0.5, 0.0], [[1.0, -1.0, 0.0]])
    assert f[0, 0] == pytest.approx(4.0) and mass == 0.0 and count == 1
    f, mass, count = fisher_from_probabilities([0.5, 0.5 - 1e-13, 1e-13], [[1.0, -1.0, 0.0]])
    assert count == 1 and mass == pytest.approx(1e-13)


def test_sld_eigenbasis_measurement_is_optimal():
    for model, th in [(toy_qubit(), [0.35]), (loss_model("fock", "eta", n=3), [0.6])]:
        rho = model.state_fn(np.array(th))
        sld = solve_sld(rho, model.derivative_fn(np.array(th))[0])
        _, vec = np.linalg.eigh(sld.dense())
        f = cfim_discrete(model, th, Povm.projective(vec)).matrix
        q = model_qfim(model, th).matrix
        assert f[0, 0] == pytest.approx(q[0, 0], rel=1e-6)


def test_phase_sld_measurement_for_coherent_probe():
    model = phase_model("coherent", alpha=0.6, fock_cutoff=(12, 0))
    th = np.array([0.3])
    rho = model.state_fn(th)
    sld = solve_sld(rho, model.derivative_fn(th)[0])
    _, vec = np.linalg.eigh(sld.dense())
    f = cfim_discrete(model, th, Povm.projective(vec), fd_step=1e-6).matrix
    assert f[0, 0] == pytest.approx(model_qfim(model, th).matrix[0, 0], rel=1e-5)


def test_gaussian_location_fim():
    for sigma in (0.5, 1.0, 2.0):
        res = cfim_continuous(gaussian_location(sigma), [0.3])
        assert res.matrix[0, 0] == pytest.approx(1 / sigma ** 2, rel=1e-7)
        assert res.normalization_error < 1e-8


def test_stored_quadrature_normalizes():
    assert gaussian_location(1.0).normalization([0.0], panels=2) == pytest.approx(1.0, abs=1e-8)
    d = direct_imaging_density()
    assert d.normalization([0.4, 0.9], panels=4) == pytest.approx(1.0, abs=1e-8)


def test_quadrature_error_on_leaky_density():
    leaky = OutcomeDensity(lambda x, th: 0.5 * np.ones_like(x), (0.0, 1.0))
    with pytest.raises(QuadratureError):
        cfim_continuous(leaky, [0.0])


def test_parity_zeroes_off_diagonal():
    # two Gaussians at +-a with a common shift b: a is even about the symmetric point
    def density(x, th):
        a, b = th
        g = lambda c: np.exp(-(x - c) ** 2 / 2) / np.sqrt(2 * np.pi)
        return 0.5 * (g(b + a) + g(b - a))

    f = cfim_continuous(OutcomeDensity(density, (-12.0, 12.0)), [0.8, 0.0]).matrix
    assert abs(f[0, 1]) <= 1e-9 * np.max(np.abs(f))


def test_direct_imaging_rayleigh_curse():
    d = direct_imaging_density()
    near = cfim_continuous(d, [-0.5 + 0.01, 1.0]).matrix
    far = cfim_continuous(d, [-0.5 + 1.0, 1.0]).matrix
    assert near[0, 0] < 1e-2 * far[0, 0]
    assert abs(near[0, 1]) < 1e-1 * abs(far[0, 1])


def test_binned_matches_continuous():
    d = direct_imaging_density()
    for th in ([0.4, 0.9], [-1.0, 0.3]):
        cont = cfim_continuous(d, th).matrix
        binned = cfim_binned(d, th, n_bins=200).matrix
        assert np.max(np.abs(binned - cont)) <= 1e-3 * np.max(np.abs(cont))


def test_data_processing_zoo():
    cases = [
        (toy_qubit(), [0.2], Povm.computational(2)),
        (loss_model("fock", "eta", n=4), [0.5], Povm.computational(5)),
        (phase_model("coherent", alpha=0.8, alpha_b=0.4, fock_cutoff=(16, 14)), [0.3], None),
    ]
    for model, th, povm in cases:
        if povm is None:
            basis = np.linalg.qr(np.random.default_rng(2).normal(size=(model.dim, model.dim)))[0]
            povm = Povm.projective(basis)
        f = cfim_discrete(model, th, povm).matrix
        q = model_qfim(model, th).matrix
        assert np.linalg.eigvalsh(f - q).max() <= 1e-6
    sr = superresolution3()
    for th in ([0.4, 0.9], [-0.5, 1.0], [1.2, -0.3]):
        f = cfim_continuous(direct_imaging_density(), th).matrix
        assert np.linalg.eigvalsh(f - model_qfim(sr, th).matrix).max() <= 1e-6
