import numpy as np
import pytest

from qfimkit.core import (
    BlockDiag, DensityMatrix, Interval, ParameterPoint, PureState, StatisticalModel, dense,
    derivatives, evaluate, hermitian_part, numerical_rank, op_trace, pseudoinverse,
    random_density_matrix,
)
from qfimkit.errors import BoundaryError, DomainError, ModelError
from qfimkit.zoo import toy_qubit


def test_blockdiag_arithmetic_matches_dense():
    a = BlockDiag([np.eye(2), 2 * np.ones((1, 1))])
    b = BlockDiag([np.array([[0, 1], [1, 0]]), np.array([[3.0]])])
    assert a.dim == 3 and a.shape == (3, 3)
    np.testing.assert_allclose(dense(a @ b), dense(a) @ dense(b))
    np.testing.assert_allclose(dense(a + b), dense(a) + dense(b))
    np.testing.assert_allclose(dense(a - b), dense(a) - dense(b))
    np.testing.assert_allclose(dense(0.5 * a), 0.5 * dense(a))
    np.testing.assert_allclose(dense(a / 4), dense(a) / 4)
    np.testing.assert_allclose(dense(-a), -dense(a))
    assert op_trace(a) == pytest.approx(4.0)


def test_blockdiag_rejects_non_square_blocks():
    with pytest.raises(ValueError):
        BlockDiag([np.ones((2, 3))])


def test_density_matrix_validation():
    DensityMatrix.from_operator(np.diag([0.3, 0.7]))
    with pytest.raises(ModelError, match="trace"):
        DensityMatrix.from_operator(np.diag([0.3, 0.6]))
    with pytest.raises(ModelError, match="Hermitian"):
        DensityMatrix.from_operator(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ModelError, match="PSD"):
        DensityMatrix.from_operator(np.diag([1.2, -0.2]))


def test_density_matrix_accepts_blocks():
    rho = DensityMatrix.from_operator(BlockDiag([np.diag([0.25, 0.25]), np.array([[0.5]])]))
    assert rho.dim == 3
    np.testing.assert_allclose(np.asarray(rho), np.diag([0.25, 0.25, 0.5]))


def test_pure_state_norm_checked():
    PureState(np.array([1, 1j]) / np.sqrt(2))
    with pytest.raises(ModelError):
        PureState(np.array([1.0, 1.0]))


def test_interval_membership():
    closed = Interval(0.0, 1.0)
    half_open = Interval(0.0, 1.0, closed_lo=False)
    assert 0.0 in closed and 1.0 in closed and 1.1 not in closed
    assert 0.0 not in half_open and 0.5 in half_open
    assert str(half_open) == "(0, 1]"


def test_point_coercion_and_domain():
    model = toy_qubit()
    assert model.point({"p": 0.2}) == ParameterPoint((0.2,), ("p",))
    assert model.point(0.2).as_dict() == {"p": 0.2}
    with pytest.raises(DomainError):
        model.point([1.5])
    with pytest.raises(DomainError):
        model.point({"q": 0.2})
    with pytest.raises(DomainError):
        model.point([0.1, 0.2])
    with pytest.raises(DomainError):
        model.point([np.nan])


def test_domain_error_is_value_error():
    with pytest.raises(ValueError):
        toy_qubit().point([-0.1])


def test_analytic_and_central_derivatives_agree():
    model = toy_qubit()
    analytic = derivatives(model, [0.3])
    central = derivatives(model, [0.3], mode="central")
    assert analytic.mode == "analytic" and central.mode == "central"
    np.testing.assert_allclose(central[0], analytic[0], atol=1e-9)


def test_boundary_falls_back_to_one_sided():
    model = toy_qubit()
    ders = derivatives(model, [1.0], mode="central")
    assert ders.one_sided == (0,)
    np.testing.assert_allclose(ders[0], np.diag([1.0, -1.0]), atol=1e-9)
    with pytest.raises(BoundaryError):
        derivatives(model, [1.0], mode="central", on_boundary="raise")


def test_model_without_analytic_derivative():
    model = StatisticalModel("m", ("t",), 2, lambda th: np.diag([np.cos(th[0]) ** 2,
                                                                np.sin(th[0]) ** 2]),
                             (Interval(),))
    assert model.derivative_mode == "central-difference"
    with pytest.raises(ValueError):
        derivatives(model, [0.1], mode="analytic")
    d = derivatives(model, [0.4])[0]
    np.testing.assert_allclose(np.diag(d).real, [-np.sin(0.8), np.sin(0.8)], atol=1e-9)


def test_evaluate_validates_state():
    bad = StatisticalModel("bad", ("t",), 2, lambda th: np.diag([th[0], 1.0]), (Interval(),))
    with pytest.raises(ModelError):
        evaluate(bad, [0.5])


def test_numerical_rank_and_hermitian_part():
    assert numerical_rank(np.diag([1.0, 1e-12, 0.0])) == 1
    assert numerical_rank(BlockDiag([np.eye(2), np.zeros((2, 2))])) == 2
    m = np.array([[1, 2j], [0, 1]])
    h = hermitian_part(m)
    np.testing.assert_allclose(h, h.conj().T)


def test_pseudoinverse_diag():
    np.testing.assert_allclose(pseudoinverse(np.diag([4.0, 0.0])), np.diag([0.25, 0.0]))
    np.testing.assert_allclose(pseudoinverse(np.zeros((2, 2))), np.zeros((2, 2)))


def test_random_density_matrix_rank():
    rng = np.random.default_rng(0)
    rho = random_density_matrix(5, rng, rank=2)
    DensityMatrix.from_operator(rho)
    assert numerical_rank(rho) == 2
