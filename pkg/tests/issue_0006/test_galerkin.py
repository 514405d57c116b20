import numpy as np
import pytest
from scipy import linalg

from shiftmpc.basis import (
    ParamVector,
    dynamics_matrix,
    gram,
    make_laguerre,
    trajectory,
)
from shiftmpc.nonlinear import (
    LinearPlant,
    NlpError,
    galerkin_residual,
    pendulum_plant,
    project_trajectory,
    residual_jacobian,
)

A = np.array([[1.0, 0.1], [0.0, 1.0]])
B = np.array([[0.005], [0.1]])


def _split(z, n, s):
    return ParamVector(z[: n * s], n), ParamVector(z[n * s :], len(z) // s - n)


def test_consistent_trajectory_has_no_residual():
    rng = np.random.default_rng(70)
    family = make_laguerre(4, 5.0, 0.1)
    null = linalg.null_space(dynamics_matrix(family, A, B))
    z = null @ rng.normal(size=null.shape[1])
    eta_x, eta_u = _split(z, 2, family.s)

    r = galerkin_residual(eta_x, eta_u, LinearPlant(A, B), family, k_trunc=300)

    assert np.max(np.abs(r)) < 1e-12


def test_linear_residual_is_weighted_dynamics():
    rng = np.random.default_rng(71)
    family = make_laguerre(4, 5.0, 0.1)
    z = rng.normal(size=3 * family.s)
    eta_x, eta_u = _split(z, 2, family.s)

    r = galerkin_residual(eta_x, eta_u, LinearPlant(A, B), family, k_trunc=300)
    expected = np.kron(np.eye(2), gram(family)) @ dynamics_matrix(family, A, B) @ z

    assert np.allclose(r, expected, rtol=1e-9, atol=1e-12)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(72)
    plant = pendulum_plant()
    family = make_laguerre(3, 10.0, 0.02)
    z = 0.3 * rng.normal(size=5 * family.s)

    def residual(v):
        return galerkin_residual(*_split(v, 4, family.s), plant, family, k_trunc=150)

    Jx, Ju = residual_jacobian(*_split(z, 4, family.s), plant, family, k_trunc=150)
    J = np.hstack([Jx, Ju])
    h = 1e-6
    fd = np.empty_like(J)

    for j in range(z.shape[0]):
        dz = np.zeros_like(z)
        dz[j] = h
        fd[:, j] = (residual(z + dz) - residual(z - dz)) / (2 * h)

    assert np.allclose(J, fd, atol=1e-5 * (1.0 + np.max(np.abs(J))))


def test_projection_recovers_parameters():
    rng = np.random.default_rng(73)
    family = make_laguerre(5, 5.0, 0.1)
    eta = ParamVector(rng.normal(size=2 * family.s), 2)
    samples = trajectory(eta, family, 200)

    for method in ("lstsq", "galerkin"):
        found = project_trajectory(samples, family, method)

        assert found.channels == 2
        assert np.allclose(found.data, eta.data, atol=1e-8)


def test_projection_of_a_single_channel():
    family = make_laguerre(3, 5.0, 0.1)
    found = project_trajectory(np.zeros(10), family)

    assert found.channels == 1
    assert np.array_equal(found.data, np.zeros(3))


def test_projection_errors():
    family = make_laguerre(3, 5.0, 0.1)

    with pytest.raises(NlpError):
        project_trajectory(np.zeros((0, 1)), family)

    with pytest.raises(NlpError):
        project_trajectory(np.zeros((5, 1)), family, "nope")


def test_non_finite_plant_output():
    class Exploding(LinearPlant):
        def f_batch(self, ks, X, U):
            out = super().f_batch(ks, X, U)
            out[3] = np.nan
            return out

    family = make_laguerre(3, 5.0, 0.1)
    eta_x, eta_u = ParamVector.zeros(2, 3), ParamVector.zeros(1, 3)

    with pytest.raises(NlpError):
        galerkin_residual(eta_x, eta_u, Exploding(A, B), family, k_trunc=50)
