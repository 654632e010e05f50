import numpy as np
import pytest
from scipy.integrate import trapezoid

from qlanlab.bounds import holevo_bound
from qlanlab.geometry import geometry, qubit2d, qubit3d
from qlanlab.herm import SX, SZ, ResourceError
from qlanlab.lattice import (
    LatticeConfig, Povm, PovmIntegrityError, achievability_pipeline, classical_limit_moments,
    classical_limit_sim, covariance_deviation, kernel, lattice_povm, povm_stats,
)


def test_config_validation_and_parse():
    assert LatticeConfig.parse("4, 2.0, 8, 1.5") == LatticeConfig(4, 2.0, 8.0, 1.5)
    for bad in [(0, 4, 16, 3), (8, 4, 16, 5), (8, -1, 16, 0.5), (8, 4, 0, 3)]:
        with pytest.raises(ValueError):
            LatticeConfig(*bad)


def test_lattice_axis():
    ax = LatticeConfig(2, 4.0, 1.0, 3.0).axis()
    assert np.allclose(ax, [-3, -1, 1, 3])


def test_kernel_is_normalized_square_root_of_density():
    t = np.linspace(-10, 10, 20001)
    g = kernel(0.3, t, 7.0)
    assert np.isclose(trapezoid(g**2, t), 1.0)


@pytest.mark.parametrize("X", [[SX], [SZ], [SX, SZ], [SZ, SX]])
def test_povm_completeness_qubit(X):
    povm = lattice_povm(X, LatticeConfig())
    assert povm.completeness_residual() < 1e-10
    assert povm.min_eigenvalue() >= -1e-10
    assert np.allclose(povm.omegas[0], 0.0)


def test_commuting_povm_is_diagonal():
    povm = lattice_povm([np.diag([1.0, -0.5, 2.0])], LatticeConfig(4, 3.0, 4.0, 2.5))
    for e in povm.elements:
        assert np.allclose(e, np.diag(np.diag(e)))


def test_classical_probabilities_single_eigenvalue():
    # for an eigenstate at x the outcome law is the mixture of the kernel and uniform parts
    cfg = LatticeConfig(4, 3.0, 4.0, 2.9)
    povm = lattice_povm([np.diag([0.5, -1.0])], cfg)
    rho = np.diag([1.0, 0.0])
    ax = cfg.axis()
    f = np.sqrt(cfg.q / (2 * np.pi)) * np.exp(-0.5 * cfg.q * (0.5 - ax) ** 2)
    expected = (f + 1 / ax.size) / (f.sum() + 1)
    p = np.real([np.trace(rho @ e) for e in povm.elements])
    # all lattice points lie inside [-p, p], so the default outcome has zero weight
    assert np.isclose(p[0], 0.0)
    assert np.allclose(p[1:], expected)


def test_pipeline_dimension_and_completeness():
    geo = geometry(qubit2d(0.25), [0, 0.6])
    res = achievability_pipeline(qubit2d(0.25), [0, 0.6], geo.J_S, [0.0, 0.0], 1, LatticeConfig())
    assert res.dim == 6
    assert res.povm.completeness_residual() < 1e-10
    assert res.povm.min_eigenvalue() >= -1e-10
    assert np.isclose(res.target, 2 + 1 / (0.36 * 15), atol=1e-6)


def test_povm_stats_checks():
    povm = Povm(np.array([[0.0], [1.0]]), np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))
    st = povm_stats(np.diag([0.25, 0.75]), povm)
    assert np.isclose(st.mean[0], 0.75)
    assert np.isclose(st.cov[0, 0], 0.1875)
    broken = Povm(povm.omegas, np.array([np.diag([1.0, 0.0]), np.diag([0.0, 0.5])]))
    with pytest.raises(PovmIntegrityError):
        povm_stats(np.diag([0.25, 0.75]), broken)
    with pytest.raises(ValueError):
        povm_stats(np.eye(3) / 3, povm)


def test_budget():
    with pytest.raises(ResourceError):
        lattice_povm([SX, SZ], LatticeConfig(), budget=100)


def _v():
    geo = geometry(qubit3d(), [0, 0, 0.5])
    return holevo_bound(geo.Sigma, geo.tau, geo.J_S).V


def test_classical_sim_agrees_with_quadrature():
    V = _v()
    cfg = LatticeConfig(16, 6.0, 16.0, 5.0)
    h = np.array([0.5, 0.0, -0.3])
    sim = classical_limit_sim(V, h, cfg, 40000, seed=7)
    quad = classical_limit_moments(V, h, cfg)
    assert np.all(np.abs(sim.mean - quad.mean) < 5 * sim.mean_se)
    assert np.all(np.abs(sim.cov - quad.cov) < 5 * sim.cov_se + 1e-12)


def test_classical_sim_deterministic_and_validates():
    V = _v()
    a = classical_limit_sim(V, np.zeros(3), LatticeConfig(), 1000, seed=5)
    b = classical_limit_sim(V, np.zeros(3), LatticeConfig(), 1000, seed=5)
    assert np.array_equal(a.cov, b.cov)
    with pytest.raises(ValueError):
        classical_limit_sim(V, np.zeros(3), LatticeConfig(), 0)


def test_quadrature_deviation_shrinks_with_resolution():
    V = _v()
    h = np.array([1.0, 0.0, 0.0])
    coarse = classical_limit_moments(V, h, LatticeConfig(32, 8.0, 32.0, 6.0))
    fine = classical_limit_moments(V, h, LatticeConfig(64, 8.0, 64.0, 6.0))
    assert covariance_deviation(fine.cov, V) < covariance_deviation(coarse.cov, V)
    assert np.max(np.abs(fine.mean - h)) < np.max(np.abs(coarse.mean - h))


def test_covariance_deviation():
    V = np.diag([4.0, 1.0])
    assert np.isclose(covariance_deviation(V + np.array([[0, 0.2], [0.2, 0]]), V), 0.1)
