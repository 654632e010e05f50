"""Smoothed-lattice POVMs, the finite-n achievability pipeline and its classical limit."""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .bounds import as_weight, holevo_bound
from .gaussian import ancilla_from_gram
from .geometry import eval_model, geometry
from .herm import ResourceError, check_dim, eigh, func_calc, kron
from .asymptotics import collective_observable

WORK_BUDGET = 2 * 10**8
PROB_CLIP = -1e-12
PROB_SUM_TOL = 1e-8


class PovmIntegrityError(RuntimeError):
    pass


@dataclass(frozen=True)
class LatticeConfig:
    """Lattice density ``m``, extent ``ell``, kernel sharpness ``q`` and buffer cutoff ``p``."""

    m: int = 8
    ell: float = 4.0
    q: float = 16.0
    p: float = 3.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if self.ell <= 0 or self.q <= 0:
            raise ValueError("ell and q must be positive")
        if not 0 < self.p < self.ell:
            raise ValueError(f"need 0 < p < ell, got p={self.p}, ell={self.ell}")
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def parse(cls, text):
        m, ell, q, p = (s.strip() for s in text.split(","))
        return cls(int(m), float(ell), float(q), float(p))

    def axis(self):
        """The ``2m`` lattice coordinates ``(ell/m)(k + 1/2)``, ``k = -m .. m-1``."""
        k = np.arange(-self.m, self.m)
        return (self.ell / self.m) * (k + 0.5)

    def points(self, d):
        ax = self.axis()
        return np.array(list(product(ax, repeat=d)))


@dataclass(frozen=True)
class Povm:
    """Outcomes ``omega`` (rows) with PSD elements; row ``0`` is the default outcome ``omega = 0``."""

    omegas: np.ndarray
    elements: np.ndarray

    def completeness_residual(self):
        dim = self.elements.shape[1]
        return float(np.linalg.norm(self.elements.sum(axis=0) - np.eye(dim), 2))

    def min_eigenvalue(self):
        return float(min(np.linalg.eigvalsh(e)[0] for e in self.elements))


@dataclass(frozen=True)
class EstimatorStats:
    mean: np.ndarray
    cov: np.ndarray
    weighted_trace: float
    mean_se: np.ndarray = None
    cov_se: np.ndarray = None


def kernel(s, t, q):
    """``g_s(t) = (q / 2 pi)^{1/4} exp(-q (t - s)^2 / 4)``."""
    return (q / (2 * np.pi)) ** 0.25 * np.exp(-0.25 * q * (t - s) ** 2)


def lattice_povm(X, cfg, budget=WORK_BUDGET):
    """POVM built from Gaussian kernels of (possibly non-commuting) observables ``X``.

    ``f_omega = C^H C`` with ``C = g_{omega_1}(X_1) ... g_{omega_d}(X_d)``,
    ``R = (sum_omega f_omega + I)^{-1/2}`` and
    ``M_omega = R (f_omega + I / (2m)^d) R``. Lattice points outside
    ``[-p, p]^d`` are merged into the default outcome ``0``.
    """
    X = [np.asarray(x, dtype=complex) for x in X]
    d = len(X)
    dim = X[0].shape[0]
    npts = (2 * cfg.m) ** d
    if npts * dim**3 > budget:
        raise ResourceError(f"lattice POVM needs {npts} points at dim {dim} (budget {budget})")
    spectra = [eigh(x) for x in X]
    ax = cfg.axis()
    # g_s(X_i) for every coordinate value s
    gmats = [[(u * kernel(s, w, cfg.q)) @ u.conj().T for s in ax] for w, u in spectra]

    pts = cfg.points(d)
    idx = list(product(range(2 * cfg.m), repeat=d))
    fs = np.empty((npts, dim, dim), dtype=complex)
    for n, ks in enumerate(idx):
        C = gmats[0][ks[0]]
        for i in range(1, d):
            C = C @ gmats[i][ks[i]]
        fs[n] = C.conj().T @ C
    T = fs.sum(axis=0)
    T = 0.5 * (T + T.conj().T)
    R = func_calc(T + np.eye(dim), lambda w: 1.0 / np.sqrt(w))
    c = 1.0 / npts
    elems = np.einsum("ij,njk,kl->nil", R, fs + c * np.eye(dim), R)
    elems = 0.5 * (elems + np.conj(np.swapaxes(elems, 1, 2)))

    inside = np.all(np.abs(pts) <= cfg.p, axis=1)
    default = elems[~inside].sum(axis=0) if np.any(~inside) else np.zeros((dim, dim), complex)
    omegas = np.vstack([np.zeros((1, d)), pts[inside]])
    elements = np.concatenate([default[None], elems[inside]], axis=0)
    return Povm(omegas, elements)


def povm_probabilities(rho, povm):
    p = np.real(np.einsum("ij,nji->n", rho, povm.elements))
    if np.any(p < PROB_CLIP):
        raise PovmIntegrityError(f"negative outcome probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise PovmIntegrityError(f"probabilities sum to {total!r}")
    return p / total


def povm_stats(rho, povm, weight=None):
    """Mean and covariance of the outcome ``omega`` under ``rho``."""
    if rho.shape != povm.elements.shape[1:]:
        raise ValueError("state and POVM dimensions differ")
    p = povm_probabilities(rho, povm)
    w = povm.omegas
    mean = p @ w
    dev = w - mean
    cov = (dev * p[:, None]).T @ dev
    cov = 0.5 * (cov + cov.T)
    G = np.eye(w.shape[1]) if weight is None else as_weight(weight)
    return EstimatorStats(mean, cov, float(np.trace(G @ cov)))


@dataclass(frozen=True)
class PipelineResult:
    stats: EstimatorStats
    target: float
    bound: object
    povm: Povm
    dim: int


def pipeline_observables(geo, bound, n, cap=None):
    """Collective observables ``Xbar_i = Xtilde_i (x) I + I (x) Y_i`` and the ancilla state."""
    sigma, B = ancilla_from_gram(bound.Z_hat)
    dim_sys = geo.rho.shape[0]
    dim_anc = sigma.shape[0]
    check_dim((dim_sys * dim_anc) ** n, cap)
    Xn = [collective_observable(D, n, cap) for D in geo.d_basis]
    F = bound.F_star
    Xt = [sum(F[k, i] * Xn[k] for k in range(len(Xn))) for i in range(F.shape[1])]
    Yn = [collective_observable(b, n, cap) for b in B]
    eye_sys = np.eye(dim_sys**n)
    eye_anc = np.eye(dim_anc**n)
    Xbar = [np.kron(xt, eye_anc) + np.kron(eye_sys, y) for xt, y in zip(Xt, Yn)]
    return Xbar, sigma


def achievability_pipeline(model, theta0, G, h, n, cfg, restarts=16, seed=0, cap=None,
                           budget=WORK_BUDGET):
    """Estimate ``h`` from ``rho_{theta0 + h/sqrt(n)}^{(x) n} (x) sigma^{(x) n}`` with a lattice POVM.

    Returns the outcome statistics together with the target ``Tr G (V_tilde + V_hat)``,
    the Holevo bound at ``theta0``.
    """
    theta0 = np.asarray(theta0, dtype=float)
    h = np.asarray(h, dtype=float)
    G = as_weight(G)
    geo = geometry(model, theta0)
    bound = holevo_bound(geo.Sigma, geo.tau, G, restarts=restarts, seed=seed)
    Xbar, sigma = pipeline_observables(geo, bound, n, cap)
    povm = lattice_povm(Xbar, cfg, budget)
    rho_h = eval_model(model, theta0 + h / np.sqrt(n))
    state = np.kron(kron(*([rho_h] * n)), kron(*([sigma] * n)))
    stats = povm_stats(state, povm, G)
    return PipelineResult(stats, bound.value, bound, povm, state.shape[0])


def _axis_weights(x, ax, q):
    """Unnormalized kernel weights ``f`` per coordinate, shape ``(N, d, 2m)``."""
    diff = x[:, :, None] - ax[None, None, :]
    return np.sqrt(q / (2 * np.pi)) * np.exp(-0.5 * q * diff**2)


def classical_limit_sim(V, h, cfg, samples, seed=0, weight=None):
    """Monte Carlo of the lattice estimator in the ``n -> infinity`` limit.

    ``x ~ N(h, V)``; the outcome is drawn with probability proportional to
    ``f_omega(x) + (2m)^{-d}`` over the full lattice, and outcomes outside
    ``[-p, p]^d`` are reported as ``0``.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    V = np.asarray(V, dtype=float)
    h = np.asarray(h, dtype=float)
    d = h.size
    chol = np.linalg.cholesky(V)
    rng = np.random.default_rng(seed)
    x = h + rng.standard_normal((samples, d)) @ chol.T
    ax = cfg.axis()
    npts_axis = ax.size
    w = _axis_weights(x, ax, cfg.q)
    S = w.sum(axis=2)
    total_f = np.prod(S, axis=1)
    gauss_part = rng.random(samples) < total_f / (total_f + 1.0)

    cdf = np.cumsum(w, axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        cdf = cdf / S[:, :, None]
    u = rng.random((samples, d))
    k_gauss = np.empty((samples, d), dtype=int)
    for i in range(d):
        k_gauss[:, i] = np.minimum(
            np.sum(cdf[:, i, :] < u[:, i : i + 1], axis=1), npts_axis - 1)
    k_unif = rng.integers(0, npts_axis, size=(samples, d))
    k = np.where(gauss_part[:, None], k_gauss, k_unif)
    omega = ax[k]
    omega[np.any(np.abs(omega) > cfg.p, axis=1)] = 0.0

    mean = omega.mean(axis=0)
    dev = omega - mean
    cov = dev.T @ dev / samples
    outer = dev[:, :, None] * dev[:, None, :]
    G = np.eye(d) if weight is None else as_weight(weight)
    return EstimatorStats(mean, cov, float(np.trace(G @ cov)),
                          mean_se=omega.std(axis=0) / np.sqrt(samples),
                          cov_se=outer.std(axis=0) / np.sqrt(samples))


def classical_limit_moments(V, h, cfg, nodes=40, weight=None):
    """Deterministic counterpart of :func:`classical_limit_sim`.

    Conditional on ``x`` the outcome moments are exact (the kernel factorizes
    over coordinates); the outer expectation over ``x ~ N(h, V)`` uses
    tensor Gauss-Hermite quadrature with ``nodes`` points per axis.
    """
    V = np.asarray(V, dtype=float)
    h = np.asarray(h, dtype=float)
    d = h.size
    t, wt = np.polynomial.hermite_e.hermegauss(nodes)
    wt = wt / wt.sum()
    grid = np.array(list(product(t, repeat=d)))
    gw = np.prod(np.array(list(product(wt, repeat=d))), axis=1)
    x = h + grid @ np.linalg.cholesky(V).T

    ax = cfg.axis()
    inside = (np.abs(ax) <= cfg.p).astype(float)
    f = _axis_weights(x, ax, cfg.q)
    S = f.sum(axis=2)
    total_f = np.prod(S, axis=1)
    a = total_f / (total_f + 1.0)
    b = 1.0 - a

    def parts(prob):
        P = prob @ inside
        m1 = prob @ (inside * ax)
        m2 = prob @ (inside * ax**2)
        return P, m1, m2

    with np.errstate(invalid="ignore", divide="ignore"):
        pg = np.where(S[:, :, None] > 0, f / S[:, :, None], 1.0 / ax.size)
    Pg, m1g, m2g = parts(pg)
    pu = np.full(ax.size, 1.0 / ax.size)
    Pu, m1u, m2u = parts(pu)

    first = np.zeros(d)
    second = np.zeros((d, d))
    for i in range(d):
        others = [j for j in range(d) if j != i]
        g_rest = np.prod(Pg[:, others], axis=1)
        u_rest = Pu ** len(others)
        first[i] = gw @ (a * m1g[:, i] * g_rest + b * m1u * u_rest)
        second[i, i] = gw @ (a * m2g[:, i] * g_rest + b * m2u * u_rest)
        for j in others:
            rest = [k for k in range(d) if k not in (i, j)]
            g_rest2 = np.prod(Pg[:, rest], axis=1)
            u_rest2 = Pu ** len(rest)
            second[i, j] = gw @ (a * m1g[:, i] * m1g[:, j] * g_rest2
                                 + b * m1u * m1u * u_rest2)
    cov = second - np.outer(first, first)
    cov = 0.5 * (cov + cov.T)
    G = np.eye(d) if weight is None else as_weight(weight)
    return EstimatorStats(first, cov, float(np.trace(G @ cov)))


def covariance_deviation(cov, V):
    """Largest entrywise deviation relative to ``sqrt(V_ii V_jj)``."""
    scale = np.sqrt(np.outer(np.diag(V), np.diag(V)))
    return float(np.max(np.abs(cov - V) / scale))
