"""Holevo-type lower bounds on weighted covariances."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.linalg import null_space

from .herm import func_calc, psd_sqrt, trace_abs

RESTARTS = 16
OBJ_ATOL = 1e-9
AGREE_RTOL = 1e-6


class BoundError(ValueError):
    pass


def as_weight(G):
    """Validate a real symmetric positive definite weight matrix."""
    G = np.asarray(G)
    if np.iscomplexobj(G):
        if np.max(np.abs(G.imag)) > 1e-12:
            raise BoundError("weight matrix must be real")
        G = G.real
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise BoundError(f"weight matrix must be square, got {G.shape}")
    if np.max(np.abs(G - G.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(G))):
        raise BoundError("weight matrix must be symmetric")
    G = 0.5 * (G + G.T)
    lo = np.linalg.eigvalsh(G)[0]
    if lo <= 0:
        raise BoundError(f"weight matrix must be positive definite (min eigenvalue {lo:.3e})")
    return G


def _sqrt_pd(G):
    return func_calc(G, np.sqrt).real


@dataclass(frozen=True)
class BoundResult:
    value: float
    F_star: np.ndarray
    Z: np.ndarray
    V_tilde: np.ndarray
    V_hat: np.ndarray
    Z_hat: np.ndarray
    restarts_used: int
    converged: bool
    restart_values: tuple = ()

    @property
    def V(self):
        """Covariance ``V_tilde + V_hat`` of the limiting classical estimator."""
        return self.V_tilde + self.V_hat

    @property
    def dispersion(self):
        """Relative spread of the restart optima around the best value."""
        if not self.restart_values:
            return 0.0
        vals = np.asarray(self.restart_values)
        return float((np.max(vals) - self.value) / max(abs(self.value), 1e-300))


def holevo_objective(Z, G, sqrt_g=None):
    """``Tr G Z + Tr |sqrt(G) Im Z sqrt(G)|`` for a Hermitian ``Z``."""
    sg = _sqrt_pd(G) if sqrt_g is None else sqrt_g
    # i * (real antisymmetric) is Hermitian with the same singular values
    imag_part = 1j * (sg @ np.imag(Z) @ sg)
    return float(np.real(np.trace(G @ Z)) + trace_abs(imag_part))


def split_vhat(Z, G):
    """Split ``Z = V_tilde + i S`` into ``(V_tilde, V_hat, Z_hat)``.

    ``V_hat = G^{-1/2} |G^{1/2} S G^{1/2}| G^{-1/2}`` and ``Z_hat = V_hat - i S``.
    """
    G = as_weight(G)
    Z = np.asarray(Z, dtype=complex)
    sg = _sqrt_pd(G)
    sg_inv = np.linalg.inv(sg)
    S = np.imag(Z)
    S = 0.5 * (S - S.T)
    M = 1j * (sg @ S @ sg)
    abs_m = func_calc(M, np.abs).real
    V_hat = sg_inv @ abs_m @ sg_inv
    V_hat = 0.5 * (V_hat + V_hat.T)
    V_tilde = np.real(Z)
    V_tilde = 0.5 * (V_tilde + V_tilde.T)
    Z_hat = V_hat - 1j * S
    return V_tilde, V_hat, Z_hat


def _feasible_frame(tau_re):
    """``F0`` with ``F0^T tau_re = I`` and an orthonormal basis ``N`` of ``null(tau_re^T)``."""
    r, d = tau_re.shape
    if r < d:
        raise BoundError(f"need r >= d, got r={r}, d={d}")
    if np.linalg.matrix_rank(tau_re) < d:
        raise BoundError("Re tau is rank deficient")
    F0 = tau_re @ np.linalg.inv(tau_re.T @ tau_re)
    N = null_space(tau_re.T) if r > d else np.zeros((r, 0))
    return F0, N


def _result(F, Sigma, G, restarts_used, converged, values=()):
    Z = F.T @ Sigma @ F
    Z = 0.5 * (Z + Z.conj().T)
    V_tilde, V_hat, Z_hat = split_vhat(Z, G)
    value = float(np.trace(G @ (V_tilde + V_hat)))
    return BoundResult(value, F, Z, V_tilde, V_hat, Z_hat, restarts_used, converged, tuple(values))


def holevo_bound(Sigma, tau, G, restarts=RESTARTS, seed=0, obj_atol=OBJ_ATOL,
                 agree_rtol=AGREE_RTOL):
    """Holevo bound ``min_F Tr G Z + Tr|sqrt(G) Im Z sqrt(G)|`` with ``Z = F^T Sigma F``.

    The feasible set ``F^T Re(tau) = I`` is parametrized exactly as
    ``F = F0 + N K``. ``K`` is found by Nelder-Mead from ``K = 0`` and
    ``restarts`` seeded random starts; agreement of at least two starts within
    ``agree_rtol`` (relative) is reported as ``converged``.
    """
    Sigma = np.asarray(Sigma, dtype=complex)
    tau = np.asarray(tau, dtype=complex)
    G = as_weight(G)
    d = G.shape[0]
    if tau.shape[1] != d:
        raise BoundError(f"weight is {d}x{d} but tau has {tau.shape[1]} columns")
    if np.linalg.eigvalsh(0.5 * (Sigma.real + Sigma.real.T))[0] <= 0:
        raise BoundError("Re Sigma is not positive definite")
    F0, N = _feasible_frame(tau.real)
    k = N.shape[1]
    if k == 0:
        return _result(F0, Sigma, G, 0, True)

    sg = _sqrt_pd(G)

    def phi(kvec):
        F = F0 + N @ kvec.reshape(k, d)
        return holevo_objective(F.T @ Sigma @ F, G, sg)

    rng = np.random.default_rng(seed)
    scale = max(1.0, np.linalg.norm(F0))
    starts = [np.zeros(k * d)] + [rng.normal(scale=scale, size=k * d) for _ in range(restarts)]
    found = []
    for x0 in starts:
        x, fx = _nelder_mead(phi, x0, obj_atol)
        found.append((fx, np.linalg.norm(x), x))
    best_val = min(f for f, _, _ in found)
    # ties within the objective tolerance go to the smallest ||K||
    ties = [t for t in found if t[0] <= best_val + max(obj_atol, 1e-12 * abs(best_val))]
    _, _, kbest = min(ties, key=lambda t: t[1])
    agree = sum(1 for f, _, _ in found if f - best_val <= agree_rtol * max(abs(best_val), 1e-300))
    F = F0 + N @ kbest.reshape(k, d)
    return _result(F, Sigma, G, len(starts), agree >= 2, [f for f, _, _ in found])


def _nelder_mead(fun, x0, atol, max_rounds=20):
    """Nelder-Mead, restarted from its own optimum until the value stops improving."""
    x, fx = x0, fun(x0)
    for _ in range(max_rounds):
        res = minimize(fun, x, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": atol * 1e-3, "maxiter": 20000,
                                "maxfev": 40000, "adaptive": True})
        improved = fx - res.fun
        if res.fun < fx:
            x, fx = res.x, res.fun
        if improved <= atol:
            break
    return x, fx


def holevo_bound_geometry(geo, G, **kwargs):
    """:func:`holevo_bound` on a :class:`~qlanlab.geometry.GeometryReport`."""
    return holevo_bound(geo.Sigma, geo.tau, G, **kwargs)


def rld_inverse(J):
    """``(Re J)^{-1} J (Re J)^{-1}``."""
    J = np.asarray(J, dtype=complex)
    re = 0.5 * (J.real + J.real.T)
    if np.linalg.eigvalsh(re)[0] <= 0:
        raise BoundError("Re J is not positive definite")
    inv = np.linalg.inv(re)
    return inv @ J @ inv


def holevo_closed_dinv(J, G):
    """Holevo bound when the SLD tangent space is D-invariant.

    ``Tr G Jr + Tr |sqrt(G) Im Jr sqrt(G)|`` with ``Jr = (Re J)^{-1} J (Re J)^{-1}``.
    """
    G = as_weight(G)
    return holevo_objective(rld_inverse(J), G)


def hgm_nagaoka_bound(J_S, G):
    """``(Tr sqrt(sqrt(G) J_S^{-1} sqrt(G)))^2``.

    Minimum over locally unbiased single-copy measurements for qubit models with two or three
    parameters (column ``hgm_nagaoka`` of the CLI).
    """
    G = as_weight(G)
    J_S = as_weight(J_S)
    sg = _sqrt_pd(G)
    inner = sg @ np.linalg.inv(J_S) @ sg
    return float(np.trace(psd_sqrt(0.5 * (inner + inner.T))).real ** 2)


def qubit2d_holevo_closed(r, z0):
    """Closed-form Holevo bound of the 2-D qubit family at ``(0, r)`` with ``G = J^(S)``."""
    r, z0 = float(r), float(z0)
    if r <= np.sqrt(z0 / (1 - z0**2)):
        return 2 * (1 + z0) - r**2 * (1 - z0**2)
    return 2 + z0**2 / (r**2 * (1 - z0**2))
