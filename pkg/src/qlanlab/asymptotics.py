"""Finite-n diagnostics for the quantum central limit theorem and QLAN expansions.

Everything here works on a single copy: i.i.d. quasi-characteristic functions
are single-copy traces raised to the n-th power, so n may be very large.
"""

import numpy as np
from scipy.linalg import expm

from .gaussian import GaussianState, quasi_char
from .geometry import eval_model, sld, sld_gram
from .herm import check_dim, kron_sum
from .states import qllr

CENTER_TOL = 1e-10


class CenteringError(ValueError):
    pass


def collective_observable(A, n, cap=None):
    """``n^{-1/2} sum_k I^{(k-1)} (x) A (x) I^{(n-k)}``."""
    A = np.asarray(A, dtype=complex)
    check_dim(A.shape[0] ** n, cap)
    return kron_sum(A, n, cap) / np.sqrt(n)


def _check_centered(rho, A):
    for i, a in enumerate(A):
        m = np.trace(rho @ a)
        if abs(m) > CENTER_TOL * max(1.0, np.linalg.norm(a)):
            raise CenteringError(f"observable {i} has nonzero mean {m:.3e}")


def _ordered_product(A, xis, scale):
    dim = A[0].shape[0]
    out = np.eye(dim, dtype=complex)
    for xi in xis:
        gen = sum(complex(c) * a for c, a in zip(np.asarray(xi).reshape(-1), A))
        out = out @ expm(1j * scale * gen)
    return out


def iid_quasi_char(rho, A, n, xis):
    """``Tr rho^{(x) n} prod_t exp(i xi_t . X^{(n)})`` for collective ``X^{(n)}``.

    Computed as ``[Tr rho prod_t exp(i xi_t . A / sqrt(n))]^n``.
    """
    A = [np.asarray(a, dtype=complex) for a in A]
    _check_centered(rho, A)
    if not xis:
        return complex(1.0)
    single = np.trace(rho @ _ordered_product(A, xis, 1.0 / np.sqrt(n)))
    # n log(single) keeps precision when single = 1 - O(1/n)
    return complex(np.exp(n * np.log(complex(single))))


def default_xi_grid(d):
    """Default grid of xi lists for CLT checks.

    Single real vectors along every axis and diagonal at magnitudes 0.5 and 1,
    plus ordered pairs of distinct axes (non-commuting products).
    """
    eye = np.eye(d)
    grid = []
    for amp in (0.5, 1.0):
        for i in range(d):
            grid.append([amp * eye[i]])
            grid.append([-amp * eye[i]])
        grid.append([amp * np.ones(d) / np.sqrt(d)])
    for i in range(d):
        for j in range(d):
            if i != j:
                grid.append([eye[i], eye[j]])
    return grid


def clt_target(rho, A):
    """Gaussian limit ``N(0, J)`` with ``J_ij = Tr rho A_j A_i``."""
    return GaussianState(np.zeros(len(A)), sld_gram(rho, A, A))


def clt_sup_error(rho, A, n, xis_grid=None, target=None):
    A = [np.asarray(a, dtype=complex) for a in A]
    grid = default_xi_grid(len(A)) if xis_grid is None else xis_grid
    target = clt_target(rho, A) if target is None else target
    return max(abs(iid_quasi_char(rho, A, n, xis) - quasi_char(target, xis)) for xis in grid)


def clt_convergence_report(rho, A, xis_grid=None, n_schedule=(10**2, 10**3, 10**4, 10**5, 10**6)):
    """Rows ``(n, sup_error)`` of the quasi-characteristic distance to ``N(0, J)``."""
    A = [np.asarray(a, dtype=complex) for a in A]
    _check_centered(rho, A)
    target = clt_target(rho, A)
    return [(int(n), clt_sup_error(rho, A, n, xis_grid, target)) for n in n_schedule]


def is_decreasing(rows, slack=0.1):
    """Each error is at most ``(1 + slack)`` times the previous one."""
    errs = [e for _, e in rows]
    return all(b <= (1 + slack) * a for a, b in zip(errs, errs[1:]))


def qlan_residual(model, theta0, h, n, slds=None):
    """Size of the QLAN remainder at sample size ``n``.

    With ``eps = h / sqrt(n)`` and ``L_eps = L(rho_{theta0 + eps} | rho_{theta0})``,
    ``P(n) = sqrt(n) (L_eps - eps . A + (h^T J h / 2n) I)`` where ``A`` are the
    SLDs. Returns ``(||P(n)||_op, sqrt(n) Tr rho_{theta0} P(n))``.
    """
    theta0 = np.asarray(theta0, dtype=float)
    h = np.asarray(h, dtype=float)
    rho0 = eval_model(model, theta0)
    A = sld(model, theta0) if slds is None else slds
    if not np.any(h):
        return 0.0, 0.0
    eps = h / np.sqrt(n)
    L = qllr(rho0, eval_model(model, theta0 + eps)).L
    J = sld_gram(rho0, A, A)
    quad = float(np.real(h @ J @ h))
    lin = sum(e * a for e, a in zip(eps, A))
    P = np.sqrt(n) * (L - lin + quad / (2 * n) * np.eye(rho0.shape[0]))
    p_norm = float(np.linalg.norm(P, 2))
    sqrtn_trace = float(np.sqrt(n) * np.real(np.trace(rho0 @ P)))
    return p_norm, sqrtn_trace


def qlan_report(model, theta0, h, n_schedule=(10**2, 10**3, 10**4, 10**5, 10**6)):
    A = sld(model, theta0)
    return [(int(n), *qlan_residual(model, theta0, h, n, A)) for n in n_schedule]


def decay_exponent(ns, values):
    """Least-squares slope of ``log(values)`` against ``log(ns)``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
