"""Density operators, mutual absolute continuity and quantum log-likelihood ratios."""

from dataclasses import dataclass

import numpy as np

from .herm import (
    RANK_RTOL,
    as_hermitian,
    eigh,
    func_calc,
    geometric_mean,
    psd_sqrt,
)

TRACE_TOL = 1e-10


class StateError(ValueError):
    pass


class AbsoluteContinuityError(StateError):
    pass


def as_density(a, tol=TRACE_TOL):
    """Validate a density matrix; slightly negative eigenvalues are clipped to zero."""
    rho = as_hermitian(a, tol=max(tol, 1e-12))
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise StateError(f"trace is {tr!r}, expected 1")
    w, u = eigh(rho)
    if w[0] < -tol:
        raise StateError(f"negative eigenvalue {w[0]!r}")
    if w[0] < 0:
        w = np.clip(w, 0.0, None)
        rho = (u * w) @ u.conj().T
    return rho


def pure(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def _support_split(rho):
    """Eigenvectors of ``rho`` split into support and kernel blocks."""
    w, u = eigh(rho)
    keep = w > RANK_RTOL * max(w[-1], 0.0)
    return w[keep], u[:, keep], u[:, ~keep]


def excision(rho, sigma):
    """Compression of ``sigma`` to the support of ``rho``, in the eigenbasis of ``rho``."""
    _, us, _ = _support_split(rho)
    return us.conj().T @ sigma @ us


def _abs_cont_failure(rho, sigma, tol):
    if rho.shape != sigma.shape:
        raise StateError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    ex = excision(rho, sigma)
    lo = np.linalg.eigvalsh(ex)[0] if ex.size else 0.0
    if lo <= tol:
        return f"excision of sigma onto supp rho is not positive definite (min eigenvalue {lo:.3e})"
    r_rho, r_sigma = _rank(rho), _rank(sigma)
    if r_rho != r_sigma:
        return f"rank mismatch: rank rho = {r_rho}, rank sigma = {r_sigma}"
    return None


def _rank(rho):
    w = np.linalg.eigvalsh(rho)
    return int(np.sum(w > RANK_RTOL * max(w[-1], 0.0)))


def mutually_abs_continuous(rho, sigma, tol=1e-10):
    """True iff ``sigma`` restricted to supp ``rho`` is positive definite and the ranks agree."""
    return _abs_cont_failure(np.asarray(rho), np.asarray(sigma), tol) is None


@dataclass(frozen=True)
class LogLikelihoodRatio:
    L: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray

    @property
    def half_exp(self):
        """``exp(L / 2)``."""
        return func_calc(self.L, lambda w: np.exp(0.5 * w))

    def residual(self):
        """Frobenius norm of ``exp(L/2) rho exp(L/2) - sigma``."""
        e = self.half_exp
        return float(np.linalg.norm(e @ self.rho @ e - self.sigma))


def qllr(rho, sigma, gamma=None, tol=1e-10):
    """Quantum log-likelihood ratio ``L(sigma|rho)`` with ``sigma = e^{L/2} rho e^{L/2}``.

    For faithful ``rho`` the result is ``2 log(rho^{-1} # sigma)``. Otherwise the
    block construction on ``supp rho`` is used, with ``gamma`` (default identity)
    on the kernel block.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    why = _abs_cont_failure(rho, sigma, tol)
    if why is not None:
        raise AbsoluteContinuityError(f"states are not mutually absolutely continuous: {why}")
    if np.allclose(rho, sigma, rtol=0.0, atol=1e-15):
        return LogLikelihoodRatio(np.zeros_like(rho), rho, sigma)

    s, us, uk = _support_split(rho)
    if uk.shape[1] == 0:
        rho_half = func_calc(rho, np.sqrt)
        rho_mhalf = func_calc(rho, lambda w: 1.0 / np.sqrt(w))
        mid = psd_sqrt(as_hermitian(rho_half @ sigma @ rho_half, tol=1e-8))
        R = as_hermitian(rho_mhalf @ mid @ rho_mhalf, tol=1e-8)
    else:
        k = us.shape[1]
        u = np.hstack([us, uk])
        sig = u.conj().T @ sigma @ u
        sigma0 = sig[:k, :k]
        alpha = sig[:k, k:]
        rho0_inv = np.diag(1.0 / s).astype(complex)
        G = geometric_mean(rho0_inv, as_hermitian(sigma0, tol=1e-8))
        nk = uk.shape[1]
        g = np.eye(nk) if gamma is None else np.asarray(gamma, dtype=complex)
        E = np.eye(k + nk, dtype=complex)
        E[:k, k:] = np.linalg.solve(sigma0, alpha)
        mid = np.zeros((k + nk, k + nk), dtype=complex)
        mid[:k, :k] = G
        mid[k:, k:] = g
        R = as_hermitian(u @ (E.conj().T @ mid @ E) @ u.conj().T, tol=1e-8)
    L = 2.0 * func_calc(R, np.log)
    return LogLikelihoodRatio(as_hermitian(L, tol=1e-8), rho, sigma)


def fidelity(rho, sigma):
    """``Tr sqrt(sqrt(rho) sigma sqrt(rho))``."""
    r = psd_sqrt(rho)
    inner = as_hermitian(r @ sigma @ r, tol=1e-8)
    return float(min(1.0, max(0.0, np.trace(psd_sqrt(inner)).real)))
