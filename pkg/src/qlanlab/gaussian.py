"""Quantum Gaussian states and Gaussian shift models.

Gaussian quantities are evaluated through the closed-form quasi-characteristic
function; no operator representation of the CCR algebra is built. Gram-type
matrices use the reversed index order ``G_ij = phi(O_j O_i)`` throughout.
"""

from dataclasses import dataclass

import numpy as np

from .herm import as_hermitian, psd_sqrt

MOMENT_FD_STEP = 1e-4
MOMENT_FD_TOL = 1e-4


class GaussianError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianState:
    """``N(h, J)`` with ``J = V + iS`` Hermitian PSD."""

    h: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(-1)
        J = as_hermitian(np.atleast_2d(self.J), tol=1e-10)
        if J.shape != (h.size, h.size):
            raise GaussianError(f"J has shape {J.shape}, expected {(h.size, h.size)}")
        lo = np.linalg.eigvalsh(J)[0]
        if lo < -1e-10 * max(1.0, np.abs(J).max()):
            raise GaussianError(f"J is not positive semidefinite (min eigenvalue {lo:.3e})")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", J)

    @property
    def V(self):
        return self.J.real

    @property
    def S(self):
        return self.J.imag


def quasi_char(state, xis):
    """Quasi-characteristic function ``phi(prod_t exp(i xi_t . X))`` of ``N(h, J)``.

    ``xis`` is an ordered sequence of complex vectors of length ``d``.
    """
    h, J = state.h, state.J
    xis = [np.asarray(x, dtype=complex).reshape(-1) for x in xis]
    if not xis:
        return complex(1.0)
    # sum_ij a^i b^j J_ji = b^T J a
    expo = 0.0 + 0.0j
    for t, a in enumerate(xis):
        expo += 1j * (a @ h) - 0.5 * (a @ J @ a)
        for b in xis[t + 1:]:
            expo -= b @ J @ a
    return complex(np.exp(expo))


def gauss_moments(state, check=True, step=MOMENT_FD_STEP):
    """First and second moments ``(h, J)`` of a Gaussian state.

    With ``check`` the values are re-derived by finite differences of
    :func:`quasi_char` at the origin and compared.
    """
    h, J = state.h.copy(), state.J.copy()
    if check:
        fd_mean, fd_second = _moments_by_differentiation(state, step)
        err = max(np.max(np.abs(fd_mean - h), initial=0.0),
                  np.max(np.abs(fd_second - J), initial=0.0))
        if err > MOMENT_FD_TOL:
            raise GaussianError(f"finite-difference moments disagree by {err:.2e}")
    return h, J


def _moments_by_differentiation(state, step):
    d = state.h.size
    eye = np.eye(d)
    mean = np.empty(d)
    for i in range(d):
        plus = quasi_char(state, [step * eye[i]])
        minus = quasi_char(state, [-step * eye[i]])
        mean[i] = np.real(-1j * (plus - minus) / (2 * step))
    second = np.empty((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            # d^2/dxi1^j dxi2^i phi(e^{i xi1 X} e^{i xi2 X}) = -phi(X_j X_i)
            acc = 0.0
            for s1, s2, sign in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
                acc += sign * quasi_char(state, [s1 * step * eye[j], s2 * step * eye[i]])
            raw = -acc / (4 * step * step)
            second[i, j] = raw - mean[i] * mean[j]
    return mean, second


@dataclass(frozen=True)
class GaussianShiftModel:
    """``{N(tau h, Sigma) ; h in R^d}`` with real ``tau`` of full column rank."""

    tau: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau)
        if np.iscomplexobj(tau):
            tau = tau.real
        tau = np.atleast_2d(np.asarray(tau, dtype=float))
        Sigma = as_hermitian(np.asarray(self.Sigma, dtype=complex), tol=1e-10)
        if Sigma.shape != (tau.shape[0], tau.shape[0]):
            raise GaussianError("Sigma and tau dimensions disagree")
        if np.linalg.matrix_rank(tau) != tau.shape[1]:
            raise GaussianError("tau must have full column rank")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "Sigma", Sigma)

    def state(self, h):
        return GaussianState(self.tau @ np.asarray(h, dtype=float), self.Sigma)


def gauss_sld(model, h, check=True):
    """SLDs of the shift model at ``h`` as coefficients on ``X_l - (tau h)_l``.

    Returns ``(coeff, shift)`` with ``coeff = (Re Sigma)^{-1} tau`` and
    ``shift = tau h``, so ``L_k = sum_l coeff[l, k] (X_l - shift_l)``.
    """
    V = model.Sigma.real
    if np.linalg.eigvalsh(V)[0] <= 0:
        raise GaussianError("Re Sigma is singular")
    coeff = np.linalg.solve(V, model.tau)
    shift = model.tau @ np.asarray(h, dtype=float)
    if check:
        sig_err, tau_err = gauss_sld_residuals(model, h, coeff)
        if max(sig_err, tau_err) > 1e-8:
            raise GaussianError(f"SLD moment relations violated ({sig_err:.2e}, {tau_err:.2e})")
    return coeff, shift


def gauss_sld_residuals(model, h, coeff):
    """Residuals of ``phi(Lt_j Lt_i) = Sigma_ij`` and ``Re phi(L_j Lt_i) = tau_ij``.

    ``Lt_l = X_l - (tau h)_l`` are the centred canonical observables.
    """
    _, second = gauss_moments(model.state(h), check=False)
    # phi(Lt_j Lt_i) is the centred second moment
    sig_err = float(np.max(np.abs(second - model.Sigma)))
    # phi(L_j Lt_i) = sum_l coeff[l, j] phi(Lt_l Lt_i) = (second @ coeff)_ij
    tau_err = float(np.max(np.abs(np.real(second @ coeff) - model.tau)))
    return sig_err, tau_err


def ancilla_from_gram(J):
    """Pure state ``|0><0|`` on ``C^{d+1}`` and observables with mean 0 and Gram ``J``.

    ``B_i = |l_i><0| + |0><l_i|`` with ``|l_i> = sum_k [sqrt J]_{ik} |k>``.
    """
    J = as_hermitian(np.atleast_2d(np.asarray(J, dtype=complex)), tol=1e-9)
    d = J.shape[0]
    root = psd_sqrt(J)
    sigma = np.zeros((d + 1, d + 1), dtype=complex)
    sigma[0, 0] = 1.0
    B = []
    for i in range(d):
        ell = np.zeros(d + 1, dtype=complex)
        ell[1:] = root[i, :]
        e0 = np.zeros(d + 1, dtype=complex)
        e0[0] = 1.0
        B.append(np.outer(ell, e0.conj()) + np.outer(e0, ell.conj()))
    return sigma, B


def commuting_completion(psi, A, seed=0, overlap_floor=1e-3, budget=64, tol=1e-9):
    """Operators ``K_i`` with ``K_i psi = 0`` making ``A_i + K_i`` commute pairwise.

    Requires the Gram matrix ``<psi| A_j A_i |psi>`` and the means to be real.
    A real orthonormal frame for ``psi`` and ``A_i psi`` is rotated by seeded
    random orthogonal matrices until every basis vector overlaps ``psi`` by at
    least ``overlap_floor``.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    dim = psi.size
    ells = [np.asarray(a, dtype=complex) @ psi for a in A]
    vecs = [psi] + ells
    gram = np.array([[np.vdot(u, v) for v in vecs] for u in vecs])
    if np.max(np.abs(gram.imag), initial=0.0) > tol * max(1.0, np.abs(gram).max()):
        raise GaussianError("overlaps <psi|A_i psi> and <A_i psi|A_j psi> must be real")

    frame = _real_frame(vecs, dim)
    rng = np.random.default_rng(seed)
    for attempt in range(budget):
        O = np.eye(dim) if attempt == 0 else _random_orthogonal(rng, dim)
        basis = frame @ O.T
        overlaps = basis.conj().T @ psi
        if np.min(np.abs(overlaps)) >= overlap_floor:
            break
    else:
        raise GaussianError(f"no basis with overlaps >= {overlap_floor} in {budget} attempts")

    K = []
    for a, ell in zip(A, ells):
        coeff = (basis.conj().T @ ell) / overlaps
        if np.max(np.abs(coeff.imag), initial=0.0) > 1e-8 * max(1.0, np.abs(coeff).max()):
            raise GaussianError("completion is not Hermitian; overlaps are not real")
        a_tilde = (basis * coeff.real) @ basis.conj().T
        K.append(a_tilde - np.asarray(a, dtype=complex))
    return K


def _real_frame(vecs, dim):
    """Orthonormal basis of C^dim whose first members span ``vecs`` with real coordinates."""
    cols = []
    for v in vecs:
        w = v.copy()
        for c in cols:
            w = w - np.vdot(c, w).real * c
        for c in cols:
            w = w - np.vdot(c, w).real * c
        n = np.linalg.norm(w)
        if n > 1e-10:
            cols.append(w / n)
    # complete with any orthonormal complement
    if cols:
        Q = np.array(cols).T
        comp = _complement(Q, dim)
        cols.extend(comp.T)
    else:
        cols = list(np.eye(dim, dtype=complex))
    return np.array(cols).T


def _complement(Q, dim):
    proj = np.eye(dim) - Q @ Q.conj().T
    u, s, _ = np.linalg.svd(proj)
    return u[:, s > 0.5]


def _random_orthogonal(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q * np.sign(np.diag(r))
