"""Parametric quantum models and their local geometry.

A model is a smooth map ``theta -> rho_theta``. At a reference point it yields
symmetric logarithmic derivatives (SLDs), the commutation operator of the
reference state, the minimal D-invariant extension of the SLD tangent space,
and the matrices ``Sigma`` and ``tau`` that determine the Holevo bound.
"""

from dataclasses import dataclass, field

import numpy as np

from .herm import (
    I2,
    RANK_RTOL,
    SX,
    SY,
    SZ,
    as_hermitian,
    check_dim,
    eigh,
    kron,
)
from .states import as_density

DERIV_STEP = 1e-5
SLD_RESIDUAL_TOL = 1e-7
INDEP_RTOL = 1e-10


class ModelError(ValueError):
    pass


class ParamModel:
    """A differentiable family of density matrices.

    Parameters
    ----------
    dim : int
        Hilbert space dimension.
    d : int
        Number of parameters.
    kind : str
        ``"qubit3d"``, ``"qubit2d"``, ``"qubit_pure"``, ``"affine"`` or ``"iid"``.
    func : callable
        Maps a length-``d`` array to a density matrix (unchecked).
    domain : callable, optional
        Returns True for admissible parameters.
    deriv_step : float
        Central-difference step for derivatives.
    extension_hint : callable, optional
        ``theta0 -> list of operators`` preferred as extra D-invariant basis
        elements when they lie in the extension.
    """

    def __init__(self, dim, d, kind, func, domain=None, deriv_step=DERIV_STEP,
                 extension_hint=None, params=None):
        self.dim = int(dim)
        self.d = int(d)
        self.kind = kind
        self._func = func
        self._domain = domain
        self.deriv_step = deriv_step
        self.extension_hint = extension_hint
        self.params = dict(params or {})

    def __repr__(self):
        extra = "".join(f", {k}={v!r}" for k, v in self.params.items() if k != "base")
        return f"ParamModel(kind={self.kind!r}, dim={self.dim}, d={self.d}{extra})"

    def in_domain(self, theta):
        return self._domain is None or bool(self._domain(np.asarray(theta, dtype=float)))

    def raw(self, theta):
        return np.asarray(self._func(np.asarray(theta, dtype=float)), dtype=complex)

    def __call__(self, theta):
        return eval_model(self, theta)


def eval_model(model, theta):
    """Density matrix of ``model`` at ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.d,):
        raise ModelError(f"expected {model.d} parameters, got shape {theta.shape}")
    if not model.in_domain(theta):
        raise ModelError(f"theta={theta.tolist()} is outside the model domain")
    return as_density(model.raw(theta))


def _unit_ball(theta):
    return np.linalg.norm(theta) < 1.0


def qubit3d():
    """All faithful qubit states, ``rho = (I + theta . sigma) / 2`` on the open unit ball."""
    def func(t):
        return 0.5 * (I2 + t[0] * SX + t[1] * SY + t[2] * SZ)
    return ParamModel(2, 3, "qubit3d", func, _unit_ball)


def qubit2d(z0=0.25):
    """``rho = (I + t1 sx + t2 sy + z0 sqrt(1 - |t|^2) sz) / 2`` on the open unit disk."""
    z0 = float(z0)
    if not 0.0 <= z0 < 1.0:
        raise ModelError(f"z0 must lie in [0, 1), got {z0}")

    def func(t):
        z = z0 * np.sqrt(max(0.0, 1.0 - t[0] ** 2 - t[1] ** 2))
        return 0.5 * (I2 + t[0] * SX + t[1] * SY + z * SZ)

    def hint(t):
        # sigma_3 centred at the reference point
        z = z0 * np.sqrt(1.0 - t[0] ** 2 - t[1] ** 2)
        return [SZ - z * I2]

    return ParamModel(2, 2, "qubit2d", func, _unit_ball, extension_hint=hint, params={"z0": z0})


def pure_state_vector(theta):
    t = np.asarray(theta, dtype=float)
    nrm = np.hypot(t[0], t[1])
    if nrm == 0.0:
        return np.array([1.0, 0.0], dtype=complex)
    gen = (t[0] * SX + t[1] * SY) / nrm
    op = np.cosh(nrm / 2) * I2 + np.sinh(nrm / 2) * gen
    return op[:, 0] / np.sqrt(np.cosh(nrm))


def qubit_pure():
    """Pure model ``psi(theta) = exp((t1 sx + t2 sy) / 2) |0> / sqrt(cosh |theta|)``."""
    def func(t):
        psi = pure_state_vector(t)
        return np.outer(psi, psi.conj())
    return ParamModel(2, 2, "qubit_pure", func)


def affine(rho0, generators, theta0=None):
    """``rho(theta) = rho0 + sum_i theta_i G_i``; domain is where this is a valid state."""
    rho0 = as_hermitian(rho0)
    gens = [as_hermitian(g) for g in generators]
    dim = rho0.shape[0]
    for g in gens:
        if g.shape != rho0.shape:
            raise ModelError("generator dimension does not match rho0")
        if abs(np.trace(g)) > 1e-10:
            raise ModelError("generators must be traceless")
    gens_arr = np.array(gens)

    def func(t):
        return rho0 + np.tensordot(t, gens_arr, axes=1)

    def domain(t):
        return np.linalg.eigvalsh(func(t))[0] >= -1e-12

    model = ParamModel(dim, len(gens), "affine", func, domain,
                       params={"rho0": rho0, "generators": gens})
    if theta0 is not None:
        eval_model(model, theta0)
    return model


BUILTINS = {"qubit3d": qubit3d, "qubit2d": qubit2d, "qubit_pure": qubit_pure}


def tensor_extend(model, n, cap=None):
    """The ``n``-fold i.i.d. extension ``theta -> rho_theta^{(x) n}``."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return model
    check_dim(model.dim**n, cap)

    def func(t):
        r = model.raw(t)
        return kron(*([r] * n))

    hint = None
    if model.extension_hint is not None:
        from .herm import kron_sum

        def hint(t):
            return [kron_sum(h, n) for h in model.extension_hint(t)]

    return ParamModel(model.dim**n, model.d, "iid", func, model._domain, model.deriv_step,
                      extension_hint=hint, params={"base": model, "n": n})


def derivative(model, theta, i, step=None):
    """Central difference of ``rho_theta`` along coordinate ``i``, Richardson-extrapolated once."""
    h = model.deriv_step if step is None else step
    theta = np.asarray(theta, dtype=float)
    e = np.zeros(model.d)
    e[i] = 1.0

    def central(s):
        return (model.raw(theta + s * e) - model.raw(theta - s * e)) / (2 * s)

    coarse = central(h)
    fine = central(h / 2)
    out = (4 * fine - coarse) / 3
    dev = np.linalg.norm(out - out.conj().T)
    if dev > 1e-8 * max(1.0, np.linalg.norm(out)):
        raise ModelError(f"derivative along theta[{i}] is not Hermitian (deviation {dev:.2e})")
    return 0.5 * (out + out.conj().T)


def sld_from_derivative(rho, drho):
    """Solve ``drho = (L rho + rho L) / 2`` with the minimal-norm convention on ker rho."""
    s, u = eigh(rho)
    dp = u.conj().T @ drho @ u
    denom = s[:, None] + s[None, :]
    thr = RANK_RTOL * max(s[-1], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = np.where(denom > thr, 2.0 * dp / denom, 0.0)
    return as_hermitian(u @ lp @ u.conj().T, tol=1e-8)


def sld_residual(rho, drho, L):
    return float(np.linalg.norm(drho - 0.5 * (L @ rho + rho @ L)))


def sld(model, theta0):
    """SLDs of ``model`` at ``theta0``."""
    rho = eval_model(model, theta0)
    out = []
    for i in range(model.d):
        drho = derivative(model, theta0, i)
        L = sld_from_derivative(rho, drho)
        out.append(L)
    return out


def sld_gram(rho, ops_a, ops_b):
    """Matrix ``G_ij = Tr rho B_j A_i`` (note the reversed operator order)."""
    return np.array([[np.trace(rho @ b @ a) for b in ops_b] for a in ops_a], dtype=complex)


def commutation_apply(rho, X):
    """The commutation operator: solves ``D rho + rho D = i (X rho - rho X)``."""
    s, u = eigh(rho)
    xp = u.conj().T @ X @ u
    denom = s[:, None] + s[None, :]
    diff = s[None, :] - s[:, None]
    thr = RANK_RTOL * max(s[-1], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = np.where(denom > thr, 1j * diff / denom * xp, 0.0)
    return as_hermitian(u @ dp @ u.conj().T, tol=1e-8)


def rho_inner(rho, X, Y):
    """``<X, Y>_rho = Re Tr rho X Y``."""
    return float(np.real(np.trace(rho @ X @ Y)))


def center(rho, X):
    return X - np.trace(rho @ X).real * np.eye(X.shape[0])


def _project_out(rho, X, ortho):
    res = X.copy()
    for q in ortho:
        res = res - rho_inner(rho, q, res) * q
    return res


def _rho_norm(rho, X):
    return np.sqrt(max(rho_inner(rho, X, X), 0.0))


def d_invariant_extension(rho, slds, tol=INDEP_RTOL, hints=()):
    """Basis of the smallest D-invariant real span containing the centred SLDs.

    The first members are the (centred) SLDs when they are independent. Any
    operator in ``hints`` that lies in the extension is preferred over the raw
    D-images when completing the basis.
    """
    dim = rho.shape[0]
    cap = dim * dim - 1
    ortho = []
    queue = [center(rho, L) for L in slds]
    raw = []
    while queue:
        x = queue.pop(0)
        scale = max(_rho_norm(rho, x), 1e-300)
        res = _project_out(rho, x, ortho)
        nrm = _rho_norm(rho, res)
        if nrm <= tol * scale or nrm <= 1e-14:
            continue
        # second pass for numerical orthogonality
        res = _project_out(rho, res, ortho)
        nrm = _rho_norm(rho, res)
        ortho.append(res / nrm)
        raw.append(x)
        if len(raw) > cap:
            raise RuntimeError("extension exceeded dim^2 - 1 members")
        queue.append(commutation_apply(rho, x))

    candidates = [center(rho, L) for L in slds] + [center(rho, h) for h in hints] + raw
    basis = []
    bortho = []
    for c in candidates:
        scale = max(_rho_norm(rho, c), 1e-300)
        if _rho_norm(rho, _project_out(rho, c, ortho)) > 1e-8 * scale:
            continue  # not inside the extension
        res = _project_out(rho, _project_out(rho, c, bortho), bortho)
        nrm = _rho_norm(rho, res)
        if nrm <= tol * scale or nrm <= 1e-14:
            continue
        basis.append(c)
        bortho.append(res / nrm)
        if len(basis) == len(ortho):
            break
    return basis


def closure_residual(rho, basis):
    """Largest relative rho-norm residual of projecting ``D(D_j)`` onto span(basis)."""
    ortho = []
    for b in basis:
        res = _project_out(rho, _project_out(rho, b, ortho), ortho)
        ortho.append(res / _rho_norm(rho, res))
    worst = 0.0
    for b in basis:
        db = commutation_apply(rho, b)
        res = _project_out(rho, db, ortho)
        worst = max(worst, _rho_norm(rho, res) / max(_rho_norm(rho, b), 1e-300))
    return worst


def sigma_tau(rho, d_basis, slds):
    """``Sigma_ij = Tr rho D_j D_i`` and ``tau_ij = Tr rho L_j D_i``."""
    return sld_gram(rho, d_basis, d_basis), sld_gram(rho, d_basis, slds)


@dataclass(frozen=True)
class GeometryReport:
    theta0: np.ndarray
    rho: np.ndarray
    slds: list
    J: np.ndarray
    J_S: np.ndarray
    d_basis: list
    Sigma: np.ndarray
    tau: np.ndarray
    sld_residuals: list = field(default_factory=list)

    @property
    def d(self):
        return len(self.slds)

    @property
    def r(self):
        return len(self.d_basis)


def geometry(model, theta0, d_basis=None):
    """Build the :class:`GeometryReport` of ``model`` at ``theta0``."""
    theta0 = np.asarray(theta0, dtype=float)
    rho = eval_model(model, theta0)
    slds, residuals = [], []
    for i in range(model.d):
        drho = derivative(model, theta0, i)
        L = sld_from_derivative(rho, drho)
        res = sld_residual(rho, drho, L)
        if res > SLD_RESIDUAL_TOL * max(1.0, np.linalg.norm(drho)):
            raise ModelError(f"SLD equation residual {res:.2e} along theta[{i}]")
        slds.append(L)
        residuals.append(res)
    J = sld_gram(rho, slds, slds)
    if d_basis is None:
        hints = model.extension_hint(theta0) if model.extension_hint is not None else ()
        d_basis = d_invariant_extension(rho, slds, hints=hints)
    Sigma, tau = sigma_tau(rho, d_basis, slds)
    return GeometryReport(theta0, rho, slds, J, J.real.copy(), list(d_basis), Sigma, tau, residuals)


__all__ = [
    "BUILTINS", "GeometryReport", "ModelError", "ParamModel", "affine", "center",
    "closure_residual", "commutation_apply", "d_invariant_extension", "derivative",
    "eval_model", "geometry", "qubit2d", "qubit3d", "qubit_pure", "rho_inner", "sigma_tau",
    "sld", "sld_from_derivative", "sld_gram", "sld_residual", "tensor_extend",
]

