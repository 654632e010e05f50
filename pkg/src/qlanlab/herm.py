"""Dense Hermitian matrix algebra and functional calculus.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Functions in this
module never mutate their arguments.
"""

import os
from functools import reduce

import numpy as np

HERM_TOL = 1e-12
RANK_RTOL = 1e-12
DEFAULT_MEMCAP_DIM = 4096


class HermiticityError(ValueError):
    pass


class DomainError(ValueError):
    """A scalar function was applied outside its domain."""


class ResourceError(RuntimeError):
    """A tensor product would exceed the configured dimension cap."""


class EigenError(np.linalg.LinAlgError):
    pass


def memcap_dim():
    """Dimension cap for tensor products (``QLANLAB_MEMCAP_DIM`` overrides)."""
    env = os.environ.get("QLANLAB_MEMCAP_DIM")
    if env:
        return int(env)
    return DEFAULT_MEMCAP_DIM


def check_dim(dim, cap=None):
    cap = memcap_dim() if cap is None else cap
    if dim > cap:
        raise ResourceError(f"required dimension {dim} exceeds memory cap {cap}")
    return dim


def as_hermitian(a, tol=HERM_TOL):
    """Validate ``a`` as Hermitian and return its exact symmetrization ``(a + a^H) / 2``.

    The tolerance is relative to ``max(1, ||a||_F)``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise HermiticityError(f"expected a square matrix, got shape {a.shape}")
    dev = np.linalg.norm(a - a.conj().T)
    if dev > tol * max(1.0, np.linalg.norm(a)):
        raise HermiticityError(f"matrix is not Hermitian (||A - A^H|| = {dev:.3e})")
    return 0.5 * (a + a.conj().T)


def dag(a):
    return np.asarray(a).conj().T


def eigh(h):
    """Eigendecomposition ``h = U diag(w) U^H`` with ascending real ``w``."""
    h = np.asarray(h, dtype=complex)
    try:
        w, u = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(h) if np.all(np.isfinite(h)) else np.inf
        raise EigenError(
            f"eigensolver did not converge (dim={h.shape[0]}, condition number={cond:.3e})"
        ) from exc
    return w, u


def func_calc(h, f, clip=False):
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    Parameters
    ----------
    h : array_like
        Hermitian matrix.
    f : callable
        Vectorized real function, evaluated on the eigenvalues.
    clip : bool
        Set eigenvalues below ``RANK_RTOL * ||h||`` to zero first. Useful for
        ``sqrt`` of numerically PSD matrices.
    """
    w, u = eigh(h)
    if clip:
        w = clip_spectrum(w)
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w))
    bad = ~np.isfinite(fw)
    if np.iscomplexobj(fw):
        bad |= np.abs(fw.imag) > 0
    if np.any(bad):
        raise DomainError(f"function undefined at eigenvalue {w[np.argmax(bad)]!r}")
    return (u * fw.real) @ u.conj().T


def clip_spectrum(w):
    """Zero out eigenvalues that are numerically zero or slightly negative."""
    w = np.asarray(w, dtype=float).copy()
    scale = np.max(np.abs(w)) if w.size else 0.0
    w[w < RANK_RTOL * scale] = 0.0
    return w


def numeric_rank(h):
    w = np.linalg.eigvalsh(h)
    scale = np.max(np.abs(w)) if w.size else 0.0
    return int(np.sum(np.abs(w) > RANK_RTOL * scale))


def psd_sqrt(a):
    return func_calc(a, np.sqrt, clip=True)


def inv_sqrt(a):
    return func_calc(a, lambda w: 1.0 / np.sqrt(w))


def geometric_mean(a, b):
    """Operator geometric mean ``A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}``.

    ``a`` must be positive definite; ``b`` positive semidefinite.
    """
    w = np.linalg.eigvalsh(a)
    if w[0] <= RANK_RTOL * max(abs(w[-1]), 1e-300):
        raise DomainError(f"first argument is not positive definite (min eigenvalue {w[0]!r})")
    a_half = func_calc(a, np.sqrt)
    a_mhalf = func_calc(a, lambda x: 1.0 / np.sqrt(x))
    mid = psd_sqrt(as_hermitian(a_mhalf @ b @ a_mhalf, tol=1e-8))
    return as_hermitian(a_half @ mid @ a_half, tol=1e-8)


def trace_abs(a):
    """Trace norm of a Hermitian matrix, the sum of absolute eigenvalues."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(a))))


def kron(*ops):
    return reduce(np.kron, ops)


def site_embed(a, n, k, cap=None):
    """``I^{(k-1)} (x) A (x) I^{(n-k)}`` for 1-based site ``k``."""
    if not 1 <= k <= n:
        raise ValueError(f"site {k} outside 1..{n}")
    dim = a.shape[0]
    check_dim(dim**n, cap)
    left = np.eye(dim ** (k - 1))
    right = np.eye(dim ** (n - k))
    return np.kron(np.kron(left, a), right)


def kron_sum(a, n, cap=None):
    """``sum_k I^{(k-1)} (x) A (x) I^{(n-k)}`` without building each embedding separately."""
    dim = a.shape[0]
    check_dim(dim**n, cap)
    out = np.asarray(a, dtype=complex)
    for m in range(1, n):
        out = np.kron(out, np.eye(dim)) + np.kron(np.eye(dim**m), a)
    return out


# Pauli matrices, used throughout the built-in models and tests.
I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SX, SY, SZ)
