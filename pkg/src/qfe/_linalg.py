"""Small numerical helpers used across modules."""

import os

import numpy as np

from .errors import InvalidArgument, NumericError, ResourceLimit

DEFAULT_MAX_DIM = 4096


def max_dim():
    """Dense-dimension resource guard, overridable via ``QFE_MAX_DIM``."""
    raw = os.environ.get("QFE_MAX_DIM")
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError as exc:
        raise InvalidArgument(f"QFE_MAX_DIM must be an integer, got {raw!r}") from exc
    if value < 1:
        raise InvalidArgument("QFE_MAX_DIM must be positive")
    return value


def check_dim(dim, what="matrix"):
    limit = max_dim()
    if dim > limit:
        raise ResourceLimit(f"{what} dimension {dim} exceeds resource guard {limit} (QFE_MAX_DIM)")


def eta(t):
    """Entropy kernel ``-t log t`` with ``eta(0) = 0``; works elementwise."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = -t[pos] * np.log(t[pos])
    if out.ndim == 0:
        return float(out)
    return out


def as_square(matrix, name="matrix"):
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgument(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{name} contains NaN or infinite entries")
    return m.astype(complex)


def hermitian_defect(m):
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def herm(m):
    return 0.5 * (m + m.conj().T)


def matrix_function(m, fn):
    """Apply ``fn`` to the eigenvalues of a Hermitian matrix."""
    w, v = np.linalg.eigh(herm(m))
    return (v * fn(w)) @ v.conj().T


def von_neumann_entropy(rho):
    """``-Tr rho log rho`` from the eigenvalues, negative round-off dropped."""
    w = np.linalg.eigvalsh(herm(np.asarray(rho, dtype=complex)))
    return float(np.sum(eta(np.clip(w, 0.0, None))))


def check_density(rho, name="density", tol=1e-10):
    rho = as_square(rho, name)
    if hermitian_defect(rho) > tol:
        raise InvalidArgument(f"{name} is not Hermitian")
    w = np.linalg.eigvalsh(herm(rho))
    if w.size and w[0] < -tol:
        raise InvalidArgument(f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidArgument(f"{name} trace {np.trace(rho).real!r} differs from 1")
    return herm(rho)


def check_orthonormal(basis, tol=1e-10, name="basis"):
    v = np.asarray(basis, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if v.ndim != 2:
        raise InvalidArgument(f"{name} must be a matrix of column vectors")
    gram = v.conj().T @ v
    if gram.size and np.max(np.abs(gram - np.eye(v.shape[1]))) > tol:
        raise InvalidArgument(f"{name} columns are not orthonormal")
    return v
