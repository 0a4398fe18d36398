"""Exact finite-dimensional CAR machinery.

Conventions
-----------
A correlation matrix ``A`` is the matrix of the one-particle operator in an
orthonormal basis, so ``(A f, g) = g^* A f``.  Mode operators act on the
``2**d`` dimensional Jordan-Wigner space; basis state 0 of each mode is empty,
so ``a = [[0, 1], [0, 0]]`` for one mode.  ``a(f) = sum_j conj(f_j) a_j`` is
antilinear in ``f`` and ``a*(f)`` is its adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._linalg import (
    as_square,
    check_dim,
    check_orthonormal,
    eta,
    herm,
    hermitian_defect,
)
from .errors import InvalidArgument, InvalidCorrelation, ResourceLimit, SingularModularFlow

CLAMP = 1e-12
SPECTRUM_TOL = 1e-10
MAX_MODES = 12

_SIGMA_MINUS = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
_PARITY = sp.csr_matrix(np.diag([1.0, -1.0]))


@dataclass(frozen=True)
class FermionRep:
    """Jordan-Wigner representation of ``d`` fermionic modes (sparse CSR matrices)."""

    d: int
    annihilators: tuple

    @property
    def dim(self):
        return 2**self.d

    @property
    def creators(self):
        return tuple(a.conj().T.tocsr() for a in self.annihilators)

    def annihilator(self, f):
        """``a(f)`` for a coefficient vector ``f`` (antilinear)."""
        f = _vector(f, self.d)
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for c, a in zip(f, self.annihilators):
            if c != 0:
                out = out + np.conj(c) * a
        return out.tocsr()

    def creator(self, f):
        return self.annihilator(f).conj().T.tocsr()

    def number(self, j):
        a = self.annihilators[j]
        return (a.conj().T @ a).tocsr()


def _vector(f, d):
    f = np.asarray(f, dtype=complex).reshape(-1)
    if f.size != d:
        raise InvalidArgument(f"vector has {f.size} components, expected {d}")
    return f


def jordan_wigner(d):
    """Annihilators ``a_j = Z x ... x Z x sigma x 1 x ... x 1`` on ``(C^2)^{x d}``."""
    if int(d) != d or d < 1:
        raise InvalidArgument(f"mode count must be a positive integer, got {d!r}")
    d = int(d)
    if d > MAX_MODES:
        raise ResourceLimit(f"{d} modes exceed the exact-representation guard of {MAX_MODES}")
    check_dim(2**d, "Jordan-Wigner space")
    ops = []
    for j in range(d):
        left = sp.identity(1, format="csr")
        for _ in range(j):
            left = sp.kron(left, _PARITY, format="csr")
        right = sp.identity(2 ** (d - j - 1), format="csr")
        ops.append(sp.kron(sp.kron(left, _SIGMA_MINUS), right, format="csr").astype(complex))
    return FermionRep(d, tuple(ops))


def check_correlation_car(A, tol=SPECTRUM_TOL):
    """Validate a CAR correlation matrix and return it as a Hermitian complex array."""
    try:
        A = as_square(A, "correlation matrix")
    except InvalidArgument as exc:
        raise InvalidCorrelation(str(exc)) from exc
    if hermitian_defect(A) > tol:
        raise InvalidCorrelation("correlation matrix is not Hermitian")
    A = herm(A)
    if A.size:
        w = np.linalg.eigvalsh(A)
        if w[0] < -tol or w[-1] > 1.0 + tol:
            raise InvalidCorrelation(
                f"CAR correlation spectrum [{w[0]:.3e}, {w[-1]:.3e}] leaves [0, 1]"
            )
    return A


def entropy_car(A):
    """``Tr[eta(A) + eta(1 - A)]`` in nats."""
    A = check_correlation_car(A)
    if A.size == 0:
        return 0.0
    w = np.clip(np.linalg.eigvalsh(A), 0.0, 1.0)
    return float(np.sum(eta(w) + eta(1.0 - w)))


def _clamped_eig(A):
    w, v = np.linalg.eigh(A)
    return np.clip(w, CLAMP, 1.0 - CLAMP), v


def quasifree_density_car(A, rep=None):
    """Density matrix of the gauge-invariant quasi-free state with correlation ``A``.

    ``rho`` is proportional to ``exp(sum_jk (log B)_jk a*_j a_k)`` with
    ``B = A (1 - A)^{-1}``; eigenvalues of ``A`` are clamped to
    ``[1e-12, 1 - 1e-12]`` first.
    """
    A = check_correlation_car(A)
    d = A.shape[0]
    if rep is None:
        rep = jordan_wigner(d)
    elif rep.d != d:
        raise InvalidArgument(f"representation has {rep.d} modes, correlation has {d}")
    w, v = _clamped_eig(A)
    log_b = (v * (np.log(w) - np.log1p(-w))) @ v.conj().T
    creators = rep.creators
    gen = sp.csr_matrix((rep.dim, rep.dim), dtype=complex)
    for j in range(d):
        for k in range(d):
            if log_b[j, k] != 0:
                gen = gen + log_b[j, k] * (creators[j] @ rep.annihilators[k])
    h = herm(gen.toarray())
    e, u = np.linalg.eigh(h)
    p = np.exp(e - e.max())
    p /= p.sum()
    return herm((u * p) @ u.conj().T)


def expectation(rho, op):
    """``Tr(rho op)`` for dense or sparse ``op``."""
    if sp.issparse(op):
        return complex((op.T.multiply(rho)).sum())
    return complex(np.sum(np.asarray(op).T * rho))


def matrix_units_car(rep, f):
    """Matrix units ``{e11, e12, e21, e22}`` of the single-mode algebra over ``C f``.

    ``e11 = a(f) a*(f)``, ``e22 = a*(f) a(f)``, ``e12 = a(f)``, ``e21 = a*(f)``.
    """
    f = _vector(f, rep.d)
    if abs(np.linalg.norm(f) - 1.0) > 1e-12:
        raise InvalidArgument(f"matrix units need a unit vector, |f| = {np.linalg.norm(f)!r}")
    a = rep.annihilator(f).toarray()
    ad = a.conj().T
    return {"e11": a @ ad, "e12": a, "e21": ad, "e22": ad @ a}


def modular_flow_car(A, f, t):
    """One-particle modular flow ``B^{it} f`` with ``B = A / (1 - A)``.

    Requires ``Ker A = Ker(1 - A) = 0``: any eigenvalue that would need
    clamping (closer than 1e-12 to 0 or 1) raises :class:`SingularModularFlow`.
    """
    A = check_correlation_car(A)
    f = _vector(f, A.shape[0])
    w, v = np.linalg.eigh(A)
    if w.size and (w[0] < CLAMP or w[-1] > 1.0 - CLAMP):
        raise SingularModularFlow("modular flow needs the spectrum of A inside (0, 1)")
    phase = np.exp(1j * t * (np.log(w) - np.log1p(-w)))
    return v @ (phase * (v.conj().T @ f))


def restrict_car(A, basis):
    """Compression ``V* A V`` of ``A`` to the span of orthonormal columns ``V``."""
    A = check_correlation_car(A)
    v = check_orthonormal(basis)
    if v.shape[0] != A.shape[0]:
        raise InvalidArgument("basis vectors do not match the correlation dimension")
    return check_correlation_car(herm(v.conj().T @ A @ v))
