"""Bosonic machinery on truncated Fock spaces.

Each of the ``d`` modes keeps occupations ``0 .. N-1`` so the truncated space
has dimension ``N**d``; basis states are ordered lexicographically with mode 0
most significant.  Operators are exact on states whose occupations stay below
the cutoff, which is where all the identities below are checked.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.special import gammaln

from ._linalg import as_square, check_dim, eta, herm, hermitian_defect, matrix_function
from .errors import CutoffWarning, InvalidArgument, InvalidCorrelation

SPECTRUM_TOL = 1e-10
TAIL_WARN = 1e-3
DEFAULT_TAIL = 1e-10


@dataclass(frozen=True)
class TruncatedFock:
    """Per-mode truncated Fock space with annihilators ``a_j |k> = sqrt(k) |k-1>``."""

    d: int
    cutoff: int
    annihilators: tuple

    @property
    def dim(self):
        return self.cutoff**self.d

    @property
    def creators(self):
        return tuple(a.conj().T.tocsr() for a in self.annihilators)

    def annihilator(self, f):
        f = np.asarray(f, dtype=complex).reshape(-1)
        if f.size != self.d:
            raise InvalidArgument(f"vector has {f.size} components, expected {self.d}")
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for c, a in zip(f, self.annihilators):
            if c != 0:
                out = out + np.conj(c) * a
        return out.tocsr()

    def creator(self, f):
        return self.annihilator(f).conj().T.tocsr()

    def occupations(self):
        """Occupation tuple of every basis state, shape ``(dim, d)``."""
        return np.array(list(itertools.product(range(self.cutoff), repeat=self.d)), dtype=int)

    def total_number(self):
        return self.occupations().sum(axis=1)


def truncated_fock(d, cutoff):
    if int(d) != d or d < 1:
        raise InvalidArgument(f"mode count must be a positive integer, got {d!r}")
    if int(cutoff) != cutoff or cutoff < 1:
        raise InvalidArgument(f"cutoff must be a positive integer, got {cutoff!r}")
    d, cutoff = int(d), int(cutoff)
    check_dim(cutoff**d, "truncated Fock space")
    b = sp.diags(np.sqrt(np.arange(1, cutoff, dtype=float)), 1, shape=(cutoff, cutoff), format="csr")
    ops = []
    for j in range(d):
        left = sp.identity(cutoff**j, format="csr")
        right = sp.identity(cutoff ** (d - j - 1), format="csr")
        ops.append(sp.kron(sp.kron(left, b), right, format="csr").astype(complex))
    return TruncatedFock(d, cutoff, tuple(ops))


def check_correlation_ccr(A, tol=SPECTRUM_TOL):
    try:
        A = as_square(A, "correlation matrix")
    except InvalidArgument as exc:
        raise InvalidCorrelation(str(exc)) from exc
    if hermitian_defect(A) > tol:
        raise InvalidCorrelation("correlation matrix is not Hermitian")
    A = herm(A)
    if A.size:
        w = np.linalg.eigvalsh(A)
        if w[0] < -tol:
            raise InvalidCorrelation(f"CCR correlation has negative eigenvalue {w[0]:.3e}")
    return A


def _geometric(lam, n):
    """Occupation law ``lam^k / (1 + lam)^(k+1)`` for ``k < n`` and the tail mass."""
    k = np.arange(n, dtype=float)
    if lam == 0:
        return (k == 0).astype(float), 0.0
    ratio = lam / (1.0 + lam)
    p = np.exp(k * math.log(ratio)) / (1.0 + lam)
    return p, ratio**n


def mode_occupation_probs(lam, cutoff):
    """Geometric occupation probabilities ``(p_0, ..., p_{N-1})`` and tail mass."""
    if not np.isfinite(lam) or lam < 0:
        raise InvalidArgument(f"occupation parameter must be >= 0, got {lam!r}")
    if int(cutoff) != cutoff or cutoff < 1:
        raise InvalidArgument(f"cutoff must be a positive integer, got {cutoff!r}")
    return _geometric(float(lam), int(cutoff))


def entropy_ccr(A):
    """``sum_i [(1 + l_i) log(1 + l_i) - l_i log l_i]`` over eigenvalues of ``A``."""
    A = check_correlation_ccr(A)
    if A.size == 0:
        return 0.0
    w = np.clip(np.linalg.eigvalsh(A), 0.0, None)
    return float(np.sum(eta(w) - eta(1.0 + w)))


def truncated_entropy_gap_bound(lam, cutoff):
    """Analytic bound on ``|S(truncated, renormalized law) - exact entropy|``.

    Sum of the discarded tail ``sum_{k>=N} eta(p_k)`` (closed form) and the
    effect of renormalizing the kept probabilities by ``1 - tail``.
    """
    p, tail = mode_occupation_probs(lam, cutoff)
    if tail == 0.0:
        return 0.0
    q = lam / (1.0 + lam)
    n = int(cutoff)
    tail_eta = -tail * math.log1p(-q) - math.log(q) * tail * (n + q / (1.0 - q))
    keep = 1.0 - tail
    renorm = abs(1.0 / keep - 1.0) * float(np.sum(eta(p))) + abs(math.log(keep))
    return tail_eta + renorm


def moment_tail_bound(lams, cutoff):
    """Bound on ``|Tr(rho_N a*_i a_j) - A_ji|`` for the truncated quasi-free density.

    The truncated density agrees with the exact one (up to the per-mode
    renormalization) on total-number sectors below the cutoff, so the error
    is controlled by the exact total-number law of the product of geometric
    modes.
    """
    lams = np.clip(np.asarray(lams, dtype=float).reshape(-1), 0.0, None)
    n = int(cutoff)
    if lams.size == 0:
        return 0.0
    kmax = max(n + 1, max(default_cutoff(float(l), 1e-18) for l in lams) * lams.size)
    pmf = np.ones(1)
    keep = 1.0
    for l in lams:
        p, _ = _geometric(float(l), kmax)
        pmf = np.convolve(pmf, p)[:kmax]
        keep *= 1.0 - _geometric(float(l), n)[1]
    k = np.arange(pmf.size)
    high = k >= n
    mean_high = float(np.sum(k[high] * pmf[high]))
    mass_high = float(np.sum(pmf[high]))
    return (
        mean_high
        + lams.size * (n - 1) * mass_high / keep
        + float(lams.sum()) * (1.0 / keep - 1.0)
    )


def default_cutoff(lam_max, tail=DEFAULT_TAIL):
    """Smallest ``N`` with ``(l/(1+l))^N < tail``."""
    if lam_max <= 0:
        return 1
    ratio = lam_max / (1.0 + lam_max)
    return max(1, int(math.floor(math.log(tail) / math.log(ratio))) + 1)


def second_quantization(fock, V):
    """Truncated ``Gamma(V) = exp(sum_jk (log V)_jk a*_j a_k)`` for a one-particle unitary."""
    V = np.asarray(V, dtype=complex)
    if V.shape != (fock.d, fock.d):
        raise InvalidArgument("unitary does not match the mode count")
    log_v = sla.logm(V)
    creators = fock.creators
    gen = sp.csr_matrix((fock.dim, fock.dim), dtype=complex)
    for j in range(fock.d):
        for k in range(fock.d):
            if abs(log_v[j, k]) > 0:
                gen = gen + log_v[j, k] * (creators[j] @ fock.annihilators[k])
    g = gen.toarray()
    # the generator is anti-Hermitian; exponentiate its Hermitian part i*g exactly
    return matrix_function(1j * g, lambda w: np.exp(-1j * w))


def quasifree_density_ccr(A, cutoff=None, fock=None):
    """Truncated Fock density of the gauge-invariant quasi-free state ``omega_A``.

    Per-mode geometric laws (each renormalized by ``1 - tail``) in the
    eigenbasis of ``A``, conjugated by the truncated second quantization of
    the diagonalizing unitary.  Returns ``(rho, tails)``.
    """
    A = check_correlation_ccr(A)
    d = A.shape[0]
    lam, V = np.linalg.eigh(A)
    lam = np.clip(lam, 0.0, None)
    if fock is None:
        if cutoff is None:
            cutoff = default_cutoff(float(lam.max()) if lam.size else 0.0)
        fock = truncated_fock(d, cutoff)
    elif fock.d != d:
        raise InvalidArgument("Fock space mode count does not match the correlation matrix")
    n = fock.cutoff
    diag = np.ones(1)
    tails = []
    for l in lam:
        p, tail = _geometric(float(l), n)
        tails.append(tail)
        diag = np.kron(diag, p / (1.0 - tail))
    worst = max(tails) if tails else 0.0
    if worst > TAIL_WARN:
        warnings.warn(
            f"cutoff {n} leaves tail mass {worst:.2e} > {TAIL_WARN:g}; raise the cutoff",
            CutoffWarning,
            stacklevel=2,
        )
    if np.allclose(V, np.diag(np.diag(V))):
        # diagonal V: Gamma(V) commutes with the diagonal density
        rho = np.diag(diag).astype(complex)
    else:
        gamma = second_quantization(fock, V)
        rho = herm((gamma * diag) @ gamma.conj().T)
    return rho, np.array(tails)


def number_projection(fock, k, f=None):
    """Spectral projection of ``a*(f) a(f)`` onto eigenvalue ``k``."""
    if f is None:
        f = np.eye(fock.d)[0]
    a = fock.annihilator(f)
    n_op = (a.conj().T @ a).toarray()
    w, v = np.linalg.eigh(herm(n_op))
    sel = np.abs(w - k) < 1e-8
    return v[:, sel] @ v[:, sel].conj().T


def matrix_units_ccr(fock, k, j, f=None):
    """Matrix unit ``e_{kj}(f)`` built from number projections and powers of ``a*(f)``.

    ``e_{k+n,k} = sqrt(k!/(k+n)!) a*(f)^n e_kk`` and ``e_{k,k+n}`` is its
    adjoint; coefficients use log-gamma.  ``f`` defaults to the first mode.
    """
    for name, idx in (("k", k), ("j", j)):
        if int(idx) != idx or idx < 0 or idx >= fock.cutoff - 1:
            raise InvalidArgument(f"index {name}={idx!r} outside [0, cutoff - 2]")
    k, j = int(k), int(j)
    if f is None:
        f = np.eye(fock.d)[0]
    f = np.asarray(f, dtype=complex)
    if abs(np.linalg.norm(f) - 1.0) > 1e-12:
        raise InvalidArgument("matrix units need a unit vector")
    lo, hi = min(k, j), max(k, j)
    e_lo = number_projection(fock, lo, f)
    n = hi - lo
    coeff = math.exp(0.5 * (gammaln(lo + 1) - gammaln(hi + 1)))
    raised = e_lo
    adag = fock.creator(f)
    for _ in range(n):
        raised = adag @ raised
    unit = coeff * np.asarray(raised)
    return unit if k >= j else unit.conj().T


def weyl_operator(fock, f):
    """``W(f) = exp(i Phi(f))`` with ``Phi(f) = (a(f) + a*(f)) / sqrt(2)`` on the truncation."""
    a = fock.annihilator(f).toarray()
    phi = (a + a.conj().T) / math.sqrt(2.0)
    return matrix_function(phi, lambda w: np.exp(1j * w))


def weyl_defect(fock, f, g, level=None):
    """Weyl-relation defect ``W(f) W(g) - exp(i Im(f,g)/2) W(f+g)`` on low occupations.

    The operator-norm defect is measured on the subspace of total occupation
    below ``level`` (default ``cutoff // 4``), where truncation effects are
    controlled.
    """
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if level is None:
        level = max(1, fock.cutoff // 4)
    inner = np.vdot(g, f)
    diff = weyl_operator(fock, f) @ weyl_operator(fock, g) - np.exp(
        0.5j * inner.imag
    ) * weyl_operator(fock, f + g)
    cols = fock.total_number() < level
    return float(np.linalg.norm(diff[:, cols], 2))


def truncation_algebra_projector(fock, n):
    """Spectral projection of ``N_K = sum_j a*_j a_j`` onto total occupation ``<= n - 1``."""
    if int(n) != n or n < 0 or n > fock.cutoff:
        raise InvalidArgument(f"level n={n!r} must lie in [0, cutoff]")
    return np.diag((fock.total_number() <= n - 1).astype(float)).astype(complex)
