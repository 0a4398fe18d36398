"""Finite-dimensional ingredients of the Connes-Narnhofer-Thirring entropy.

States are density matrices on a full matrix algebra.  A channel
``gamma: B -> A`` is given by Kraus operators ``K_j`` with
``gamma(b) = sum_j K_j^* b K_j``; the pull-back of a functional with density
``D`` is then the density ``sum_j K_j D K_j^*`` on ``B``.  Abelian
subalgebras are covered by pinching Kraus maps.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._linalg import as_square, check_density, eta, herm, matrix_function, von_neumann_entropy
from .errors import (
    InvalidArgument,
    NoncommutingPartitionError,
    UndefinedRelativeEntropy,
)

FLOOR = 1e-12
PARTITION_TOL = 1e-10
COMMUTE_TOL = 1e-8
# defects below this are treated as exact zeros
ROUNDOFF = 1e-12


def relative_entropy(phi, psi):
    """``Tr[D_psi (log D_psi - log D_phi)]`` for a state ``phi`` and positive ``psi``.

    ``psi`` may be subnormalized.  Eigenvalues of ``D_phi`` are floored at
    1e-12; if ``psi`` puts more than 1e-10 of weight on that floored part of
    the spectrum the value is undefined.
    """
    d_phi = herm(as_square(phi, "phi"))
    d_psi = herm(as_square(psi, "psi"))
    if d_phi.shape != d_psi.shape:
        raise InvalidArgument("phi and psi act on different spaces")
    if np.array_equal(d_phi, d_psi):
        return 0.0
    wp, vp = np.linalg.eigh(d_phi)
    if wp.size and wp[0] < -1e-10:
        raise InvalidArgument("phi is not positive semidefinite")
    ws, vs = np.linalg.eigh(d_psi)
    if ws.size and ws[0] < -1e-10:
        raise InvalidArgument("psi is not positive semidefinite")
    kernel = vp[:, wp < FLOOR]
    if kernel.size:
        leak = float(np.real(np.trace(kernel.conj().T @ d_psi @ kernel)))
        if leak > 1e-10:
            raise UndefinedRelativeEntropy(
                f"psi has weight {leak:.3e} outside the support of phi"
            )
    ws = np.clip(ws, 0.0, None)
    # -sum eta(psi eigenvalues) - Tr psi log phi
    term_psi = -float(np.sum(eta(ws)))
    log_phi = (vp * np.log(np.clip(wp, FLOOR, None))) @ vp.conj().T
    proj_psi = (vs * ws) @ vs.conj().T
    if kernel.size:
        # restrict the cross term to the support of phi
        support = vp[:, wp >= FLOOR]
        proj = support @ support.conj().T
        proj_psi = proj @ proj_psi @ proj
    term_cross = float(np.real(np.trace(proj_psi @ log_phi)))
    return term_psi - term_cross


def sigma_half_functional(rho, x):
    """Density ``rho^{1/2} x rho^{1/2}`` of the functional ``phi(. sigma_{-i/2}(x))``."""
    rho = check_density(rho, "rho")
    x = herm(as_square(x, "x"))
    if x.shape != rho.shape:
        raise InvalidArgument("x and rho act on different spaces")
    if np.array_equal(x, np.eye(x.shape[0])):
        return rho
    root = matrix_function(rho, lambda w: np.sqrt(np.clip(w, 0.0, None)))
    return herm(root @ x @ root)


@dataclass(frozen=True)
class PartitionFamily:
    """Finite partition of unity indexed by multi-indices.

    ``elements`` has shape ``index_shape + (D, D)``: one PSD matrix per
    multi-index, summing to the identity.
    """

    elements: np.ndarray

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim < 3 or el.shape[-1] != el.shape[-2]:
            raise InvalidArgument("partition elements must have shape index_shape + (D, D)")
        dim = el.shape[-1]
        flat = el.reshape(-1, dim, dim)
        total = flat.sum(axis=0)
        if np.max(np.abs(total - np.eye(dim))) > PARTITION_TOL:
            raise InvalidArgument("partition elements do not sum to the identity")
        for i, x in enumerate(flat):
            if np.max(np.abs(x - x.conj().T)) > PARTITION_TOL:
                raise InvalidArgument(f"partition element {i} is not Hermitian")
            if np.linalg.eigvalsh(herm(x))[0] < -PARTITION_TOL:
                raise InvalidArgument(f"partition element {i} is not positive")
        el.setflags(write=False)
        object.__setattr__(self, "elements", el)

    @property
    def index_shape(self):
        return self.elements.shape[:-2]

    @property
    def dim(self):
        return self.elements.shape[-1]

    def marginal(self, k):
        """``x^{(k)}_i``: sum over every index except the ``k``-th."""
        axes = tuple(a for a in range(len(self.index_shape)) if a != k)
        return self.elements.sum(axis=axes) if axes else self.elements

    @classmethod
    def product(cls, families):
        """Joint partition ``x_{i_1 ... i_n} = x^1_{i_1} ... x^n_{i_n}`` of commuting families."""
        families = [np.asarray(f, dtype=complex) for f in families]
        dim = families[0].shape[-1]
        shape = tuple(f.shape[0] for f in families)
        out = np.zeros(shape + (dim, dim), dtype=complex)
        for idx in itertools.product(*(range(s) for s in shape)):
            m = np.eye(dim, dtype=complex)
            for f, i in zip(families, idx):
                m = m @ f[i]
            out[idx] = m
        return cls(out)


def pull_back(density, kraus):
    """Density of ``psi o gamma`` for a channel with Kraus operators ``kraus``."""
    out = None
    for k in kraus:
        k = np.asarray(k, dtype=complex)
        term = k @ density @ k.conj().T
        out = term if out is None else out + term
    return herm(out)


def _check_channel(kraus, dim, k):
    kraus = [np.asarray(m, dtype=complex) for m in kraus]
    if not kraus:
        raise InvalidArgument(f"channel {k} has no Kraus operators")
    rows = kraus[0].shape[0]
    for m in kraus:
        if m.ndim != 2 or m.shape != (rows, dim):
            raise InvalidArgument(f"channel {k}: Kraus operators must be {rows} x {dim}")
    unit = sum(m.conj().T @ m for m in kraus)
    if np.max(np.abs(unit - np.eye(dim))) > 1e-10:
        raise InvalidArgument(f"channel {k} is not unital")
    return kraus


def identity_channel(dim):
    return [np.eye(dim, dtype=complex)]


def pinching_channel(projections):
    """Embedding of the abelian algebra generated by orthogonal projections."""
    kraus = []
    for p in projections:
        p = herm(np.asarray(p, dtype=complex))
        w, v = np.linalg.eigh(p)
        for col in v[:, w > 0.5].T:
            kraus.append(np.outer(col, col.conj()))
    return kraus


def partial_trace_channel(dims, keep):
    """Embedding ``b -> b (x) 1`` of tensor factor ``keep`` of ``dims``."""
    dims = list(dims)
    before = int(np.prod(dims[:keep]))
    after = int(np.prod(dims[keep + 1:]))
    size = dims[keep]
    kraus = []
    for i in range(before):
        for j in range(after):
            k = np.zeros((size, before * size * after), dtype=complex)
            for s in range(size):
                k[s, (i * size + s) * after + j] = 1.0
            kraus.append(k)
    return kraus


def mutual_entropy_value(rho, channels, partition):
    """Mutual-entropy functional of ``channels`` for one given partition of unity.

    ``sum_I eta(phi(x_I)) + sum_k sum_i S(phi o gamma_k, phi(gamma_k(.) sigma_{-i/2}(x^{(k)}_i)))``;
    this is a lower bound on the supremum over all partitions.
    """
    rho = check_density(rho, "rho")
    if not isinstance(partition, PartitionFamily):
        partition = PartitionFamily(partition)
    if partition.dim != rho.shape[0]:
        raise InvalidArgument("partition and state act on different spaces")
    if len(partition.index_shape) != len(channels):
        raise InvalidArgument(
            f"partition has {len(partition.index_shape)} index axes for {len(channels)} channels"
        )
    dim = rho.shape[0]
    flat = partition.elements.reshape(-1, dim, dim)
    probs = np.clip(np.real(np.einsum("ij,kji->k", rho, flat)), 0.0, None)
    # the elements sum to 1, so the probabilities sum to Tr rho = 1 up to round-off
    value = float(np.sum(eta(probs / probs.sum())))
    for k, kraus in enumerate(channels):
        kraus = _check_channel(kraus, dim, k)
        base = pull_back(rho, kraus)
        for x in partition.marginal(k):
            value += relative_entropy(base, pull_back(sigma_half_functional(rho, x), kraus))
    return value


def channel_entropy(rho, kraus):
    """von Neumann entropy of ``phi o gamma``."""
    return von_neumann_entropy(pull_back(check_density(rho, "rho"), kraus))


def ks_lower_bound_term(rho, projections, alpha, k):
    """``(1/k) sum_w eta(phi(p_{i_0} alpha(p_{i_1}) ... alpha^{k-1}(p_{i_{k-1}})))``.

    ``alpha`` is the unitary implementing the automorphism by conjugation.
    Only commuting families are accepted: every ``alpha^s(p_i)`` for
    ``s < k`` must commute with every other one.
    """
    rho = check_density(rho, "rho")
    if int(k) != k or k < 1:
        raise InvalidArgument(f"k must be a positive integer, got {k!r}")
    k = int(k)
    projections = [herm(np.asarray(p, dtype=complex)) for p in projections]
    dim = rho.shape[0]
    if not projections or any(p.shape != (dim, dim) for p in projections):
        raise InvalidArgument("projections must match the state dimension")
    if np.max(np.abs(sum(projections) - np.eye(dim))) > PARTITION_TOL:
        raise InvalidArgument("projections do not sum to the identity")
    u = np.asarray(alpha, dtype=complex)
    if u.shape != (dim, dim) or np.max(np.abs(u.conj().T @ u - np.eye(dim))) > 1e-10:
        raise InvalidArgument("alpha must be a unitary matrix of the state dimension")
    levels = []
    current = projections
    for _ in range(k):
        levels.append(current)
        current = [u @ p @ u.conj().T for p in current]
    everything = [p for level in levels for p in level]
    for a, b in itertools.combinations(everything, 2):
        if np.max(np.abs(a @ b - b @ a)) > COMMUTE_TOL:
            raise NoncommutingPartitionError(
                "partition iterates do not commute; word probabilities are not defined"
            )
    words = np.array([np.eye(dim, dtype=complex)])
    for level in levels:
        words = np.einsum("wij,pjk->wpik", words, np.array(level)).reshape(-1, dim, dim)
    probs = np.real(np.einsum("ij,wji->w", rho, words))
    if abs(probs.sum() - 1.0) > 1e-8:
        raise InvalidArgument(f"word probabilities sum to {probs.sum()!r}")
    return float(np.sum(eta(np.clip(probs, 0.0, None)))) / k


def binary_entropy(t):
    return float(eta(t) + eta(1.0 - t))


def dependence(joint):
    """``max_i max_Y |p(i, Y) - p(i) p(Y)|`` over events ``Y`` of the second variable."""
    p = np.asarray(joint, dtype=float)
    dev = p - np.outer(p.sum(axis=1), p.sum(axis=0))
    return float(np.max(0.5 * np.abs(dev).sum(axis=1)))


def independence_envelope(delta, n_rows):
    """Bound on the entropy defect for dependence ``delta`` with ``n_rows`` row events.

    With ``T = n_rows * delta`` the defect is at most
    ``T log(n_rows - 1) + h(T)`` for ``T <= 1 - 1/n_rows`` and ``log n_rows``
    beyond: continuity of entropy applied to each conditional row law,
    averaged with the concave majorant of that bound.
    """
    if n_rows <= 1:
        return 0.0
    t = n_rows * delta
    if t > 1.0 - 1.0 / n_rows:
        return float(np.log(n_rows))
    return t * float(np.log(max(n_rows - 1, 1))) + binary_entropy(t)


@dataclass(frozen=True)
class Lemma44Report:
    defect: float
    dependence: float
    envelope: float
    in_hypothesis: bool
    holds: bool


def lemma44_check(joint, delta, epsilon):
    """Near-independence inequality for a classical joint distribution.

    ``defect = sum eta(p_i.) + sum eta(p_.j) - sum eta(p_ij)`` (the mutual
    information).  The pair ``(delta, epsilon)`` is inside the hypothesis of
    the inequality when the measured dependence is at most ``delta`` and the
    envelope for ``delta`` does not exceed ``epsilon``; ``holds`` reports
    whether ``defect <= epsilon`` (up to 1e-12 round-off) regardless.
    """
    p = np.asarray(joint, dtype=float)
    if p.ndim != 2 or p.size == 0:
        raise InvalidArgument("joint distribution must be a nonempty matrix")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise InvalidArgument("joint distribution must be nonnegative and sum to 1")
    rows, cols = p.sum(axis=1), p.sum(axis=0)
    defect = float(np.sum(eta(rows)) + np.sum(eta(cols)) - np.sum(eta(p)))
    measured = dependence(p)
    envelope = independence_envelope(delta, p.shape[0])
    in_hyp = measured <= delta and envelope <= epsilon
    return Lemma44Report(defect, measured, envelope, in_hyp, defect <= epsilon + ROUNDOFF)
