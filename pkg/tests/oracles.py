"""Independent reference computations used to freeze expected values.

Nothing here imports the package: integrals use adaptive quadrature and the
truncated bosonic law is summed in plain Python.
"""

import math

import numpy as np
from scipy import integrate


def _eta(t):
    return 0.0 if t <= 0.0 else -t * math.log(t)


def ecar_scalar(lam):
    return _eta(lam) + _eta(1.0 - lam)


def eccr_scalar(lam):
    return (1.0 + lam) * math.log1p(lam) - (lam * math.log(lam) if lam > 0 else 0.0)


def ecar_integral(rho):
    """``(1/2pi) int_0^{2pi} ecar(rho(t)) dt`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda t: ecar_scalar(float(rho(t))), 0.0, 2 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val / (2 * math.pi)


def eccr_integral(lam):
    val, _ = integrate.quad(lambda t: eccr_scalar(float(lam(t))), 0.0, 2 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val / (2 * math.pi)


def ccr_truncated_entropy(lam, cutoff):
    """Entropy of the geometric occupation law kept below ``cutoff`` and renormalized."""
    q = lam / (1.0 + lam)
    probs = [q**k / (1.0 + lam) for k in range(cutoff)]
    total = math.fsum(probs)
    return math.fsum(_eta(p / total) for p in probs)


def car_density_bruteforce(A):
    """Quasi-free CAR density built mode by mode in the eigenbasis of ``A``.

    In the eigenbasis the state is a product of ``diag(1 - l, l)`` factors;
    the eigenvector rotation is applied as an explicit one-particle change
    of basis on the Jordan-Wigner Fock space via exponentiated hopping
    generators, assembled here from dense Kronecker products.
    """
    from scipy.linalg import expm, logm

    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    lam, v = np.linalg.eigh(A)
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    ops = []
    for j in range(d):
        m = np.eye(1, dtype=complex)
        for k in range(d):
            m = np.kron(m, z if k < j else (sm if k == j else np.eye(2)))
        ops.append(m)
    diag = np.ones(1)
    for l in lam:
        diag = np.kron(diag, np.array([1.0 - l, l]))
    gen = sum(logm(v)[j, k] * ops[j].conj().T @ ops[k] for j in range(d) for k in range(d))
    gamma = expm(gen)
    return gamma @ np.diag(diag) @ gamma.conj().T
