"""Dynamical entropy of Bogoliubov automorphisms for quasi-free states.

Three independent routes are provided:

* the spectral integral of ``Tr E(A_z)`` over the circle (:func:`entropy_theorem11`),
* the multiplication-operator form ``(1/2pi) int E(rho) |omega'| dx``
  (:func:`entropy_cor14`),
* the empirical rate ``S(omega_A | C(H_{n-1})) / n`` from block-Toeplitz
  restrictions of a symbol (:func:`entropy_rate_empirical`).

``E`` is ``ecar`` for fermions and ``eccr`` for bosons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._linalg import check_dim, eta, herm
from .errors import GridResolutionError, InvalidArgument, InvalidModel, NumericError
from .spectra import (
    Algebra,
    DirectIntegralModel,
    FiberGrid,
    MultiplicationModel,
    build_uniform_grid,
    fiberwise_diagonalize,
    integrate,
)

DOMAIN_CLAMP = 1e-12
TOEPLITZ_CLAMP = 1e-8


def _domain(lam, upper):
    lam = np.asarray(lam, dtype=float)
    if np.any(~np.isfinite(lam)):
        raise NumericError("occupation values contain NaN or infinity")
    if np.any(lam < -DOMAIN_CLAMP) or (upper is not None and np.any(lam > upper + DOMAIN_CLAMP)):
        raise InvalidArgument("occupation value outside the admissible domain")
    return np.clip(lam, 0.0, upper)


def ecar(lam):
    """``eta(l) + eta(1 - l)`` for ``l`` in ``[0, 1]``."""
    lam = _domain(lam, 1.0)
    return eta(lam) + eta(1.0 - lam)


def eccr(lam):
    """``eta(l) - eta(1 + l) = (1 + l) log(1 + l) - l log l`` for ``l >= 0``."""
    lam = _domain(lam, None)
    return eta(lam) - eta(1.0 + lam)


def entropy_functional(algebra):
    return ecar if Algebra.parse(algebra) is Algebra.CAR else eccr


def fiber_integrand(model):
    """Per-node ``sum_n E(lambda_n(theta_j))`` along the matched eigenbranches."""
    if len(model.grid) == 0:
        return np.zeros(0)
    curves = fiberwise_diagonalize(model).curves
    fn = entropy_functional(model.algebra)
    values = np.where(np.isnan(curves), 0.0, curves)
    contrib = np.where(np.isnan(curves), 0.0, fn(values))
    return contrib.sum(axis=1)


def entropy_theorem11(model):
    """Spectral-integral entropy ``int_T Tr E(A_z) dlambda`` in nats per step.

    The singular part of the spectrum contributes nothing, so a model without
    absolutely continuous fibers yields exactly 0.
    """
    if not isinstance(model, DirectIntegralModel):
        raise InvalidModel("entropy_theorem11 expects a DirectIntegralModel")
    if len(model.grid) == 0:
        return 0.0
    return integrate(fiber_integrand(model), model.grid)


def entropy_cor14(model):
    """``(1/2pi) int_I E(rho(x)) |omega'(x)| dx`` for a multiplication model."""
    if not isinstance(model, MultiplicationModel):
        raise InvalidModel("entropy_cor14 expects a MultiplicationModel")
    if model.x.size == 0:
        return 0.0
    fn = entropy_functional(model.algebra)
    integrand = fn(model.rho) * np.abs(model.omega_prime)
    if not np.all(np.isfinite(integrand)):
        raise NumericError("integrand contains NaN or infinite samples")
    return float(np.dot(model.weights, integrand)) / (2.0 * math.pi)


@dataclass(frozen=True)
class SymbolFunction:
    """Matrix symbol ``theta -> A_hat(theta)`` sampled on a circle grid.

    ``samples`` has shape ``(n_nodes, m0, m0)``.  It plays the role of the
    fiber correlation of ``m0`` copies of ``L^2(T)`` on which ``U`` acts as
    multiplication by ``z``.
    """

    grid: FiberGrid
    samples: np.ndarray
    algebra: Algebra

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim == 1:
            samples = samples[:, None, None]
        if samples.ndim != 3 or samples.shape[1] != samples.shape[2]:
            raise InvalidModel(f"symbol samples must have shape (n, m0, m0), got {samples.shape}")
        if samples.shape[0] != len(self.grid):
            raise InvalidModel("symbol sample count does not match the grid")
        model = DirectIntegralModel(self.grid, tuple(samples), self.algebra)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "algebra", model.algebra)

    @property
    def m0(self):
        return self.samples.shape[1]

    def as_model(self):
        return DirectIntegralModel(self.grid, tuple(self.samples), self.algebra)

    def as_multiplication_models(self, nodes_per_interval=None):
        """One multiplication model per eigencurve with ``I = (0, 2pi)`` and ``omega(x) = x``.

        The eigencurves are sampled on the symbol grid, so the quadrature is
        the midpoint rule with weights ``2pi w_j``.
        """
        curves = fiberwise_diagonalize(self.as_model()).curves
        x = self.grid.nodes
        weights = 2.0 * math.pi * self.grid.weights
        return [
            MultiplicationModel(((0.0, 2.0 * math.pi),), x, weights, np.ones_like(x), curves[:, n], self.algebra)
            for n in range(curves.shape[1])
        ]

    @classmethod
    def from_callable(cls, fn, n_nodes, algebra):
        grid = build_uniform_grid(n_nodes)
        samples = np.array([np.atleast_2d(np.asarray(fn(t), dtype=complex)) for t in grid.nodes])
        return cls(grid, samples, algebra)

    @classmethod
    def from_fourier(cls, coefficients, n_nodes, algebra):
        """Symbol ``sum_k C_k exp(i k theta)`` from a mapping ``k -> C_k``."""
        grid = build_uniform_grid(n_nodes)
        mats = {int(k): np.atleast_2d(np.asarray(c, dtype=complex)) for k, c in coefficients.items()}
        if not mats:
            raise InvalidArgument("symbol needs at least one Fourier coefficient")
        m0 = next(iter(mats.values())).shape[0]
        samples = np.zeros((len(grid), m0, m0), dtype=complex)
        for k, c in mats.items():
            if c.shape != (m0, m0):
                raise InvalidArgument("Fourier coefficients must share one square shape")
            samples += np.exp(1j * k * grid.nodes)[:, None, None] * c[None]
        return cls(grid, samples, algebra)


def fourier_blocks(symbol, max_order):
    """``A_hat_k = int A_hat(theta) exp(-i k theta) dlambda`` for ``|k| <= max_order``."""
    ks = np.arange(-max_order, max_order + 1)
    phases = np.exp(-1j * np.outer(ks, symbol.grid.nodes)) * symbol.grid.weights[None, :]
    return ks, np.einsum("kj,jab->kab", phases, symbol.samples)


def toeplitz_restriction(symbol, n):
    """Correlation matrix of ``omega_A`` on ``C(H_{n-1})`` in the basis ``{U^k e_m}``.

    Block Toeplitz with block ``(k, l)`` equal to ``A_hat_{k-l}``; the grid
    must have at least ``4 n`` nodes to keep aliasing out of the Fourier
    coefficients.
    """
    if int(n) != n or n < 1:
        raise InvalidArgument(f"block count must be a positive integer, got {n!r}")
    n = int(n)
    if len(symbol.grid) < 4 * n:
        raise GridResolutionError(
            f"grid of {len(symbol.grid)} nodes too coarse for n={n}; need at least {4 * n}"
        )
    m0 = symbol.m0
    check_dim(n * m0, "block Toeplitz matrix")
    ks, blocks = fourier_blocks(symbol, n - 1)
    offset = n - 1
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :] + offset
    t = blocks[diff]  # (n, n, m0, m0)
    t = t.transpose(0, 2, 1, 3).reshape(n * m0, n * m0)
    return herm(t)


def _entropy_of_correlation(t, algebra):
    w = np.linalg.eigvalsh(t)
    if algebra is Algebra.CAR:
        if w.size and (w[0] < -TOEPLITZ_CLAMP or w[-1] > 1.0 + TOEPLITZ_CLAMP):
            raise NumericError(
                f"Toeplitz spectrum [{w[0]:.3e}, {w[-1]:.3e}] leaves [0, 1] beyond {TOEPLITZ_CLAMP:g}"
            )
        w = np.clip(w, 0.0, 1.0)
        return float(np.sum(eta(w) + eta(1.0 - w)))
    if w.size and w[0] < -TOEPLITZ_CLAMP:
        raise NumericError(f"Toeplitz spectrum has negative eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return float(np.sum(eta(w) - eta(1.0 + w)))


def aitken(seq):
    """Aitken delta-squared extrapolation of the last three terms.

    Falls back to the last term when the second difference vanishes or fewer
    than three terms are available.
    """
    seq = [float(s) for s in seq]
    if len(seq) < 3:
        return seq[-1]
    r0, r1, r2 = seq[-3:]
    denom = (r2 - r1) - (r1 - r0)
    if abs(denom) <= 1e-15 * max(1.0, abs(r2)):
        return r2
    return r2 - (r2 - r1) ** 2 / denom


@dataclass(frozen=True)
class RateReport:
    sizes: tuple
    entropies: tuple
    rates: tuple
    formula_value: float
    extrapolated_rate: float
    algebra: Algebra = Algebra.CAR
    errors: tuple = field(default=())

    def __post_init__(self):
        values = list(self.rates) + list(self.entropies) + [self.formula_value, self.extrapolated_rate]
        if not all(np.isfinite(values)):
            raise NumericError("rate report contains non-finite values")
        object.__setattr__(self, "errors", tuple(r - self.formula_value for r in self.rates))


def entropy_rate_empirical(symbol, sizes):
    """Entropy rate ladder ``S_n / n`` with the spectral-integral value alongside."""
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise InvalidArgument("size ladder is empty")
    if any(s < 1 for s in sizes) or sorted(sizes) != sizes or len(set(sizes)) != len(sizes):
        raise InvalidArgument("sizes must be strictly ascending positive integers")
    entropies, rates = [], []
    for n in sizes:
        s_n = _entropy_of_correlation(toeplitz_restriction(symbol, n), symbol.algebra)
        entropies.append(s_n)
        rates.append(s_n / n)
    formula = entropy_theorem11(symbol.as_model())
    return RateReport(
        tuple(sizes), tuple(entropies), tuple(rates), formula, aitken(rates), symbol.algebra
    )


def lemma31_average(g_samples, f, n):
    """Cell-averaged functional ``(1/n) sum_k f(n int_cell_k g)`` and its limit ``int_0^1 f(g)``.

    ``g_samples`` are midpoint samples of ``g`` on a uniform grid of ``M``
    points over ``[0, 1]``; ``M`` must be a multiple of ``n`` so that each
    averaging cell is a union of sample cells.  Both integrals use the same
    midpoint rule.
    """
    g = np.asarray(g_samples, dtype=float).reshape(-1)
    if not np.all(np.isfinite(g)):
        raise NumericError("g contains NaN or infinite samples")
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if g.size < n or g.size % n:
        raise InvalidArgument(f"{g.size} samples cannot be split into {n} equal cells")
    cells = g.reshape(n, -1).mean(axis=1)
    averaged = float(np.mean(np.asarray(f(cells), dtype=float)))
    limit = float(np.mean(np.asarray(f(g), dtype=float)))
    return averaged, limit


@dataclass(frozen=True)
class FinitenessReport:
    bins: np.ndarray
    counts: tuple
    active_branches: tuple
    warning: bool
    message: str


def finiteness_warning(models, bins, active_tol=1e-12, growth=1.5):
    """Heuristic check for fibers approaching continuous spectrum.

    ``models`` is a single model or a refinement ladder of discretizations
    of the same operator.  For each model the eigenvalues of every fiber are
    binned, and the number of branches with nonzero entropy contribution
    (``E(lambda) > active_tol``) is recorded.  A warning is raised when that
    count keeps growing along the ladder by at least ``growth`` per step
    instead of stabilizing.
    """
    if isinstance(models, DirectIntegralModel):
        models = [models]
    models = list(models)
    if not models:
        raise InvalidArgument("no models given")
    bins = np.asarray(bins, dtype=float)
    if bins.ndim != 1 or bins.size < 2 or np.any(np.diff(bins) <= 0):
        raise InvalidArgument("bins must be an increasing sequence of edges")
    counts, active = [], []
    for model in models:
        fn = entropy_functional(model.algebra)
        per_fiber = []
        n_active = 0
        for a in model.fibers:
            w = np.linalg.eigvalsh(a) if a.size else np.zeros(0)
            hist, _ = np.histogram(np.clip(w, bins[0], bins[-1]), bins=bins)
            per_fiber.append(hist)
            if w.size:
                lo, hi = (0.0, 1.0) if model.algebra is Algebra.CAR else (0.0, None)
                n_active = max(n_active, int(np.sum(fn(np.clip(w, lo, hi)) > active_tol)))
        counts.append(np.array(per_fiber, dtype=int).reshape(len(model.fibers), bins.size - 1))
        active.append(n_active)
    growing = len(active) >= 2 and all(
        b >= growth * a and b > a for a, b in zip(active, active[1:])
    )
    if growing:
        message = (
            f"active branch count grows under refinement {active}; fiber spectra look "
            "continuous and the entropy may be infinite"
        )
    else:
        message = f"finite: branch count stable {active}"
    return FinitenessReport(bins, tuple(counts), tuple(active), growing, message)
