"""Spectral data in direct-integral form.

The absolutely continuous part of a unitary commuting with the correlation
operator is represented as multiplication by ``z = exp(i theta)`` on a field
of finite-dimensional fibers.  Numerically the field is sampled on a
quadrature grid of the circle and every node carries one Hermitian fiber
matrix ``A_z``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._linalg import hermitian_defect
from .errors import InvalidArgument, InvalidModel, NumericError

TWO_PI = 2.0 * np.pi
HERMITIAN_TOL = 1e-10
SPECTRUM_TOL = 1e-10
CROSSING_TOL = 1e-9


class Algebra(str, enum.Enum):
    CAR = "CAR"
    CCR = "CCR"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError as exc:
            raise InvalidArgument(f"unknown algebra {value!r}; expected CAR or CCR") from exc


@dataclass(frozen=True)
class FiberGrid:
    """Quadrature nodes on the circle with weights for normalized Lebesgue measure.

    An empty grid is allowed and stands for an empty absolutely continuous part.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if nodes.shape != weights.shape:
            raise InvalidArgument("grid nodes and weights differ in length")
        if nodes.size:
            if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
                raise NumericError("grid contains NaN or infinite values")
            if np.any(weights <= 0):
                raise InvalidArgument("grid weights must be strictly positive")
            if abs(weights.sum() - 1.0) > 1e-12:
                raise InvalidArgument(f"grid weights sum to {weights.sum()!r}, expected 1")
            if nodes[0] < 0 or nodes[-1] >= TWO_PI or np.any(np.diff(nodes) <= 0):
                raise InvalidArgument("grid nodes must be strictly increasing in [0, 2pi)")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    @classmethod
    def empty(cls):
        return cls(np.zeros(0), np.zeros(0))


def build_uniform_grid(n_nodes):
    """Composite midpoint rule on the circle: ``theta_j = 2 pi (j + 1/2) / n``."""
    if int(n_nodes) != n_nodes or n_nodes < 1:
        raise InvalidArgument(f"n_nodes must be a positive integer, got {n_nodes!r}")
    n = int(n_nodes)
    nodes = TWO_PI * (np.arange(n) + 0.5) / n
    return FiberGrid(nodes, np.full(n, 1.0 / n))


def integrate(values, grid):
    """Weighted sum ``sum_j w_j v_j`` realizing the integral over the circle."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size != len(grid):
        raise InvalidArgument(f"expected {len(grid)} samples, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise NumericError("integrand contains NaN or infinite samples")
    if v.size == 0:
        return 0.0
    return float(np.dot(grid.weights, v))


def _check_fiber(a, j):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidModel(f"fiber {j} is not a square matrix (shape {a.shape})", field=f"fibers[{j}]")
    if not np.all(np.isfinite(a)):
        raise NumericError(f"fiber {j} contains NaN or infinite entries", field=f"fibers[{j}]")
    a = a.astype(complex)
    if hermitian_defect(a) > HERMITIAN_TOL:
        raise InvalidModel(f"fiber {j} is not Hermitian", field=f"fibers[{j}]")
    return a


def _check_spectrum(w, algebra, where):
    if w.size == 0:
        return
    if w[0] < -SPECTRUM_TOL:
        raise InvalidModel(f"{where}: eigenvalue {w[0]:.3e} below 0", field=where)
    if algebra is Algebra.CAR and w[-1] > 1.0 + SPECTRUM_TOL:
        raise InvalidModel(f"{where}: CAR eigenvalue {w[-1]:.3e} above 1", field=where)


@dataclass(frozen=True)
class DirectIntegralModel:
    """Sampled direct-integral model of ``(U_a, A|H_a)``.

    ``singular_rate`` records the mass of the singular spectral part; it is
    carried along for reporting but contributes nothing to the entropy.
    """

    grid: FiberGrid
    fibers: tuple
    algebra: Algebra
    singular_rate: float = 0.0

    def __post_init__(self):
        algebra = Algebra.parse(self.algebra)
        fibers = tuple(_check_fiber(a, j) for j, a in enumerate(self.fibers))
        if len(fibers) != len(self.grid):
            raise InvalidModel(
                f"{len(fibers)} fibers for a grid of {len(self.grid)} nodes", field="fibers"
            )
        for j, a in enumerate(fibers):
            _check_spectrum(np.linalg.eigvalsh(a) if a.size else np.zeros(0), algebra, f"fibers[{j}]")
        if not np.isfinite(self.singular_rate) or self.singular_rate < 0:
            raise InvalidModel("singular_rate must be a nonnegative real", field="singular_rate")
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "fibers", fibers)
        object.__setattr__(self, "singular_rate", float(self.singular_rate))

    @property
    def dims(self):
        return np.array([a.shape[0] for a in self.fibers], dtype=int)

    @classmethod
    def from_function(cls, fn, n_nodes, algebra, singular_rate=0.0):
        """Sample ``fn(theta) -> Hermitian matrix`` on a uniform grid."""
        grid = build_uniform_grid(n_nodes)
        fibers = [np.atleast_2d(np.asarray(fn(t), dtype=complex)) for t in grid.nodes]
        return cls(grid, tuple(fibers), algebra, singular_rate)

    @classmethod
    def singular_only(cls, algebra, singular_rate=1.0):
        return cls(FiberGrid.empty(), (), algebra, singular_rate)


@dataclass(frozen=True)
class MultiplicationModel:
    """``U`` = multiplication by ``exp(i omega(x))`` and ``A`` = multiplication by ``rho(x)``.

    ``x`` and ``weights`` form a quadrature rule over the union of the open
    intervals; ``omega_prime`` and ``rho`` are sampled at ``x``.
    """

    intervals: tuple
    x: np.ndarray
    weights: np.ndarray
    omega_prime: np.ndarray
    rho: np.ndarray
    algebra: Algebra

    def __post_init__(self):
        algebra = Algebra.parse(self.algebra)
        intervals = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in intervals:
            if not a < b:
                raise InvalidModel(f"interval ({a}, {b}) is empty", field="intervals")
        ordered = sorted(intervals)
        for (_, b0), (a1, _) in zip(ordered, ordered[1:]):
            if a1 < b0:
                raise InvalidModel("intervals overlap", field="intervals")
        arrays = {}
        for name in ("x", "weights", "omega_prime", "rho"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"{name} contains NaN or infinite samples", field=name)
            arr.setflags(write=False)
            arrays[name] = arr
        n = arrays["x"].size
        if any(arr.size != n for arr in arrays.values()):
            raise InvalidModel("x, weights, omega_prime and rho must have equal length")
        rho = arrays["rho"]
        if rho.size and rho.min() < -SPECTRUM_TOL:
            raise InvalidModel("rho must be nonnegative", field="rho")
        if algebra is Algebra.CAR and rho.size and rho.max() > 1.0 + SPECTRUM_TOL:
            raise InvalidModel("CAR requires rho <= 1", field="rho")
        if np.any(arrays["weights"] < 0):
            raise InvalidModel("quadrature weights must be nonnegative", field="weights")
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "intervals", intervals)
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @classmethod
    def from_functions(cls, intervals, omega_prime, rho, algebra, nodes_per_interval=64):
        """Gauss-Legendre sampling of callables on each interval."""
        if nodes_per_interval < 1:
            raise InvalidArgument("nodes_per_interval must be positive")
        t, w = np.polynomial.legendre.leggauss(int(nodes_per_interval))
        xs, ws = [], []
        for a, b in intervals:
            half = 0.5 * (b - a)
            xs.append(a + half * (t + 1.0))
            ws.append(half * w)
        x = np.concatenate(xs) if xs else np.zeros(0)
        weights = np.concatenate(ws) if ws else np.zeros(0)
        op = np.broadcast_to(np.asarray(omega_prime(x), dtype=float), x.shape)
        r = np.broadcast_to(np.asarray(rho(x), dtype=float), x.shape)
        return cls(tuple(intervals), x, weights, op, r, algebra)


@dataclass(frozen=True)
class EigencurveSet:
    """Eigenvalue branches ``lambda_n(theta_j)`` with matched eigenvector frames.

    ``curves`` has shape ``(n_nodes, n_branches)``; a branch absent at a node
    (fiber dimension smaller than the number of branches) holds NaN.
    ``frames[j]`` is ``d(z_j) x n_branches`` with zero columns for absent
    branches.
    """

    grid: FiberGrid
    curves: np.ndarray
    frames: tuple
    algebra: Algebra = Algebra.CAR
    present: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.present is None:
            object.__setattr__(self, "present", ~np.isnan(self.curves))

    @property
    def n_branches(self):
        return self.curves.shape[1]

    def counts(self):
        return self.present.sum(axis=1)

    def reconstruct(self):
        """Fibers ``V diag(lambda) V*`` rebuilt from the frames."""
        fibers = []
        for j, v in enumerate(self.frames):
            mask = self.present[j]
            vj = v[:, mask]
            fibers.append((vj * self.curves[j, mask]) @ vj.conj().T)
        return tuple(fibers)

    def to_model(self, singular_rate=0.0):
        return DirectIntegralModel(self.grid, self.reconstruct(), self.algebra, singular_rate)


def _align_degenerate(w, v, v_prev):
    """Rotate eigenvectors inside near-degenerate clusters towards the previous frame."""
    d = w.size
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and w[stop] - w[stop - 1] <= CROSSING_TOL:
            stop += 1
        k = stop - start
        if k > 1 and v_prev.shape[1] >= k:
            block = v[:, start:stop]
            overlap = block.conj().T @ v_prev
            weight = np.linalg.norm(overlap, axis=0)
            chosen = np.sort(np.argsort(-weight, kind="stable")[:k])
            u, _, vh = np.linalg.svd(overlap[:, chosen])
            v[:, start:stop] = block @ (u @ vh)
        start = stop
    return v


def fiberwise_diagonalize(model):
    """Diagonalize every fiber and connect eigenvalues into continuous branches.

    Branch slots at node ``j + 1`` are assigned by maximizing total
    eigenvector overlap with node ``j`` (fibers are compared on their common
    leading coordinates when the dimension changes).  Ties favour the
    assignment that keeps ascending eigenvalue order; within a crossing
    (eigenvalues closer than 1e-9) the eigenvectors are first rotated onto the
    previous frame, so the previous ordering is kept.
    """
    if not isinstance(model, DirectIntegralModel):
        raise InvalidModel("fiberwise_diagonalize expects a DirectIntegralModel")
    n_nodes = len(model.grid)
    n_branches = int(model.dims.max()) if n_nodes else 0
    curves = np.full((n_nodes, n_branches), np.nan)
    frames = []
    prev_vecs = None
    prev_slots = None
    for j, a in enumerate(model.fibers):
        d = a.shape[0]
        frame = np.zeros((d, n_branches), dtype=complex)
        if d == 0:
            frames.append(frame)
            prev_vecs, prev_slots = np.zeros((0, 0), dtype=complex), np.zeros(0, dtype=int)
            continue
        w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
        if prev_vecs is None or prev_vecs.shape[1] == 0:
            slots = np.arange(d)
        else:
            m = min(d, prev_vecs.shape[0])
            padded_prev = np.zeros((d, prev_vecs.shape[1]), dtype=complex)
            padded_prev[:m] = prev_vecs[:m]
            v = _align_degenerate(w, v, padded_prev)
            overlap = np.abs(prev_vecs[:m].conj().T @ v[:m])
            # tie-break towards the diagonal assignment (ascending eigenvalue order)
            rank_prev = np.argsort(np.argsort(prev_slots))
            cost = -overlap + 1e-13 * np.abs(rank_prev[:, None] - np.arange(d)[None, :])
            rows, cols = linear_sum_assignment(cost)
            slots = np.full(d, -1)
            slots[cols] = prev_slots[rows]
            free = [s for s in range(n_branches) if s not in set(slots[slots >= 0])]
            for i in np.where(slots < 0)[0]:
                slots[i] = free.pop(0)
        curves[j, slots] = w
        frame[:, slots] = v
        frames.append(frame)
        prev_vecs, prev_slots = v, slots
        recon = (v * w) @ v.conj().T
        if recon.size and np.max(np.abs(recon - a)) > 1e-9:
            raise NumericError(f"fiber {j}: reconstruction error exceeds 1e-9")
    return EigencurveSet(model.grid, curves, tuple(frames), model.algebra)
