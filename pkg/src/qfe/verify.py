"""Invariant suite run by ``qfe verify``.

Every check draws its own random instances from a child of the scenario
seed, so results do not depend on execution order or parallelism.
"""

from __future__ import annotations

import inspect
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import car, ccr, cnt, dynentropy
from ._linalg import von_neumann_entropy
from .spectra import Algebra, DirectIntegralModel, build_uniform_grid, fiberwise_diagonalize, integrate


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    provenance: str = "oracle"
    draws: int = 1


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_correlation(rng, d, lo=0.0, hi=1.0):
    u = random_unitary(rng, d)
    return (u * rng.uniform(lo, hi, d)) @ u.conj().T


def random_vector(rng, d):
    return rng.normal(size=d) + 1j * rng.normal(size=d)


def _result(name, errors, tol, provenance="oracle"):
    worst = float(max(errors)) if len(errors) else 0.0
    return CheckResult(name, worst <= tol, worst, tol, provenance, len(errors))


def check_car_entropy(rng, draws=20, max_modes=5, **_):
    errs = []
    for _ in range(draws):
        d = int(rng.integers(1, max_modes + 1))
        a = random_correlation(rng, d)
        errs.append(abs(car.entropy_car(a) - von_neumann_entropy(car.quasifree_density_car(a))))
    return _result("car_entropy_vs_density", errs, 1e-8)


def check_car_moments(rng, draws=20, max_modes=5, **_):
    errs = []
    for _ in range(draws):
        d = int(rng.integers(2, max_modes + 1))
        a = random_correlation(rng, d)
        rep = car.jordan_wigner(d)
        rho = car.quasifree_density_car(a, rep)
        f1, f2, g1, g2 = (random_vector(rng, d) for _ in range(4))
        first = car.expectation(rho, rep.creator(f1) @ rep.annihilator(g1))
        errs.append(abs(first - np.vdot(g1, a @ f1)))
        gram = np.array(
            [[np.vdot(g1, a @ f1), np.vdot(g2, a @ f1)], [np.vdot(g1, a @ f2), np.vdot(g2, a @ f2)]]
        )
        op = rep.creator(f1) @ rep.creator(f2) @ rep.annihilator(g2) @ rep.annihilator(g1)
        errs.append(abs(car.expectation(rho, op) - np.linalg.det(gram)))
    return _result("car_determinant_moments", errs, 1e-7)


def check_car_subadditivity(rng, draws=50, max_modes=6, **_):
    errs = []
    for _ in range(draws):
        d = int(rng.integers(2, max_modes + 1))
        a = random_correlation(rng, d)
        k = int(rng.integers(1, d))
        u = random_unitary(rng, d)
        s = car.entropy_car(a)
        s1 = car.entropy_car(car.restrict_car(a, u[:, :k]))
        s2 = car.entropy_car(car.restrict_car(a, u[:, k:]))
        errs.append(max(0.0, s - s1 - s2))
    return _result("car_subadditivity", errs, 1e-9)


def check_car_gauge(rng, draws=20, max_modes=6, **_):
    errs = []
    for _ in range(draws):
        d = int(rng.integers(1, max_modes + 1))
        a = random_correlation(rng, d)
        u = random_unitary(rng, d)
        errs.append(abs(car.entropy_car(u.conj().T @ a @ u) - car.entropy_car(a)))
    return _result("car_gauge_invariance", errs, 1e-10)


def check_car_modular(rng, draws=10, max_modes=4, **_):
    errs = []
    for _ in range(draws):
        d = int(rng.integers(1, max_modes + 1))
        a = random_correlation(rng, d, 0.05, 0.95)
        rep = car.jordan_wigner(d)
        rho = car.quasifree_density_car(a, rep)
        f, g = random_vector(rng, d), random_vector(rng, d)
        t = float(rng.normal())
        ft, gt = car.modular_flow_car(a, f, t), car.modular_flow_car(a, g, t)
        errs.append(abs(car.expectation(rho, rep.creator(ft) @ rep.annihilator(gt)) - np.vdot(g, a @ f)))
    return _result("car_modular_invariance", errs, 1e-7)


def check_ccr_geometric(rng, draws=10, cutoff=32, **_):
    errs = []
    for _ in range(draws):
        lam = float(rng.uniform(0.0, 2.0))
        rho, tails = ccr.quasifree_density_ccr(np.array([[lam]]), cutoff=cutoff)
        p, tail = ccr.mode_occupation_probs(lam, cutoff)
        errs.append(float(np.max(np.abs(np.diag(rho).real - p / (1.0 - tail)))))
    return _result("ccr_geometric_law", errs, 1e-12)


def check_ccr_entropy(rng, draws=10, cutoff=32, **_):
    # normalized error: gap divided by the analytic bound must stay <= 1
    ratios = []
    for _ in range(draws):
        lam = float(rng.uniform(0.05, 1.5))
        p, tail = ccr.mode_occupation_probs(lam, cutoff)
        q = p / (1.0 - tail)
        gap = abs(float(np.sum(dynentropy.eta(q))) - ccr.entropy_ccr(np.array([[lam]])))
        ratios.append(gap / max(ccr.truncated_entropy_gap_bound(lam, cutoff), 1e-15))
    return _result("ccr_entropy_within_tail_bound", ratios, 1.0 + 1e-6)


def check_ccr_weyl(rng, draws=5, cutoff=32, **_):
    fock = ccr.truncated_fock(1, cutoff)
    errs = []
    for _ in range(draws):
        f = random_vector(rng, 1)
        g = random_vector(rng, 1)
        f *= 0.5 / np.linalg.norm(f)
        g *= 0.5 / np.linalg.norm(g)
        errs.append(ccr.weyl_defect(fock, f, g))
    return _result("ccr_weyl_relation", errs, 1e-6)


def check_quadrature(rng, draws=10, **_):
    errs = []
    for _ in range(draws):
        n = int(rng.integers(2, 64))
        grid = build_uniform_grid(n)
        deg = n - 1
        c0 = float(rng.normal())
        ks = np.arange(1, deg + 1)
        a, b = rng.normal(size=deg), rng.normal(size=deg)
        vals = c0 + (a[:, None] * np.cos(np.outer(ks, grid.nodes)) + b[:, None] * np.sin(np.outer(ks, grid.nodes))).sum(axis=0)
        errs.append(abs(integrate(vals, grid) - c0))
    return _result("quadrature_exactness", errs, 1e-12)


def check_idempotence(rng, draws=5, **_):
    errs = []
    for _ in range(draws):
        m0 = int(rng.integers(1, 4))
        u0 = random_unitary(rng, m0)
        lams = rng.uniform(0.1, 0.9, m0)
        amp = rng.uniform(0.0, 0.05, m0)
        gen = rng.normal(size=(m0, m0)) + 1j * rng.normal(size=(m0, m0))
        gen = 0.5 * (gen + gen.conj().T)

        def fiber(t):
            w, v = np.linalg.eigh(gen)
            rot = (v * np.exp(1j * 0.3 * np.sin(t) * w)) @ v.conj().T @ u0
            return (rot * (lams + amp * np.cos(t))) @ rot.conj().T

        model = DirectIntegralModel.from_function(fiber, 32, Algebra.CAR)
        curves = fiberwise_diagonalize(model)
        again = fiberwise_diagonalize(curves.to_model())
        errs.append(float(np.nanmax(np.abs(again.curves - curves.curves))))
    return _result("diagonalization_idempotence", errs, 1e-9)


def _scalar_symbol(rng, algebra):
    c1 = complex(rng.normal(), rng.normal())
    c1 *= 0.2 / abs(c1)
    c0 = 0.5 if algebra is Algebra.CAR else 1.0
    return dynentropy.SymbolFunction.from_fourier({0: [[c0]], 1: [[c1]], -1: [[np.conj(c1)]]}, 128, algebra)


def check_formula_consistency(rng, draws=4, **_):
    errs = []
    for i in range(draws):
        algebra = Algebra.CAR if i % 2 == 0 else Algebra.CCR
        sym = _scalar_symbol(rng, algebra)
        thm = dynentropy.entropy_theorem11(sym.as_model())
        cor = sum(dynentropy.entropy_cor14(m) for m in sym.as_multiplication_models())
        errs.append(abs(thm - cor))
    return _result("theorem_vs_multiplication_form", errs, 1e-8)


def check_multiplicity(rng, draws=4, **_):
    errs = []
    for _ in range(draws):
        s1, s2 = _scalar_symbol(rng, Algebra.CAR), _scalar_symbol(rng, Algebra.CAR)
        block = np.zeros((len(s1.grid), 2, 2), dtype=complex)
        block[:, 0, 0], block[:, 1, 1] = s1.samples[:, 0, 0], s2.samples[:, 0, 0]
        total = dynentropy.entropy_theorem11(DirectIntegralModel(s1.grid, tuple(block), Algebra.CAR))
        parts = dynentropy.entropy_theorem11(s1.as_model()) + dynentropy.entropy_theorem11(s2.as_model())
        errs.append(abs(total - parts))
    return _result("multiplicity_additivity", errs, 1e-10)


def check_speed_scaling(rng, draws=5, **_):
    errs = []
    for _ in range(draws):
        c = int(rng.integers(1, 6))
        rho = lambda x: 0.5 + 0.25 * np.cos(x)
        base = dynentropy.entropy_cor14(
            dynentropy.MultiplicationModel.from_functions([(0.0, 2 * math.pi)], lambda x: np.ones_like(x), rho, Algebra.CAR)
        )
        scaled = dynentropy.entropy_cor14(
            dynentropy.MultiplicationModel.from_functions([(0.0, 2 * math.pi)], lambda x: c * np.ones_like(x), rho, Algebra.CAR)
        )
        errs.append(abs(scaled - c * base))
    return _result("speed_scaling", errs, 1e-12)


def check_constant_rate(rng, draws=3, **_):
    errs = []
    for i in range(draws):
        algebra = Algebra.CAR if i % 2 == 0 else Algebra.CCR
        lam = float(rng.uniform(0.05, 0.95))
        sym = dynentropy.SymbolFunction.from_fourier({0: [[lam]]}, 64, algebra)
        rep = dynentropy.entropy_rate_empirical(sym, [1, 4, 16])
        errs.extend(abs(r - rep.formula_value) for r in rep.rates)
    return _result("constant_symbol_rate_exact", errs, 1e-12)


def check_sigma_half(rng, draws=20, **_):
    errs = []
    for _ in range(draws):
        d = int(rng.integers(2, 5))
        z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = z @ z.conj().T
        rho /= np.trace(rho).real
        x = random_correlation(rng, d)
        errs.append(abs(np.trace(cnt.sigma_half_functional(rho, x)) - np.trace(rho @ x)))
    return _result("sigma_half_trace", errs, 1e-12)


def check_lemma44_product(rng, draws=50, **_):
    errs = []
    for _ in range(draws):
        p = rng.dirichlet(np.ones(4))
        q = rng.dirichlet(np.ones(4))
        errs.append(abs(cnt.lemma44_check(np.outer(p, q), 0.0, 0.0).defect))
    return _result("lemma44_product_defect", errs, 1e-12)


def check_mutual_bound(rng, draws=10, **_):
    errs = []
    for _ in range(draws):
        d = 3
        z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = z @ z.conj().T
        rho /= np.trace(rho).real
        u = random_unitary(rng, d)
        projs = np.array([np.outer(u[:, i], u[:, i].conj()) for i in range(d)])
        value = cnt.mutual_entropy_value(rho, [cnt.identity_channel(d)], cnt.PartitionFamily(projs))
        errs.append(max(0.0, value - cnt.channel_entropy(rho, cnt.identity_channel(d))))
    return _result("mutual_entropy_bound", errs, 1e-8)


CHECKS = (
    check_car_entropy,
    check_car_moments,
    check_car_subadditivity,
    check_car_gauge,
    check_car_modular,
    check_ccr_geometric,
    check_ccr_entropy,
    check_ccr_weyl,
    check_quadrature,
    check_idempotence,
    check_formula_consistency,
    check_multiplicity,
    check_speed_scaling,
    check_constant_rate,
    check_sigma_half,
    check_lemma44_product,
    check_mutual_bound,
)


def run_suite(seed=0, cutoff=32, workers=4, scale=1.0):
    """Run every check with its own child seed; results keep the declared order."""
    children = np.random.SeedSequence(int(seed)).spawn(len(CHECKS))

    def run(item):
        check, child = item
        rng = np.random.default_rng(child)
        draws = inspect.signature(check).parameters["draws"].default
        kwargs = {"cutoff": cutoff, "draws": max(1, int(round(draws * scale)))}
        return check(rng, **kwargs)

    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        return list(pool.map(run, zip(CHECKS, children)))
