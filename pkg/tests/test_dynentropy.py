import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfe import dynentropy as dyn
from qfe._linalg import eta
from qfe.errors import GridResolutionError, InvalidArgument, NumericError
from qfe.spectra import Algebra, DirectIntegralModel, MultiplicationModel, build_uniform_grid

from oracles import ecar_integral, ecar_scalar, eccr_scalar

LOG2 = math.log(2)
TWO_PI = 2 * math.pi


def _mult(omega_prime, rho, algebra=Algebra.CAR, interval=((0.0, TWO_PI),)):
    return MultiplicationModel.from_functions(interval, omega_prime, rho, algebra)


class TestFunctionals:
    def test_ecar_values(self):
        assert dyn.ecar(0.5) == pytest.approx(LOG2, abs=1e-15)
        assert dyn.ecar(0.0) == 0.0
        assert dyn.ecar(1.0) == 0.0

    def test_eccr_values(self):
        assert dyn.eccr(0.0) == 0.0
        assert dyn.eccr(1.0) == pytest.approx(2 * LOG2, abs=1e-15)
        assert dyn.eccr(3.0) == pytest.approx(2.249340578475233, abs=1e-14)

    def test_domain(self):
        with pytest.raises(InvalidArgument):
            dyn.ecar(1.1)
        with pytest.raises(InvalidArgument):
            dyn.eccr(-0.5)
        assert dyn.ecar(1.0 + 5e-13) == pytest.approx(0.0, abs=1e-10)

    @given(st.floats(0.0, 1.0))
    def test_ecar_range(self, lam):
        v = dyn.ecar(lam)
        assert -1e-16 <= v <= LOG2 + 1e-15
        assert v == pytest.approx(ecar_scalar(lam), abs=1e-14)

    @given(st.floats(0.0, 1e3))
    def test_eccr_nonnegative(self, lam):
        assert dyn.eccr(lam) >= 0.0
        assert dyn.eccr(lam) == pytest.approx(eccr_scalar(lam), rel=1e-12, abs=1e-14)


class TestTheorem11:
    def test_constant_half(self):
        m = DirectIntegralModel.from_function(lambda t: np.array([[0.5]]), 8, Algebra.CAR)
        assert dyn.entropy_theorem11(m) == pytest.approx(LOG2, abs=1e-15)

    def test_singular_only(self):
        assert dyn.entropy_theorem11(DirectIntegralModel.singular_only(Algebra.CAR, 0.7)) == 0.0

    def test_two_band_matches_oracle(self):
        fn = lambda t: np.diag([0.5 + 0.25 * math.cos(t), 0.3])
        m = DirectIntegralModel.from_function(fn, 512, Algebra.CAR)
        expected = ecar_integral(lambda t: 0.5 + 0.25 * math.cos(t)) + ecar_scalar(0.3)
        assert dyn.entropy_theorem11(m) == pytest.approx(expected, abs=1e-8)

    def test_zero_fibers(self):
        m = DirectIntegralModel.from_function(lambda t: np.zeros((2, 2)), 8, Algebra.CCR)
        assert dyn.entropy_theorem11(m) == 0.0

    def test_multiplicity_additivity(self, rng):
        from qfe.verify import random_correlation

        blocks_a = [random_correlation(rng, 2) for _ in range(16)]
        blocks_b = [random_correlation(rng, 3) for _ in range(16)]
        g = build_uniform_grid(16)
        joint = tuple(np.block([[x, np.zeros((2, 3))], [np.zeros((3, 2)), y]]) for x, y in zip(blocks_a, blocks_b))
        h = dyn.entropy_theorem11(DirectIntegralModel(g, joint, Algebra.CAR))
        ha = dyn.entropy_theorem11(DirectIntegralModel(g, tuple(blocks_a), Algebra.CAR))
        hb = dyn.entropy_theorem11(DirectIntegralModel(g, tuple(blocks_b), Algebra.CAR))
        assert abs(h - ha - hb) <= 1e-10


class TestCor14:
    def test_log2(self):
        h = dyn.entropy_cor14(_mult(lambda x: np.ones_like(x), lambda x: np.full_like(x, 0.5)))
        assert h == pytest.approx(LOG2, abs=1e-12)

    def test_doubled_speed(self):
        h = dyn.entropy_cor14(_mult(lambda x: np.full_like(x, 2.0), lambda x: np.full_like(x, 0.5)))
        assert h == pytest.approx(2 * LOG2, abs=1e-12)

    def test_constant_omega(self):
        h = dyn.entropy_cor14(_mult(lambda x: np.zeros_like(x), lambda x: 0.5 + 0.3 * np.sin(x)))
        assert h == 0.0

    def test_nan_samples(self):
        x = np.array([1.0, 2.0])
        with pytest.raises(NumericError):
            m = MultiplicationModel(((0.0, 3.0),), x, np.ones(2), np.array([1.0, np.nan]), np.full(2, 0.5), Algebra.CAR)
            dyn.entropy_cor14(m)

    @given(st.integers(1, 6))
    def test_speed_scaling(self, c):
        rho = lambda x: 0.5 + 0.4 * np.sin(3 * x)
        base = dyn.entropy_cor14(_mult(lambda x: 1 + 0.5 * np.cos(x), rho))
        scaled = dyn.entropy_cor14(_mult(lambda x: c * (1 + 0.5 * np.cos(x)), rho))
        assert abs(scaled - c * base) <= 1e-12

    def test_matches_theorem11(self):
        sym = dyn.SymbolFunction.from_callable(
            lambda t: np.array([[0.5 + 0.2 * math.cos(t), 0.1j], [-0.1j, 0.4]]), 256, Algebra.CAR
        )
        h11 = dyn.entropy_theorem11(sym.as_model())
        h14 = sum(dyn.entropy_cor14(m) for m in sym.as_multiplication_models())
        assert abs(h11 - h14) <= 1e-8


class TestToeplitz:
    def test_constant_symbol(self):
        sym = dyn.SymbolFunction.from_fourier({0: np.diag([0.3, 0.6])}, 64, Algebra.CAR)
        t = dyn.toeplitz_restriction(sym, 8)
        np.testing.assert_allclose(t, np.kron(np.eye(8), np.diag([0.3, 0.6])), atol=1e-15)

    def test_cosine_symbol(self):
        sym = dyn.SymbolFunction.from_fourier({0: 0.5, 1: 0.125, -1: 0.125}, 64, Algebra.CAR)
        t = dyn.toeplitz_restriction(sym, 6)
        expected = 0.5 * np.eye(6) + 0.125 * (np.eye(6, k=1) + np.eye(6, k=-1))
        np.testing.assert_allclose(t, expected, atol=1e-15)

    def test_aliasing_guard(self):
        sym = dyn.SymbolFunction.from_fourier({0: 0.5}, 15, Algebra.CAR)
        with pytest.raises(GridResolutionError):
            dyn.toeplitz_restriction(sym, 4)

    def test_hermitian(self):
        sym = dyn.SymbolFunction.from_fourier({0: np.eye(2) * 0.5, 1: [[0.1, 0.05j], [0, 0.1]], -1: [[0.1, 0], [-0.05j, 0.1]]}, 64, Algebra.CAR)
        t = dyn.toeplitz_restriction(sym, 10)
        np.testing.assert_allclose(t, t.conj().T, atol=1e-15)


class TestRate:
    def test_constant_car(self):
        sym = dyn.SymbolFunction.from_fourier({0: 0.5}, 256, Algebra.CAR)
        rep = dyn.entropy_rate_empirical(sym, [4, 16, 64])
        for r in rep.rates:
            assert abs(r - LOG2) <= 1e-12

    def test_constant_ccr(self):
        sym = dyn.SymbolFunction.from_fourier({0: 1.0}, 256, Algebra.CCR)
        rep = dyn.entropy_rate_empirical(sym, [4, 16, 64])
        for r in rep.rates:
            assert abs(r - 2 * LOG2) <= 1e-12

    def test_monotone_errors(self):
        sym = dyn.SymbolFunction.from_fourier({0: 0.5, 1: 0.125, -1: 0.125}, 1024, Algebra.CAR)
        rep = dyn.entropy_rate_empirical(sym, [32, 64, 128, 256])
        errs = [abs(e) for e in rep.errors]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_bad_sizes(self):
        sym = dyn.SymbolFunction.from_fourier({0: 0.5}, 64, Algebra.CAR)
        with pytest.raises(InvalidArgument):
            dyn.entropy_rate_empirical(sym, [8, 4])
        with pytest.raises(InvalidArgument):
            dyn.entropy_rate_empirical(sym, [])

    def test_aitken_geometric(self):
        seq = [1.0 + 0.5**k for k in range(5)]
        assert dyn.aitken(seq) == pytest.approx(1.0, abs=1e-14)


class TestLemma31:
    def test_constant(self):
        for n in (1, 4, 16):
            avg, lim = dyn.lemma31_average(np.full(64, 0.3), eta, n)
            assert avg == pytest.approx(eta(0.3), abs=1e-15)
            assert lim == pytest.approx(eta(0.3), abs=1e-15)

    def test_identity(self):
        m = 1024 * 32
        x = (np.arange(m) + 0.5) / m
        avg, lim = dyn.lemma31_average(x, eta, 1024)
        assert lim == pytest.approx(0.25, abs=1e-8)
        assert abs(avg - 0.25) <= 1e-3

    @pytest.mark.parametrize("n", [9, 27, 81, 243])
    def test_step(self, n):
        m = 3 * 3**5 * 2
        x = (np.arange(m) + 0.5) / m
        # jump at 1/3 lands inside a cell when the cell count is not a multiple of 3... shift by half a sample
        g = np.where(x < 1.0 / 3.0 + 0.25 / m, 0.2, 0.8)
        f = lambda v: eta(v) + eta(1.0 - v)
        avg, lim = dyn.lemma31_average(g, f, n)
        assert abs(avg - lim) <= 2.0 / n * LOG2

    def test_indivisible(self):
        with pytest.raises(InvalidArgument):
            dyn.lemma31_average(np.ones(10), eta, 3)


class TestFiniteness:
    def test_stable(self):
        m = DirectIntegralModel.from_function(lambda t: np.diag([0.3, 0.6]), 16, Algebra.CAR)
        rep = dyn.finiteness_warning(m, np.linspace(0, 1, 11))
        assert not rep.warning
        assert rep.message.startswith("finite: branch count stable")

    def test_filling_spectrum(self):
        ladder = [
            DirectIntegralModel.from_function(lambda t, d=d: np.diag(np.linspace(0.25, 0.75, d)), 8, Algebra.CAR)
            for d in (4, 8, 16, 32)
        ]
        rep = dyn.finiteness_warning(ladder, np.linspace(0, 1, 11))
        assert rep.warning

    def test_pure_car(self):
        ladder = [
            DirectIntegralModel.from_function(lambda t, d=d: np.diag([0.0, 1.0] * d), 8, Algebra.CAR)
            for d in (2, 4, 8)
        ]
        assert dyn.entropy_theorem11(ladder[-1]) == 0.0
        assert not dyn.finiteness_warning(ladder, np.linspace(0, 1, 5)).warning
