import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfe import cnt
from qfe._linalg import eta, von_neumann_entropy
from qfe.errors import InvalidArgument, NoncommutingPartitionError, UndefinedRelativeEntropy
from qfe.verify import random_unitary

LOG2 = math.log(2)


def _random_state(rng, d):
    u = random_unitary(rng, d)
    rho = (u * rng.dirichlet(np.ones(d))) @ u.conj().T
    return 0.5 * (rho + rho.conj().T)


def _diag_projections(d):
    return np.array([np.diag(np.eye(d)[i]) for i in range(d)]).astype(complex)


class TestRelativeEntropy:
    def test_self(self, rng):
        rho = _random_state(rng, 3)
        assert cnt.relative_entropy(rho, rho) == 0.0

    def test_restricted_diagonal(self):
        lam = 0.3
        assert cnt.relative_entropy(np.diag([1 - lam, lam]), np.diag([1 - lam, 0.0])) == pytest.approx(0.0, abs=1e-15)

    def test_scalar_multiple(self, rng):
        rho = _random_state(rng, 3)
        assert cnt.relative_entropy(rho, 0.5 * rho) == pytest.approx(0.5 * math.log(0.5), abs=1e-12)

    def test_support_violation(self):
        with pytest.raises(UndefinedRelativeEntropy):
            cnt.relative_entropy(np.diag([1.0, 0.0]), np.diag([0.5, 0.5]))

    @given(st.integers(2, 4), st.integers(0, 2**32 - 1))
    def test_klein_inequality(self, d, seed):
        rng = np.random.default_rng(seed)
        rho, sigma = _random_state(rng, d), _random_state(rng, d)
        sigma = 0.9 * sigma + 0.1 * np.eye(d) / d
        rho = 0.9 * rho + 0.1 * np.eye(d) / d
        assert cnt.relative_entropy(rho, sigma) >= -1e-12


class TestSigmaHalf:
    def test_identity(self, rng):
        rho = _random_state(rng, 3)
        np.testing.assert_array_equal(cnt.sigma_half_functional(rho, np.eye(3)), rho)

    def test_commuting(self):
        rho = np.diag([0.2, 0.3, 0.5]).astype(complex)
        p = np.diag([0.0, 1.0, 1.0])
        np.testing.assert_allclose(cnt.sigma_half_functional(rho, p), rho @ p, atol=1e-15)

    @given(st.integers(0, 2**32 - 1))
    def test_trace(self, seed):
        rng = np.random.default_rng(seed)
        rho = _random_state(rng, 2)
        x = _random_state(rng, 2) * 2.0
        d = cnt.sigma_half_functional(rho, x)
        assert abs(np.trace(d) - np.trace(rho @ x)) <= 1e-12

    def test_completeness(self, rng):
        rho = _random_state(rng, 3)
        u = random_unitary(rng, 3)
        parts = [np.outer(u[:, i], u[:, i].conj()) for i in range(3)]
        total = sum(cnt.sigma_half_functional(rho, p) for p in parts)
        np.testing.assert_allclose(total, rho, atol=1e-12)


class TestMutualEntropy:
    def test_trivial_partition(self, rng):
        rho = _random_state(rng, 3)
        assert cnt.mutual_entropy_value(rho, [cnt.identity_channel(3)], np.eye(3)[None]) == 0.0

    @pytest.mark.parametrize("lam", [0.1, 0.3, 0.5])
    def test_abelian(self, lam):
        rho = np.diag([1 - lam, lam]).astype(complex)
        value = cnt.mutual_entropy_value(rho, [cnt.identity_channel(2)], _diag_projections(2))
        assert abs(value - eta(lam) - eta(1 - lam)) <= 1e-10

    def test_bound_by_subalgebra_entropy(self, rng):
        for _ in range(10):
            rho = _random_state(rng, 4)
            fam_a = np.array([np.kron(p, np.eye(2)) for p in _diag_projections(2)])
            u = random_unitary(rng, 2)
            proj_b = np.array([np.outer(u[:, i], u[:, i].conj()) for i in range(2)])
            fam_b = np.array([np.kron(np.eye(2), p) for p in proj_b])
            chans = [cnt.partial_trace_channel([2, 2], 0), cnt.partial_trace_channel([2, 2], 1)]
            value = cnt.mutual_entropy_value(rho, chans, cnt.PartitionFamily.product([fam_a, fam_b]))
            bound = sum(cnt.channel_entropy(rho, k) for k in chans)
            assert value <= bound + 1e-8

    def test_pinching_channel(self):
        rho = np.diag([0.2, 0.3, 0.5]).astype(complex)
        chan = cnt.pinching_channel(_diag_projections(3))
        assert cnt.channel_entropy(rho, chan) == pytest.approx(von_neumann_entropy(rho), abs=1e-14)

    def test_index_mismatch(self, rng):
        rho = _random_state(rng, 2)
        with pytest.raises(InvalidArgument):
            cnt.mutual_entropy_value(rho, [cnt.identity_channel(2)] * 2, _diag_projections(2))

    def test_partition_must_sum_to_identity(self):
        with pytest.raises(InvalidArgument):
            cnt.PartitionFamily(np.array([np.diag([1.0, 0.0]), np.diag([0.0, 0.5])]))

    def test_non_unital_channel(self):
        with pytest.raises(InvalidArgument):
            cnt.mutual_entropy_value(np.eye(2) / 2, [[np.diag([1.0, 0.0])]], _diag_projections(2))


class TestKS:
    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_identity_dynamics(self, k):
        lam = 0.3
        rho = np.diag([1 - lam, lam]).astype(complex)
        value = cnt.ks_lower_bound_term(rho, list(_diag_projections(2)), np.eye(2), k)
        # words collapse: only p_i p_i ... survive, so the sum equals the single-letter sum divided by k
        assert value * k == pytest.approx(eta(lam) + eta(1 - lam), abs=1e-14)

    def test_swap(self):
        swap = np.zeros((4, 4))
        for i, j in itertools.product(range(2), repeat=2):
            swap[2 * j + i, 2 * i + j] = 1.0
        projs = [np.kron(p, np.eye(2)) for p in _diag_projections(2)]
        value = cnt.ks_lower_bound_term(np.eye(4) / 4, projs, swap, 2)
        assert value == pytest.approx(LOG2, abs=1e-14)

    def test_single_letter(self, rng):
        rho = _random_state(rng, 3)
        projs = list(_diag_projections(3))
        probs = np.real(np.diag(rho))
        value = cnt.ks_lower_bound_term(rho, projs, random_unitary(rng, 3), 1)
        assert value == pytest.approx(float(np.sum(eta(probs))), abs=1e-14)

    def test_noncommuting(self, rng):
        with pytest.raises(NoncommutingPartitionError):
            cnt.ks_lower_bound_term(np.eye(2) / 2, list(_diag_projections(2)), random_unitary(rng, 2), 2)

    def test_relabel_and_conjugation(self, rng):
        shift = np.roll(np.eye(3), 1, axis=0)
        rho = _random_state(rng, 3)
        projs = list(_diag_projections(3))
        base = cnt.ks_lower_bound_term(rho, projs, shift, 3)
        assert cnt.ks_lower_bound_term(rho, projs[::-1], shift, 3) == pytest.approx(base, abs=1e-14)
        v = random_unitary(rng, 3)
        conj = lambda m: v @ m @ v.conj().T
        moved = cnt.ks_lower_bound_term(conj(rho), [conj(p) for p in projs], conj(shift), 3)
        assert moved == pytest.approx(base, abs=1e-12)


class TestLemma44:
    def test_product(self, rng):
        joint = np.outer(rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(4)))
        rep = cnt.lemma44_check(joint / joint.sum(), 0.0, 0.0)
        assert abs(rep.defect) <= 1e-12
        assert rep.holds

    def test_perfect_correlation(self):
        rep = cnt.lemma44_check(np.array([[0.5, 0.0], [0.0, 0.5]]), 0.25, 1e-3)
        assert rep.defect == pytest.approx(LOG2, abs=1e-15)
        assert not rep.holds
        assert not rep.in_hypothesis
        assert rep.dependence == pytest.approx(0.25)

    def test_invalid(self):
        with pytest.raises(InvalidArgument):
            cnt.lemma44_check(np.array([[0.5, 0.6], [0.0, -0.1]]), 0.1, 0.1)
        with pytest.raises(InvalidArgument):
            cnt.lemma44_check(np.array([[0.5, 0.2]]), 0.1, 0.1)

    @given(st.integers(2, 5), st.integers(2, 5), st.floats(0.0, 0.2), st.integers(0, 2**32 - 1))
    def test_envelope_dominates(self, rows, cols, t, seed):
        rng = np.random.default_rng(seed)
        joint = (1 - t) * np.outer(rng.dirichlet(np.ones(rows)), rng.dirichlet(np.ones(cols)))
        joint = joint + t * rng.dirichlet(np.ones(rows * cols)).reshape(rows, cols)
        joint /= joint.sum()
        delta = cnt.dependence(joint)
        rep = cnt.lemma44_check(joint, delta, cnt.independence_envelope(delta, rows))
        assert rep.in_hypothesis
        assert rep.holds

    def test_envelope_saturates(self):
        assert cnt.independence_envelope(1.0, 4) == pytest.approx(math.log(4))
        assert cnt.independence_envelope(0.3, 1) == 0.0
