import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmm.errors import ConfigError
from dmm.operator import (
    CLASS_NORMALIZED,
    AmplitudeMatrix,
    FrequencyMatrix,
    amplitude_lift,
    class_normalized_amplitudes,
    dense_operator,
)
from dmm.stability import (
    bhattacharyya,
    davis_kahan_bound,
    embedding_stability_report,
    hellinger,
    hellinger_direct,
    imbalance_deviation_bound,
    multinomial_bound_check,
    operator_difference_norm,
    operator_perturbation_bound,
    perturbation_epsilon,
    principal_angle_sines,
    procrustes_alignment_error,
    spectral_norm,
    top_eigenspace,
)

simplex = st.integers(2, 8).flatmap(
    lambda n: st.lists(st.floats(0, 1), min_size=n, max_size=n)
    .filter(lambda v: sum(v) > 1e-3)
    .map(lambda v: np.asarray(v) / sum(v))
)


class TestDistances:
    def test_identical(self):
        assert bhattacharyya([0.2, 0.8], [0.2, 0.8]) == pytest.approx(1.0, abs=1e-15)
        assert hellinger([0.2, 0.8], [0.2, 0.8]) == pytest.approx(0.0, abs=1e-7)

    def test_disjoint(self):
        assert bhattacharyya([1, 0], [0, 1]) == 0.0
        assert hellinger([1, 0], [0, 1]) == 1.0

    def test_overlap_values(self):
        assert abs(bhattacharyya([0.5, 0.5], [0.25, 0.75]) - 0.9659258) < 1e-7
        assert abs(hellinger([0.5, 0.5], [0.25, 0.75]) - 0.1845917) < 1e-6

    def test_rejects_non_simplex(self):
        with pytest.raises(ConfigError):
            bhattacharyya([0.5, 0.6], [0.5, 0.5])
        with pytest.raises(ConfigError):
            hellinger([1.0], [0.5, 0.5])

    @given(simplex, st.data())
    def test_two_forms_agree(self, p, data):
        q = data.draw(st.lists(st.floats(0, 1), min_size=len(p), max_size=len(p))
                      .filter(lambda v: sum(v) > 1e-3))
        q = np.asarray(q) / sum(q)
        assert abs(hellinger(p, q) - hellinger_direct(p, q)) < 1e-7
        assert 0.0 <= bhattacharyya(p, q) <= 1.0


class TestPrincipalAngles:
    def test_same_subspace(self):
        u = np.linalg.qr(np.random.default_rng(0).normal(size=(6, 2)))[0]
        np.testing.assert_allclose(principal_angle_sines(u, u), 0.0, atol=1e-15)

    def test_orthogonal_subspaces(self):
        e = np.eye(4)
        np.testing.assert_allclose(principal_angle_sines(e[:, :2], e[:, 2:]), [1.0, 1.0])

    def test_planar_rotation(self):
        theta = 0.3
        u1 = np.array([1.0, 0.0, 0.0])
        u2 = np.array([math.cos(theta), math.sin(theta), 0.0])
        assert abs(principal_angle_sines(u1, u2)[0] - 0.2955202) < 1e-7
        assert abs(principal_angle_sines(u1, u2)[0] - math.sin(theta)) < 1e-12

    def test_basis_invariance(self, rng):
        u1 = np.linalg.qr(rng.normal(size=(7, 3)))[0]
        u2 = np.linalg.qr(rng.normal(size=(7, 3)))[0]
        rot = np.linalg.qr(rng.normal(size=(3, 3)))[0]
        np.testing.assert_allclose(principal_angle_sines(u1, u2),
                                   principal_angle_sines(u1 @ rot, u2), atol=1e-12)

    def test_matches_cosine_oracle(self, rng):
        u1 = np.linalg.qr(rng.normal(size=(9, 2)))[0]
        u2 = np.linalg.qr(rng.normal(size=(9, 2)))[0]
        cos = np.linalg.svd(u1.T @ u2, compute_uv=False)
        oracle = np.sort(np.sqrt(1 - cos ** 2))[::-1]
        np.testing.assert_allclose(principal_angle_sines(u1, u2), oracle, atol=1e-10)

    def test_not_orthonormal(self):
        with pytest.raises(ConfigError):
            principal_angle_sines(np.ones((3, 1)), np.eye(3)[:, :1])


class TestBounds:
    def test_davis_kahan_arithmetic(self):
        assert davis_kahan_bound(0.1, 0.5) == pytest.approx(0.2)
        assert davis_kahan_bound(0.0, 3.0) == 0.0
        with pytest.raises(ConfigError):
            davis_kahan_bound(0.1, 0.0)

    def test_epsilon_example(self):
        eps, ok = perturbation_epsilon(2, 4, 0.1, 1000, 0.05)
        assert abs(eps - 0.359) < 1e-3
        assert abs(eps - math.sqrt(8 * math.log(640) / 400)) < 1e-12
        assert abs(math.sqrt(math.log(640) / 2000) - 0.0568) < 1e-4
        assert ok is False

    def test_epsilon_decreases_in_n(self):
        values = [perturbation_epsilon(2, 4, 0.1, n)[0] for n in (10**3, 10**4, 10**5)]
        assert values[0] > values[1] > values[2] > 0

    def test_uniform_single_class_condition(self):
        d, delta = 5, 0.05
        for n in (10**3, 10**4, 10**5):
            _, ok = perturbation_epsilon(1, d, 1 / d, n, delta)
            assert ok == (math.sqrt(math.log(4 * d / delta) / (2 * n)) <= 1 / (2 * d))

    def test_operator_bound_arithmetic(self):
        assert operator_perturbation_bound(1.0, 0.0, 2) == 0.0
        assert operator_perturbation_bound(1.0, 0.1, 2) == pytest.approx(0.105)

    def test_imbalance_arithmetic(self):
        assert imbalance_deviation_bound(1.5, [1 / 3] * 3) == pytest.approx(0.0, abs=1e-15)
        assert imbalance_deviation_bound(1.5, [0.8, 0.2]) == pytest.approx(0.45)

    def test_davis_kahan_trials(self):
        for t in range(100):
            rng = np.random.default_rng(t)
            d = 8
            r = int(rng.integers(1, d))
            b = rng.normal(size=(d, d))
            a = (b + b.T) / 2
            w, u = top_eigenspace(a, r)
            gap = w[r - 1] - w[r]
            e = rng.normal(size=(d, d))
            e = (e + e.T) / 2
            e *= 0.2 * gap / spectral_norm(e)
            _, ut = top_eigenspace(a + e, r)
            assert principal_angle_sines(u, ut)[0] <= davis_kahan_bound(spectral_norm(e), gap) + 1e-12

    def test_factor_perturbation_trials(self):
        for t in range(100):
            rng = np.random.default_rng(1000 + t)
            psi = np.abs(rng.normal(size=(6, 2)))
            psi_n = psi + 0.05 * rng.normal(size=(6, 2))
            dev = spectral_norm((psi_n @ psi_n.T - psi @ psi.T) / 2)
            delta_norm = spectral_norm(psi_n - psi)
            assert dev <= (delta_norm ** 2 + 2 * spectral_norm(psi) * delta_norm) / 2 + 1e-12

    def test_imbalance_trials(self):
        for t in range(100):
            rng = np.random.default_rng(2000 + t)
            counts = rng.integers(1, 30, size=(10, 3)).astype(float)
            freq = FrequencyMatrix(counts)
            cn = class_normalized_amplitudes(freq)
            gap = spectral_norm(dense_operator(amplitude_lift(freq)) - dense_operator(cn))
            w = counts.sum(axis=0) / counts.sum()
            assert gap <= imbalance_deviation_bound(spectral_norm(cn.columns) ** 2, w) + 1e-12


class TestOperatorDifference:
    def test_matches_dense(self, rng):
        for _ in range(10):
            a = AmplitudeMatrix(np.abs(rng.normal(size=(12, 3))))
            b = class_normalized_amplitudes(FrequencyMatrix(rng.integers(1, 9, size=(12, 3)) * 1.0))
            dense = spectral_norm(dense_operator(a) - dense_operator(b))
            assert abs(operator_difference_norm(a, b) - dense) < 1e-12

    def test_self_difference(self, rng):
        a = AmplitudeMatrix(np.abs(rng.normal(size=(5, 2))))
        assert operator_difference_norm(a, a) < 1e-14


def _profiles_amp(p):
    return AmplitudeMatrix(np.sqrt(p), CLASS_NORMALIZED)


class TestStabilityReport:
    def setup_method(self):
        rng = np.random.default_rng(21)
        p = rng.dirichlet(np.ones(8), size=2).T
        self.p = p
        self.truth = _profiles_amp(p)

    def test_identical_operators(self):
        rep = embedding_stability_report(self.truth, self.truth, 2)
        assert rep.empirical_sin_theta < 1e-7
        assert rep.empirical_operator_deviation < 1e-14
        assert rep.dk_bound < 1e-13
        assert rep.bound_holds

    def test_small_perturbation(self, rng):
        for _ in range(20):
            q = self.p * np.exp(0.05 * rng.normal(size=self.p.shape))
            rep = embedding_stability_report(self.truth, _profiles_amp(q / q.sum(axis=0)), 2)
            assert rep.bound_holds
            assert rep.gap > 0 and rep.dk_bound >= 0

    def test_epsilon_fields(self):
        rep = embedding_stability_report(self.truth, self.truth, 1, n_min=1000,
                                         p_min=float(self.p.min()))
        assert rep.epsilon > 0 and rep.operator_bound > 0
        assert isinstance(rep.positivity_condition_ok, bool)
        assert set(rep.to_dict()["parameters"]) >= {"d", "k", "n_min", "p_min", "delta"}

    def test_variant_required(self):
        with pytest.raises(ConfigError):
            embedding_stability_report(AmplitudeMatrix(self.truth.columns), self.truth, 1)

    def test_no_gap(self):
        flat = _profiles_amp(np.full((4, 2), 0.25))
        with pytest.raises(ConfigError):
            embedding_stability_report(flat, flat, 2)


class TestProcrustes:
    def test_rotation_removed(self, rng):
        u = np.linalg.qr(rng.normal(size=(8, 2)))[0]
        rot = np.linalg.qr(rng.normal(size=(2, 2)))[0]
        x = rng.random(size=(20, 8))
        assert procrustes_alignment_error(u, u @ rot, x) < 1e-12

    def test_sign_flip_removed(self, rng):
        u = np.linalg.qr(rng.normal(size=(8, 2)))[0]
        assert procrustes_alignment_error(u, u * [1, -1], rng.random(size=(5, 8))) < 1e-12


class TestMonteCarlo:
    def test_small_model(self):
        laws = [np.array([[0.2, 0.3, 0.5], [0.5, 0.3, 0.2]])]
        res = multinomial_bound_check(laws, n_min=5000, trials=40, r=1)
        assert res.condition_ok
        assert res.operator_fraction == 1.0
        assert res.subspace_fraction == 1.0
        assert res.max_operator_deviation <= res.operator_bound

    def test_zero_probability_rejected(self):
        with pytest.raises(ConfigError):
            multinomial_bound_check([np.array([[1.0, 0.0], [0.5, 0.5]])], n_min=10, trials=1)
