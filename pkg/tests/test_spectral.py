from fractions import Fraction

import numpy as np
import pytest

from embz.states import DensityMatrix, conjugate, kron, random_unitary
from embz.spectral import (
    StepFunction,
    amplify,
    amplify_distribution,
    assemble_scale,
    brute_force_orbit_distance,
    distribution_function,
    l1_distance,
    l1_distance_exact,
    orbit_distance,
    reflect,
    spectral_scale,
    stepfn_from_json,
    stepfn_to_json,
    tensor_distribution,
    tensor_scale,
)


def rand_step(rng, max_pieces=5):
    k = rng.integers(1, max_pieces + 1)
    breaks = np.concatenate([[0.0], np.sort(rng.random(k)) * 3])
    vals = np.sort(rng.random(k))[::-1] + 0.01
    return StepFunction.from_breaks_values(breaks.tolist(), vals.tolist())


class TestSpectralScale:
    def test_pure_state(self):
        f = spectral_scale(DensityMatrix.from_diagonal([1.0, 0.0, 0.0]))
        assert f == StepFunction.indicator(1)

    def test_maximally_mixed(self):
        n = 5
        f = spectral_scale(DensityMatrix.maximally_mixed(n))
        assert f.breaks_float() == [0.0, 5.0]
        assert f.values_float() == [1.0 / n]

    def test_multiplicity_accumulation(self):
        f = spectral_scale(DensityMatrix.from_diagonal([0.5, 0.25, 0.25]))
        assert f.breaks_float() == [0.0, 1.0, 3.0]
        assert f.values_float() == [0.5, 0.25]

    def test_integral_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            rho = DensityMatrix.random(rng, 4)
            assert abs(float(spectral_scale(rho).integral()) - 1.0) < 1e-12

    def test_unitary_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            rho = DensityMatrix.from_diagonal([0.5, 0.25, 0.25])
            u = random_unitary(rng, 3)
            f = spectral_scale(rho)
            g = spectral_scale(conjugate(rho, u))
            assert f.breaks == g.breaks
            np.testing.assert_allclose(f.values_float(), g.values_float(), atol=1e-12)


class TestDistributionFunction:
    def test_pure_state(self):
        d = distribution_function(DensityMatrix.from_diagonal([1.0, 0.0]))
        assert d == StepFunction.indicator(1)

    def test_maximally_mixed(self):
        d = distribution_function(DensityMatrix.maximally_mixed(4))
        assert d.values_float() == [4.0]
        assert d.breaks_float() == [0.0, 0.25]

    def test_counting(self):
        d = distribution_function(DensityMatrix.from_diagonal([0.5, 0.25, 0.25]))
        # 3 eigenvalues above t for t < 1/4, one for t in [1/4, 1/2)
        assert d.breaks_float() == [0.0, 0.25, 0.5]
        assert d.values_float() == [3.0, 1.0]

    def test_integral_one(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            rho = DensityMatrix.random(rng, 5)
            assert abs(float(distribution_function(rho).integral()) - 1.0) < 1e-12


class TestReflect:
    def test_indicator_fixed_point(self):
        f = StepFunction.indicator(1)
        assert reflect(f) == f

    def test_mixed_duality(self):
        n = 6
        f = StepFunction.from_breaks_values([0, n], [Fraction(1, n)])
        g = StepFunction.from_breaks_values([0, Fraction(1, n)], [n])
        assert reflect(f) == g
        assert reflect(g) == f

    def test_involution_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            f = rand_step(rng)
            assert reflect(reflect(f)) == f

    def test_scale_distribution_duality(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            rho = DensityMatrix.random(rng, 4)
            assert reflect(distribution_function(rho)) == spectral_scale(rho)
            assert reflect(spectral_scale(rho)) == distribution_function(rho)


class TestL1Distance:
    def test_identical(self):
        f = StepFunction.indicator(1)
        assert l1_distance(f, f) == 0.0

    def test_piecewise_example(self):
        f = StepFunction.indicator(1)
        g = StepFunction.from_breaks_values([0, 2], [Fraction(1, 2)])
        # |1 - 1/2| on [0,1) plus |0 - 1/2| on [1,2)
        assert l1_distance(f, g) == 1.0

    def test_scale_equals_distribution_distance(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            rho = DensityMatrix.random(rng, 4)
            sigma = DensityMatrix.random(rng, 4)
            lhs = l1_distance_exact(spectral_scale(rho), spectral_scale(sigma))
            rhs = l1_distance_exact(distribution_function(rho), distribution_function(sigma))
            assert lhs == rhs

    def test_metric_axioms(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            f, g, h = rand_step(rng), rand_step(rng), rand_step(rng)
            assert l1_distance(f, g) == l1_distance(g, f)
            assert l1_distance(f, h) <= l1_distance(f, g) + l1_distance(g, h) + 1e-12


class TestOrbitDistance:
    def test_unitarily_equivalent(self):
        rng = np.random.default_rng(7)
        rho = DensityMatrix.from_diagonal([0.5, 0.3, 0.2])
        u = random_unitary(rng, 3)
        assert orbit_distance(rho, conjugate(rho, u)) < 1e-12

    def test_pure_vs_mixed(self):
        a = DensityMatrix.from_diagonal([1.0, 0.0])
        b = DensityMatrix.maximally_mixed(2)
        assert orbit_distance(a, b) == 1.0

    def test_never_exceeds_trace_distance(self):
        from embz.states import functional_distance

        rng = np.random.default_rng(8)
        for _ in range(50):
            rho = DensityMatrix.random(rng, 3)
            sigma = DensityMatrix.random(rng, 3)
            assert orbit_distance(rho, sigma) <= functional_distance(rho, sigma) + 1e-12


class TestBruteForceOracle:
    def test_equal_states(self):
        rho = DensityMatrix.from_diagonal([0.7, 0.3])
        res = brute_force_orbit_distance(rho, rho, restarts=20, seed=0)
        assert res.value < 1e-7

    def test_permutation_reachable(self):
        a = DensityMatrix.from_diagonal([1.0, 0.0])
        b = DensityMatrix.from_diagonal([0.0, 1.0])
        res = brute_force_orbit_distance(a, b, restarts=20, seed=1)
        assert res.value < 1e-7

    def test_matches_closed_form_m2(self):
        rng = np.random.default_rng(9)
        for trial in range(5):
            rho = DensityMatrix.random(rng, 2)
            sigma = DensityMatrix.random(rng, 2)
            res = brute_force_orbit_distance(rho, sigma, restarts=200, seed=trial)
            assert res.value == pytest.approx(orbit_distance(rho, sigma), abs=1e-5)
            assert not res.flagged

    def test_upper_bound_property(self):
        rng = np.random.default_rng(10)
        rho = DensityMatrix.random(rng, 3)
        sigma = DensityMatrix.random(rng, 3)
        res = brute_force_orbit_distance(rho, sigma, restarts=50, seed=3)
        assert res.value >= orbit_distance(rho, sigma) - 1e-9

    def test_dim_guard(self):
        with pytest.raises(ValueError):
            brute_force_orbit_distance(
                DensityMatrix.maximally_mixed(7), DensityMatrix.maximally_mixed(7)
            )


class TestTensorLaws:
    def test_pure_factor_neutral(self):
        rng = np.random.default_rng(11)
        g = rand_step(rng)
        assert tensor_scale(StepFunction.indicator(1), g) == g

    def test_amplify_indicator(self):
        for n in (1, 2, 5, 16):
            out = amplify(StepFunction.indicator(1), n)
            assert out == StepFunction.from_breaks_values([0, n], [Fraction(1, n)])

    def test_amplify_one_is_identity(self):
        rng = np.random.default_rng(12)
        f = rand_step(rng)
        assert amplify(f, 1) == f

    def test_tensor_scale_matches_kron_spectrum_exactly(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            p = rng.random(3) + 0.05
            q = rng.random(2) + 0.05
            p /= p.sum()
            q /= q.sum()
            rho = DensityMatrix.from_diagonal(p)
            sigma = DensityMatrix.from_diagonal(q)
            law = tensor_scale(spectral_scale(rho), spectral_scale(sigma))
            direct = spectral_scale(kron(rho, sigma))
            assert law == direct

    def test_tensor_distribution_matches_direct_exactly(self):
        rng = np.random.default_rng(14)
        for _ in range(25):
            p = rng.random(2) + 0.05
            q = rng.random(3) + 0.05
            p /= p.sum()
            q /= q.sum()
            rho = DensityMatrix.from_diagonal(p)
            sigma = DensityMatrix.from_diagonal(q)
            law = tensor_distribution(distribution_function(rho), distribution_function(sigma))
            assert law == distribution_function(kron(rho, sigma))

    def test_tensor_scale_conjugated_inputs(self):
        rng = np.random.default_rng(15)
        rho = conjugate(DensityMatrix.from_diagonal([0.7, 0.3]), random_unitary(rng, 2))
        sigma = conjugate(DensityMatrix.from_diagonal([0.5, 0.3, 0.2]), random_unitary(rng, 3))
        law = tensor_scale(spectral_scale(rho), spectral_scale(sigma))
        direct = spectral_scale(kron(rho, sigma))
        assert law.breaks == direct.breaks
        np.testing.assert_allclose(law.values_float(), direct.values_float(), atol=1e-12)

    def test_amplify_matches_tensor_with_uniform(self):
        rng = np.random.default_rng(16)
        rho = DensityMatrix.random(rng, 3)
        f = spectral_scale(rho)
        for n in (2, 4):
            uniform = spectral_scale(DensityMatrix.maximally_mixed(n))
            assert tensor_scale(f, uniform) == amplify(f, n)

    def test_amplified_distribution_embezzler_shape(self):
        # n D(n t) fixed point is the 1/t shape; for step data the law acts
        # exactly and the amplified indicator reproduces the dual pair
        d = StepFunction.indicator(1)
        out = amplify_distribution(d, 4)
        assert out == StepFunction.from_breaks_values([0, Fraction(1, 4)], [4])


def test_assemble_scale_groups_degenerate_values():
    f = assemble_scale([0.5, 0.5 - 1e-14, 0.25], [1, 1, 1])
    assert f.breaks_float() == [0.0, 2.0, 3.0]


def test_stepfn_json_roundtrip():
    rng = np.random.default_rng(17)
    f = rand_step(rng)
    assert stepfn_from_json(stepfn_to_json(f)) == f
