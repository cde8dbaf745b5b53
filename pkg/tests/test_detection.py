import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from macroqubit.cloners import ClonerSpec, RestrictedGen, restricted_gen
from macroqubit.detection import (
    EYE,
    DetectorSpec,
    analyzer_probs,
    detector_array_no_see,
    detector_array_povm,
    finite_difference_delta,
    see_probability,
)
from macroqubit.errors import ContractViolation, InvalidArgument
from macroqubit.oracle.restriction import restricted_povm_oracle
from macroqubit.series import pi_eta


def _brute_see(n, eta, theta):
    return sum(math.comb(n, k) * eta**k * (1 - eta) ** (n - k) for k in range(theta, n + 1))


class TestDetectorSpec:
    @pytest.mark.parametrize("eta,theta", [(-0.1, 1), (1.1, 1), (0.5, 0), (0.5, 2.5)])
    def test_rejects(self, eta, theta):
        with pytest.raises(InvalidArgument):
            DetectorSpec(eta, theta)

    def test_after_transmission(self):
        d = DetectorSpec(0.5, 3).after_transmission(0.4)
        assert d == DetectorSpec(0.2, 3)
        with pytest.raises(InvalidArgument):
            DetectorSpec(0.5, 3).after_transmission(2.0)


class TestSeeProbability:
    @pytest.mark.parametrize("n", [0, 1, 5, 30])
    @pytest.mark.parametrize("eta", [0.07, 0.5, 1.0])
    def test_single_photon_threshold(self, n, eta):
        assert see_probability(n, DetectorSpec(eta, 1)) == pytest.approx(1 - (1 - eta) ** n, abs=1e-14)

    def test_nothing_to_see(self):
        assert see_probability(0, EYE) == 0.0
        assert see_probability(6, EYE) == 0.0

    def test_eye_brute_force(self):
        assert see_probability(100, EYE) == pytest.approx(_brute_see(100, 0.07, 7), rel=1e-12)

    def test_negative_count(self):
        with pytest.raises(InvalidArgument):
            see_probability(-1, EYE)

    @given(st.integers(0, 60), st.floats(0.0, 1.0), st.integers(1, 8))
    def test_monotone_in_photon_number(self, n, eta, theta):
        det = DetectorSpec(eta, theta)
        assert see_probability(n + 1, det) >= see_probability(n, det) - 1e-15


class TestAnalyzer:
    def test_vacuum_sees_nothing(self):
        gen = restricted_gen(ClonerSpec("universal", g=0.0), 0.3, 4)
        out = analyzer_probs(gen, "oo", DetectorSpec(0.3, 1))
        assert out.as_tuple() == pytest.approx((0.0, 0.0, 1.0), abs=1e-15)

    def test_perfect_detector_single_photon(self):
        gen = restricted_gen(ClonerSpec("universal", g=0.0), 1.0, 3)
        det = DetectorSpec(1.0, 1)
        assert analyzer_probs(gen, "pp", det).as_tuple() == pytest.approx((1.0, 0.0, 0.0), abs=1e-15)
        assert analyzer_probs(gen, "mm", det).as_tuple() == pytest.approx((0.0, 1.0, 0.0), abs=1e-15)

    def test_universal_eye_matches_oracle(self):
        spec = ClonerSpec("universal", g=1.5)
        ref = restricted_povm_oracle(spec, EYE)
        gen = restricted_gen(spec, EYE.eta)
        for i, name in enumerate(("pp", "mm", "oo")):
            out = analyzer_probs(gen, name, EYE)
            for key, val in zip(("p_a", "p_aperp", "p_null"), out.as_tuple()):
                assert val == pytest.approx(ref[key][i, i], abs=1e-7)

    def test_mixture_is_linear(self):
        gen = restricted_gen(ClonerSpec("pc", g=1.0), 0.2, 4)
        det = DetectorSpec(0.2, 3)
        mix = analyzer_probs(gen, {"pp": 0.25, "oo": 0.75}, det)
        a, o = analyzer_probs(gen, "pp", det), analyzer_probs(gen, "oo", det)
        for m, x, y in zip(mix.as_tuple(), a.as_tuple(), o.as_tuple()):
            assert m == pytest.approx(0.25 * x + 0.75 * y, abs=1e-14)

    @given(
        kind=st.sampled_from(["universal", "phase-covariant", "measure-prepare"]),
        strength=st.floats(0.0, 2.0),
        eta=st.sampled_from([0.07, 0.3, 1.0]),
        theta=st.integers(1, 7),
        entry=st.sampled_from(["pp", "mm", "oo"]),
    )
    def test_completeness_and_range(self, kind, strength, eta, theta, entry):
        spec = ClonerSpec.with_strength(kind, strength * (15 if kind == "measure-prepare" else 1))
        det = DetectorSpec(eta, theta)
        out = analyzer_probs(restricted_gen(spec, eta, theta), entry, det)
        assert sum(out.as_tuple()) == pytest.approx(1.0, abs=1e-10)
        for p in out.as_tuple():
            assert -1e-9 <= p <= 1 + 1e-9
        assert out.conclusive == pytest.approx(out.p_a + out.p_aperp)

    @pytest.mark.parametrize("kind,strength", [("universal", 1.0), ("phase-covariant", 0.8), ("mp", 30.0)])
    @pytest.mark.parametrize("eta_d,eta_t", [(0.5, 0.14), (0.9, 0.3)])
    def test_efficiency_composition(self, kind, strength, eta_d, eta_t):
        spec = ClonerSpec.with_strength(kind, strength)
        det = DetectorSpec(eta_d, 5)
        inner = restricted_gen(spec, eta_t, 6)
        composed = RestrictedGen(spec, eta_d * eta_t, 6,
                                 lambda n, z, zp: inner.builder(n, pi_eta(eta_d, z), pi_eta(eta_d, zp)))
        direct = restricted_gen(spec, eta_d * eta_t, 6)
        target = det.after_transmission(eta_t)
        for name in ("pp", "mm", "oo"):
            a = analyzer_probs(composed, name, target).as_tuple()
            b = analyzer_probs(direct, name, target).as_tuple()
            assert a == pytest.approx(b, abs=1e-10)

    def test_mismatched_efficiency(self):
        gen = restricted_gen(ClonerSpec("universal", g=0.5), 0.3, 4)
        with pytest.raises(InvalidArgument):
            analyzer_probs(gen, "pp", DetectorSpec(0.4, 2))
        with pytest.raises(InvalidArgument):
            analyzer_probs(gen, "pp", DetectorSpec(0.3, 9))
        with pytest.raises(InvalidArgument):
            analyzer_probs(gen, "pm", DetectorSpec(0.3, 2))

    def test_inconsistent_function_is_reported(self):
        spec = ClonerSpec("universal", g=0.5)

        def broken(name, z, zp):
            # f(1, 1) = 1 but f(0, 0) = 2: not a probability generating function
            return z * -1.0 + 2.0

        gen = RestrictedGen(spec, 0.5, 2, broken)
        with pytest.raises(ContractViolation):
            analyzer_probs(gen, "pp", DetectorSpec(0.5, 1))


class TestDetectorArray:
    def test_single_detector(self):
        ns = detector_array_no_see(1, 1, 6)
        np.testing.assert_array_equal(ns, [1, 0, 0, 0, 0, 0, 0])

    @pytest.mark.parametrize("n_det", [3, 5, 8])
    def test_rows_are_probabilities(self, n_det):
        # j runs over 0..N-1, so each column misses only the all-click outcome
        povm = detector_array_povm(n_det, n_det, 9)
        exact = povm["exact"]
        for n in range(10):
            col = sum(row[n] for row in exact)
            assert col <= 1
            assert all(row[n] >= 0 for row in exact)
        assert np.all(povm["P_ns"] <= 1 + 1e-15)

    def test_two_photons_on_large_array(self):
        ns = detector_array_no_see(64, 3, 2)
        assert abs(ns[2] - 1.0) <= 1.0 / 64

    def test_monotone_convergence(self):
        ideal = (np.arange(11) < 3).astype(float)
        devs = [np.max(np.abs(detector_array_no_see(n, 3, 10) - ideal)) for n in (8, 16, 32, 64)]
        assert all(b < a for a, b in zip(devs, devs[1:]))
        assert devs[-1] <= 0.15

    def test_too_few_detectors(self):
        with pytest.raises(InvalidArgument):
            detector_array_povm(2, 3, 4)


def test_finite_difference_delta_exact():
    for j in range(11):
        for m in range(j + 1):
            val = finite_difference_delta(m, j)
            assert isinstance(val, Fraction)
            assert val == (1 if m == j else 0)


def test_finite_difference_above_diagonal_is_stirling():
    # for m > j the sum is the Stirling number S(m, j)
    assert finite_difference_delta(3, 2) == 3
    assert finite_difference_delta(4, 2) == 7
