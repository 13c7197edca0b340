import math

import numpy as np
import pytest

from oridens.core import (
    ConversionConfig,
    Density,
    FusionError,
    angle_to_vector,
    angular_distance,
    canonical_angle,
    decode,
    decode_with_score,
    encode,
    fuse,
    kl_divergence,
    vector_to_angle,
)

from oracles import (
    TWO_PI,
    decode_argmax_oracle,
    encode_oracle,
    kl_oracle,
    wrapped_distance,
)

CFG = ConversionConfig()  # 16 bins, sigma 10 deg, decode step 0.1 deg


class TestCanonicalAngle:
    def test_wraps_into_range(self):
        assert canonical_angle(math.radians(370.0)) == pytest.approx(
            math.radians(10.0), abs=1e-12
        )
        assert canonical_angle(-0.25) == pytest.approx(TWO_PI - 0.25, abs=1e-12)
        assert canonical_angle(TWO_PI) == 0.0
        assert canonical_angle(0.0) == 0.0

    def test_rejects_non_finite(self):
        for bad in (math.inf, -math.inf, math.nan):
            with pytest.raises(ValueError):
                canonical_angle(bad)


class TestAngularDistance:
    def test_antipodal(self):
        assert angular_distance(0.0, math.pi) == pytest.approx(math.pi, abs=1e-12)

    def test_seam_crossing(self):
        assert angular_distance(0.1, TWO_PI - 0.1) == pytest.approx(0.2, abs=1e-12)

    def test_identity(self):
        rng = np.random.default_rng(3)
        for theta in rng.uniform(0.0, TWO_PI, 50):
            # the arccosine route loses a little precision exactly at zero
            assert angular_distance(theta, theta) == pytest.approx(0.0, abs=1e-7)

    def test_matches_wrapped_difference_route(self):
        rng = np.random.default_rng(11)
        a = rng.uniform(0.0, TWO_PI, 1000)
        b = rng.uniform(0.0, TWO_PI, 1000)
        for x, y in zip(a, b):
            assert angular_distance(x, y) == pytest.approx(
                wrapped_distance(x, y), abs=1e-9
            )

    def test_symmetry_and_period_invariance(self):
        rng = np.random.default_rng(12)
        for _ in range(1000):
            x, y = rng.uniform(0.0, TWO_PI, 2)
            k = rng.integers(-3, 4)
            d = angular_distance(x, y)
            assert angular_distance(y, x) == d
            assert angular_distance(x + TWO_PI * k, y) == pytest.approx(d, abs=1e-7)
            assert angular_distance(x, y + TWO_PI * k) == pytest.approx(d, abs=1e-7)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            a, b, c = rng.uniform(0.0, TWO_PI, 3)
            assert angular_distance(a, c) <= (
                angular_distance(a, b) + angular_distance(b, c) + 1e-9
            )

    def test_range(self):
        rng = np.random.default_rng(14)
        a = rng.uniform(-50.0, 50.0, 500)
        b = rng.uniform(-50.0, 50.0, 500)
        d = angular_distance(a, b)
        assert np.all(d >= 0.0) and np.all(d <= math.pi)


class TestDensity:
    def test_validates_invariants(self):
        with pytest.raises(ValueError):
            Density([0.5, 0.5, 0.0])  # fewer than 4 bins
        with pytest.raises(ValueError):
            Density([0.5, 0.6, -0.05, -0.05])  # negative bins
        with pytest.raises(ValueError):
            Density([0.3, 0.3, 0.3, 0.3])  # sum != 1
        with pytest.raises(ValueError):
            Density([[0.25, 0.25], [0.25, 0.25]])  # not one-dimensional
        with pytest.raises(ValueError):
            Density([0.25, 0.25, 0.25, math.nan])

    def test_bins_are_read_only(self):
        d = Density.uniform(8)
        with pytest.raises(ValueError):
            d.bins[0] = 1.0

    def test_from_weights(self):
        d = Density.from_weights([2.0, 1.0, 1.0, 0.0])
        assert d.bins.tolist() == [0.5, 0.25, 0.25, 0.0]
        with pytest.raises(ValueError):
            Density.from_weights([0.0, 0.0, 0.0, 0.0])

    def test_uniform_and_argmax(self):
        u = Density.uniform(16)
        assert u.n_bins == 16
        assert np.all(u.bins == 1.0 / 16)
        assert Density([0.1, 0.6, 0.2, 0.1]).argmax_bin == 1


class TestConversionConfig:
    def test_defaults(self):
        assert CFG.n_bins == 16
        assert CFG.sigma == pytest.approx(math.radians(10.0))
        assert CFG.decode_step == pytest.approx(math.radians(0.1))

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            ConversionConfig(n_bins=3)
        with pytest.raises(ValueError):
            ConversionConfig(sigma=0.0)
        with pytest.raises(ValueError):
            ConversionConfig(decode_step=0.0)
        with pytest.raises(ValueError):
            ConversionConfig(n_bins=16, decode_step=TWO_PI / 8)  # > bin spacing
        with pytest.raises(ValueError):
            ConversionConfig(decode_objective="nearest")


class TestEncode:
    def test_neighbor_ratio_frozen(self):
        # oracle value: exp(-(22.5 deg)^2 / (2 * (10 deg)^2))
        d = encode(0.0, CFG)
        assert d.bins[1] / d.bins[0] == pytest.approx(
            0.07955950871822769, rel=1e-12
        )
        assert d.bins[15] == pytest.approx(d.bins[1], rel=1e-12)

    def test_matches_scalar_oracle(self):
        for theta in (0.0, math.radians(1.0), math.radians(40.0), 2.5, 6.0):
            got = encode(theta, CFG).bins
            want = encode_oracle(theta, CFG.n_bins, CFG.sigma)
            np.testing.assert_allclose(got, want, rtol=0.0, atol=1e-12)

    def test_peaks_at_exact_bin_center(self):
        theta_3 = TWO_PI * 3 / 16
        d = encode(theta_3, CFG)
        assert d.argmax_bin == 3
        for k in range(1, 8):
            assert d.bins[(3 - k) % 16] == pytest.approx(
                d.bins[(3 + k) % 16], rel=1e-12
            )

    def test_shift_equivariance(self):
        rng = np.random.default_rng(21)
        for theta in rng.uniform(0.0, TWO_PI, 20):
            k = int(rng.integers(1, 16))
            base = encode(theta, CFG).bins
            shifted = encode(theta + TWO_PI * k / 16, CFG).bins
            np.testing.assert_allclose(shifted, np.roll(base, k), atol=1e-12)

    def test_sums_to_one(self):
        rng = np.random.default_rng(22)
        for theta in rng.uniform(-10.0, 10.0, 100):
            assert abs(encode(theta, CFG).bins.sum() - 1.0) <= 1e-9

    def test_tiny_sigma_does_not_underflow(self):
        cfg = ConversionConfig(sigma=math.radians(0.05))
        d = encode(math.radians(191.0), cfg)  # between bin centers
        assert d.bins.sum() == pytest.approx(1.0, abs=1e-9)
        assert d.argmax_bin == 8  # 180 deg is the nearest bin to 191 deg


class TestDecode:
    def test_one_hot_recovers_bin_center(self):
        bins = np.zeros(16)
        bins[5] = 1.0
        angle = decode(Density(bins), CFG)
        assert wrapped_distance(angle, math.radians(112.5)) <= CFG.decode_step

    def test_round_trip_at_bin_center(self):
        theta_3 = TWO_PI * 3 / 16
        assert wrapped_distance(decode(encode(theta_3, CFG), CFG), theta_3) \
            <= CFG.decode_step

    def test_between_bin_centers_matches_fine_oracle(self):
        theta = math.radians(40.0)
        d = encode(theta, CFG)
        got = decode(d, CFG)
        want = decode_argmax_oracle(d.bins, CFG.sigma, "cosine")
        assert wrapped_distance(got, want) <= math.radians(0.02)
        assert wrapped_distance(got, theta) <= math.radians(1.0)

    @pytest.mark.parametrize("objective", ["printed", "printed-squared"])
    def test_alternate_objectives_match_their_own_oracle(self, objective):
        # these variants are biased toward bin centers by construction;
        # the check is search fidelity, not round-trip accuracy
        cfg = ConversionConfig(decode_objective=objective)
        rng = np.random.default_rng(31)
        for theta in rng.uniform(0.0, TWO_PI, 5):
            d = encode(theta, cfg)
            got = decode(d, cfg)
            want = decode_argmax_oracle(d.bins, cfg.sigma, objective)
            assert wrapped_distance(got, want) <= math.radians(0.02)

    def test_round_trip_random_angles(self):
        rng = np.random.default_rng(32)
        worst = 0.0
        for theta in rng.uniform(0.0, TWO_PI, 1000):
            err = wrapped_distance(decode(encode(theta, CFG), CFG), theta)
            worst = max(worst, err)
        assert worst <= math.radians(1.0)

    def test_uniform_resolves_to_zero_with_low_score(self):
        angle, score = decode_with_score(Density.uniform(16), CFG)
        assert angle == 0.0
        peaked_score = decode_with_score(encode(1.0, CFG), CFG)[1]
        assert score < 0.5 < peaked_score

    def test_without_refinement(self):
        cfg = ConversionConfig(refine=False)
        theta = math.radians(40.0)
        assert wrapped_distance(decode(encode(theta, cfg), cfg), theta) \
            <= math.radians(1.0)

    def test_output_is_canonical(self):
        rng = np.random.default_rng(33)
        for theta in rng.uniform(0.0, TWO_PI, 20):
            out = decode(encode(theta, CFG), CFG)
            assert 0.0 <= out < TWO_PI

    def test_rejects_bin_mismatch(self):
        with pytest.raises(ValueError):
            decode(Density.uniform(8), CFG)


class TestFuse:
    def test_uniform_is_identity(self):
        rng = np.random.default_rng(41)
        for _ in range(20):
            p = Density.from_weights(rng.random(16))
            fused = fuse([p, Density.uniform(16)])
            np.testing.assert_allclose(fused.bins, p.bins, rtol=0.0, atol=1e-15)

    def test_single_input_unchanged(self):
        p = encode(2.0, CFG)
        assert np.array_equal(fuse([p]).bins, p.bins)

    def test_bimodal_rescue_hand_product(self):
        # bimodal belief with a slightly stronger wrong peak at bin 10,
        # unimodal prior at bin 2; all values dyadic so the sums are exact
        bimodal = [0.0] * 16
        bimodal[2], bimodal[3] = 0.375, 0.0625
        bimodal[10], bimodal[11] = 0.4375, 0.125
        prior = [0.015625] * 16
        prior[1], prior[2], prior[3] = 0.125, 0.5, 0.171875
        assert sum(bimodal) == 1.0 and sum(prior) == 1.0

        product = [b * p for b, p in zip(bimodal, prior)]
        expected = [v / sum(product) for v in product]

        fused = fuse([Density(bimodal), Density(prior)])
        np.testing.assert_allclose(fused.bins, expected, rtol=0.0, atol=1e-15)
        assert Density(bimodal).argmax_bin == 10
        assert fused.argmax_bin == 2

    def test_disjoint_support_raises(self):
        a = [0.0] * 16
        a[0] = 1.0
        b = [0.0] * 16
        b[8] = 1.0
        with pytest.raises(FusionError):
            fuse([Density(a), Density(b)])

    def test_rejects_empty_and_mismatched(self):
        with pytest.raises(ValueError):
            fuse([])
        with pytest.raises(ValueError):
            fuse([Density.uniform(16), Density.uniform(8)])


class TestKLDivergence:
    def test_identity_is_exactly_zero(self):
        p = encode(0.7, CFG)
        assert kl_divergence(p, p) == 0.0
        u = Density.uniform(16)
        assert kl_divergence(u, u) == 0.0

    def test_frozen_oracle_value(self):
        # scalar-oracle evaluation of KL(encode(0), encode(90 deg))
        p = encode(0.0, CFG)
        q = encode(math.pi / 2, CFG)
        assert kl_divergence(p, q) == pytest.approx(26.81182045511127, rel=1e-9)
        assert kl_divergence(p, q) == pytest.approx(
            kl_oracle(p.bins, q.bins), rel=1e-12
        )

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(51)
        for _ in range(1000):
            p = Density.from_weights(rng.random(16))
            q = Density.from_weights(rng.random(16))
            assert kl_divergence(p, q) >= 0.0

    def test_zero_bins_stay_finite(self):
        p = Density([0.5, 0.5] + [0.0] * 14)
        q = Density([0.0, 0.0, 0.5, 0.5] + [0.0] * 12)
        v = kl_divergence(p, q)
        assert math.isfinite(v) and v > 0.0

    def test_rejects_bin_mismatch(self):
        with pytest.raises(ValueError):
            kl_divergence(Density.uniform(8), Density.uniform(16))


class TestVectorRepresentation:
    def test_axis_cases(self):
        assert angle_to_vector(0.0) == pytest.approx((1.0, 0.0), abs=1e-12)
        assert angle_to_vector(math.pi / 2) == pytest.approx((0.0, 1.0), abs=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(61)
        for theta in rng.uniform(0.0, TWO_PI, 1000):
            x, y = angle_to_vector(theta)
            assert wrapped_distance(vector_to_angle(x, y), theta) <= 1e-12

    def test_rejects_zero_and_non_finite(self):
        with pytest.raises(ValueError):
            vector_to_angle(0.0, 0.0)
        with pytest.raises(ValueError):
            vector_to_angle(math.nan, 1.0)
