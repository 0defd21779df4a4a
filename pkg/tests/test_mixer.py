import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wixup.errors import DataError
from wixup.frames import ClassProbs, Frame, Keypoints
from wixup.mixer import (
    CROSSING,
    MixConfig,
    ORIGINAL,
    assign_angles,
    bootstrap_sample,
    build_candidates,
    find_intersections,
    mix_frames,
    mix_labels,
    resolve_n_out,
)
from wixup.profile import ProfileConfig, build_profile, cart_to_spherical

from conftest import boresight_frame, brute_force_crossings, frame_at_bins, kp_label


def profiles_at(bins_a, bins_b, cfg=None):
    cfg = cfg or ProfileConfig()
    pa = build_profile(frame_at_bins(bins_a, cfg), cfg, tag=0)
    pb = build_profile(frame_at_bins(bins_b, cfg), cfg, tag=1)
    return pa, pb


class TestFindIntersections:
    def test_single_pair_midpoint_and_height(self):
        # Equal-sigma unit Gaussians cross exactly at the midpoint with
        # height exp(-(d/2)^2 / 2); here d = 4 bins.
        pa, pb = profiles_at([10.0], [14.0])
        crossings = find_intersections(pa, pb, eps=1e-9)
        assert len(crossings) == 1
        assert crossings[0].bin == pytest.approx(12.0, abs=0.05)
        assert crossings[0].height == pytest.approx(math.exp(-2.0), abs=5e-3)

    def test_identical_profiles_no_crossing(self):
        pa, pb = profiles_at([10.0, 55.5], [10.0, 55.5])
        assert find_intersections(pa, pb) == []

    def test_empty_profile_no_crossing(self):
        pa, pb = profiles_at([10.0], [])
        assert find_intersections(pa, pb) == []
        assert find_intersections(pb, pa) == []

    def test_eps_filters_low_crossings(self):
        pa, pb = profiles_at([10.0], [22.0])  # crossing height exp(-18) ~ 1.5e-8
        assert find_intersections(pa, pb, eps=1e-6) == []
        assert len(find_intersections(pa, pb, eps=1e-9)) == 1

    def test_symmetry_is_exact(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            bins_a = rng.uniform(20, 490, rng.integers(1, 6))
            bins_b = rng.uniform(20, 490, rng.integers(1, 6))
            pa, pb = profiles_at(bins_a, bins_b)
            assert find_intersections(pa, pb, 1e-9) == find_intersections(pb, pa, 1e-9)

    def test_length_mismatch_rejected(self):
        pa, _ = profiles_at([10.0], [])
        pb = build_profile(frame_at_bins([10.0]), ProfileConfig(window_size=256), tag=1)
        with pytest.raises(ValueError, match="length"):
            find_intersections(pa, pb)

    def test_height_decreases_with_distance(self):
        # The crossing height falls off monotonically as peaks separate.
        heights = []
        for delta in np.arange(2.0, 12.5, 0.5):
            pa, pb = profiles_at([100.0], [100.0 + delta])
            (crossing,) = find_intersections(pa, pb, eps=1e-30)
            heights.append(crossing.height)
        assert all(a > b for a, b in zip(heights, heights[1:]))

    def test_matches_brute_force_on_general_mixtures(self):
        # Independent oracle: continuous-mixture bisection on a 100x grid.
        rng = np.random.default_rng(123)
        cfg = ProfileConfig()
        for _ in range(30):
            mus_a = np.sort(rng.uniform(30, 470, rng.integers(2, 8)))
            mus_b = np.sort(rng.uniform(30, 470, rng.integers(2, 8)))
            pa, pb = profiles_at(mus_a, mus_b, cfg)
            got = find_intersections(pa, pb, eps=1e-4)
            expected = [
                (x, h) for x, h in
                brute_force_crossings(mus_a, mus_b, cfg.window_size, oversample=100)
                if h > 1e-4
            ]
            assert len(got) == len(expected)
            for inter, (x, h) in zip(got, expected):
                assert inter.bin == pytest.approx(x, abs=0.05)
                assert inter.height == pytest.approx(h, rel=0.05)


class TestBuildCandidates:
    def test_two_point_example(self):
        pa, pb = profiles_at([10.0], [14.0])
        cands = build_candidates(pa, pb, MixConfig())
        kinds = [(round(c.bin, 4), c.kind, round(c.weight, 4)) for c in cands]
        assert kinds == [
            (10.0, ORIGINAL, 1.0),
            (12.0, CROSSING, round(1.0 + math.exp(-2.0), 4)),
            (14.0, ORIGINAL, 1.0),
        ]

    def test_self_mix_candidates_are_the_originals(self):
        pa, pb = profiles_at([10.0, 40.25, 70.5], [10.0, 40.25, 70.5])
        cands = build_candidates(pa, pb, MixConfig())
        assert [c.kind for c in cands] == [ORIGINAL] * 3
        assert [c.weight for c in cands] == [1.0] * 3
        assert [c.bin for c in cands] == [10.0, 40.25, 70.5]

    def test_one_empty_frame(self):
        pa, pb = profiles_at([10.0, 20.0], [])
        cands = build_candidates(pa, pb, MixConfig())
        assert [c.bin for c in cands] == [10.0, 20.0]
        assert all(c.kind == ORIGINAL for c in cands)

    def test_duplicate_point_multiplicity_is_max_per_side(self):
        pa, pb = profiles_at([10.0, 10.0], [10.0])
        cands = build_candidates(pa, pb, MixConfig())
        assert [c.bin for c in cands] == [10.0, 10.0]

    def test_crossing_weights_exceed_one(self):
        pa, pb = profiles_at([10.0, 30.0], [14.0, 33.0])
        for c in build_candidates(pa, pb, MixConfig()):
            if c.kind == CROSSING:
                assert c.weight > 1.0
            else:
                assert c.weight == 1.0


class TestBootstrapSample:
    def test_statistics_match_weights(self):
        # Frozen expectation: weights {1, 1, 1 + exp(-2)} normalize to
        # {0.31895, 0.31895, 0.36211}.
        pa, pb = profiles_at([10.0], [14.0])
        cands = build_candidates(pa, pb, MixConfig())
        cfg = MixConfig(n_out=30000, jitter_sigma=0.0)
        bins = bootstrap_sample(cands, cfg, np.random.default_rng(2024))
        freq = [(np.abs(bins - b) < 1e-6).mean() for b in (10.0, 12.0, 14.0)]
        total = 2.0 + 1.0 + math.exp(-2.0)
        assert freq[0] == pytest.approx(1.0 / total, abs=0.01)
        assert freq[1] == pytest.approx((1.0 + math.exp(-2.0)) / total, abs=0.01)
        assert freq[2] == pytest.approx(1.0 / total, abs=0.01)

    def test_single_candidate_jitter_zero(self):
        pa, pb = profiles_at([10.0], [10.0])
        cands = build_candidates(pa, pb, MixConfig())
        cfg = MixConfig(n_out=5, jitter_sigma=0.0)
        bins = bootstrap_sample(cands, cfg, np.random.default_rng(0))
        assert list(bins) == [10.0] * 5

    def test_same_seed_same_samples(self):
        pa, pb = profiles_at([10.0, 20.0], [14.0])
        cands = build_candidates(pa, pb, MixConfig())
        cfg = MixConfig(n_out=100)
        a = bootstrap_sample(cands, cfg, np.random.default_rng(5))
        b = bootstrap_sample(cands, cfg, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_jitter_respects_window(self):
        pa, pb = profiles_at([0.4], [511.0])
        cands = build_candidates(pa, pb, MixConfig())
        cfg = MixConfig(n_out=2000, jitter_sigma=2.0)
        bins = bootstrap_sample(cands, cfg, np.random.default_rng(1))
        assert bins.min() >= 0.0
        assert bins.max() < 512.0

    def test_empty_candidates_rejected(self):
        with pytest.raises(DataError):
            bootstrap_sample([], MixConfig(n_out=1), np.random.default_rng(0))

    def test_unresolved_n_out_rejected(self):
        pa, pb = profiles_at([10.0], [14.0])
        cands = build_candidates(pa, pb, MixConfig())
        with pytest.raises(ValueError):
            bootstrap_sample(cands, MixConfig(), np.random.default_rng(0))


class TestAssignAngles:
    def test_symmetric_midpoint(self):
        cfg = MixConfig()
        f0 = Frame("a", 0.0, np.array([[math.sin(0.1) * 10 * 0.0375, math.cos(0.1) * 10 * 0.0375, 0.0]]), kp_label())
        f1 = Frame("a", 1.0, np.array([[math.sin(0.3) * 14 * 0.0375, math.cos(0.3) * 14 * 0.0375, 0.0]]), kp_label())
        pa = build_profile(f0, cfg.profile, 0)
        pb = build_profile(f1, cfg.profile, 1)
        cands = build_candidates(pa, pb, cfg)
        az, el = assign_angles(12.0, cands, cfg)
        assert az == pytest.approx(0.2, abs=1e-9)
        assert el == pytest.approx(0.0, abs=1e-12)

    def test_isolated_original_dominates(self):
        cfg = MixConfig()
        f0 = Frame("a", 0.0, np.array([[math.sin(0.1) * 0.375, math.cos(0.1) * 0.375, 0.0]]), kp_label())
        f1 = Frame("a", 1.0, np.array([[math.sin(0.3) * 30 * 0.0375, math.cos(0.3) * 30 * 0.0375, 0.0]]), kp_label())
        pa = build_profile(f0, cfg.profile, 0)
        pb = build_profile(f1, cfg.profile, 1)
        az, _ = assign_angles(10.0, build_candidates(pa, pb, cfg), cfg)
        assert az == pytest.approx(0.1, abs=1e-3)

    def test_kernel_weights_normalize(self):
        # Equidistant originals with azimuths a and b average to (a + b) / 2,
        # which only holds when the weights sum to one.
        cfg = MixConfig()
        pa, pb = profiles_at([10.0], [14.0])
        object.__setattr__(pa, "azimuths", np.array([0.4]))
        object.__setattr__(pb, "azimuths", np.array([-0.4]))
        az, _ = assign_angles(12.0, build_candidates(pa, pb, cfg), cfg)
        assert az == pytest.approx(0.0, abs=1e-12)


class TestMixLabels:
    def test_distinct_one_hots_average(self):
        out = mix_labels(ClassProbs(np.array([1.0, 0.0])), ClassProbs(np.array([0.0, 1.0])))
        assert np.array_equal(out.probs, [0.5, 0.5])

    def test_identical_one_hots_unchanged(self):
        out = mix_labels(ClassProbs(np.array([0.0, 1.0])), ClassProbs(np.array([0.0, 1.0])))
        assert np.array_equal(out.probs, [0.0, 1.0])

    def test_keypoints_midpoint(self):
        out = mix_labels(Keypoints(np.zeros((1, 3))), Keypoints(np.array([[2.0, 4.0, 0.0]])))
        assert np.array_equal(out.joints, [[1.0, 2.0, 0.0]])

    def test_variant_mismatch_rejected(self):
        with pytest.raises(DataError):
            mix_labels(Keypoints(np.zeros((1, 3))), ClassProbs(np.array([1.0])))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(DataError):
            mix_labels(ClassProbs(np.array([1.0])), ClassProbs(np.array([0.5, 0.5])))


class TestMixFrames:
    def test_self_mix_identity(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-1, 1, (7, 3)) + [0, 3, 0]
        frame = Frame("a", 1.5, pts, Keypoints(rng.uniform(0, 1, (4, 3))))
        out = mix_frames(frame, frame, MixConfig(jitter_sigma=0.0), np.random.default_rng(0))
        assert out.points.shape == pts.shape
        got = np.array(sorted(map(tuple, out.points)))
        want = np.array(sorted(map(tuple, pts)))
        assert np.abs(got - want).max() < 1e-9
        assert out.label == frame.label
        assert out.t == 1.5
        assert out.seq_id == "a#aug"

    def test_crossing_pick_lands_midway(self):
        # Bins 40 and 48 cross at 44, i.e. 1.65 m on the range axis. Seed 12
        # draws the crossing candidate (weight ~1.0003 of total ~3.0003).
        f0 = boresight_frame(1.5, t=0.0)
        f1 = boresight_frame(1.8, t=1.0)
        cfg = MixConfig(n_out=1, jitter_sigma=0.0, epsilon_height=1e-9)
        for seed in range(200):
            out = mix_frames(f0, f1, cfg, np.random.default_rng(seed))
            r = np.linalg.norm(out.points[0])
            if abs(r - 1.5) > 1e-6 and abs(r - 1.8) > 1e-6:
                assert r == pytest.approx(1.65, abs=0.0375 / 2)
                assert out.points[0][0] == pytest.approx(0.0, abs=1e-12)
                assert out.t == 0.5
                break
        else:
            pytest.fail("no seed drew the crossing candidate")

    def test_swap_symmetric(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            a = rng.uniform(-0.5, 0.5, (5, 3)) + [0, 2.5, 0]
            b = rng.uniform(-0.5, 0.5, (6, 3)) + [0, 2.7, 0]
            f0 = Frame("s", 0.0, a, Keypoints(rng.uniform(0, 1, (3, 3))))
            f1 = Frame("s", 1.0, b, Keypoints(rng.uniform(0, 1, (3, 3))))
            seed = int(rng.integers(0, 1 << 31))
            r0 = mix_frames(f0, f1, MixConfig(), np.random.default_rng(seed))
            r1 = mix_frames(f1, f0, MixConfig(), np.random.default_rng(seed))
            assert np.array_equal(r0.points, r1.points)
            assert r0.t == r1.t

    def test_empty_frame_rejected(self):
        f0 = boresight_frame([])
        f1 = boresight_frame(1.5)
        with pytest.raises(DataError):
            mix_frames(f0, f1, MixConfig(), np.random.default_rng(0))

    def test_output_count_is_mean_of_inputs(self):
        rng = np.random.default_rng(4)
        f0 = Frame("a", 0.0, rng.uniform(-0.5, 0.5, (8, 3)) + [0, 2.5, 0], kp_label())
        f1 = Frame("a", 1.0, rng.uniform(-0.5, 0.5, (13, 3)) + [0, 2.6, 0], kp_label())
        out = mix_frames(f0, f1, MixConfig(), np.random.default_rng(1))
        assert out.points.shape[0] == resolve_n_out(MixConfig(), 8, 13) == 11

    def test_outputs_stay_in_window(self):
        rng = np.random.default_rng(11)
        cfg = MixConfig(jitter_sigma=1.0)
        for _ in range(5):
            f0 = Frame("a", 0.0, rng.uniform(-1, 1, (6, 3)) + [0, 5, 0], kp_label())
            f1 = Frame("a", 1.0, rng.uniform(-1, 1, (6, 3)) + [0, 6, 0], kp_label())
            out = mix_frames(f0, f1, cfg, rng)
            ranges = np.linalg.norm(out.points, axis=1)
            assert (ranges < cfg.profile.max_range).all()

    def test_label_and_timestamp_mixing(self):
        f0 = boresight_frame(1.5, t=2.0, label=Keypoints(np.zeros((2, 3))))
        f1 = boresight_frame(1.6, t=4.0, label=Keypoints(np.ones((2, 3))))
        out = mix_frames(f0, f1, MixConfig(), np.random.default_rng(0))
        assert out.t == 3.0
        assert np.array_equal(out.label.joints, np.full((2, 3), 0.5))

    def test_doppler_intensity_mixing(self):
        # 5D frames carry doppler/intensity through mixing; a self-mix keeps
        # them verbatim.
        pts = np.array([[0.0, 1.5, 0.0, 0.25, 2.0], [0.0, 1.8, 0.0, -0.5, 1.0]])
        f = Frame("a", 0.0, pts, kp_label())
        out = mix_frames(f, f, MixConfig(jitter_sigma=0.0), np.random.default_rng(0))
        got = np.array(sorted(map(tuple, out.points)))
        assert np.abs(got - np.array(sorted(map(tuple, pts)))).max() < 1e-9

    def test_determinism(self):
        rng = np.random.default_rng(21)
        f0 = Frame("a", 0.0, rng.uniform(-0.5, 0.5, (6, 3)) + [0, 2.5, 0], kp_label())
        f1 = Frame("a", 1.0, rng.uniform(-0.5, 0.5, (6, 3)) + [0, 2.4, 0], kp_label())
        a = mix_frames(f0, f1, MixConfig(), np.random.default_rng(77))
        b = mix_frames(f0, f1, MixConfig(), np.random.default_rng(77))
        assert a == b

    def test_out_of_range_propagates(self):
        from wixup.errors import OutOfRangeError

        f0 = boresight_frame(25.0)  # beyond the 19.2 m window
        f1 = boresight_frame(1.5)
        with pytest.raises(OutOfRangeError):
            mix_frames(f0, f1, MixConfig(), np.random.default_rng(0))


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=30.0, max_value=470.0),
    st.floats(min_value=2.0, max_value=12.0),
)
def test_single_point_oracle_property(mu0, delta):
    # Location pinned by symmetry at the midpoint; height in closed form.
    mu1 = mu0 + delta
    if mu1 >= 500:
        mu1 = mu0 - delta
    pa, pb = profiles_at([mu0], [mu1])
    crossings = [c for c in find_intersections(pa, pb, eps=1e-30)]
    assert len(crossings) == 1
    assert crossings[0].bin == pytest.approx((mu0 + mu1) / 2, abs=0.05)
    assert crossings[0].height == pytest.approx(math.exp(-((delta / 2) ** 2) / 2), rel=0.05)
