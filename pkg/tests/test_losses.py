"""Loss-kernel tests: analytic values, loop oracles, and invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpswarp import (
    LossWeights,
    SimilarityMapSet,
    cycle_loss,
    embedding_cosine_distance,
    feature_matching_loss,
    gan_loss_discriminator,
    gan_loss_generator,
    interior_query_grid,
    spatial_correlative_loss,
    spatial_correlative_maps,
    total_loss,
)
from tpswarp.losses import DEFAULT_TAU, SCORE_FLOOR
from tpswarp.sampler import FeatureMap

scores = st.lists(st.floats(0.01, 0.99), min_size=1, max_size=12)


class TestLossWeights:
    def test_defaults_match_training_recipe(self):
        w = LossWeights()
        assert (w.lambda_feature, w.lambda_correlative, w.lambda_cycle) == (1.0, 1.0, 10.0)

    @pytest.mark.parametrize("bad", [-0.5, float("nan"), float("inf")])
    def test_rejects_bad_weight(self, bad):
        with pytest.raises(ValueError):
            LossWeights(lambda_cycle=bad)


class TestDiscriminatorLoss:
    def test_coin_flip_scores(self):
        loss = gan_loss_discriminator([0.5, 0.5], [0.5])
        assert math.isclose(loss, 2.0 * math.log(2.0), abs_tol=1e-12)

    def test_single_pair(self):
        loss = gan_loss_discriminator([0.9], [0.1])
        assert math.isclose(loss, -2.0 * math.log(0.9), abs_tol=1e-12)

    def test_perfect_scores_hit_the_clamp(self):
        loss = gan_loss_discriminator([1.0], [0.0])
        assert 0.0 < loss < 1e-6
        assert math.isclose(loss, -2.0 * math.log(1.0 - SCORE_FLOOR), rel_tol=1e-9)

    def test_out_of_range_scores_behave_like_clamped(self):
        assert gan_loss_discriminator([1.7], [-0.3]) == gan_loss_discriminator([1.0], [0.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="real_scores"):
            gan_loss_discriminator([], [0.5])
        with pytest.raises(ValueError, match="fake_scores"):
            gan_loss_discriminator([0.5], [])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            gan_loss_discriminator([float("nan")], [0.5])

    @settings(max_examples=40, deadline=None)
    @given(real=scores, fake=scores)
    def test_loop_oracle_and_positivity(self, real, fake):
        loss = gan_loss_discriminator(real, fake)
        expected = -(
            sum(math.log(r) for r in real) / len(real)
            + sum(math.log(1.0 - f) for f in fake) / len(fake)
        )
        assert math.isclose(loss, expected, rel_tol=1e-12, abs_tol=1e-12)
        assert loss > 0.0  # every log factor is < 1 once clamped


class TestGeneratorLoss:
    def test_minimax_at_half(self):
        assert math.isclose(gan_loss_generator([0.5], "minimax"), math.log(0.5), abs_tol=1e-12)

    def test_non_saturating_at_half(self):
        loss = gan_loss_generator([0.5], "non_saturating")
        assert math.isclose(loss, math.log(2.0), abs_tol=1e-12)

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            gan_loss_generator([0.5], "hinge")

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            gan_loss_generator([])

    @pytest.mark.parametrize("score", [0.3, 0.5, 0.7])
    def test_modes_agree_on_gradient_sign(self, score):
        # both variants reward raising the fake score, so their finite
        # differences must share a sign at any interior point
        h = 1e-6
        slopes = []
        for mode in ("minimax", "non_saturating"):
            lo = gan_loss_generator([score - h], mode)
            hi = gan_loss_generator([score + h], mode)
            slopes.append((hi - lo) / (2.0 * h))
        assert slopes[0] < 0.0 and slopes[1] < 0.0

    @settings(max_examples=40, deadline=None)
    @given(fake=scores)
    def test_loop_oracle(self, fake):
        minimax = sum(math.log(1.0 - f) for f in fake) / len(fake)
        non_sat = -sum(math.log(f) for f in fake) / len(fake)
        assert math.isclose(gan_loss_generator(fake, "minimax"), minimax, abs_tol=1e-12)
        assert math.isclose(gan_loss_generator(fake, "non_saturating"), non_sat, abs_tol=1e-12)


class TestFeatureMatching:
    def test_identical_is_zero(self):
        rng = np.random.default_rng(1)
        features = rng.standard_normal((4, 6, 5))
        assert feature_matching_loss(features, features) == 0.0

    def test_constant_offset_passes_through_mean(self):
        rng = np.random.default_rng(2)
        real = rng.standard_normal((3, 8, 8))
        assert math.isclose(feature_matching_loss(real, real + 0.25), 0.25, abs_tol=1e-12)
        assert math.isclose(feature_matching_loss(real, real - 0.25), 0.25, abs_tol=1e-12)

    def test_loop_oracle(self):
        rng = np.random.default_rng(3)
        real = rng.standard_normal((5, 7, 9))
        fake = rng.standard_normal((5, 7, 9))
        total = 0.0
        for c in range(5):
            mean_r = sum(real[c, i, j] for i in range(7) for j in range(9)) / 63.0
            mean_f = sum(fake[c, i, j] for i in range(7) for j in range(9)) / 63.0
            total += abs(mean_r - mean_f)
        assert math.isclose(feature_matching_loss(real, fake), total / 5.0, rel_tol=1e-10)

    def test_max_reduce(self):
        real = np.zeros((2, 3, 3))
        fake = np.zeros((2, 3, 3))
        fake[0, 1, 1] = 2.0
        assert math.isclose(feature_matching_loss(real, fake, reduce="max"), 1.0, abs_tol=1e-12)

    def test_accepts_feature_maps(self):
        rng = np.random.default_rng(4)
        a = FeatureMap(values=rng.random((2, 4, 4)))
        assert feature_matching_loss(a, a) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="differ"):
            feature_matching_loss(np.zeros((2, 4, 4)), np.zeros((2, 4, 5)))

    def test_unknown_reduce(self):
        with pytest.raises(ValueError, match="reduce"):
            feature_matching_loss(np.zeros((1, 2, 2)), np.zeros((1, 2, 2)), reduce="sum")

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_non_negative(self, seed):
        rng = np.random.default_rng(seed)
        real = rng.standard_normal((3, 4, 4))
        fake = rng.standard_normal((3, 4, 4))
        assert feature_matching_loss(real, fake) >= 0.0


class TestInteriorQueryGrid:
    def test_windows_fit(self):
        grid = interior_query_grid(16, 16, window_radius=4, count=256)
        assert grid
        for row, col in grid:
            assert 4 <= row <= 11 and 4 <= col <= 11

    def test_count_is_an_upper_bound(self):
        assert len(interior_query_grid(64, 64, window_radius=4, count=256)) <= 256

    def test_too_small_map(self):
        with pytest.raises(ValueError, match="does not fit"):
            interior_query_grid(8, 8, window_radius=4)


class TestSpatialCorrelativeMaps:
    def test_constant_features_give_all_ones(self):
        features = np.full((3, 8, 8), 0.7)
        maps = spatial_correlative_maps(features, [(4, 4)], window_radius=2)
        assert np.allclose(maps.maps, 1.0, atol=1e-12)

    def test_orthogonal_neighbors(self):
        # the query column carries channel 0, everything else channel 1
        features = np.zeros((2, 7, 7))
        features[1] = 1.0
        features[0, 3, 3] = 1.0
        features[1, 3, 3] = 0.0
        maps = spatial_correlative_maps(features, [(3, 3)], window_radius=1)
        expected = np.zeros(9)
        expected[4] = 1.0
        assert np.allclose(maps.maps[0], expected, atol=1e-12)

    def test_center_self_similarity(self):
        rng = np.random.default_rng(5)
        features = rng.standard_normal((6, 10, 10))
        maps = spatial_correlative_maps(features, [(4, 4), (5, 6)], window_radius=2)
        center = (2 * 2 + 1) ** 2 // 2
        assert np.allclose(maps.maps[:, center], 1.0, atol=1e-6)

    def test_loop_oracle(self):
        rng = np.random.default_rng(6)
        features = rng.standard_normal((8, 16, 16))
        locations = [(2, 2), (8, 7), (13, 13)]
        maps = spatial_correlative_maps(features, locations, window_radius=2)
        for q, (row, col) in enumerate(locations):
            k = 0
            for dr in range(-2, 3):
                for dc in range(-2, 3):
                    a = features[:, row, col]
                    b = features[:, row + dr, col + dc]
                    cos = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
                    assert math.isclose(maps.maps[q, k], cos, abs_tol=1e-6)
                    k += 1

    def test_zero_feature_vectors_map_to_zero(self):
        features = np.zeros((2, 5, 5))
        features[0, 2, 2] = 1.0  # query is the only non-zero column
        maps = spatial_correlative_maps(features, [(2, 2)], window_radius=1)
        expected = np.zeros(9)
        expected[4] = 1.0
        assert np.array_equal(maps.maps[0], expected)

    def test_zero_query_gives_zero_map(self):
        features = np.ones((2, 5, 5))
        features[:, 2, 2] = 0.0
        maps = spatial_correlative_maps(features, [(2, 2)], window_radius=1)
        assert np.count_nonzero(maps.maps) == 0

    def test_border_query_rejected(self):
        features = np.ones((1, 8, 8))
        with pytest.raises(ValueError, match="window"):
            spatial_correlative_maps(features, [(1, 4)], window_radius=2)

    def test_values_stay_in_unit_interval(self):
        rng = np.random.default_rng(7)
        features = rng.standard_normal((4, 12, 12)) * 100.0
        maps = spatial_correlative_maps(
            features, interior_query_grid(12, 12, 2, count=16), window_radius=2
        )
        assert np.all(maps.maps >= -1.0) and np.all(maps.maps <= 1.0)


def _direct_maps(vectors, radius=1):
    locs = tuple((0, i) for i in range(len(vectors)))
    return SimilarityMapSet(
        query_locations=locs, maps=np.asarray(vectors, dtype=np.float64), window_radius=radius
    )


class TestSpatialCorrelativeLoss:
    def test_orthogonal_closed_form(self):
        # three one-hot maps, positives identical: the softmax sees one
        # logit at 1/tau and two at 0
        maps = _direct_maps(np.eye(3, 9))
        loss = spatial_correlative_loss(maps, maps, tau=0.07)
        assert math.isclose(loss, math.log1p(2.0 * math.exp(-1.0 / 0.07)), abs_tol=1e-9)

    def test_uniform_logits(self):
        maps = _direct_maps(np.full((4, 9), 1.0 / 3.0))
        assert math.isclose(spatial_correlative_loss(maps, maps), math.log(4.0), abs_tol=1e-12)

    def test_loop_oracle(self):
        rng = np.random.default_rng(8)
        a = _direct_maps(np.clip(rng.standard_normal((5, 9)) / 3.0, -1.0, 1.0))
        b = _direct_maps(np.clip(rng.standard_normal((5, 9)) / 3.0, -1.0, 1.0))
        total = 0.0
        for q in range(5):
            logits = []
            for k in range(5):
                va, vb = a.maps[q], b.maps[k]
                cos = float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))
                logits.append(cos / DEFAULT_TAU)
            total += math.log(sum(math.exp(x) for x in logits)) - logits[q]
        assert math.isclose(spatial_correlative_loss(a, b), total / 5.0, rel_tol=1e-10)

    def test_matched_pair_beats_random_pair(self):
        # averaged over seeds, comparing an image with itself must score
        # below comparing it with an unrelated image
        self_losses, cross_losses = [], []
        queries = interior_query_grid(12, 12, 2, count=9)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x = rng.standard_normal((4, 12, 12))
            y = rng.standard_normal((4, 12, 12))
            maps_x = spatial_correlative_maps(x, queries, window_radius=2)
            maps_y = spatial_correlative_maps(y, queries, window_radius=2)
            self_losses.append(spatial_correlative_loss(maps_x, maps_x))
            cross_losses.append(spatial_correlative_loss(maps_x, maps_y))
        assert np.mean(self_losses) < np.mean(cross_losses)

    def test_feature_scale_invariance(self):
        rng = np.random.default_rng(9)
        features = rng.standard_normal((4, 10, 10))
        queries = interior_query_grid(10, 10, 2, count=9)
        base = spatial_correlative_maps(features, queries, window_radius=2)
        scaled = spatial_correlative_maps(features * 2.7, queries, window_radius=2)
        diff = abs(
            spatial_correlative_loss(base, base) - spatial_correlative_loss(scaled, scaled)
        )
        assert diff < 1e-6

    def test_large_inverse_tau_is_stable(self):
        maps = _direct_maps(np.eye(3, 9))
        loss = spatial_correlative_loss(maps, maps, tau=1e-4)
        assert math.isfinite(loss) and loss >= 0.0

    def test_mismatched_radius(self):
        a = _direct_maps(np.eye(2, 9), radius=1)
        b = SimilarityMapSet(
            query_locations=((0, 0), (0, 1)), maps=np.eye(2, 25), window_radius=2
        )
        with pytest.raises(ValueError, match="radii"):
            spatial_correlative_loss(a, b)

    def test_mismatched_locations(self):
        a = _direct_maps(np.eye(2, 9))
        b = SimilarityMapSet(
            query_locations=((5, 5), (5, 6)), maps=np.eye(2, 9), window_radius=1
        )
        with pytest.raises(ValueError, match="locations"):
            spatial_correlative_loss(a, b)

    def test_single_query_rejected(self):
        a = _direct_maps(np.ones((1, 9)) / 3.0)
        with pytest.raises(ValueError, match="2 queries"):
            spatial_correlative_loss(a, a)

    @pytest.mark.parametrize("tau", [0.0, -0.07, float("nan")])
    def test_bad_tau(self, tau):
        a = _direct_maps(np.eye(2, 9))
        with pytest.raises(ValueError, match="tau"):
            spatial_correlative_loss(a, a, tau=tau)


class TestCycleLoss:
    def test_identical_stacks(self):
        rng = np.random.default_rng(10)
        stack = [rng.standard_normal((3, 5, 5)) for _ in range(3)]
        assert cycle_loss(stack, [layer.copy() for layer in stack]) == 0.0

    def test_single_layer_offset(self):
        a = np.zeros((2, 4, 4))
        assert math.isclose(cycle_loss([a], [a + 0.5]), 0.5, abs_tol=1e-12)

    def test_two_layers_weighted(self):
        a = [np.zeros((1, 2, 2)), np.zeros((1, 2, 2))]
        b = [a[0] + 0.1, a[1] + 0.2]
        loss = cycle_loss(a, b, layer_weights=(1.0, 2.0))
        assert math.isclose(loss, 0.5, abs_tol=1e-12)

    def test_default_weights_are_unit(self):
        a = [np.zeros((1, 2, 2))] * 2
        b = [x + 1.0 for x in a]
        assert math.isclose(cycle_loss(a, b), 2.0, abs_tol=1e-12)

    def test_layer_count_mismatch(self):
        a = [np.zeros((1, 2, 2))]
        with pytest.raises(ValueError, match="counts"):
            cycle_loss(a, a * 2)

    def test_layer_shape_mismatch(self):
        with pytest.raises(ValueError, match="shapes"):
            cycle_loss([np.zeros((1, 2, 2))], [np.zeros((1, 2, 3))])

    def test_weight_count_mismatch(self):
        a = [np.zeros((1, 2, 2))]
        with pytest.raises(ValueError, match="weights"):
            cycle_loss(a, a, layer_weights=(1.0, 2.0))

    def test_negative_weight(self):
        a = [np.zeros((1, 2, 2))]
        with pytest.raises(ValueError, match="weights"):
            cycle_loss(a, a, layer_weights=(-1.0,))

    def test_empty_stack(self):
        with pytest.raises(ValueError, match="layer"):
            cycle_loss([], [])


class TestTotalLoss:
    def test_unit_components_default_weights(self):
        assert total_loss(1.0, 1.0, 1.0, 1.0) == 13.0

    def test_all_zero(self):
        assert total_loss(0.0, 0.0, 0.0, 0.0) == 0.0

    def test_mixed_components(self):
        loss = total_loss(0.5, 0.2, 0.3, 0.1, LossWeights(1.0, 1.0, 10.0))
        assert math.isclose(loss, 2.0, abs_tol=1e-12)

    def test_linear_in_each_weight(self):
        terms = (0.3, 0.7, 1.1, 0.2)
        for field, term in (
            ("lambda_feature", terms[1]),
            ("lambda_correlative", terms[2]),
            ("lambda_cycle", terms[3]),
        ):
            lo = total_loss(*terms, LossWeights(**{field: 1.0}))
            hi = total_loss(*terms, LossWeights(**{field: 3.0}))
            assert math.isclose((hi - lo) / 2.0, term, abs_tol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            total_loss(float("inf"), 0.0, 0.0, 0.0)


class TestEmbeddingCosineDistance:
    def test_identical_rows_are_exactly_zero(self):
        rng = np.random.default_rng(11)
        emb = rng.standard_normal((6, 32))
        assert embedding_cosine_distance(emb, emb.copy()) == 0.0

    def test_orthogonal_rows_are_exactly_one(self):
        a = np.array([[1.0, 0.0], [0.0, 2.0]])
        b = np.array([[0.0, 3.0], [4.0, 0.0]])
        assert embedding_cosine_distance(a, b) == 1.0

    def test_opposite_rows_are_exactly_two(self):
        rng = np.random.default_rng(12)
        emb = rng.standard_normal((5, 16))
        assert embedding_cosine_distance(emb, -emb) == 2.0

    def test_loop_oracle(self):
        rng = np.random.default_rng(13)
        a = rng.standard_normal((7, 9))
        b = rng.standard_normal((7, 9))
        total = 0.0
        for i in range(7):
            cos = a[i] @ b[i] / (np.linalg.norm(a[i]) * np.linalg.norm(b[i]))
            total += 1.0 - cos
        assert math.isclose(embedding_cosine_distance(a, b), total / 7.0, rel_tol=1e-12)

    def test_zero_vector_rejected(self):
        a = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValueError, match="zero"):
            embedding_cosine_distance(a, a)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="differ"):
            embedding_cosine_distance(np.ones((2, 3)), np.ones((2, 4)))

    def test_rank_checked(self):
        with pytest.raises(ValueError, match="2-D"):
            embedding_cosine_distance(np.ones(3), np.ones(3))

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            embedding_cosine_distance(np.empty((0, 4)), np.empty((0, 4)))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), count=st.integers(1, 6), dim=st.integers(1, 8))
    def test_range(self, seed, count, dim):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((count, dim)) + 0.1
        b = rng.standard_normal((count, dim)) + 0.1
        distance = embedding_cosine_distance(a, b)
        assert -1e-12 <= distance <= 2.0 + 1e-12
