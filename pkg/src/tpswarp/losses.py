"""Numerical kernels for the alignment training objectives.

Every function here is a pure computation on arrays: scores, feature maps,
or embeddings in, a float out.  Nothing touches a network or an optimizer,
so each term can be tested against a slow reference implementation in
isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampler import FeatureMap

# Probabilities are clamped into [SCORE_FLOOR, 1 - SCORE_FLOOR] before any
# log, so a saturated discriminator cannot produce infinities.
SCORE_FLOOR = 1e-7

DEFAULT_TAU = 0.07
DEFAULT_WINDOW_RADIUS = 4
GENERATOR_MODES = ("minimax", "non_saturating")
FEATURE_REDUCES = ("mean", "max")


@dataclass(frozen=True)
class LossWeights:
    """Blend weights for the total objective."""

    lambda_feature: float = 1.0
    lambda_correlative: float = 1.0
    lambda_cycle: float = 10.0

    def __post_init__(self) -> None:
        for name in ("lambda_feature", "lambda_correlative", "lambda_cycle"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True, eq=False)
class SimilarityMapSet:
    """Cosine-similarity vectors around a set of query locations.

    ``maps[q]`` holds the similarities between the feature vector at query q
    and every position of its (2r+1) x (2r+1) window, row-major, so the
    window center sits at index ``(len - 1) // 2``.
    """

    query_locations: tuple[tuple[int, int], ...]
    maps: np.ndarray
    window_radius: int

    def __post_init__(self) -> None:
        locations = tuple((int(r), int(c)) for r, c in self.query_locations)
        object.__setattr__(self, "query_locations", locations)
        if not isinstance(self.window_radius, int) or self.window_radius < 1:
            raise ValueError(f"window_radius must be a positive integer, got {self.window_radius!r}")
        side = 2 * self.window_radius + 1
        arr = np.asarray(self.maps, dtype=np.float64)
        if arr.ndim != 2 or arr.shape != (len(locations), side * side):
            raise ValueError(
                f"maps must have shape ({len(locations)}, {side * side}), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("similarity values must be finite")
        if np.any(arr < -1.0) or np.any(arr > 1.0):
            raise ValueError("similarity values must lie in [-1, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "maps", arr)

    @property
    def query_count(self) -> int:
        return len(self.query_locations)


def _scores_1d(scores, name: str) -> np.ndarray:
    arr = np.asarray(scores, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return np.clip(arr, SCORE_FLOOR, 1.0 - SCORE_FLOOR)


def gan_loss_discriminator(real_scores, fake_scores) -> float:
    """Negative log-likelihood of a discriminator labelling real as 1, fake as 0.

    ``-(mean(log(real)) + mean(log(1 - fake)))`` with scores clamped away
    from 0 and 1.
    """
    real = _scores_1d(real_scores, "real_scores")
    fake = _scores_1d(fake_scores, "fake_scores")
    return float(-(np.mean(np.log(real)) + np.mean(np.log(1.0 - fake))))


def gan_loss_generator(fake_scores, mode: str = "minimax") -> float:
    """Generator-side adversarial term.

    ``minimax`` returns ``mean(log(1 - fake))`` (the generator minimizes it);
    ``non_saturating`` returns ``-mean(log(fake))``, the variant with usable
    gradients when the discriminator is confident.
    """
    if mode not in GENERATOR_MODES:
        raise ValueError(f"mode must be one of {GENERATOR_MODES}, got {mode!r}")
    fake = _scores_1d(fake_scores, "fake_scores")
    if mode == "minimax":
        return float(np.mean(np.log(1.0 - fake)))
    return float(-np.mean(np.log(fake)))


def _as_values(features) -> np.ndarray:
    if isinstance(features, FeatureMap):
        return features.values
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"expected a (channels, height, width) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature values must be finite")
    return arr


def feature_matching_loss(real_features, fake_features, reduce: str = "mean") -> float:
    """Distance between per-channel statistics of two feature stacks.

    Each (channels, height, width) stack collapses to one value per channel,
    using the spatial mean or the spatial max, and the result is the mean
    absolute difference between the two channel vectors.
    """
    if reduce not in FEATURE_REDUCES:
        raise ValueError(f"reduce must be one of {FEATURE_REDUCES}, got {reduce!r}")
    real = _as_values(real_features)
    fake = _as_values(fake_features)
    if real.shape != fake.shape:
        raise ValueError(f"feature shapes differ: {real.shape} vs {fake.shape}")
    if reduce == "mean":
        real_stat = real.mean(axis=(1, 2))
        fake_stat = fake.mean(axis=(1, 2))
    else:
        real_stat = real.max(axis=(1, 2))
        fake_stat = fake.max(axis=(1, 2))
    return float(np.mean(np.abs(real_stat - fake_stat)))


def interior_query_grid(
    height: int, width: int, window_radius: int = DEFAULT_WINDOW_RADIUS, count: int = 256
) -> tuple[tuple[int, int], ...]:
    """Evenly spaced query locations whose windows stay inside the map."""
    if window_radius < 1:
        raise ValueError(f"window_radius must be >= 1, got {window_radius}")
    lo_r, hi_r = window_radius, height - 1 - window_radius
    lo_c, hi_c = window_radius, width - 1 - window_radius
    if hi_r < lo_r or hi_c < lo_c:
        raise ValueError(
            f"a radius-{window_radius} window does not fit inside {height}x{width}"
        )
    side = max(1, int(math.isqrt(count)))
    rows = np.unique(np.linspace(lo_r, hi_r, side).round().astype(int))
    cols = np.unique(np.linspace(lo_c, hi_c, side).round().astype(int))
    return tuple((int(r), int(c)) for r in rows for c in cols)


def spatial_correlative_maps(
    features, query_locations, window_radius: int = DEFAULT_WINDOW_RADIUS
) -> SimilarityMapSet:
    """Cosine similarities between query feature vectors and their windows.

    For each query location the channel vector there is compared against the
    channel vector at every position of the surrounding
    (2r+1) x (2r+1) window.  Windows must lie fully inside the map.  A zero
    feature vector on either side of a comparison yields similarity 0.
    """
    arr = _as_values(features)
    channels, height, width = arr.shape
    if window_radius < 1:
        raise ValueError(f"window_radius must be >= 1, got {window_radius}")
    locations = tuple((int(r), int(c)) for r, c in query_locations)
    if not locations:
        raise ValueError("need at least one query location")
    side = 2 * window_radius + 1
    maps = np.empty((len(locations), side * side), dtype=np.float64)
    flat = arr.reshape(channels, -1)
    norms = np.sqrt(np.einsum("cp,cp->p", flat, flat)).reshape(height, width)
    for q, (row, col) in enumerate(locations):
        if not (
            window_radius <= row < height - window_radius
            and window_radius <= col < width - window_radius
        ):
            raise ValueError(
                f"query ({row}, {col}) has a radius-{window_radius} window "
                f"leaving the {height}x{width} map"
            )
        query_vec = arr[:, row, col]
        window = arr[
            :, row - window_radius : row + window_radius + 1, col - window_radius : col + window_radius + 1
        ].reshape(channels, -1)
        denom = norms[row, col] * norms[
            row - window_radius : row + window_radius + 1,
            col - window_radius : col + window_radius + 1,
        ].reshape(-1)
        dots = query_vec @ window
        sims = np.where(denom > 0.0, dots / np.where(denom > 0.0, denom, 1.0), 0.0)
        maps[q] = np.clip(sims, -1.0, 1.0)
    return SimilarityMapSet(query_locations=locations, maps=maps, window_radius=window_radius)


def spatial_correlative_loss(
    maps_a: SimilarityMapSet, maps_b: SimilarityMapSet, tau: float = DEFAULT_TAU
) -> float:
    """Contrastive alignment of two similarity-map sets.

    Map q of set a should match map q of set b (the positive) better than
    the maps at every other query location (the negatives).  Each map pair
    is compared by cosine similarity; the per-query cross-entropy uses a
    softmax over the positive and the Q - 1 negatives at temperature tau,
    and the result is the mean over queries.
    """
    tau = float(tau)
    if not (math.isfinite(tau) and tau > 0.0):
        raise ValueError(f"tau must be a positive number, got {tau!r}")
    if maps_a.window_radius != maps_b.window_radius:
        raise ValueError("similarity sets use different window radii")
    if maps_a.query_locations != maps_b.query_locations:
        raise ValueError("similarity sets cover different query locations")
    q_count = maps_a.query_count
    if q_count < 2:
        raise ValueError(f"need at least 2 queries for a contrastive loss, got {q_count}")

    a = maps_a.maps
    b = maps_b.maps
    dots = a @ b.T
    na = np.sqrt(np.einsum("qk,qk->q", a, a))
    nb = np.sqrt(np.einsum("qk,qk->q", b, b))
    denom = na[:, None] * nb[None, :]
    sims = np.where(denom > 0.0, dots / np.where(denom > 0.0, denom, 1.0), 0.0)
    logits = sims / tau
    peak = logits.max(axis=1)
    log_norm = peak + np.log(np.exp(logits - peak[:, None]).sum(axis=1))
    positives = np.diagonal(logits)
    return float(np.mean(log_norm - positives))


def cycle_loss(layers_a, layers_b, layer_weights=None) -> float:
    """Weighted mean absolute difference across a list of feature layers.

    ``sum_l weight_l * mean(|a_l - b_l|)`` with unit weights by default.
    """
    values_a = [_as_values(x) for x in layers_a]
    values_b = [_as_values(x) for x in layers_b]
    if len(values_a) != len(values_b):
        raise ValueError(f"layer counts differ: {len(values_a)} vs {len(values_b)}")
    if not values_a:
        raise ValueError("need at least one layer")
    if layer_weights is None:
        weights = [1.0] * len(values_a)
    else:
        weights = [float(w) for w in layer_weights]
        if len(weights) != len(values_a):
            raise ValueError(
                f"got {len(weights)} layer weights for {len(values_a)} layers"
            )
        if any(not math.isfinite(w) or w < 0.0 for w in weights):
            raise ValueError("layer weights must be finite and >= 0")
    total = 0.0
    for weight, a, b in zip(weights, values_a, values_b):
        if a.shape != b.shape:
            raise ValueError(f"layer shapes differ: {a.shape} vs {b.shape}")
        total += weight * float(np.mean(np.abs(a - b)))
    return total


def total_loss(
    gan_term: float,
    feature_term: float,
    correlative_term: float,
    cycle_term: float,
    weights: LossWeights = LossWeights(),
) -> float:
    """Combine the four loss terms with the configured weights."""
    terms = (gan_term, feature_term, correlative_term, cycle_term)
    for value in terms:
        if not math.isfinite(value):
            raise ValueError(f"loss terms must be finite, got {terms}")
    return float(
        gan_term
        + weights.lambda_feature * feature_term
        + weights.lambda_correlative * correlative_term
        + weights.lambda_cycle * cycle_term
    )


def embedding_cosine_distance(embeddings_a, embeddings_b) -> float:
    """Mean cosine distance ``mean(1 - cos(a_i, b_i))`` between paired rows.

    Identical rows contribute exactly 0, orthogonal rows exactly 1, and
    opposite rows exactly 2.
    """
    a = np.asarray(embeddings_a, dtype=np.float64)
    b = np.asarray(embeddings_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"embeddings must be 2-D (rows, dim), got {a.shape} and {b.shape}")
    if a.shape != b.shape:
        raise ValueError(f"embedding shapes differ: {a.shape} vs {b.shape}")
    if a.shape[0] == 0:
        raise ValueError("need at least one embedding pair")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("embeddings must be finite")
    na = np.einsum("nd,nd->n", a, a)
    nb = np.einsum("nd,nd->n", b, b)
    if np.any(na == 0.0) or np.any(nb == 0.0):
        raise ValueError("embeddings must not contain zero vectors")
    cos = np.einsum("nd,nd->n", a, b) / np.sqrt(na * nb)
    return float(np.mean(1.0 - cos))
