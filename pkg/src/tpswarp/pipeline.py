"""End-to-end alignment: landmarks in, warped images and fields out.

``build_warp`` turns a pair of landmark sets into a dense field,
``align_style_to_portrait`` applies it to an image, and the multi-scale /
pairing helpers produce the structures a training loop consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .landmarks import LandmarkSet, downscale_landmarks, normalize_points
from .sampler import FeatureMap, warp_image
from .tps import solve_tps
from .warp_field import (
    DEFAULT_BLEND_EPSILON,
    WarpField,
    blend_group_fields,
    identity_field,
    rasterize_group_field,
)

WARP_MODES = ("global", "grouped")


@dataclass(frozen=True, eq=False)
class AlignedPair:
    """A source image and its warp onto a shared landmark frame.

    ``reference_image`` is the unwarped source view; ``warped_image`` is
    that image resampled so its landmarks coincide with
    ``shared_landmarks``.  ``source_landmarks`` is where those landmarks
    were before warping, and ``field`` is the map that got applied.
    """

    reference_image: FeatureMap
    warped_image: FeatureMap
    shared_landmarks: LandmarkSet
    source_landmarks: LandmarkSet
    field: WarpField

    def __post_init__(self) -> None:
        if (
            self.reference_image.height != self.warped_image.height
            or self.reference_image.width != self.warped_image.width
            or self.reference_image.channels != self.warped_image.channels
        ):
            raise ValueError("reference and warped images must share one shape")
        if not self.shared_landmarks.compatible_with(self.source_landmarks):
            raise ValueError("shared and source landmark sets are incompatible")
        if (
            self.field.height != self.warped_image.height
            or self.field.width != self.warped_image.width
        ):
            raise ValueError("field dimensions must match the warped image")


def build_warp(
    from_landmarks: LandmarkSet,
    to_landmarks: LandmarkSet,
    height: int,
    width: int,
    mode: str = "global",
    regularization: float | None = None,
    epsilon: float = DEFAULT_BLEND_EPSILON,
    threads: int = 1,
) -> WarpField:
    """Dense backward field moving ``from_landmarks`` onto ``to_landmarks``.

    The field is laid out on the target grid: at a target landmark the field
    points at the matching source landmark, so sampling through it pulls the
    source image into the target's layout.

    ``mode='global'`` solves one interpolation over all groups at once.
    ``mode='grouped'`` solves one transform per group and blends the
    rasterized fields by proximity to the target-side groups, which localizes
    each group's influence.

    Equal landmark sets short-circuit to an exact identity field.

    Raises
    ------
    ValueError
        If the sets are incompatible (different group structure).
    GeometryError
        If the landmark geometry cannot be solved.
    """
    if mode not in WARP_MODES:
        raise ValueError(f"mode must be one of {WARP_MODES}, got {mode!r}")
    if not from_landmarks.compatible_with(to_landmarks):
        raise ValueError(
            "landmark sets are incompatible: group names and sizes must match "
            f"({from_landmarks.group_names} vs {to_landmarks.group_names})"
        )
    if from_landmarks == to_landmarks:
        return identity_field(height, width)

    if mode == "global":
        source = normalize_points(
            from_landmarks.all_points(), from_landmarks.width, from_landmarks.height
        )
        target = normalize_points(
            to_landmarks.all_points(), to_landmarks.width, to_landmarks.height
        )
        transform = solve_tps(target, source, regularization=regularization)
        return rasterize_group_field(transform, height, width, threads=threads)

    fields = []
    for from_group, to_group in zip(from_landmarks.groups, to_landmarks.groups):
        source = normalize_points(
            from_group.points, from_landmarks.width, from_landmarks.height
        )
        target = normalize_points(to_group.points, to_landmarks.width, to_landmarks.height)
        transform = solve_tps(target, source, regularization=regularization)
        fields.append(rasterize_group_field(transform, height, width, threads=threads))
    return blend_group_fields(fields, to_landmarks, epsilon=epsilon)


def align_style_to_portrait(
    style_image: FeatureMap,
    style_landmarks: LandmarkSet,
    portrait_landmarks: LandmarkSet,
    mode: str = "global",
    border: str = "clamp",
    regularization: float | None = None,
    threads: int = 1,
) -> AlignedPair:
    """Warp a style image so its landmarks coincide with the portrait's.

    The two landmark sets must describe the same canvas size as the style
    image; the result carries the portrait set as its shared frame.
    Identical landmark sets reproduce the style image bit for bit.
    """
    if (
        style_image.height != style_landmarks.height
        or style_image.width != style_landmarks.width
    ):
        raise ValueError(
            f"style image is {style_image.height}x{style_image.width} but its "
            f"landmarks claim {style_landmarks.height}x{style_landmarks.width}"
        )
    if (
        portrait_landmarks.width != style_landmarks.width
        or portrait_landmarks.height != style_landmarks.height
    ):
        raise ValueError("portrait and style landmarks must describe one canvas size")
    field = build_warp(
        style_landmarks,
        portrait_landmarks,
        style_image.height,
        style_image.width,
        mode=mode,
        regularization=regularization,
        threads=threads,
    )
    warped = warp_image(style_image, field, border=border, threads=threads)
    return AlignedPair(
        reference_image=style_image,
        warped_image=warped,
        shared_landmarks=portrait_landmarks,
        source_landmarks=style_landmarks,
        field=field,
    )


def multiscale_fields(
    from_landmarks: LandmarkSet,
    to_landmarks: LandmarkSet,
    base_height: int,
    base_width: int,
    scales: int = 4,
    mode: str = "global",
    regularization: float | None = None,
    threads: int = 1,
) -> list[WarpField]:
    """The warp rebuilt at ``scales`` resolutions, finest first.

    Level s is solved from the landmark sets downscaled by ``2**s`` and
    rasterized at ``(base_height / 2**s, base_width / 2**s)``.  The base
    dimensions must be divisible by ``2**(scales - 1)``.
    """
    if scales < 1:
        raise ValueError(f"scales must be >= 1, got {scales}")
    divisor = 2 ** (scales - 1)
    if base_height % divisor or base_width % divisor:
        raise ValueError(
            f"{base_height}x{base_width} is not divisible by {divisor} "
            f"as {scales} scales require"
        )
    fields = []
    for level in range(scales):
        factor = 2**level
        fields.append(
            build_warp(
                downscale_landmarks(from_landmarks, factor),
                downscale_landmarks(to_landmarks, factor),
                base_height // factor,
                base_width // factor,
                mode=mode,
                regularization=regularization,
                threads=threads,
            )
        )
    return fields


def branch_pairings(
    portrait: FeatureMap,
    stylized: FeatureMap,
    stylized_warped: FeatureMap,
    portrait_warped: FeatureMap,
) -> list[tuple[FeatureMap, FeatureMap]]:
    """Pair each generated image with the reference living in its frame.

    Returns ``[(stylized, portrait), (stylized_warped, portrait_warped)]``:
    the stylized output is judged against the portrait it came from, and the
    warped stylization against the portrait pulled into the style layout.
    All four images must share one shape.
    """
    images = (portrait, stylized, stylized_warped, portrait_warped)
    shape = (portrait.channels, portrait.height, portrait.width)
    for image in images[1:]:
        if (image.channels, image.height, image.width) != shape:
            raise ValueError("all four images must share one shape")
    return [(stylized, portrait), (stylized_warped, portrait_warped)]
