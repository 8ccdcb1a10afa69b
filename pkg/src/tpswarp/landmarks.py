"""Landmark sets and the JSON interchange format they live in.

A landmark file is a JSON document:

    {
      "version": 1,
      "width": 512,
      "height": 512,
      "n_per_group": 10,
      "groups": [
        {"name": "left_eye", "points": [[x, y], ...]},
        ...
      ]
    }

Points are pixel coordinates with ``0 <= x < width`` and ``0 <= y < height``,
the origin at the top-left pixel center's corner, x growing rightward and y
growing downward.  Every group carries exactly ``n_per_group`` points and
group names are unique within a file.

Internally all geometry runs in normalized coordinates where both axes span
[-1, 1] and pixel centers sit at half-integer offsets, so pixel x maps to
``2 * (x + 0.5) / width - 1``.  :func:`normalize_points` and
:func:`denormalize_points` convert between the two spaces and are the single
source of that formula for the whole package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

FORMAT_VERSION = 1
DEFAULT_POINTS_PER_GROUP = 10


def _as_point_array(points, context: str) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{context}: expected an (n, 2) point array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{context}: points must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class LandmarkGroup:
    """A named group of 2-D pixel-space points."""

    name: str
    points: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("group name must be a non-empty string")
        arr = _as_point_array(self.points, f"group '{self.name}'")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """All landmark groups annotated on one image.

    Attributes
    ----------
    width, height : int
        Pixel dimensions of the image the landmarks belong to.
    n_per_group : int
        Number of points in every group.
    groups : tuple[LandmarkGroup, ...]
        The groups, in file order.  Order is significant: two sets are
        compatible only when their group names agree position by position.
    """

    width: int
    height: int
    n_per_group: int
    groups: tuple[LandmarkGroup, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.width, int) or not isinstance(self.height, int):
            raise ValueError("width and height must be integers")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")
        if not isinstance(self.n_per_group, int) or self.n_per_group < 1:
            raise ValueError(f"n_per_group must be a positive integer, got {self.n_per_group!r}")
        groups = tuple(self.groups)
        if not groups:
            raise ValueError("a landmark set needs at least one group")
        object.__setattr__(self, "groups", groups)
        seen: set[str] = set()
        for index, group in enumerate(groups):
            if not isinstance(group, LandmarkGroup):
                raise ValueError(f"groups[{index}] is not a LandmarkGroup")
            if group.name in seen:
                raise ValueError(f"duplicate group name '{group.name}'")
            seen.add(group.name)
            if len(group) != self.n_per_group:
                raise ValueError(
                    f"group '{group.name}' has {len(group)} points, expected {self.n_per_group}"
                )
            x = group.points[:, 0]
            y = group.points[:, 1]
            if np.any(x < 0.0) or np.any(x >= self.width) or np.any(y < 0.0) or np.any(y >= self.height):
                raise ValueError(
                    f"group '{group.name}' has points outside "
                    f"[0, {self.width}) x [0, {self.height})"
                )

    @property
    def group_names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.groups)

    def all_points(self) -> np.ndarray:
        """Concatenate every group into one (K * n_per_group, 2) array."""
        return np.concatenate([g.points for g in self.groups], axis=0)

    def compatible_with(self, other: "LandmarkSet") -> bool:
        """True when the two sets describe corresponding landmarks.

        Compatibility requires the same group names in the same order and the
        same number of points per group.  Image dimensions may differ.
        """
        return (
            isinstance(other, LandmarkSet)
            and self.n_per_group == other.n_per_group
            and self.group_names == other.group_names
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LandmarkSet):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.n_per_group == other.n_per_group
            and self.group_names == other.group_names
            and all(np.array_equal(a.points, b.points) for a, b in zip(self.groups, other.groups))
        )

    __hash__ = None


def _require_key(obj: dict, key: str, kind: type, context: str):
    if key not in obj:
        raise FormatError(f"{context}: missing required key '{key}'")
    value = obj[key]
    if kind is int and isinstance(value, bool):
        raise FormatError(f"{context}: key '{key}' must be an integer")
    if not isinstance(value, kind):
        raise FormatError(f"{context}: key '{key}' must be of type {kind.__name__}")
    return value


def load_landmarks(path) -> LandmarkSet:
    """Read and validate a landmark JSON file.

    Raises
    ------
    FormatError
        If the file is not valid JSON or any schema rule is violated.  The
        message names the offending group or index.
    OSError
        If the file cannot be opened.
    """
    with open(path, "rb") as handle:
        raw = handle.read()
    try:
        doc = json.loads(raw)
    except ValueError as exc:  # covers bad encodings as well as bad JSON
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top-level value must be an object")
    version = _require_key(doc, "version", int, str(path))
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}, expected {FORMAT_VERSION}")
    width = _require_key(doc, "width", int, str(path))
    height = _require_key(doc, "height", int, str(path))
    n_per_group = _require_key(doc, "n_per_group", int, str(path))
    raw_groups = _require_key(doc, "groups", list, str(path))
    groups = []
    for index, entry in enumerate(raw_groups):
        context = f"{path}: groups[{index}]"
        if not isinstance(entry, dict):
            raise FormatError(f"{context}: must be an object")
        name = _require_key(entry, "name", str, context)
        points = _require_key(entry, "points", list, context)
        for p_index, point in enumerate(points):
            if (
                not isinstance(point, list)
                or len(point) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in point)
            ):
                raise FormatError(f"{context} ('{name}'): points[{p_index}] must be a [x, y] number pair")
        try:
            groups.append(LandmarkGroup(name=name, points=np.asarray(points, dtype=np.float64).reshape(-1, 2)))
        except ValueError as exc:
            raise FormatError(f"{context}: {exc}") from exc
    try:
        return LandmarkSet(width=width, height=height, n_per_group=n_per_group, groups=tuple(groups))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_landmarks(landmarks: LandmarkSet, path) -> None:
    """Write a landmark set in the JSON interchange format."""
    doc = {
        "version": FORMAT_VERSION,
        "width": landmarks.width,
        "height": landmarks.height,
        "n_per_group": landmarks.n_per_group,
        "groups": [
            {"name": g.name, "points": [[float(x), float(y)] for x, y in g.points]}
            for g in landmarks.groups
        ],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def _normalize_axis(values: np.ndarray, size: int) -> np.ndarray:
    return 2.0 * (values + 0.5) / size - 1.0


def _denormalize_axis(values: np.ndarray, size: int) -> np.ndarray:
    return (values + 1.0) * 0.5 * size - 0.5


def normalize_points(points, width: int, height: int) -> np.ndarray:
    """Map pixel coordinates into the [-1, 1] x [-1, 1] square.

    Pixel centers land at half-integer fractions of the span, so pixel 0 of a
    width-4 axis maps to -0.75 and pixel 3 to 0.75.  Both image axes use the
    same formula: ``2 * (v + 0.5) / size - 1``.
    """
    if width < 1 or height < 1:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    arr = _as_point_array(points, "normalize_points")
    out = np.empty_like(arr)
    out[:, 0] = _normalize_axis(arr[:, 0], width)
    out[:, 1] = _normalize_axis(arr[:, 1], height)
    return out


def denormalize_points(points, width: int, height: int) -> np.ndarray:
    """Inverse of :func:`normalize_points`: back to pixel coordinates."""
    if width < 1 or height < 1:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    arr = _as_point_array(points, "denormalize_points")
    out = np.empty_like(arr)
    out[:, 0] = _denormalize_axis(arr[:, 0], width)
    out[:, 1] = _denormalize_axis(arr[:, 1], height)
    return out


def downscale_landmarks(landmarks: LandmarkSet, factor: int) -> LandmarkSet:
    """Rescale a landmark set to an image downsampled by an integer factor.

    The new image is ``(width // factor, height // factor)`` and each
    coordinate moves by ``v' = (v + 0.5) / factor - 0.5``, which keeps a
    point's position relative to pixel centers.  Coordinates that land
    marginally outside the smaller canvas (possible when the original
    dimensions are not divisible by the factor) are clamped back in.
    """
    if not isinstance(factor, int) or factor < 1:
        raise ValueError(f"downscale factor must be a positive integer, got {factor!r}")
    new_width = landmarks.width // factor
    new_height = landmarks.height // factor
    if new_width < 1 or new_height < 1:
        raise ValueError(
            f"factor {factor} collapses a {landmarks.width}x{landmarks.height} image to nothing"
        )
    x_max = math.nextafter(float(new_width), 0.0)
    y_max = math.nextafter(float(new_height), 0.0)
    groups = []
    for group in landmarks.groups:
        pts = (group.points + 0.5) / factor - 0.5
        pts[:, 0] = np.clip(pts[:, 0], 0.0, x_max)
        pts[:, 1] = np.clip(pts[:, 1], 0.0, y_max)
        groups.append(LandmarkGroup(name=group.name, points=pts))
    return LandmarkSet(
        width=new_width,
        height=new_height,
        n_per_group=landmarks.n_per_group,
        groups=tuple(groups),
    )
