"""Raw pixel units: K-means over-segmentation, unit features, adjacency."""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.cluster import KMeans

from . import _regions
from .errors import InvalidInputError

# ITU-R BT.601 luma weights
_GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])

COLOR_FEATURES = ("gray", "red", "green", "blue")
SPATIAL_FEATURES = ("x", "y")
EDGE_FEATURES = ("grad_x", "grad_y", "grad_magnitude", "grad_direction")
TEXTURE_FEATURES = ("local_std_mean", "local_std_var")

_KMEANS_ITERS = 10
_MIN_UNIT_FRACTION = 0.25
COMPACTNESS = 0.5


def _frozen(arr, dtype=None):
    arr = np.array(arr, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ImageBuffer:
    """An RGB image with channel values in [0, 1], shape (H, W, 3)."""

    rgb: np.ndarray

    def __post_init__(self):
        rgb = np.asarray(self.rgb, dtype=np.float64)
        if rgb.ndim == 2:
            rgb = np.repeat(rgb[:, :, None], 3, axis=2)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise InvalidInputError(f"expected an (H, W, 3) image, got {rgb.shape}")
        if rgb.shape[0] < 1 or rgb.shape[1] < 1:
            raise InvalidInputError("image must have at least one pixel")
        if not np.all(np.isfinite(rgb)) or rgb.min() < 0.0 or rgb.max() > 1.0:
            raise InvalidInputError("channel values must be finite and in [0, 1]")
        object.__setattr__(self, "rgb", _frozen(rgb))

    @property
    def height(self):
        return self.rgb.shape[0]

    @property
    def width(self):
        return self.rgb.shape[1]

    @property
    def gray(self):
        return self.rgb @ _GRAY_WEIGHTS


@dataclass(frozen=True)
class UnitMap:
    """Assignment of every pixel to one of ``unit_count`` raw units."""

    labels: np.ndarray
    unit_count: int = field(default=None)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or not np.issubdtype(labels.dtype, np.integer):
            raise InvalidInputError("unit labels must be a 2-D integer grid")
        n = int(labels.max()) + 1 if self.unit_count is None else int(self.unit_count)
        if labels.min() < 0 or labels.max() >= n:
            raise InvalidInputError("unit labels out of range")
        if np.bincount(labels.ravel(), minlength=n).min() == 0:
            raise InvalidInputError("unit labels are not dense")
        object.__setattr__(self, "labels", _frozen(labels, np.int64))
        object.__setattr__(self, "unit_count", n)

    @property
    def shape(self):
        return self.labels.shape

    def sizes(self):
        return np.bincount(self.labels.ravel(), minlength=self.unit_count)

    def centroids(self):
        """(n, 2) array of mean (y, x) pixel coordinates per unit."""
        h, w = self.labels.shape
        yy, xx = np.mgrid[0:h, 0:w]
        flat = self.labels.ravel()
        sizes = self.sizes()
        cy = np.bincount(flat, weights=yy.ravel(), minlength=self.unit_count) / sizes
        cx = np.bincount(flat, weights=xx.ravel(), minlength=self.unit_count) / sizes
        return np.column_stack([cy, cx])

    def is_connected(self):
        _, count = _regions.split_components(self.labels)
        return count == self.unit_count


@dataclass(frozen=True)
class FeatureMatrix:
    """Standardized d-by-n unit features plus what produced them.

    ``raw`` keeps the per-unit averages before z-scoring, ``offset`` and
    ``scale`` the per-row standardization (scale 0 marks a constant row),
    and ``counts`` the pixel count of each unit.
    """

    data: np.ndarray
    feature_names: tuple
    raw: np.ndarray = None
    offset: np.ndarray = None
    scale: np.ndarray = None
    counts: np.ndarray = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != len(self.feature_names):
            raise InvalidInputError("feature data must be d-by-n with d names")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("feature data must be finite")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        for name in ("raw", "offset", "scale", "counts"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen(value))

    @property
    def n(self):
        return self.data.shape[1]

    @classmethod
    def from_array(cls, data, names=None):
        """Wrap a bare d-by-n array (no standardization applied)."""
        data = np.asarray(data, dtype=np.float64)
        if names is None:
            names = tuple(f"f{i}" for i in range(data.shape[0]))
        return cls(data=data, feature_names=names)


def _grid_seeds(h, w, n):
    """Exactly n seed positions (y, x) laid out on a near-regular grid."""
    rows = max(1, min(h, round(math.sqrt(n * h / w))))
    rows = max(rows, math.ceil(n / w))
    per_row = [n // rows + (1 if i < n % rows else 0) for i in range(rows)]
    seeds = []
    for i, c in enumerate(per_row):
        y = (i + 0.5) * h / rows - 0.5
        for j in range(c):
            seeds.append((y, (j + 0.5) * w / c - 0.5))
    return np.array(seeds)


def oversegment(image, n_requested, seed=0, compactness=COMPACTNESS):
    """Split an image into roughly ``n_requested`` connected raw units.

    Pixels are clustered with K-means on (R, G, B, s*x, s*y), where
    s = sqrt(n / (H*W)) makes one seed spacing worth about one unit of
    color distance. Seeds start on a regular grid. Clusters are then
    split into 4-connected pieces, and pieces smaller than a quarter of
    the nominal unit area are folded into the adjacent unit of closest
    mean color. Units are numbered in raster order of their centroids.
    """
    h, w = image.height, image.width
    if h < 2 or w < 2:
        raise InvalidInputError("image must be at least 2x2 pixels")
    n_requested = int(n_requested)
    if n_requested < 1 or n_requested > h * w:
        raise InvalidInputError(
            f"n_requested must lie in [1, {h * w}], got {n_requested}"
        )

    s = compactness * math.sqrt(n_requested / (h * w))
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    points = np.column_stack(
        [image.rgb.reshape(-1, 3), (xx * s).ravel(), (yy * s).ravel()]
    )

    seeds = _grid_seeds(h, w, n_requested)
    iy = np.clip(np.rint(seeds[:, 0]).astype(int), 0, h - 1)
    ix = np.clip(np.rint(seeds[:, 1]).astype(int), 0, w - 1)
    init = np.column_stack([image.rgb[iy, ix], seeds[:, 1] * s, seeds[:, 0] * s])

    if n_requested == 1:
        assignment = np.zeros(h * w, dtype=np.int64)
    else:
        km = KMeans(
            n_clusters=n_requested,
            init=init,
            n_init=1,
            max_iter=_KMEANS_ITERS,
            random_state=seed,
            algorithm="lloyd",
        )
        assignment = km.fit_predict(points)

    comps, count = _regions.split_components(assignment.reshape(h, w))
    sizes = np.bincount(comps.ravel(), minlength=count)
    mean_rgb = np.column_stack(
        [np.bincount(comps.ravel(), weights=image.rgb[..., c].ravel()) for c in range(3)]
    ) / sizes[:, None]
    min_size = _MIN_UNIT_FRACTION * h * w / n_requested
    merged = _regions.merge_small_regions(comps, count, mean_rgb, min_size)

    provisional = UnitMap(merged)
    order = _centroid_order(provisional)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return UnitMap(rank[provisional.labels], provisional.unit_count)


def _centroid_order(units):
    """Raster order of the pixel holding each centroid; exact values break ties."""
    c = units.centroids()
    pix = np.floor(c + 0.5)
    return np.lexsort((c[:, 1], c[:, 0], pix[:, 1], pix[:, 0]))


def _unit_means(values, units):
    flat = units.labels.ravel()
    sums = np.bincount(flat, weights=values.ravel(), minlength=units.unit_count)
    return sums / units.sizes()


def _gradients(gray):
    padded = np.pad(gray, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy


def _local_std(gray):
    windows = sliding_window_view(np.pad(gray, 1, mode="edge"), (3, 3))
    return windows.std(axis=(2, 3))


def standardize_rows(raw):
    """Z-score each row; rows with no spread map to zero.

    Returns (standardized, offset, scale) with scale 0 for constant rows.
    """
    offset = raw.mean(axis=1)
    centered = raw - offset[:, None]
    std = np.sqrt((centered**2).mean(axis=1))
    tiny = 1e-12 * np.maximum(1.0, np.abs(raw).max(axis=1))
    constant = std <= tiny
    scale = np.where(constant, 0.0, std)
    out = np.zeros_like(raw)
    out[~constant] = centered[~constant] / std[~constant, None]
    return out, offset, scale


def extract_features(image, units, color=True, spatial=True, edge=True, texture=True):
    """Average per-unit descriptors into a standardized feature matrix.

    Rows come in a fixed order: color (gray, R, G, B), spatial (mean x,
    mean y), edge (mean x/y gradient, magnitude and direction of central
    differences on gray), texture (mean and variance of 3x3 local gray
    standard deviation). Disabled groups are left out.
    """
    if units.shape != (image.height, image.width):
        raise InvalidInputError(
            f"unit map {units.shape} does not match image "
            f"{(image.height, image.width)}"
        )
    if not (color or spatial or edge or texture):
        raise InvalidInputError("at least one feature group must be enabled")

    gray = image.gray
    names = []
    rows = []
    if color:
        names += COLOR_FEATURES
        rows += [_unit_means(gray, units)]
        rows += [_unit_means(image.rgb[..., c], units) for c in range(3)]
    if spatial:
        yy, xx = np.mgrid[0 : image.height, 0 : image.width].astype(np.float64)
        names += SPATIAL_FEATURES
        rows += [_unit_means(xx, units), _unit_means(yy, units)]
    if edge:
        gx, gy = _gradients(gray)
        names += EDGE_FEATURES
        rows += [
            _unit_means(gx, units),
            _unit_means(gy, units),
            _unit_means(np.hypot(gx, gy), units),
            _unit_means(np.arctan2(gy, gx), units),
        ]
    if texture:
        local = _local_std(gray)
        mean = _unit_means(local, units)
        var = _unit_means(local**2, units) - mean**2
        names += TEXTURE_FEATURES
        rows += [mean, np.maximum(var, 0.0)]

    raw = np.vstack(rows)
    data, offset, scale = standardize_rows(raw)
    return FeatureMatrix(
        data=data,
        feature_names=tuple(names),
        raw=raw,
        offset=offset,
        scale=scale,
        counts=units.sizes(),
    )


def unit_adjacency(units):
    """Binary symmetric matrix of units sharing a 4-adjacent pixel pair."""
    return _regions.adjacency_matrix(units.labels, units.unit_count)
