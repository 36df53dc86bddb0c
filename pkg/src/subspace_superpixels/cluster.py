"""Affinity construction, normalized spectral clustering, region repair."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.cluster import KMeans

from . import _regions
from .errors import InvalidInputError

_DEGREE_FLOOR = 1e-12
_KMEANS_RESTARTS = 10


@dataclass(frozen=True)
class SuperpixelLabeling:
    labels: np.ndarray
    realized_k: int = None

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if labels.ndim != 2:
            raise InvalidInputError("superpixel labels must be a 2-D grid")
        k = int(labels.max()) + 1 if self.realized_k is None else int(self.realized_k)
        if labels.min() < 0 or labels.max() >= k:
            raise InvalidInputError("superpixel labels out of range")
        if np.bincount(labels.ravel(), minlength=k).min() == 0:
            raise InvalidInputError("superpixel labels are not dense")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "realized_k", k)

    @property
    def shape(self):
        return self.labels.shape


def affinity(z):
    """Symmetric affinity (|Z^T| + |Z|) / 2."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise InvalidInputError("Z must be square")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("Z must be finite")
    a = np.abs(z)
    return (a.T + a) / 2.0


def _dense_first_seen(labels):
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse]


def spectral_embedding(g, k):
    """Bottom-k eigenvectors of I - D^-1/2 G D^-1/2, rows scaled to unit norm."""
    n = g.shape[0]
    deg = np.maximum(g.sum(axis=1), _DEGREE_FLOOR)
    d_inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(n) - d_inv_sqrt[:, None] * g * d_inv_sqrt[None, :]
    _, vecs = scipy.linalg.eigh(lap, subset_by_index=[0, k - 1])
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return vecs / np.where(norms > 0, norms, 1.0)


def ncut(g, k, seed=0):
    """Partition graph nodes into ``k`` groups by normalized spectral clustering.

    Nodes with no edges cannot be placed by the embedding; each gets its
    own label and the remaining nodes share the other ``k - #isolated``
    labels (at least one). Labels are renumbered by first appearance.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidInputError("affinity must be square")
    if not np.allclose(g, g.T, rtol=0, atol=1e-12) or g.min() < 0:
        raise InvalidInputError("affinity must be symmetric and non-negative")
    n = g.shape[0]
    k = int(k)
    if k < 1 or k > n:
        raise InvalidInputError(f"k must lie in [1, {n}], got {k}")
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    if k == n:
        return np.arange(n, dtype=np.int64)

    isolated = g.sum(axis=1) <= 0
    labels = np.empty(n, dtype=np.int64)
    labels[isolated] = np.arange(isolated.sum())
    active = np.flatnonzero(~isolated)
    if active.size:
        k_active = min(max(1, k - int(isolated.sum())), active.size)
        if k_active == 1:
            sub = np.zeros(active.size, dtype=np.int64)
        elif k_active == active.size:
            sub = np.arange(active.size)
        else:
            emb = spectral_embedding(g[np.ix_(active, active)], k_active)
            km = KMeans(
                n_clusters=k_active,
                init="k-means++",
                n_init=_KMEANS_RESTARTS,
                random_state=seed,
            )
            sub = km.fit_predict(emb)
        labels[active] = sub + isolated.sum()
    return _dense_first_seen(labels)


def merge_isolated(unit_labels, units, x, k=None, min_size_ratio=0.1):
    """Lift unit clusters to pixels and absorb small or stray pieces.

    Each cluster is split into 4-connected components. Components smaller
    than ``min_size_ratio * H * W / k`` pixels join the adjacent component
    with the nearest feature vector. A component's feature vector is the
    pixel-weighted mean of its units' standardized columns, which equals
    the pixel-level average mapped through the same standardization.

    Parameters
    ----------
    unit_labels : (n,) int array
    units : UnitMap
    x : FeatureMatrix
    k : int, optional
        Requested superpixel count; defaults to the number of clusters.
    """
    unit_labels = np.asarray(unit_labels)
    if unit_labels.shape != (units.unit_count,):
        raise InvalidInputError("need one cluster label per unit")
    if x.n != units.unit_count:
        raise InvalidInputError("feature matrix does not match the unit map")
    if k is None:
        k = len(np.unique(unit_labels))
    pixel_labels = unit_labels[units.labels]
    comps, count = _regions.split_components(pixel_labels)

    counts = units.sizes() if x.counts is None else np.asarray(x.counts)
    unit_comp = np.empty(units.unit_count, dtype=np.int64)
    unit_comp[units.labels.ravel()] = comps.ravel()
    weight = np.bincount(unit_comp, weights=counts, minlength=count)
    feats = np.column_stack(
        [np.bincount(unit_comp, weights=counts * row, minlength=count) for row in x.data]
    ) / weight[:, None]

    h, w = units.shape
    merged = _regions.merge_small_regions(comps, count, feats, min_size_ratio * h * w / k)
    return SuperpixelLabeling(merged)
