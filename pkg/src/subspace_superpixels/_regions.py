"""Label-grid helpers shared by unit generation and superpixel repair."""

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components


def _neighbor_pairs(labels):
    """Label pairs across every horizontal and vertical pixel edge."""
    a = np.concatenate([labels[:, :-1].ravel(), labels[:-1, :].ravel()])
    b = np.concatenate([labels[:, 1:].ravel(), labels[1:, :].ravel()])
    return a, b


def split_components(labels):
    """Split every label into its 4-connected components.

    Returns a dense component grid and the count. Components are numbered
    by the raster position of their first pixel.
    """
    h, w = labels.shape
    idx = np.arange(h * w).reshape(h, w)
    src = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    dst = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    la, lb = _neighbor_pairs(labels)
    same = la == lb
    graph = sparse.coo_matrix(
        (np.ones(same.sum(), dtype=np.int8), (src[same], dst[same])),
        shape=(h * w, h * w),
    )
    count, comp = connected_components(graph, directed=False)
    return relabel_raster(comp.reshape(h, w)), count


def relabel_raster(labels):
    """Renumber labels densely by the raster position of their first pixel."""
    flat = labels.ravel()
    _, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse].reshape(labels.shape)


def adjacency_matrix(labels, n):
    """Binary n-by-n matrix marking labels that share a 4-neighbor edge."""
    a, b = _neighbor_pairs(labels)
    diff = a != b
    omega = np.zeros((n, n), dtype=np.int64)
    omega[a[diff], b[diff]] = 1
    omega[b[diff], a[diff]] = 1
    return omega


def merge_small_regions(regions, count, features, min_size):
    """Greedily absorb regions below ``min_size`` pixels into a neighbor.

    Regions are visited from the smallest up. A region still below the
    threshold joins the adjacent region whose feature vector (pixel-weighted
    mean, updated as regions merge) is closest in Euclidean distance; ties
    go to the lower index. Since every merge joins two adjacent connected
    regions, the output regions stay connected.

    Parameters
    ----------
    regions : (H, W) int array of dense region indices in [0, count)
    count : int
    features : (count, f) array, one feature row per region
    min_size : float

    Returns
    -------
    (H, W) int array relabelled densely in raster order.
    """
    sizes = np.bincount(regions.ravel(), minlength=count).astype(np.float64)
    if count <= 1 or sizes.min() >= min_size:
        return relabel_raster(regions)

    feats = np.array(features, dtype=np.float64, copy=True)
    omega = adjacency_matrix(regions, count)
    neighbors = [set(np.flatnonzero(row)) for row in omega]
    parent = np.arange(count)

    order = np.lexsort((np.arange(count), sizes))
    for r in order:
        if parent[r] != r or sizes[r] >= min_size or not neighbors[r]:
            continue
        cand = sorted(neighbors[r])
        dist = np.linalg.norm(feats[cand] - feats[r], axis=1)
        target = cand[int(np.argmin(dist))]
        total = sizes[r] + sizes[target]
        feats[target] = (sizes[target] * feats[target] + sizes[r] * feats[r]) / total
        sizes[target] = total
        parent[r] = target
        for nb in neighbors[r]:
            neighbors[nb].discard(r)
            if nb != target:
                neighbors[nb].add(target)
                neighbors[target].add(nb)
        neighbors[target].discard(r)
        neighbors[r] = set()

    root = parent.copy()
    for i in range(count):
        j = i
        while root[j] != j:
            j = root[j]
        root[i] = j
    return relabel_raster(root[regions])
