"""Superpixel quality metrics: ASA, USE and boundary recall."""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter

from .errors import InvalidInputError

USE_DEFINITION = "leakage: sum_s (|s| - max_g |s & g|) / N, i.e. 1 - ASA"


class NoBoundaryWarning(UserWarning):
    """Ground truth has a single segment, so boundary recall is vacuous."""


@dataclass(frozen=True)
class GroundTruth:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or not np.issubdtype(labels.dtype, np.integer):
            raise InvalidInputError("ground truth must be a 2-D integer grid")
        _, dense = np.unique(labels, return_inverse=True)
        dense = dense.reshape(labels.shape).astype(np.int64)
        dense.setflags(write=False)
        object.__setattr__(self, "labels", dense)


@dataclass
class MetricReport:
    asa: float
    br: float
    use: float
    boundary_tolerance: int
    n_ground_truths: int = 1
    use_definition: str = USE_DEFINITION
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {
            "asa": self.asa,
            "br": self.br,
            "use": self.use,
            "boundary_tolerance": self.boundary_tolerance,
            "n_ground_truths": self.n_ground_truths,
            "use_definition": self.use_definition,
            "flags": list(self.flags),
        }


def _grid(obj):
    return np.asarray(getattr(obj, "labels", obj))


def _pair(sp, gt):
    s, g = _grid(sp), _grid(gt)
    if s.shape != g.shape:
        raise InvalidInputError(f"labeling {s.shape} and ground truth {g.shape} differ")
    return s, g


def _best_overlap(s, g):
    """Total pixels covered by each superpixel's largest ground-truth overlap."""
    _, s_idx = np.unique(s, return_inverse=True)
    _, g_idx = np.unique(g, return_inverse=True)
    n_s, n_g = s_idx.max() + 1, g_idx.max() + 1
    table = np.bincount(s_idx.ravel() * n_g + g_idx.ravel(), minlength=n_s * n_g)
    return int(table.reshape(n_s, n_g).max(axis=1).sum())


def asa(sp, gt):
    """Achievable segmentation accuracy."""
    s, g = _pair(sp, gt)
    return _best_overlap(s, g) / s.size


def use(sp, gt):
    """Under-segmentation error in the leakage form (complement of ASA)."""
    s, g = _pair(sp, gt)
    return (s.size - _best_overlap(s, g)) / s.size


def boundary_map(labels):
    """Pixels with at least one 4-neighbor carrying a different label."""
    labels = _grid(labels)
    out = np.zeros(labels.shape, dtype=bool)
    dv = labels[1:, :] != labels[:-1, :]
    dh = labels[:, 1:] != labels[:, :-1]
    out[1:, :] |= dv
    out[:-1, :] |= dv
    out[:, 1:] |= dh
    out[:, :-1] |= dh
    return out


def br(sp, gt, tolerance=2):
    """Fraction of ground-truth boundary pixels within ``tolerance`` of a
    superpixel boundary pixel (Chebyshev distance).

    A ground truth without any boundary scores 1.0 and raises
    :class:`NoBoundaryWarning`.
    """
    s, g = _pair(sp, gt)
    tolerance = int(tolerance)
    if tolerance < 0:
        raise InvalidInputError("tolerance must be non-negative")
    gt_edges = boundary_map(g)
    if not gt_edges.any():
        warnings.warn("ground truth has no boundary; recall set to 1", NoBoundaryWarning)
        return 1.0
    sp_edges = boundary_map(s).astype(np.uint8)
    near = maximum_filter(sp_edges, size=2 * tolerance + 1, mode="constant") > 0
    return int(np.count_nonzero(gt_edges & near)) / int(np.count_nonzero(gt_edges))


def evaluate_multi(sp, gts, tolerance=2):
    """Average each metric over several ground truths of the same image."""
    gts = list(gts)
    if not gts:
        raise InvalidInputError("need at least one ground truth")
    flags = []
    scores = []
    for i, gt in enumerate(gts):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NoBoundaryWarning)
            b = br(sp, gt, tolerance)
        if any(issubclass(c.category, NoBoundaryWarning) for c in caught):
            flags.append(f"ground truth {i} has no boundary")
        scores.append((asa(sp, gt), b, use(sp, gt)))
    mean = np.mean(np.array(scores), axis=0)
    return MetricReport(
        asa=float(mean[0]),
        br=float(mean[1]),
        use=float(mean[2]),
        boundary_tolerance=int(tolerance),
        n_ground_truths=len(gts),
        flags=flags,
    )
