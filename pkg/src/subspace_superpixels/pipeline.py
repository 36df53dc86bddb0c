"""End-to-end segmentation, dataset benchmarking and overlay rendering."""

import csv
import json
import logging
import re
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import io
from .cluster import affinity, merge_isolated, ncut
from .errors import InvalidInputError
from .metrics import USE_DEFINITION, GroundTruth, evaluate_multi
from .solver import AdmmConfig, solve
from .units import ImageBuffer, extract_features, oversegment, unit_adjacency
from .weights import build_weight_matrix

log = logging.getLogger(__name__)

STAGES = ("oversegment", "features", "weights", "solve", "affinity", "ncut", "merge")
IMAGE_SUFFIXES = (".png", ".ppm")
_GT_PATTERN = re.compile(r"^(?P<stem>.+)\.gt(?P<index>\d+)\.(png|csv)$", re.IGNORECASE)

_ADMM_KEYS = tuple(f.name for f in fields(AdmmConfig))


@dataclass(frozen=True)
class PipelineConfig:
    k_superpixels: int
    unit_ratio: float = 3.0
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    br_tolerance: int = 2
    seed: int = 0
    color_features: bool = True
    spatial_features: bool = True
    edge_features: bool = True
    texture_features: bool = True
    min_size_ratio: float = 0.1

    def __post_init__(self):
        if int(self.k_superpixels) < 1:
            raise InvalidInputError("k_superpixels must be positive")
        if not self.unit_ratio > 0:
            raise InvalidInputError("unit_ratio must be positive")
        if self.n_units < self.k_superpixels:
            raise InvalidInputError("unit_ratio must give at least K units")
        if int(self.br_tolerance) < 0:
            raise InvalidInputError("br_tolerance must be non-negative")

    @property
    def n_units(self):
        return int(round(self.unit_ratio * self.k_superpixels))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        """Build from a mapping; ADMM fields may be nested or top level."""
        data = dict(data)
        admm = dict(data.pop("admm", None) or {})
        for key in _ADMM_KEYS:
            if key in data:
                admm[key] = data.pop(key)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(admm=AdmmConfig(**admm), **data)
        except TypeError as exc:
            raise InvalidInputError(str(exc)) from exc


@dataclass
class RunArtifacts:
    labeling: object
    report: object
    n_units: int
    metrics: object = None
    timing_ms: dict = field(default_factory=dict)

    def report_dict(self, config):
        """Deterministic summary; wall-clock timing is kept out of it."""
        out = {
            "config": config.to_dict(),
            "image_shape": list(self.labeling.shape),
            "n_units": self.n_units,
            "realized_k": self.labeling.realized_k,
            "solver": self.report.to_dict(),
        }
        if self.metrics is not None:
            out["metrics"] = self.metrics.to_dict()
        return out


@contextmanager
def _stage(name, timing):
    start = time.perf_counter()
    try:
        yield
    except Exception as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise
    finally:
        timing[name] = (time.perf_counter() - start) * 1000.0


def segment_image(image, config, ground_truths=None):
    """Run the full pipeline on an in-memory image.

    Parameters
    ----------
    image : ImageBuffer
    config : PipelineConfig
    ground_truths : sequence of label grids, optional
        When given, metrics are computed against them.
    """
    n = config.n_units
    if n > image.height * image.width:
        raise InvalidInputError(
            f"{n} units requested but the image has {image.height * image.width} pixels"
        )
    timing = {}
    with _stage("oversegment", timing):
        units = oversegment(image, n, seed=config.seed)
    with _stage("features", timing):
        x = extract_features(
            image,
            units,
            color=config.color_features,
            spatial=config.spatial_features,
            edge=config.edge_features,
            texture=config.texture_features,
        )
    with _stage("weights", timing):
        weights = build_weight_matrix(unit_adjacency(units))
    with _stage("solve", timing):
        z, report = solve(x, weights, config.admm)
    with _stage("affinity", timing):
        g = affinity(z)
    with _stage("ncut", timing):
        k = min(config.k_superpixels, units.unit_count)
        unit_labels = ncut(g, k, seed=config.seed)
    with _stage("merge", timing):
        labeling = merge_isolated(
            unit_labels, units, x, k=config.k_superpixels, min_size_ratio=config.min_size_ratio
        )

    metrics = None
    if ground_truths:
        metrics = evaluate_multi(
            labeling, [GroundTruth(g) for g in ground_truths], config.br_tolerance
        )
    return RunArtifacts(
        labeling=labeling,
        report=report,
        n_units=units.unit_count,
        metrics=metrics,
        timing_ms=timing,
    )


def boundary_mask(labels):
    """One-pixel-wide boundaries: pixels whose right or lower neighbor differs."""
    labels = np.asarray(getattr(labels, "labels", labels))
    mask = np.zeros(labels.shape, dtype=bool)
    mask[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    mask[:-1, :] |= labels[:-1, :] != labels[1:, :]
    return mask


def render_overlay(image, labeling, output_path=None, color=(1.0, 0.0, 0.0)):
    """Draw superpixel boundaries over an image.

    ``image`` may be a path or an :class:`ImageBuffer`. Returns the RGB
    array and writes it when ``output_path`` is given.
    """
    if not isinstance(image, ImageBuffer):
        image = io.read_image(image)
    labels = np.asarray(getattr(labeling, "labels", labeling))
    if labels.shape != (image.height, image.width):
        raise InvalidInputError(
            f"labeling {labels.shape} does not match image {(image.height, image.width)}"
        )
    rgb = np.array(image.rgb, copy=True)
    rgb[boundary_mask(labels)] = np.asarray(color, dtype=np.float64)
    if output_path is not None:
        io.write_image(output_path, rgb)
    return rgb


def report_path(label_path):
    label_path = Path(label_path)
    return label_path.with_suffix(".json")


def segment(
    image_path, config, out_path, overlay_path=None, gt_paths=(), plot=False,
    overlay_color=(1.0, 0.0, 0.0),
):
    """Segment an image file and write the label map and reports.

    Writes ``out_path`` (PNG or CSV by extension), ``<stem>.json`` with the
    deterministic report, ``<stem>.timing.json`` with per-stage wall time,
    and optionally the overlay and a convergence figure.
    """
    image = io.read_image(image_path)
    gts = [io.read_labels(p) for p in gt_paths]
    art = segment_image(image, config, ground_truths=gts or None)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    io.write_labels(out_path, art.labeling.labels)
    with open(report_path(out_path), "w") as fh:
        json.dump(art.report_dict(config), fh, indent=2, sort_keys=True)
    with open(out_path.with_suffix(".timing.json"), "w") as fh:
        json.dump(art.timing_ms, fh, indent=2)
    if overlay_path is not None:
        render_overlay(image, art.labeling, overlay_path, color=overlay_color)
    if plot:
        from .plotting import plot_convergence

        plot_convergence(art.report, out_path.with_suffix(".convergence.png"))
    return art


def discover_dataset(dataset_dir):
    """Map each image path to its ground-truth files, sorted by index."""
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.is_dir():
        raise InvalidInputError(f"{dataset_dir} is not a directory")
    gts = {}
    images = []
    for path in sorted(dataset_dir.iterdir()):
        m = _GT_PATTERN.match(path.name)
        if m:
            gts.setdefault(m.group("stem"), []).append((int(m.group("index")), path))
        elif path.suffix.lower() in IMAGE_SUFFIXES:
            images.append(path)
    return {img: [p for _, p in sorted(gts.get(img.stem, []))] for img in images}


def _benchmark_one(task):
    image_path, gt_paths, config = task
    image = io.read_image(image_path)
    gts = [io.read_labels(p) for p in gt_paths]
    row = {"image": Path(image_path).name, "k": config.k_superpixels}
    try:
        art = segment_image(image, config, ground_truths=gts)
    except Exception as exc:  # recorded per row, the sweep goes on
        row["error"] = f"{getattr(exc, 'stage', 'setup')}: {exc}"
        return row
    row.update(
        realized_k=art.labeling.realized_k,
        n_units=art.n_units,
        asa=art.metrics.asa,
        br=art.metrics.br,
        use=art.metrics.use,
        n_ground_truths=art.metrics.n_ground_truths,
        iterations=art.report.iterations_run,
        converged=art.report.converged,
    )
    return row


CSV_COLUMNS = (
    "image", "k", "realized_k", "n_units", "asa", "br", "use",
    "n_ground_truths", "iterations", "converged", "error",
)


def summarize(rows, k_list):
    """Mean metrics per K over rows that finished without error."""
    series = []
    for k in k_list:
        ok = [r for r in rows if r["k"] == k and "error" not in r]
        entry = {"k": k, "n_images": len(ok)}
        for key in ("asa", "br", "use", "realized_k"):
            entry[key] = float(np.mean([r[key] for r in ok])) if ok else None
        series.append(entry)
    return series


def benchmark(dataset_dir, config, k_list, out_dir, workers=1, plot=True):
    """Segment every image at every K and score it against its ground truths.

    Images without ground truth are skipped and listed in the report.
    Outputs ``benchmark.json``, ``metrics.csv``, ``metrics_vs_k.csv`` and,
    with ``plot``, ``metrics_vs_k.png`` in ``out_dir``.
    """
    k_list = [int(k) for k in k_list]
    if not k_list:
        raise InvalidInputError("k_list is empty")
    dataset = discover_dataset(dataset_dir)
    skipped = []
    tasks = []
    for image_path, gt_paths in dataset.items():
        if not gt_paths:
            log.warning("no ground truth for %s; skipped", image_path.name)
            skipped.append(image_path.name)
            continue
        for k in k_list:
            cfg = PipelineConfig.from_dict({**config.to_dict(), "k_superpixels": k})
            tasks.append((str(image_path), [str(p) for p in gt_paths], cfg))

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_benchmark_one, tasks))
    else:
        rows = [_benchmark_one(t) for t in tasks]

    series = summarize(rows, k_list)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = {
        "config": config.to_dict(),
        "k_list": k_list,
        "use_definition": USE_DEFINITION,
        "per_image": rows,
        "mean": series,
        "skipped": skipped,
    }
    with open(out_dir / "benchmark.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for r in rows:
            writer.writerow({c: r.get(c, "") for c in CSV_COLUMNS})
    with open(out_dir / "metrics_vs_k.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=("k", "n_images", "asa", "br", "use", "realized_k"))
        writer.writeheader()
        writer.writerows(series)
    if plot and any(s["n_images"] for s in series):
        from .plotting import plot_metrics_vs_k

        plot_metrics_vs_k(series, out_dir / "metrics_vs_k.png")
    return result
