"""The interactive-supervision loop: predict -> pseudo-label -> re-supervise.

Each round writes a manifest, invokes the predictor on it, validates the
returned bundles, refines pseudo-labels per image, extracts instances, and
evaluates against ground truth when available. Pseudo-labels from round t-1
supervise round t (the first round boots from the predictor's zero-shot
output; no pseudo-label exists before it). Everything is seeded, so a run is
a pure function of its config and dataset.

Round tree (under the output root)::

    round_<t>/
      manifest.json          round contract handed to the predictor
      <image_id>/*.dwnr      predictor bundles
      mini/<id>.png          binarized segmentation before pseudo-label fusion
      pseudo/<id>.png        combined pseudo-label (+ <id>.json provenance)
      instances/<id>.png     post-processed instance map
      overlays/<id>.png      pseudo-label + annotation points, for visual audit
      record.json            per-image and aggregate round record
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cpl import binarize_segmentation, cpl
from .errors import IdMismatch, PredictorFailed, ValidationFailed
from .io import (
    SCHEMA_VERSION,
    read_instance_png,
    read_mask_png,
    read_points_csv,
    write_instance_png,
    write_json,
    write_mask_png,
)
from .losses import LossWeights, cfc_loss, detection_loss, dyn_loss, total_loss
from .metrics import (
    MetricReport,
    centroids,
    detection_scores,
    metric_parts,
    report_from_parts,
    sum_parts,
)
from .overlay import emit_overlay
from .postprocess import PostprocParams, extract_instances
from .predictor import (
    RoundManifest,
    SyntheticPredictorConfig,
    invoke_predictor,
    read_bundle,
    write_manifest,
)
from .presets import DATASETS, DatasetConfig, get_dataset
from .cpl import CplParams
from .encoding import EncodingParams, gaussian_encode, weight_map
from .raster import PointSet, label_components


@dataclass(frozen=True)
class LoopConfig:
    """Configuration of one interactive-supervision run."""

    dataset: DatasetConfig
    rounds: int = 4
    epochs: int = 20
    loss_weights: LossWeights = LossWeights()
    predictor: str | None = None
    synthetic: SyntheticPredictorConfig = SyntheticPredictorConfig()
    postproc: PostprocParams = PostprocParams()
    seg_tau: float = 0.5
    filter_mode: str = "pixel"
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def resolve_predictor(self) -> str:
        return self.predictor or os.environ.get("DAWN_PREDICTOR") or "synthetic"

    def to_dict(self) -> dict:
        enc = self.dataset.encoding
        return {
            "schema_version": SCHEMA_VERSION,
            "dataset": {
                "name": self.dataset.name,
                "r1": enc.r1,
                "r2": enc.r2,
                "sigma": enc.sigma,
                "theta": self.dataset.cpl.theta,
                "d": self.dataset.cpl.d,
                "match_radius": self.dataset.match_radius,
                "magnification": self.dataset.magnification,
            },
            "rounds": self.rounds,
            "epochs": self.epochs,
            "loss_weights": {
                "alpha": self.loss_weights.alpha,
                "beta": self.loss_weights.beta,
            },
            "predictor": self.predictor,
            "synthetic": self.synthetic.to_dict(),
            "postproc": {
                "fg_threshold": self.postproc.fg_threshold,
                "marker_gradient_threshold": self.postproc.marker_gradient_threshold,
                "min_instance_area": self.postproc.min_instance_area,
            },
            "seg_tau": self.seg_tau,
            "filter_mode": self.filter_mode,
            "jobs": self.jobs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LoopConfig":
        ds = d["dataset"]
        if isinstance(ds, str):
            dataset = get_dataset(ds)
        else:
            name = ds["name"]
            if set(ds) <= {"name"} and name in DATASETS:
                dataset = get_dataset(name)
            else:
                dataset = DatasetConfig(
                    name=name,
                    encoding=EncodingParams(ds["r1"], ds["r2"], ds["sigma"], name),
                    cpl=CplParams(ds["theta"], ds["d"]),
                    match_radius=ds.get("match_radius", ds["r1"]),
                    magnification=ds.get("magnification", "x40"),
                )
        lw = d.get("loss_weights", {})
        pp = d.get("postproc", {})
        return cls(
            dataset=dataset,
            rounds=d.get("rounds", 4),
            epochs=d.get("epochs", 20),
            loss_weights=LossWeights(lw.get("alpha", 0.1), lw.get("beta", 0.15)),
            predictor=d.get("predictor"),
            synthetic=SyntheticPredictorConfig.from_dict(d.get("synthetic", {})),
            postproc=PostprocParams(
                fg_threshold=pp.get("fg_threshold", 0.5),
                marker_gradient_threshold=pp.get("marker_gradient_threshold", 0.4),
                min_instance_area=pp.get("min_instance_area", 10),
            ),
            seg_tau=d.get("seg_tau", 0.5),
            filter_mode=d.get("filter_mode", "pixel"),
            jobs=d.get("jobs", 1),
        )


@dataclass
class RoundRecord:
    """Everything one round produced: metrics, losses, artifact locations."""

    round_index: int
    per_image: dict[str, dict] = field(default_factory=dict)
    pseudo_mean: dict | None = None
    pseudo_pooled: dict | None = None
    instance_mean: dict | None = None
    instance_pooled: dict | None = None
    losses: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "round": self.round_index,
            "per_image": self.per_image,
            "pseudo_label": {"mean": self.pseudo_mean, "pooled": self.pseudo_pooled},
            "instances": {"mean": self.instance_mean, "pooled": self.instance_pooled},
            "losses": self.losses,
            "point_coverage": self.coverage,
            "paths": self.paths,
        }


@dataclass(frozen=True)
class DatasetImage:
    """One target-domain image: points required, GT/texture optional."""

    image_id: str
    points_path: Path
    gt_path: Path | None
    image_path: Path | None


def discover_dataset(data_dir: str | Path) -> list[DatasetImage]:
    """Find images by their ``<id>_points.csv`` files (sorted by id)."""
    data_dir = Path(data_dir)
    items = []
    for pts in sorted(data_dir.glob("*_points.csv")):
        image_id = pts.name[: -len("_points.csv")]
        gt = data_dir / f"{image_id}_gt.png"
        img = data_dir / f"{image_id}_image.png"
        items.append(
            DatasetImage(
                image_id=image_id,
                points_path=pts,
                gt_path=gt if gt.is_file() else None,
                image_path=img if img.is_file() else None,
            )
        )
    if not items:
        raise IdMismatch(f"no *_points.csv files under {data_dir}")
    return items


def _image_shape(item: DatasetImage) -> tuple[int, int]:
    if item.gt_path is not None:
        return read_instance_png(item.gt_path).shape
    if item.image_path is not None:
        from PIL import Image

        img = Image.open(item.image_path)
        return (img.height, img.width)
    raise IdMismatch(
        f"{item.image_id}: need <id>_gt.png or <id>_image.png to know raster size"
    )


def _mean_of(reports: "list[MetricReport]") -> dict | None:
    if not reports:
        return None
    keys = reports[0].to_dict().keys()
    return {k: float(np.mean([r.to_dict()[k] for r in reports])) for k in keys}


def _point_coverage(mask: np.ndarray, points: PointSet) -> float:
    if points.is_empty:
        return 1.0
    arr = points.as_array()
    return float((mask[arr[:, 1], arr[:, 0]] > 0).mean())


def _process_image(cfg, round_dir, t, item, shape):
    """Per-image round body: CPL, post-processing, losses, metrics."""
    image_id = item.image_id
    try:
        bundle = read_bundle(round_dir, image_id)
    except Exception as exc:
        raise ValidationFailed(f"round {t}, image {image_id}: {exc}") from exc
    points = read_points_csv(item.points_path, shape[1], shape[0])

    m_ini = binarize_segmentation(bundle.prob, cfg.seg_tau)
    pseudo = cpl(
        bundle.prob,
        bundle.det,
        points,
        cfg.dataset.cpl,
        tau=cfg.seg_tau,
        mode=cfg.filter_mode,
        round_index=t,
    )
    inst = extract_instances(bundle.prob, bundle.hover_x, bundle.hover_y, cfg.postproc)

    write_mask_png(round_dir / "mini" / f"{image_id}.png", m_ini)
    write_mask_png(round_dir / "pseudo" / f"{image_id}.png", pseudo.mask)
    write_json(
        round_dir / "pseudo" / f"{image_id}.json",
        {"schema_version": SCHEMA_VERSION, **pseudo.provenance},
    )
    write_instance_png(round_dir / "instances" / f"{image_id}.png", inst)
    emit_overlay(None, pseudo.mask, points, round_dir / "overlays" / f"{image_id}.png")

    enc = gaussian_encode(points, cfg.dataset.encoding, shape)
    w = weight_map(points, cfg.dataset.encoding, shape)
    det = detection_loss(bundle.det, enc, w)
    fea = cfc_loss(bundle.seg_embedding, bundle.det_embedding)
    dyn = dyn_loss(bundle.prob, bundle.det, pseudo.mask)
    losses = {
        "det": det.value,
        "fea": fea.value,
        "dyn": dyn.value,
        "total": total_loss(det, fea, dyn, cfg.loss_weights),
    }

    row: dict = {
        "losses": losses,
        "point_coverage": {
            "m_ini": _point_coverage(m_ini, points),
            "m_pse": _point_coverage(pseudo.mask, points),
        },
    }
    pseudo_parts = instance_parts = None
    if item.gt_path is not None:
        gt = read_instance_png(item.gt_path)
        radius = cfg.dataset.match_radius
        pseudo_parts = metric_parts(label_components(pseudo.mask), gt, points, radius)
        instance_parts = metric_parts(inst, gt, points, radius)
        row["pseudo_label"] = report_from_parts(pseudo_parts).to_dict()
        row["instances"] = report_from_parts(instance_parts).to_dict()
    else:
        # detection quality needs only the annotation points
        rec, prec, f1 = detection_scores(
            centroids(inst), points, cfg.dataset.match_radius
        )
        row["instances"] = {"Recall": rec, "Precision": prec, "F1": f1}
    return image_id, row, pseudo_parts, instance_parts


def run_loop(
    cfg: LoopConfig, data_dir: str | Path, out_dir: str | Path
) -> list[RoundRecord]:
    """Run the full interactive-supervision loop; returns one record per round.

    Raises PredictorFailed/ValidationFailed naming the failing round; records
    and artifacts of completed rounds stay on disk.
    """
    data_dir_arg = str(data_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.json", cfg.to_dict())
    items = discover_dataset(data_dir)
    image_ids = tuple(i.image_id for i in items)
    shapes = {i.image_id: _image_shape(i) for i in items}
    predictor = cfg.resolve_predictor()

    records: list[RoundRecord] = []
    summary_rows: list[dict] = []
    for t in range(1, cfg.rounds + 1):
        round_dir = out / f"round_{t}"
        for sub in ("mini", "pseudo", "instances", "overlays"):
            (round_dir / sub).mkdir(parents=True, exist_ok=True)
        manifest = RoundManifest(
            round_index=t,
            images=image_ids,
            dataset_dir=data_dir_arg,
            bundle_dir=".",
            pseudo_label_dir=f"../round_{t - 1}/pseudo" if t > 1 else None,
            encoding=cfg.dataset.encoding,
            cpl=cfg.dataset.cpl,
            loss_weights=cfg.loss_weights,
            epochs=cfg.epochs,
            predictor_config=cfg.synthetic if predictor == "synthetic" else None,
        )
        write_manifest(manifest, round_dir / "manifest.json")
        try:
            invoke_predictor(predictor, round_dir / "manifest.json")
        except PredictorFailed as exc:
            raise PredictorFailed(f"round {t}: {exc}") from exc

        if cfg.jobs > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                results = list(
                    pool.map(
                        lambda item: _process_image(
                            cfg, round_dir, t, item, shapes[item.image_id]
                        ),
                        items,
                    )
                )
        else:
            results = [
                _process_image(cfg, round_dir, t, item, shapes[item.image_id])
                for item in items
            ]

        record = RoundRecord(round_index=t)
        record.paths = {
            "manifest": f"round_{t}/manifest.json",
            "pseudo": f"round_{t}/pseudo",
            "instances": f"round_{t}/instances",
            "overlays": f"round_{t}/overlays",
        }
        pseudo_parts_all = []
        instance_parts_all = []
        pseudo_reports = []
        instance_reports = []
        for image_id, row, pseudo_parts, instance_parts in results:
            record.per_image[image_id] = row
            if pseudo_parts is not None:
                pseudo_parts_all.append(pseudo_parts)
                pseudo_reports.append(report_from_parts(pseudo_parts))
            if instance_parts is not None:
                instance_parts_all.append(instance_parts)
                instance_reports.append(report_from_parts(instance_parts))
        record.pseudo_mean = _mean_of(pseudo_reports)
        record.instance_mean = _mean_of(instance_reports)
        if pseudo_parts_all:
            record.pseudo_pooled = report_from_parts(sum_parts(pseudo_parts_all)).to_dict()
        if instance_parts_all:
            record.instance_pooled = report_from_parts(
                sum_parts(instance_parts_all)
            ).to_dict()
        record.losses = {
            k: float(np.mean([r["losses"][k] for _, r, _, _ in results]))
            for k in ("det", "fea", "dyn", "total")
        }
        record.coverage = {
            "m_ini": float(
                np.mean([r["point_coverage"]["m_ini"] for _, r, _, _ in results])
            ),
            "m_pse": float(
                np.mean([r["point_coverage"]["m_pse"] for _, r, _, _ in results])
            ),
        }
        write_json(round_dir / "record.json", record.to_dict())
        records.append(record)

        summary_rows.append(
            {
                "round": t,
                "pseudo_label": record.pseudo_mean,
                "instances": record.instance_mean,
                "losses": record.losses,
                "point_coverage": record.coverage,
            }
        )
        best = None
        scored = [r for r in summary_rows if r["instances"] is not None]
        if scored:
            best = max(scored, key=lambda r: r["instances"]["PQ"])["round"]
        write_json(
            out / "report.json",
            {
                "schema_version": SCHEMA_VERSION,
                "rounds": summary_rows,
                "best_round_by_pq": best,
            },
        )
    return records


def evaluate_round(
    pred_dir: str | Path,
    gt_dir: str | Path,
    points_dir: str | Path,
    radius: float,
    jobs: int = 1,
) -> dict:
    """Evaluate a directory of predicted instance maps against ground truth.

    Image ids come from the PNG stems in ``pred_dir`` and must cover exactly
    the ids present in ``gt_dir``. The report carries one row per image plus
    mean-of-images and dataset-pooled aggregates.
    """
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    points_dir = Path(points_dir)
    pred_ids = sorted(p.stem for p in pred_dir.glob("*.png"))
    if not pred_ids:
        raise IdMismatch(f"no prediction PNGs under {pred_dir}")
    gt_ids = sorted(
        {p.stem[: -len("_gt")] if p.stem.endswith("_gt") else p.stem
         for p in gt_dir.glob("*.png")
         if not p.stem.endswith(("_image",))}
    )
    if set(pred_ids) != set(gt_ids):
        missing = sorted(set(gt_ids) ^ set(pred_ids))
        raise IdMismatch(f"prediction/ground-truth ids differ on: {missing}")

    def _lookup(directory: Path, image_id: str, suffixes: "tuple[str, ...]") -> Path:
        for suffix in suffixes:
            p = directory / f"{image_id}{suffix}"
            if p.is_file():
                return p
        raise IdMismatch(f"no file for {image_id} under {directory}")

    def _one(image_id: str):
        pred = read_instance_png(pred_dir / f"{image_id}.png")
        gt = read_instance_png(_lookup(gt_dir, image_id, ("_gt.png", ".png")))
        pts_path = _lookup(points_dir, image_id, ("_points.csv", ".csv"))
        points = read_points_csv(pts_path, gt.shape[1], gt.shape[0])
        return image_id, metric_parts(pred, gt, points, radius)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_one, pred_ids))
    else:
        rows = [_one(i) for i in pred_ids]

    per_image = {i: report_from_parts(p).to_dict() for i, p in rows}
    reports = [report_from_parts(p) for _, p in rows]
    pooled = report_from_parts(sum_parts([p for _, p in rows])).to_dict()
    return {
        "schema_version": SCHEMA_VERSION,
        "per_image": per_image,
        "mean": _mean_of(reports),
        "pooled": pooled,
    }
