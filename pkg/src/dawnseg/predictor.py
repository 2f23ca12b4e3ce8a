"""File-based predictor protocol plus a deterministic synthetic predictor.

Neural trainers live outside this package. Each training round, the
orchestrator writes a manifest JSON and invokes the predictor executable with
the manifest path as its single argument; the predictor writes one bundle
directory per image:

    <bundle_dir>/<image_id>/{prob.dwnr, det.dwnr, hx.dwnr, hy.dwnr,
                             seg_emb.dwnr, det_emb.dwnr}

Embeddings are width-1 single-channel DWNR rasters (height = dim). The
built-in synthetic predictor fabricates under-segmented outputs from ground
truth so the whole loop runs deterministically with no learning framework.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .cpl import CplParams
from .encoding import EncodingParams, gaussian_encode, segmentation_targets
from .errors import (
    DimMismatch,
    MissingArtifact,
    PredictorFailed,
    RangeViolation,
    ShapeMismatch,
)
from .io import (
    SCHEMA_VERSION,
    dump_json,
    read_dwnr,
    read_instance_png,
    read_json,
    read_mask_png,
    read_points_csv,
    write_dwnr,
)
from .losses import LossWeights
from .raster import PointSet

BUNDLE_FILES = {
    "prob": "prob.dwnr",
    "det": "det.dwnr",
    "hover_x": "hx.dwnr",
    "hover_y": "hy.dwnr",
    "seg_embedding": "seg_emb.dwnr",
    "det_embedding": "det_emb.dwnr",
}

EMBEDDING_DIM = 64


@dataclass(frozen=True)
class PredictorBundle:
    """Per-image predictor outputs."""

    prob: np.ndarray
    det: np.ndarray
    hover_x: np.ndarray
    hover_y: np.ndarray
    seg_embedding: np.ndarray
    det_embedding: np.ndarray

    def validate(self) -> None:
        rasters = (self.prob, self.det, self.hover_x, self.hover_y)
        shapes = {r.shape for r in rasters}
        if len(shapes) > 1:
            raise ShapeMismatch(f"bundle rasters disagree in shape: {sorted(shapes)}")
        for name, r in zip(("prob", "det", "hover_x", "hover_y"), rasters):
            if not np.isfinite(r).all():
                raise RangeViolation(f"{name} contains non-finite values")
        for name, r in (("prob", self.prob), ("det", self.det)):
            if r.min() < 0.0 or r.max() > 1.0:
                raise RangeViolation(f"{name} outside [0, 1]")
        for name, e in (("seg", self.seg_embedding), ("det", self.det_embedding)):
            if e.ndim != 1 or e.size == 0:
                raise DimMismatch(f"{name} embedding must be a non-empty vector")
            if not np.isfinite(e).all():
                raise RangeViolation(f"{name} embedding contains non-finite values")
        if self.seg_embedding.size != self.det_embedding.size:
            raise DimMismatch(
                f"embedding dims differ: {self.seg_embedding.size} vs "
                f"{self.det_embedding.size}"
            )


@dataclass(frozen=True)
class SyntheticPredictorConfig:
    """Knobs of the synthetic predictor's simulated under-segmentation."""

    drop_fraction: float = 0.3
    blur_radius: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.drop_fraction < 1.0):
            raise ValueError("drop_fraction must be in [0, 1)")
        if self.blur_radius < 0 or self.noise_sigma < 0:
            raise ValueError("blur_radius and noise_sigma must be >= 0")

    def to_dict(self) -> dict:
        return {
            "drop_fraction": self.drop_fraction,
            "blur_radius": self.blur_radius,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticPredictorConfig":
        return cls(
            drop_fraction=d.get("drop_fraction", 0.3),
            blur_radius=d.get("blur_radius", 0.0),
            noise_sigma=d.get("noise_sigma", 0.0),
            seed=d.get("seed", 0),
        )


@dataclass(frozen=True)
class RoundManifest:
    """One round's contract between the orchestrator and the predictor.

    Paths: ``bundle_dir`` and ``pseudo_label_dir`` are resolved relative to
    the manifest's own directory; ``dataset_dir`` is kept exactly as given
    (resolved against the working directory when relative), so reruns from a
    different output root stay byte-identical.
    """

    round_index: int
    images: tuple[str, ...]
    dataset_dir: str
    bundle_dir: str = "."
    pseudo_label_dir: str | None = None
    encoding: EncodingParams = EncodingParams(11, 22, 2.75)
    cpl: CplParams = CplParams(0.2, 25)
    loss_weights: LossWeights = LossWeights()
    epochs: int = 20
    predictor_config: SyntheticPredictorConfig | None = None

    def validate(self, base: Path) -> None:
        if self.round_index < 1:
            raise ValueError("round index must be >= 1")
        if self.epochs < 1:
            raise ValueError("epoch budget must be >= 1")
        if not self.images:
            raise ValueError("manifest needs at least one image id")
        if len(set(self.images)) != len(self.images):
            raise ValueError("duplicate image ids in manifest")
        if not Path(self.dataset_dir).is_dir():
            raise ValueError(f"dataset dir does not exist: {self.dataset_dir}")
        if self.pseudo_label_dir is not None:
            resolved = base / self.pseudo_label_dir
            if not resolved.is_dir():
                raise ValueError(f"pseudo-label dir does not exist: {resolved}")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "round": self.round_index,
            "images": list(self.images),
            "dataset_dir": self.dataset_dir,
            "bundle_dir": self.bundle_dir,
            "pseudo_label_dir": self.pseudo_label_dir,
            "params": {
                "encoding": {
                    "r1": self.encoding.r1,
                    "r2": self.encoding.r2,
                    "sigma": self.encoding.sigma,
                    "tag": self.encoding.tag,
                },
                "cpl": {"theta": self.cpl.theta, "d": self.cpl.d},
                "loss_weights": {
                    "alpha": self.loss_weights.alpha,
                    "beta": self.loss_weights.beta,
                },
            },
            "epochs": self.epochs,
            "predictor_config": (
                self.predictor_config.to_dict() if self.predictor_config else None
            ),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoundManifest":
        params = d["params"]
        enc = params["encoding"]
        pc = d.get("predictor_config")
        return cls(
            round_index=d["round"],
            images=tuple(d["images"]),
            dataset_dir=d["dataset_dir"],
            bundle_dir=d.get("bundle_dir", "."),
            pseudo_label_dir=d.get("pseudo_label_dir"),
            encoding=EncodingParams(
                enc["r1"], enc["r2"], enc["sigma"], enc.get("tag", "")
            ),
            cpl=CplParams(params["cpl"]["theta"], params["cpl"]["d"]),
            loss_weights=LossWeights(
                params["loss_weights"]["alpha"], params["loss_weights"]["beta"]
            ),
            epochs=d.get("epochs", 20),
            predictor_config=(
                SyntheticPredictorConfig.from_dict(pc) if pc else None
            ),
        )


def write_manifest(manifest: RoundManifest, path: str | Path) -> None:
    """Validate and write a manifest as canonical JSON (byte-stable)."""
    path = Path(path)
    manifest.validate(path.parent)
    path.write_text(dump_json(manifest.to_dict()))


def read_manifest(path: str | Path) -> RoundManifest:
    return RoundManifest.from_dict(read_json(path))


def write_bundle(bundle_dir: str | Path, image_id: str, bundle: PredictorBundle) -> None:
    out = Path(bundle_dir) / image_id
    out.mkdir(parents=True, exist_ok=True)
    write_dwnr(out / BUNDLE_FILES["prob"], bundle.prob)
    write_dwnr(out / BUNDLE_FILES["det"], bundle.det)
    write_dwnr(out / BUNDLE_FILES["hover_x"], bundle.hover_x)
    write_dwnr(out / BUNDLE_FILES["hover_y"], bundle.hover_y)
    write_dwnr(out / BUNDLE_FILES["seg_embedding"], bundle.seg_embedding[:, None])
    write_dwnr(out / BUNDLE_FILES["det_embedding"], bundle.det_embedding[:, None])


def read_bundle(bundle_dir: str | Path, image_id: str) -> PredictorBundle:
    """Load and validate one image's predictor outputs."""
    base = Path(bundle_dir) / image_id
    arrays = {}
    for key, fname in BUNDLE_FILES.items():
        path = base / fname
        if not path.is_file():
            raise MissingArtifact(f"missing predictor artifact: {path}")
        arrays[key] = read_dwnr(path)
    bundle = PredictorBundle(
        prob=arrays["prob"],
        det=arrays["det"],
        hover_x=arrays["hover_x"],
        hover_y=arrays["hover_y"],
        seg_embedding=np.asarray(arrays["seg_embedding"]).ravel(),
        det_embedding=np.asarray(arrays["det_embedding"]).ravel(),
    )
    bundle.validate()
    return bundle


def _pooled_histogram(raster: np.ndarray, dim: int = EMBEDDING_DIM) -> np.ndarray:
    """Fixed-dim embedding: normalized value histogram over [0, 1]."""
    hist, _ = np.histogram(np.clip(raster, 0.0, 1.0), bins=dim, range=(0.0, 1.0))
    return hist.astype(np.float64) / max(raster.size, 1)


def synthetic_predict(
    gt_inst: np.ndarray,
    points: PointSet,
    cfg: SyntheticPredictorConfig,
    enc_params: EncodingParams,
    droppable: "set[int] | None" = None,
) -> PredictorBundle:
    """Deterministic test double emulating target-domain under-segmentation.

    The probability output is the (optionally blurred, noised) indicator of
    ground truth minus a seeded random selection of floor(drop_fraction * K)
    instances; the detection output is the Gaussian encoding over all points
    with the excluded band mapped to 0, so the detector still sees every
    nucleus. ``droppable`` restricts which instance ids may be dropped (used
    to honor pseudo-label supervision across rounds).
    """
    gt_inst = np.asarray(gt_inst)
    rng = np.random.default_rng(cfg.seed)
    ids = sorted(int(i) for i in np.unique(gt_inst) if i > 0)
    candidates = sorted(droppable) if droppable is not None else ids
    n_drop = min(int(math.floor(cfg.drop_fraction * len(ids))), len(candidates))
    dropped = set()
    if n_drop > 0:
        dropped = set(
            int(i) for i in rng.choice(np.asarray(candidates), n_drop, replace=False)
        )
    retained = np.where(np.isin(gt_inst, sorted(dropped)), 0, gt_inst)

    prob = (retained > 0).astype(np.float64)
    if cfg.blur_radius > 0:
        prob = ndimage.gaussian_filter(prob, sigma=cfg.blur_radius)
    if cfg.noise_sigma > 0:
        prob = prob + rng.normal(0.0, cfg.noise_sigma, size=prob.shape)
    prob = np.clip(prob, 0.0, 1.0)

    enc = gaussian_encode(points, enc_params, gt_inst.shape)
    det = np.where(enc < 0.0, 0.0, enc)
    _, hover_x, hover_y = segmentation_targets(retained)
    return PredictorBundle(
        prob=prob,
        det=det,
        hover_x=hover_x,
        hover_y=hover_y,
        seg_embedding=_pooled_histogram(prob),
        det_embedding=_pooled_histogram(det),
    )


def _load_gt(dataset_dir: Path, image_id: str) -> tuple[np.ndarray, PointSet]:
    gt_path = dataset_dir / f"{image_id}_gt.png"
    if not gt_path.is_file():
        raise MissingArtifact(
            f"synthetic predictor needs ground truth: {gt_path} missing"
        )
    gt = read_instance_png(gt_path)
    points = read_points_csv(
        dataset_dir / f"{image_id}_points.csv", gt.shape[1], gt.shape[0]
    )
    return gt, points


def run_synthetic_predictor(manifest_path: str | Path) -> None:
    """Run the built-in predictor from a manifest file alone.

    Rounds with a pseudo-label directory honor the supervision: only nuclei
    whose annotation point is uncovered by the previous pseudo-label remain
    candidates for dropping. Per-image seeds derive deterministically from
    the base seed, the round index, and the image position.
    """
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    cfg = manifest.predictor_config or SyntheticPredictorConfig()
    dataset_dir = Path(manifest.dataset_dir)
    bundle_dir = base / manifest.bundle_dir
    for idx, image_id in enumerate(manifest.images):
        gt, points = _load_gt(dataset_dir, image_id)
        droppable = None
        if manifest.pseudo_label_dir is not None:
            prev = read_mask_png(base / manifest.pseudo_label_dir / f"{image_id}.png")
            droppable = {
                int(gt[y, x])
                for x, y in points.points
                if gt[y, x] > 0 and prev[y, x] == 0
            }
        image_cfg = replace(cfg, seed=cfg.seed + 1009 * manifest.round_index + idx)
        bundle = synthetic_predict(gt, points, image_cfg, manifest.encoding, droppable)
        write_bundle(bundle_dir, image_id, bundle)


def invoke_predictor(command: str, manifest_path: str | Path) -> None:
    """Run a predictor on a manifest.

    ``synthetic`` runs the built-in predictor in-process; anything else is
    treated as an executable (shell-style split) invoked as
    ``<command> <manifest.json>`` and must exit 0.
    """
    if command == "synthetic":
        run_synthetic_predictor(manifest_path)
        return
    argv = shlex.split(command) + [str(manifest_path)]
    proc = subprocess.run(argv, capture_output=True, text=True)
    if proc.returncode != 0:
        raise PredictorFailed(
            f"predictor {argv[0]!r} exited with {proc.returncode}; "
            f"stderr: {proc.stderr.strip()[-2000:]}"
        )


def main(argv: "list[str] | None" = None) -> int:
    """Entry point so the built-in predictor can run as a subprocess:
    ``python -m dawnseg.predictor <manifest.json>``."""
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: python -m dawnseg.predictor <manifest.json>", file=sys.stderr)
        return 1
    try:
        run_synthetic_predictor(args[0])
    except Exception as exc:  # noqa: BLE001 - subprocess boundary reports and exits
        print(f"synthetic predictor failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
