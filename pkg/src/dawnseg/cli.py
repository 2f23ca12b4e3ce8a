"""Unified command-line surface: ``dawn <subcommand>``.

Subcommands: encode, loss, cpl, postproc, eval, run-loop, synth. Exit codes:
0 success, 1 usage error, 2 runtime error. Every subcommand is a pure
function of its inputs and flags (given seeds), so repeated invocations are
byte-identical.
"""

from __future__ import annotations

import argparse
import difflib
import sys
from pathlib import Path

import numpy as np

from . import losses as losses_mod
from .cpl import CplParams, cpl
from .encoding import EncodingParams, gaussian_encode, weight_map
from .errors import DawnError
from .io import (
    read_dwnr,
    read_instance_png,
    read_json,
    read_mask_png,
    read_points_csv,
    write_dwnr,
    write_instance_png,
    write_json,
    write_mask_png,
    write_points_csv,
)
from .orchestrator import LoopConfig, evaluate_round, run_loop
from .overlay import emit_overlay, id_color  # noqa: F401  (re-exported CLI helpers)
from .postprocess import PostprocParams, extract_instances
from .presets import DATASETS, get_dataset
from .synthgen import SceneSpec, generate_scene, render_texture

_SUBCOMMANDS = ("encode", "loss", "cpl", "postproc", "eval", "run-loop", "synth")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 1 on usage errors and suggests subcommands."""

    def error(self, message: str) -> "None":
        if "invalid choice" in message:
            bad = message.split("invalid choice: ")[1].split(" ")[0].strip("'\"()")
            close = difflib.get_close_matches(bad, _SUBCOMMANDS, n=1)
            if close:
                message += f" (did you mean {close[0]!r}?)"
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 256x256, got {text!r}")


def _encoding_from_json(path: str) -> EncodingParams:
    spec = read_json(path)
    if "dataset" in spec:
        return get_dataset(spec["dataset"]).encoding
    return EncodingParams(spec["r1"], spec["r2"], spec["sigma"], spec.get("tag", ""))


def _load_raster(path: str) -> np.ndarray:
    """Float raster from DWNR, or a {0,1} mask from PNG."""
    if path.endswith(".png"):
        return read_mask_png(path).astype(np.float64)
    return read_dwnr(path)


def _cmd_encode(args) -> int:
    w, h = args.size
    points = read_points_csv(args.points, w, h)
    params = _encoding_from_json(args.params)
    write_dwnr(args.out, gaussian_encode(points, params, (h, w)))
    if args.weights:
        write_dwnr(args.weights, weight_map(points, params, (h, w)))
    return 0


def _cmd_loss(args) -> int:
    spec = read_json(args.spec)
    op = spec["op"]
    grad = None
    if op in ("ce", "dice"):
        fn = losses_mod.ce_loss if op == "ce" else losses_mod.dice_loss
        valid = _load_raster(spec["valid"]) if spec.get("valid") else None
        result = fn(_load_raster(spec["pred"]), _load_raster(spec["target"]), valid)
        grad = result.gradient
    elif op == "mse":
        weights = _load_raster(spec["weights"]) if spec.get("weights") else None
        result = losses_mod.mse_loss(
            _load_raster(spec["pred"]), _load_raster(spec["target"]), weights
        )
        grad = result.gradient
    elif op == "detection":
        result = losses_mod.detection_loss(
            _load_raster(spec["pred"]),
            _load_raster(spec["encoding"]),
            _load_raster(spec["weights"]),
        )
        grad = result.gradient
    elif op == "gradient_mse":
        result = losses_mod.gradient_mse_loss(
            _load_raster(spec["pred"]), _load_raster(spec["target"]), spec["axis"]
        )
        grad = result.gradient
    elif op == "cfc":
        result = losses_mod.cfc_loss(
            read_dwnr(spec["a"]).ravel(), read_dwnr(spec["b"]).ravel()
        )
        grad = result.gradient
    elif op == "dyn":
        result = losses_mod.dyn_loss(
            _load_raster(spec["prob"]),
            _load_raster(spec["det"]),
            _load_raster(spec["pseudo"]),
        )
        grad = result.gradient
    elif op == "pretrain":
        result = losses_mod.pretrain_loss(
            (
                _load_raster(spec["prob"]),
                _load_raster(spec["hx"]),
                _load_raster(spec["hy"]),
            ),
            (
                _load_raster(spec["target_prob"]),
                _load_raster(spec["target_hx"]),
                _load_raster(spec["target_hy"]),
            ),
        )
        grad = result.gradient
    elif op == "total":
        weights = losses_mod.LossWeights(
            spec.get("alpha", 0.1), spec.get("beta", 0.15)
        )
        result = losses_mod.total_loss(spec["det"], spec["fea"], spec["dyn"], weights)
    else:
        raise DawnError(f"unknown loss op {op!r}")
    value = result if isinstance(result, float) else result.value
    print(f'{{"op": "{op}", "value": {value!r}}}')
    if spec.get("gradient_out"):
        if grad is None:
            raise DawnError(f"op {op!r} has no raster gradient to write")
        write_dwnr(spec["gradient_out"], grad)
    return 0


def _cmd_cpl(args) -> int:
    prob = read_dwnr(args.prob)
    det = read_dwnr(args.det)
    points = read_points_csv(args.points, prob.shape[1], prob.shape[0])
    label = cpl(
        prob,
        det,
        points,
        CplParams(args.theta, args.d),
        tau=args.tau,
        mode=args.filter_mode,
        round_index=args.round,
    )
    write_mask_png(args.out, label.mask)
    write_json(Path(args.out).with_suffix(".json"), label.provenance)
    return 0


def _cmd_postproc(args) -> int:
    inst = extract_instances(
        read_dwnr(args.prob),
        read_dwnr(args.hx),
        read_dwnr(args.hy),
        PostprocParams(args.fg, args.marker, args.min_area),
    )
    write_instance_png(args.out, inst)
    return 0


def _cmd_eval(args) -> int:
    radius = args.radius if args.radius is not None else get_dataset(args.dataset).match_radius
    report = evaluate_round(args.pred, args.gt, args.points, radius, jobs=args.jobs)
    write_json(args.report, report)
    mean = report["mean"]
    print("  ".join(f"{k}={mean[k]:.4f}" for k in ("DICE", "AJI", "DQ", "SQ", "PQ")))
    return 0


def _cmd_run_loop(args) -> int:
    cfg = LoopConfig.from_dict(read_json(args.config))
    if args.predictor:
        cfg = LoopConfig.from_dict({**cfg.to_dict(), "predictor": args.predictor})
    if args.jobs:
        cfg = LoopConfig.from_dict({**cfg.to_dict(), "jobs": args.jobs})
    records = run_loop(cfg, args.data, args.out)
    for rec in records:
        cov = rec.coverage
        line = f"round {rec.round_index}: coverage m_ini={cov['m_ini']:.3f} m_pse={cov['m_pse']:.3f}"
        if rec.instance_mean:
            line += f"  PQ={rec.instance_mean['PQ']:.4f} Recall={rec.instance_mean['Recall']:.4f}"
        print(line)
    return 0


def _cmd_synth(args) -> int:
    spec_dict = read_json(args.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_seed = spec_dict.get("seed", 0)
    for i in range(args.num_images):
        spec = SceneSpec(
            width=spec_dict.get("width", 96),
            height=spec_dict.get("height", 96),
            count=spec_dict.get("count", 8),
            radius_range=tuple(spec_dict.get("radius_range", (5, 8))),
            ellipticity_range=tuple(spec_dict.get("ellipticity_range", (0.0, 0.0))),
            min_spacing=spec_dict.get("min_spacing", 24.0),
            allow_overlap=spec_dict.get("allow_overlap", False),
            seed=base_seed + i,
        )
        inst, points = generate_scene(spec)
        image_id = f"img_{i:03d}"
        write_instance_png(out / f"{image_id}_gt.png", inst)
        write_points_csv(out / f"{image_id}_points.csv", points)
        from PIL import Image

        Image.fromarray(render_texture(inst, seed=spec.seed), mode="RGB").save(
            out / f"{image_id}_image.png"
        )
    print(f"wrote {args.num_images} scene(s) to {out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="dawn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(_SUBCOMMANDS) + "}")

    p = sub.add_parser("encode", parents=[], help="point annotations -> Gaussian encoding + weights",
                       description="Encode point annotations into detection supervision targets.")
    p.add_argument("--points", required=True, help="annotation CSV with header x,y")
    p.add_argument("--params", required=True, help="JSON with r1/r2/sigma or {'dataset': name}")
    p.add_argument("--size", required=True, type=_parse_size, help="raster size WxH")
    p.add_argument("--out", required=True, help="output encoding (.dwnr)")
    p.add_argument("--weights", help="optional output weight map (.dwnr)")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("loss", help="compute any loss from a JSON spec",
                       description="Compute a loss (and optional gradient raster) from DWNR/PNG inputs.")
    p.add_argument("--spec", required=True, help="loss spec JSON (see README)")
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("cpl", help="combined pseudo-label from prob/det outputs",
                       description="Fuse segmentation and detection outputs into a pseudo-label.")
    p.add_argument("--prob", required=True, help="segmentation probability (.dwnr)")
    p.add_argument("--det", required=True, help="detection output (.dwnr)")
    p.add_argument("--points", required=True, help="annotation CSV")
    p.add_argument("--theta", required=True, type=float, help="detection threshold")
    p.add_argument("--d", required=True, type=float, help="distance-filter radius (px)")
    p.add_argument("--tau", type=float, default=0.5, help="segmentation binarization threshold")
    p.add_argument("--filter-mode", choices=("pixel", "component"), default="pixel")
    p.add_argument("--round", type=int, default=0, help="round index recorded in provenance")
    p.add_argument("--out", required=True, help="output pseudo-label PNG")
    p.set_defaults(func=_cmd_cpl)

    p = sub.add_parser("postproc", help="instances from prob + hover maps",
                       description="Marker-watershed instance extraction.")
    p.add_argument("--prob", required=True)
    p.add_argument("--hx", required=True)
    p.add_argument("--hy", required=True)
    p.add_argument("--out", required=True, help="output 16-bit instance PNG")
    p.add_argument("--fg", type=float, default=0.5, help="foreground threshold")
    p.add_argument("--marker", type=float, default=0.4, help="marker gradient threshold")
    p.add_argument("--min-area", type=int, default=10, help="minimum instance area (px)")
    p.set_defaults(func=_cmd_postproc)

    p = sub.add_parser("eval", help="evaluate predicted instance maps",
                       description="DICE/AJI/DQ/SQ/PQ + detection scores, per image and aggregated.")
    p.add_argument("--pred", required=True, help="directory of predicted instance PNGs")
    p.add_argument("--gt", required=True, help="directory of ground-truth instance PNGs")
    p.add_argument("--points", required=True, help="directory of annotation CSVs")
    p.add_argument("--radius", type=float, help="detection match radius (default: dataset r1)")
    p.add_argument("--dataset", default="TNBC", help="preset supplying the default radius")
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("run-loop", help="run the interactive-supervision loop",
                       description="Predict -> pseudo-label -> re-supervise for I rounds.")
    p.add_argument("--config", required=True, help="loop config JSON")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output root for round artifacts")
    p.add_argument("--predictor", help="override: 'synthetic' or an executable")
    p.add_argument("--jobs", type=int, help="parallel workers within a round")
    p.set_defaults(func=_cmd_run_loop)

    p = sub.add_parser("synth", help="generate synthetic nuclei scenes",
                       description="Deterministic ellipse scenes: GT instance map, points, texture.")
    p.add_argument("--spec", required=True, help="scene spec JSON")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--num-images", type=int, default=1, help="number of seeded scenes")
    p.set_defaults(func=_cmd_synth)

    return parser


def dispatch(argv: "list[str] | None" = None) -> int:
    """Route argv to a subcommand; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except (DawnError, OSError, KeyError, ValueError) as exc:
        print(f"dawn {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
