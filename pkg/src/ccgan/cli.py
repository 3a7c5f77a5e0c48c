"""Command-line interface.

Every subcommand is a thin wrapper over a library function; no pipeline
logic lives here. Exit code is 0 iff the command succeeded; with
--json-errors, failures print one machine-readable JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import CONFIG_SCHEMA_VERSION, __version__
from . import rng as rng_mod


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"size must look like 144x128, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ccgan",
        description="Cluster-conditioned GAN workbench: prepare, label, train, "
        "generate, and score small image collections.",
    )
    p.add_argument(
        "--version", action="version",
        version=f"ccgan {__version__} (config schema v{CONFIG_SCHEMA_VERSION})",
    )
    p.add_argument("--json-errors", action="store_true",
                   help="print failures as JSON on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prepare", help="ingest and resize an image directory")
    sp.add_argument("--in", dest="in_dir", required=True)
    sp.add_argument("--out", dest="out_dir", required=True)
    sp.add_argument("--size", type=_parse_size, default=(144, 128))

    sp = sub.add_parser("augment", help="expand a basic set by affine augmentation")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--factor", type=int, default=5)
    sp.add_argument("--rotate", type=float, default=8.0)
    sp.add_argument("--shift", type=float, default=0.05)
    sp.add_argument("--zoom-min", type=float, default=0.90)
    sp.add_argument("--zoom-max", type=float, default=1.10)
    sp.add_argument("--seed", type=int, required=True)

    sp = sub.add_parser("edges", help="Sobel edge images for every record")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("features", help="extract feature vectors")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--provider", choices=["raw", "edge", "randproj", "external"],
                    default="raw")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--file", help="feature file for the external provider")
    sp.add_argument("--standardize", action="store_true",
                    help="per-dimension z-score before writing")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("cluster", help="estimate classes and label the dataset")
    sp.add_argument("--features", required=True)
    sp.add_argument("--manifest", required=True, help="basic-set manifest")
    sp.add_argument("--augmented", required=True, help="augmented-set manifest")
    sp.add_argument("--stages", type=int, choices=[1, 2], default=1)
    sp.add_argument("--kmin", type=int, default=2)
    sp.add_argument("--kmax", type=int, default=20)
    sp.add_argument("--runs", type=int, default=10)
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--standardize", action="store_true")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--report")

    sp = sub.add_parser("train", help="train the conditional GAN")
    sp.add_argument("--manifest", required=True, help="labeled manifest")
    sp.add_argument("--images", help="image root (default: manifest directory)")
    sp.add_argument("--size", type=_parse_size, default=(32, 32))
    sp.add_argument("--classes", type=int, required=True)
    sp.add_argument("--epochs", type=int, default=500)
    sp.add_argument("--batch", type=int, default=32)
    sp.add_argument("--lr-d", type=float, default=5e-4)
    sp.add_argument("--lr-g", type=float, default=2e-5)
    sp.add_argument("--d-steps", type=int, default=2)
    sp.add_argument("--base-channels", type=int, default=16)
    sp.add_argument("--blocks", type=int, default=4)
    sp.add_argument("--z-dim", type=int, default=None)
    sp.add_argument("--ckpt-interval", type=int, default=0)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True, help="checkpoint directory")
    sp.add_argument("--log", help="metrics.csv path")

    sp = sub.add_parser("generate", help="sample images from a checkpoint")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--class", dest="class_index", type=int, required=True)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("interpolate", help="latent interpolation at fixed class")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--class", dest="class_index", type=int, required=True)
    sp.add_argument("--steps", type=int, default=10)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("score", help="geometry comparison of two feature files")
    sp.add_argument("--real", required=True)
    sp.add_argument("--fake", required=True)
    sp.add_argument("--landmarks", type=int, default=64)
    sp.add_argument("--gamma", type=float, default=1.0 / 128.0)
    sp.add_argument("--imax", type=int, default=100)
    sp.add_argument("--repeats", type=int, default=100)
    sp.add_argument("--maxmin", action="store_true")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("plot-mrlt", help="CSV + SVG views of a score file")
    sp.add_argument("--in", dest="in_path", required=True)
    sp.add_argument("--out", nargs=2, metavar=("CSV", "SVG"), required=True)

    sp = sub.add_parser("run", help="execute the full pipeline from a config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--resume", action="store_true")

    sp = sub.add_parser("validate", help="check a run config without side effects")
    sp.add_argument("--config", required=True)
    return p


def cmd_prepare(args):
    from .pipeline import build_basic_set

    res = build_basic_set(args.in_dir, args.out_dir, args.size[0], args.size[1])
    res.manifest.save(Path(args.out_dir) / "basic.jsonl")
    print(f"{len(res.manifest)} records, {len(res.skipped)} skipped")
    for name, reason in res.skipped:
        print(f"  skipped {name}: {reason}", file=sys.stderr)


def cmd_augment(args):
    from .augment import AugmentParams
    from .manifest import Manifest
    from .pipeline import build_augmented_set, image_root

    basic = Manifest.load(args.manifest)
    params = AugmentParams(
        rotate_deg_max=args.rotate, shift_frac_max=args.shift,
        zoom_min=args.zoom_min, zoom_max=args.zoom_max, factor=args.factor,
    )
    out_path = Path(args.out)
    aug = build_augmented_set(
        basic, params, args.seed, image_root(args.manifest), out_path.parent
    )
    aug.save(out_path)
    print(f"{len(aug)} records")


def cmd_edges(args):
    from .manifest import Manifest
    from .pipeline import build_edge_set, image_root

    manifest = Manifest.load(args.manifest)
    out = build_edge_set(manifest, image_root(args.manifest), args.out)
    out.save(Path(args.out) / "edges.jsonl")
    print(f"{len(out)} edge images")


def cmd_features(args):
    from .features import FeatureProvider, extract, standardize
    from .fmat import export_features
    from .manifest import Manifest
    from .pipeline import image_root

    kind = {"raw": "raw_rgb", "edge": "raw_edge",
            "randproj": "random_projection", "external": "external"}[args.provider]
    provider = FeatureProvider(kind, dim=args.dim, seed=args.seed, path=args.file)
    manifest = Manifest.load(args.manifest)
    fm = extract(manifest, provider, image_root(args.manifest))
    if args.standardize:
        fm = standardize(fm)
    export_features(fm, args.out)
    print(f"{fm.rows} x {fm.cols} features")


def cmd_cluster(args):
    from .features import standardize
    from .fmat import import_features
    from .manifest import Manifest
    from .xmeans import (
        ClusterConfig,
        cluster_dataset,
        label_manifest,
        two_stage_cluster,
    )

    fm = import_features(args.features)
    if args.standardize:
        fm = standardize(fm)
    x = fm.data.astype(np.float64)
    cfg = ClusterConfig(
        k_min=args.kmin, k_max=args.kmax, xmeans_runs=args.runs,
        restarts=args.restarts, stages=args.stages, seed=args.seed,
    )
    if args.stages == 2:
        labels = two_stage_cluster(x, cfg, args.seed)
        report = {"stages": 2, "k": int(np.unique(labels).size)}
    else:
        model = cluster_dataset(x, cfg, args.seed)
        labels = model.assignments
        report = {"stages": 1, "k": int(model.k), "inertia": model.inertia,
                  "bic": model.bic}
    basic = Manifest.load(args.manifest)
    augmented = Manifest.load(args.augmented)
    labeled = label_manifest(basic, labels, augmented)
    labeled.save(args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2, sort_keys=True))
    print(f"k={report['k']}")


def cmd_train(args):
    from .gan.config import GanConfig
    from .gan.train import train
    from .manifest import Manifest
    from .pipeline import image_root

    blocks = args.blocks
    cfg = GanConfig(
        img_h=args.size[0], img_w=args.size[1], base_channels=args.base_channels,
        n_classes=args.classes, n_gen_blocks=blocks,
        z_dim=args.z_dim if args.z_dim else 4 * (blocks + 1),
        lr_d=args.lr_d, lr_g=args.lr_g, batch_size=args.batch,
        d_steps_per_g=args.d_steps, epochs=args.epochs, seed=args.seed,
    ).check()
    manifest = Manifest.load(args.manifest)
    root = args.images if args.images else image_root(args.manifest)
    ckpt, stats = train(
        manifest, root, cfg, out_dir=args.out,
        ckpt_interval=args.ckpt_interval, metrics_path=args.log,
    )
    last = stats[-1] if stats else None
    if last:
        print(f"epoch {last.epoch}: loss_d={last.loss_d:.4f} loss_g={last.loss_g:.4f}")
    print(f"checkpoint: {Path(args.out) / 'ckpt_final.bin'}")


def cmd_generate(args):
    from .gan.checkpoint import load_checkpoint
    from .gan.sample import generate
    from .images import save_image

    ckpt = load_checkpoint(args.ckpt)
    imgs = generate(ckpt, args.class_index, args.count, args.seed)
    out = Path(args.out)
    for i, img in enumerate(imgs):
        save_image(img, out / f"class{args.class_index:03d}_{i:04d}.png")
    print(f"{len(imgs)} images -> {out}")


def cmd_interpolate(args):
    from .gan.checkpoint import load_checkpoint
    from .gan.sample import interpolate
    from .images import save_image

    ckpt = load_checkpoint(args.ckpt)
    gen = rng_mod.stream(args.seed, "interpolate")
    z0 = gen.normal(size=ckpt.config.z_dim)
    z1 = gen.normal(size=ckpt.config.z_dim)
    imgs = interpolate(ckpt, args.class_index, z0, z1, args.steps)
    out = Path(args.out)
    for i, img in enumerate(imgs):
        save_image(img, out / f"step{i:02d}.png")
    print(f"{len(imgs)} steps -> {out}")


def cmd_score(args):
    from .fmat import import_features
    from .geoscore import GsConfig, geometry_score, mrlt

    real = import_features(args.real).data.astype(np.float64)
    fake = import_features(args.fake).data.astype(np.float64)
    cfg = GsConfig(
        n_landmarks=args.landmarks, gamma=args.gamma, i_max=args.imax,
        n_repeats=args.repeats, seed=args.seed, maxmin=args.maxmin,
    )
    m_real = mrlt(real, cfg)
    m_fake = mrlt(fake, cfg)
    gs = geometry_score(m_real, m_fake)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps({
        "gs": gs,
        "mrlt_real": [float(v) for v in m_real],
        "mrlt_fake": [float(v) for v in m_fake],
    }, indent=2, sort_keys=True))
    print(f"gs = {gs:.6g}")


def cmd_plot_mrlt(args):
    from .gsplot import mrlt_csv, mrlt_svg

    doc = json.loads(Path(args.in_path).read_text())
    csv_path, svg_path = args.out
    mrlt_csv(doc["mrlt_real"], doc["mrlt_fake"], csv_path)
    mrlt_svg(doc["mrlt_real"], doc["mrlt_fake"], svg_path)
    print(f"wrote {csv_path} and {svg_path}")


def cmd_run(args):
    from .runconfig import RunConfig
    from .runner import run_pipeline

    cfg = RunConfig.load(args.config)
    run_dir = run_pipeline(cfg, resume=args.resume)
    print(f"run complete: {run_dir}")


def cmd_validate(args):
    from .runconfig import RunConfig

    cfg = RunConfig.load(args.config)
    violations = cfg.validate()
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return 1
    print("config ok")
    return 0


COMMANDS = {
    "prepare": cmd_prepare,
    "augment": cmd_augment,
    "edges": cmd_edges,
    "features": cmd_features,
    "cluster": cmd_cluster,
    "train": cmd_train,
    "generate": cmd_generate,
    "interpolate": cmd_interpolate,
    "score": cmd_score,
    "plot-mrlt": cmd_plot_mrlt,
    "run": cmd_run,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = COMMANDS[args.command](args)
        return 0 if rc is None else rc
    except Exception as e:  # noqa: BLE001 - single reporting point
        if args.json_errors:
            print(
                json.dumps({"error": type(e).__name__, "message": str(e)}),
                file=sys.stderr,
            )
        else:
            print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
