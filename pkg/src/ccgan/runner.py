"""Sequential pipeline execution with provenance and resume.

Stage order: prepare -> augment -> features -> cluster -> train ->
generate -> score -> plot. Each stage writes its artifacts under a fixed
run-directory layout and appends one provenance line (stage, input
hashes, seed, duration). With resume=True a stage whose outputs already
exist is skipped.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from . import rng as rng_mod
from .features import FeatureProvider, extract
from .fmat import FeatureMatrix, export_features, import_features
from .gan.checkpoint import load_checkpoint
from .gan.sample import generate
from .gan.train import train
from .geoscore import geometry_score, mrlt
from .gsplot import mrlt_csv, mrlt_svg
from .images import save_image
from .manifest import Manifest
from .pipeline import build_augmented_set, build_basic_set
from .runconfig import RunConfig
from .xmeans import cluster_dataset, label_manifest, two_stage_cluster

LAYOUT = ("manifest", "augmented", "features", "labels", "ckpt", "samples", "eval")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _provenance(run_dir: Path, stage: str, inputs: list[Path], seed, t0: float):
    rec = {
        "stage": stage,
        "inputs": {p.name: _sha256(p) for p in inputs if p.is_file()},
        "seed": seed,
        "duration_s": round(time.time() - t0, 3),
    }
    with open(run_dir / "provenance.jsonl", "a", encoding="utf-8") as f:
        f.write(json.dumps(rec, sort_keys=True) + "\n")


def run_pipeline(cfg: RunConfig, resume: bool = False) -> Path:
    """Execute every stage; returns the run directory."""
    violations = cfg.validate()
    if violations:
        raise ValueError("invalid config: " + "; ".join(violations))
    run_dir = Path(cfg.run_dir)
    for sub in LAYOUT:
        (run_dir / sub).mkdir(parents=True, exist_ok=True)
    seed = int(cfg.seed)

    def stage(name, outputs, fn, inputs=()):
        outputs = [Path(o) for o in outputs]
        if resume and outputs and all(o.exists() for o in outputs):
            return
        t0 = time.time()
        try:
            fn()
        except Exception as e:
            raise StageError(name, e) from e
        _provenance(run_dir, name, [Path(i) for i in inputs], seed, t0)

    basic_path = run_dir / "manifest" / "basic.jsonl"
    aug_path = run_dir / "augmented" / "augmented.jsonl"
    feat_path = run_dir / "features" / "features.fmat"
    labeled_path = run_dir / "labels" / "labeled.jsonl"
    report_path = run_dir / "labels" / "report.json"
    ckpt_path = run_dir / "ckpt" / "ckpt_final.bin"
    metrics_path = run_dir / "ckpt" / "metrics.csv"
    fake_feat_path = run_dir / "eval" / "generated.fmat"
    gs_path = run_dir / "eval" / "gs.json"

    def do_prepare():
        res = build_basic_set(cfg.input_dir, run_dir / "manifest", cfg.img_h, cfg.img_w)
        res.manifest.save(basic_path)
        if res.skipped:
            (run_dir / "manifest" / "skipped.json").write_text(
                json.dumps(res.skipped, indent=2)
            )

    stage("prepare", [basic_path], do_prepare)

    def do_augment():
        basic = Manifest.load(basic_path)
        aug = build_augmented_set(
            basic, cfg.augment, rng_mod.derive_seed(seed, "augment"),
            basic_path.parent, run_dir / "augmented",
        )
        aug.save(aug_path)

    stage("augment", [aug_path], do_augment, inputs=[basic_path])

    def do_features():
        basic = Manifest.load(basic_path)
        spec = cfg.features
        kind = {"raw": "raw_rgb", "edge": "raw_edge",
                "randproj": "random_projection", "external": "external"}[
            spec.get("provider", "raw")
        ]
        provider = FeatureProvider(
            kind,
            dim=spec.get("dim"),
            seed=spec.get("seed", rng_mod.derive_seed(seed, "features")),
            path=spec.get("file"),
        )
        fm = extract(basic, provider, basic_path.parent)
        export_features(fm, feat_path)

    stage("features", [feat_path], do_features, inputs=[basic_path])

    def do_cluster():
        fm = import_features(feat_path)
        basic = Manifest.load(basic_path)
        augmented = Manifest.load(aug_path)
        x = fm.data.astype(np.float64)
        cseed = rng_mod.derive_seed(seed, "cluster")
        if cfg.cluster.stages == 2:
            labels = two_stage_cluster(x, cfg.cluster, cseed)
            report = {"stages": 2, "k": int(np.unique(labels).size)}
        else:
            model = cluster_dataset(x, cfg.cluster, cseed)
            labels = model.assignments
            report = {
                "stages": 1,
                "k": int(model.k),
                "inertia": model.inertia,
                "bic": model.bic,
            }
        labeled = label_manifest(basic, labels, augmented)
        labeled.save(labeled_path)
        report_path.write_text(json.dumps(report, indent=2, sort_keys=True))

    stage("cluster", [labeled_path, report_path], do_cluster,
          inputs=[feat_path, basic_path, aug_path])

    def do_train():
        labeled = Manifest.load(labeled_path)
        n_classes = len({r.label for r in labeled})
        gan_cfg = cfg.gan
        gan_cfg.n_classes = n_classes
        gan_cfg.seed = rng_mod.derive_seed(seed, "train")
        gan_cfg.check()
        train(labeled, aug_path.parent, gan_cfg, out_dir=run_dir / "ckpt",
              ckpt_interval=cfg.ckpt_interval, metrics_path=metrics_path)

    stage("train", [ckpt_path, metrics_path], do_train, inputs=[labeled_path])

    def do_generate():
        ckpt = load_checkpoint(ckpt_path)
        rows, ids = [], []
        for c in range(ckpt.config.n_classes):
            imgs = generate(
                ckpt, c, cfg.generate_per_class,
                rng_mod.derive_seed(seed, "generate", c),
            )
            for i, img in enumerate(imgs):
                sid = f"gen_c{c:03d}_{i:04d}"
                save_image(img, run_dir / "samples" / f"class{c:03d}" / f"{sid}.png")
                rows.append(img.reshape(-1))
                ids.append(sid)
        fm = FeatureMatrix(np.stack(rows).astype(np.float32), ids)
        export_features(fm, fake_feat_path)

    stage("generate", [fake_feat_path], do_generate, inputs=[ckpt_path])

    def do_score():
        augmented = Manifest.load(aug_path)
        from .pipeline import load_record_image

        real = np.stack(
            [
                load_record_image(r, aug_path.parent).reshape(-1)
                for r in augmented.records
            ]
        )
        fake = import_features(fake_feat_path).data.astype(np.float64)
        gs_cfg = cfg.score
        gs_cfg.seed = rng_mod.derive_seed(seed, "score")
        m_real = mrlt(real, gs_cfg)
        m_fake = mrlt(fake, gs_cfg)
        gs = geometry_score(m_real, m_fake)
        gs_path.write_text(
            json.dumps(
                {
                    "gs": gs,
                    "mrlt_real": [float(v) for v in m_real],
                    "mrlt_fake": [float(v) for v in m_fake],
                },
                indent=2,
                sort_keys=True,
            )
        )

    stage("score", [gs_path], do_score, inputs=[aug_path, fake_feat_path])

    def do_plot():
        doc = json.loads(gs_path.read_text())
        mrlt_csv(doc["mrlt_real"], doc["mrlt_fake"], run_dir / "eval" / "mrlt.csv")
        mrlt_svg(doc["mrlt_real"], doc["mrlt_fake"], run_dir / "eval" / "mrlt.svg")

    stage("plot", [run_dir / "eval" / "mrlt.csv", run_dir / "eval" / "mrlt.svg"],
          do_plot, inputs=[gs_path])

    return run_dir
