"""Dataset construction: ingest, resize, augment, extract edges.

Manifests written here keep image paths relative to the manifest's own
directory, so a manifest plus its image folder is a self-contained store.
Augmentation copies the originals into the output store so the augmented
set never depends on the basic set's files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import rng as rng_mod
from .augment import AugmentParams, apply_descriptor, sample_transform
from .images import ImageFormatError, load_image, resize, save_image, to_edge
from .manifest import IDENTITY, Manifest, ManifestError, Record

SUPPORTED_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclass
class BuildResult:
    manifest: Manifest
    skipped: list[tuple[str, str]]  # (filename, reason)


def image_root(manifest_path: str | Path) -> Path:
    return Path(manifest_path).resolve().parent


def load_record_image(record: Record, root: str | Path):
    return load_image(Path(root) / record.path)


def build_basic_set(
    in_dir: str | Path, out_dir: str | Path, h: int, w: int
) -> BuildResult:
    """Load every supported image in in_dir, resize to h x w, write PNGs.

    Files are processed in lexicographic order; per-file decode failures are
    skipped and reported in the result. Raises if in_dir holds no candidate
    files at all.
    """
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    candidates = sorted(
        p for p in in_dir.iterdir() if p.suffix.lower() in SUPPORTED_SUFFIXES
    )
    if not candidates:
        raise ValueError(f"no supported images in {in_dir}")

    records = []
    skipped = []
    for src in candidates:
        try:
            img = load_image(src)
        except (IOError, ImageFormatError) as e:
            skipped.append((src.name, str(e)))
            continue
        img = resize(img, h, w)
        sample_id = src.stem
        rel = f"images/{sample_id}.png"
        save_image(img, out_dir / rel)
        records.append(Record(sample_id=sample_id, path=rel, source_id=sample_id))
    manifest = Manifest(records)
    manifest.validate()
    return BuildResult(manifest=manifest, skipped=skipped)


def build_augmented_set(
    basic: Manifest,
    p: AugmentParams,
    seed: int,
    in_root: str | Path,
    out_dir: str | Path,
) -> Manifest:
    """Each original plus (factor - 1) augmentations of it.

    Per-record rng streams are keyed by record index, so the output is
    reproducible from the seed regardless of execution order. Labels, when
    present on the basic set, propagate to every augmented record.
    """
    p.validate()
    if any(not r.is_original() for r in basic.records):
        raise ManifestError("augmentation input must contain only identity records")
    basic.validate()
    out_dir = Path(out_dir)

    records = []
    for idx, rec in enumerate(basic.records):
        img = load_record_image(rec, in_root)
        rel = f"images/{rec.sample_id}.png"
        save_image(img, out_dir / rel)
        records.append(
            Record(
                sample_id=rec.sample_id,
                path=rel,
                source_id=rec.sample_id,
                transform=IDENTITY,
                label=rec.label,
            )
        )
        gen = rng_mod.stream(seed, "augment", idx)
        for j in range(1, p.factor):
            desc = sample_transform(p, gen)
            aug = apply_descriptor(img, desc)
            aug_id = f"{rec.sample_id}__aug{j}"
            aug_rel = f"images/{aug_id}.png"
            save_image(aug, out_dir / aug_rel)
            records.append(
                Record(
                    sample_id=aug_id,
                    path=aug_rel,
                    source_id=rec.sample_id,
                    transform=desc,
                    label=rec.label,
                )
            )
    manifest = Manifest(records)
    manifest.validate()
    return manifest


def build_edge_set(
    manifest: Manifest, in_root: str | Path, out_dir: str | Path
) -> Manifest:
    """Sobel edge image of every record, written as single-channel PNGs."""
    out_dir = Path(out_dir)
    records = []
    for rec in manifest.records:
        img = load_record_image(rec, in_root)
        edge = to_edge(img)
        rel = f"images/{rec.sample_id}.png"
        save_image(edge, out_dir / rel)
        records.append(
            Record(
                sample_id=rec.sample_id,
                path=rel,
                source_id=rec.source_id,
                transform=rec.transform,
                label=rec.label,
            )
        )
    out = Manifest(records)
    out.validate()
    return out
