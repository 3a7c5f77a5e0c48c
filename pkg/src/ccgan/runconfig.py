"""End-to-end run configuration: one TOML document driving every stage."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

from .augment import AugmentParams
from .gan.config import GanConfig
from .geoscore import GsConfig
from .xmeans import ClusterConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass
class RunConfig:
    input_dir: Path
    run_dir: Path
    seed: int | None
    img_h: int = 32
    img_w: int = 32
    augment: AugmentParams = field(default_factory=AugmentParams)
    features: dict = field(default_factory=lambda: {"provider": "raw"})
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    gan: GanConfig = field(default_factory=GanConfig)
    score: GsConfig = field(default_factory=GsConfig)
    generate_per_class: int = 64
    ckpt_interval: int = 0

    @staticmethod
    def load(path: str | Path) -> "RunConfig":
        with open(path, "rb") as f:
            doc = tomllib.load(f)
        return RunConfig.from_dict(doc, base=Path(path).resolve().parent)

    @staticmethod
    def from_dict(doc: dict, base: Path | None = None) -> "RunConfig":
        base = base or Path.cwd()

        def path_of(v):
            p = Path(v)
            return p if p.is_absolute() else base / p

        run = doc.get("run", {})
        cfg = RunConfig(
            input_dir=path_of(run.get("input_dir", "input")),
            run_dir=path_of(run.get("run_dir", "run")),
            seed=run.get("seed"),
            img_h=int(run.get("img_h", 32)),
            img_w=int(run.get("img_w", 32)),
            generate_per_class=int(run.get("generate_per_class", 64)),
            ckpt_interval=int(run.get("ckpt_interval", 0)),
        )
        if "augment" in doc:
            cfg.augment = AugmentParams(**doc["augment"])
        if "features" in doc:
            cfg.features = dict(doc["features"])
        if "cluster" in doc:
            cfg.cluster = ClusterConfig(**doc["cluster"])
        if "gan" in doc:
            cfg.gan = GanConfig.from_dict(doc["gan"])
        if "score" in doc:
            cfg.score = GsConfig(**doc["score"])
        cfg.gan.img_h, cfg.gan.img_w = cfg.img_h, cfg.img_w
        return cfg

    def validate(self) -> list[str]:
        """All violations found, without side effects; empty when valid."""
        bad = []
        if self.seed is None:
            bad.append("run.seed is mandatory")
        if not Path(self.input_dir).is_dir():
            bad.append(f"input_dir {self.input_dir} does not exist")
        try:
            self.augment.validate()
        except ValueError as e:
            bad.append(f"augment: {e}")
        try:
            self.cluster.validate()
        except ValueError as e:
            bad.append(f"cluster: {e}")
        bad.extend(f"gan: {msg}" for msg in self.gan.validate())
        try:
            self.score.validate()
        except ValueError as e:
            bad.append(f"score: {e}")
        provider = self.features.get("provider", "raw")
        if provider not in ("raw", "edge", "randproj", "external"):
            bad.append(f"features: unknown provider {provider!r}")
        if provider == "randproj" and "dim" not in self.features:
            bad.append("features: randproj needs dim")
        if provider == "external":
            fpath = self.features.get("file")
            if not fpath:
                bad.append("features: external needs file")
            elif not Path(fpath).is_file():
                bad.append(f"features: file {fpath} does not exist")
        if self.generate_per_class < 2:
            bad.append("generate_per_class must be at least 2")
        return bad
