"""Dataset manifests: ordered sample records with provenance and labels.

A manifest row ties a sample id to an image file (path relative to the
manifest's directory), to the original it was derived from, and to an
optional class label. Serialized as JSON Lines, one record per line, with
ordering significant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

IDENTITY = "identity"


class ManifestError(ValueError):
    """Manifest invariant violation."""


@dataclass(frozen=True)
class Record:
    sample_id: str
    path: str
    source_id: str
    transform: str | dict = IDENTITY
    label: int | None = None

    def is_original(self) -> bool:
        return self.transform == IDENTITY

    def to_json(self) -> str:
        obj = {
            "sample_id": self.sample_id,
            "path": self.path,
            "source_id": self.source_id,
            "transform": self.transform,
        }
        if self.label is not None:
            obj["label"] = int(self.label)
        return json.dumps(obj, ensure_ascii=False, sort_keys=True)

    @staticmethod
    def from_json(line: str) -> "Record":
        obj = json.loads(line)
        return Record(
            sample_id=obj["sample_id"],
            path=obj["path"],
            source_id=obj["source_id"],
            transform=obj.get("transform", IDENTITY),
            label=obj.get("label"),
        )


@dataclass
class Manifest:
    records: list[Record] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    def ids(self) -> list[str]:
        return [r.sample_id for r in self.records]

    def labels(self) -> list[int]:
        if not self.is_labeled():
            raise ManifestError("manifest is unlabeled")
        return [r.label for r in self.records]  # type: ignore[misc]

    def is_labeled(self) -> bool:
        return bool(self.records) and all(r.label is not None for r in self.records)

    def by_id(self) -> dict[str, Record]:
        return {r.sample_id: r for r in self.records}

    def originals(self) -> list[Record]:
        return [r for r in self.records if r.is_original()]

    def validate(self) -> None:
        """Check manifest invariants, raising ManifestError on the first hit."""
        seen: set[str] = set()
        for r in self.records:
            if r.sample_id in seen:
                raise ManifestError(f"duplicate sample_id {r.sample_id!r}")
            seen.add(r.sample_id)
        index = self.by_id()
        for r in self.records:
            src = index.get(r.source_id)
            if src is None:
                raise ManifestError(
                    f"{r.sample_id!r}: source_id {r.source_id!r} not in manifest"
                )
            if not src.is_original():
                raise ManifestError(
                    f"{r.sample_id!r}: source {r.source_id!r} is not an original"
                )
        labeled = [r for r in self.records if r.label is not None]
        if labeled and len(labeled) != len(self.records):
            raise ManifestError("manifest mixes labeled and unlabeled records")
        if labeled:
            for r in self.records:
                if r.label != index[r.source_id].label:
                    raise ManifestError(
                        f"{r.sample_id!r}: label differs from its source's label"
                    )

    def with_labels(self, labels: dict[str, int]) -> "Manifest":
        """New manifest with every record labeled via its own sample_id."""
        out = []
        for r in self.records:
            if r.sample_id not in labels:
                raise ManifestError(f"no label for sample {r.sample_id!r}")
            out.append(replace(r, label=int(labels[r.sample_id])))
        return Manifest(out)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for r in self.records:
                f.write(r.to_json() + "\n")

    @staticmethod
    def load(path: str | Path) -> "Manifest":
        with open(path, "r", encoding="utf-8") as f:
            records = [Record.from_json(line) for line in f if line.strip()]
        return Manifest(records)


def from_records(records: Iterable[Record]) -> Manifest:
    m = Manifest(list(records))
    m.validate()
    return m
