import json

import numpy as np
import pytest

from ccgan import rng as rng_mod
from ccgan.cli import main
from ccgan.fmat import FeatureMatrix, export_features, import_features
from ccgan.manifest import Manifest

from conftest import write_png


@pytest.fixture
def tiny_dataset(tmp_path):
    """16 images in 2 visually distinct groups (dark vs bright)."""
    raw = tmp_path / "raw"
    raw.mkdir()
    gen = rng_mod.stream(3, "cli-fixture")
    for i in range(16):
        base = 40 if i % 2 == 0 else 210
        arr = np.clip(
            base + gen.normal(0, 12, size=(8, 8, 3)), 0, 255
        ).astype(np.uint8)
        write_png(raw / f"s{i:02d}.png", arr)
    return raw


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestPrepareAugmentFeatures:
    def test_prepare(self, tiny_dataset, tmp_path, capsys):
        rc = run_cli("prepare", "--in", tiny_dataset, "--out", tmp_path / "basic",
                     "--size", "8x8")
        assert rc == 0
        m = Manifest.load(tmp_path / "basic" / "basic.jsonl")
        assert len(m) == 16

    def test_full_chain_to_cluster(self, tiny_dataset, tmp_path):
        basic_dir = tmp_path / "basic"
        assert run_cli("prepare", "--in", tiny_dataset, "--out", basic_dir,
                       "--size", "8x8") == 0
        aug = tmp_path / "aug" / "augmented.jsonl"
        assert run_cli(
            "augment", "--manifest", basic_dir / "basic.jsonl", "--out", aug,
            "--factor", "3", "--seed", "5",
        ) == 0
        assert len(Manifest.load(aug)) == 48
        fmat = tmp_path / "f.fmat"
        assert run_cli(
            "features", "--manifest", basic_dir / "basic.jsonl",
            "--provider", "raw", "--out", fmat,
        ) == 0
        fm = import_features(fmat)
        assert fm.rows == 16 and fm.cols == 192
        labeled = tmp_path / "labeled.jsonl"
        report = tmp_path / "report.json"
        assert run_cli(
            "cluster", "--features", fmat, "--manifest", basic_dir / "basic.jsonl",
            "--augmented", aug, "--kmin", "2", "--kmax", "4", "--runs", "3",
            "--restarts", "3", "--seed", "7", "--out", labeled,
            "--report", report,
        ) == 0
        lm = Manifest.load(labeled)
        assert lm.is_labeled()
        rep = json.loads(report.read_text())
        assert rep["k"] == 2  # two obvious brightness groups

    def test_edges_command(self, tiny_dataset, tmp_path):
        basic_dir = tmp_path / "basic"
        run_cli("prepare", "--in", tiny_dataset, "--out", basic_dir, "--size", "8x8")
        assert run_cli("edges", "--manifest", basic_dir / "basic.jsonl",
                       "--out", tmp_path / "edges") == 0
        em = Manifest.load(tmp_path / "edges" / "edges.jsonl")
        assert len(em) == 16


class TestScoreAndPlot:
    def test_score_and_plot(self, tmp_path):
        gen = rng_mod.stream(8, "score-fixture")
        theta = gen.uniform(0, 2 * np.pi, size=300)
        circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        blob = gen.normal(size=(300, 2))
        export_features(
            FeatureMatrix(circle.astype(np.float32), [f"c{i}" for i in range(300)]),
            tmp_path / "real.fmat",
        )
        export_features(
            FeatureMatrix(blob.astype(np.float32), [f"b{i}" for i in range(300)]),
            tmp_path / "fake.fmat",
        )
        out = tmp_path / "gs.json"
        rc = run_cli(
            "score", "--real", tmp_path / "real.fmat", "--fake", tmp_path / "fake.fmat",
            "--landmarks", "16", "--gamma", "0.5", "--imax", "20",
            "--repeats", "4", "--seed", "3", "--out", out,
        )
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["gs"] > 0
        assert len(doc["mrlt_real"]) == 20
        rc = run_cli("plot-mrlt", "--in", out, "--out",
                     tmp_path / "m.csv", tmp_path / "m.svg")
        assert rc == 0
        assert (tmp_path / "m.csv").read_text().startswith("i,mrlt_real,mrlt_fake")
        assert "<svg" in (tmp_path / "m.svg").read_text()


class TestErrors:
    def test_json_errors(self, tmp_path, capsys):
        rc = main(["--json-errors", "prepare", "--in", str(tmp_path / "nope"),
                   "--out", str(tmp_path / "o"), "--size", "8x8"])
        assert rc == 1
        err = capsys.readouterr().err.strip()
        doc = json.loads(err)
        assert "error" in doc and "message" in doc

    def test_plain_error(self, tmp_path, capsys):
        rc = main(["prepare", "--in", str(tmp_path / "nope"),
                   "--out", str(tmp_path / "o"), "--size", "8x8"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["--version"])
        assert e.value.code == 0
        out = capsys.readouterr().out
        assert "ccgan" in out and "schema" in out
