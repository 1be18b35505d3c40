import csv

import numpy as np
import pytest

from peep.cli import main
from peep.exceptions import EquivalenceCheckFailed
from peep.synthetic import generate_corpus

TRAIN_ARGS = [
    "--width", "16", "--height", "16", "--nc", "6", "--imthresh", "1",
    "--hidden", "16,8", "--max-epochs", "5",
]


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    generate_corpus(root, seed=2, class_sizes=(6,) * 4, width=16, height=16)
    return root


@pytest.fixture(scope="module")
def bundle_path(corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("models") / "model.peep"
    code = main(["train", str(corpus_dir), *TRAIN_ARGS, "--epsilon", "6", "--out", str(out)])
    assert code == 0
    return out


class TestTrain:
    def test_train_writes_bundle(self, bundle_path):
        assert bundle_path.exists()
        assert bundle_path.read_bytes()[:6] == b"PEEP1\n"

    def test_same_seed_gives_identical_bytes(self, corpus_dir, tmp_path):
        a, b = tmp_path / "a.peep", tmp_path / "b.peep"
        for out in (a, b):
            code = main(
                ["train", str(corpus_dir), *TRAIN_ARGS, "--seed", "9", "--out", str(out)]
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_partitioned_training_runs(self, corpus_dir, tmp_path):
        out = tmp_path / "p.peep"
        code = main(
            ["train", str(corpus_dir), *TRAIN_ARGS, "--partitions", "3", "--out", str(out)]
        )
        assert code == 0 and out.exists()

    def test_epsilon_out_of_range_warns_but_trains(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "w.peep"
        code = main(
            ["train", str(corpus_dir), *TRAIN_ARGS, "--epsilon", "100", "--out", str(out)]
        )
        assert code == 0
        assert "outside the recommended" in capsys.readouterr().err


class TestRecognize:
    def test_recognize_prints_class(self, corpus_dir, bundle_path, capsys):
        probe = sorted((corpus_dir / "person_00").glob("*.pgm"))[0]
        code = main(["recognize", str(bundle_path), str(probe), "--seed", "1"])
        assert code == 0
        out = capsys.readouterr().out
        assert "predicted:" in out
        assert "person_" in out

    def test_corrupt_bundle_is_a_data_error(self, corpus_dir, tmp_path):
        bad = tmp_path / "bad.peep"
        bad.write_bytes(b"GARBAGE")
        probe = sorted((corpus_dir / "person_00").glob("*.pgm"))[0]
        assert main(["recognize", str(bad), str(probe)]) == 2

    def test_missing_argument_is_a_usage_error(self, bundle_path):
        assert main(["recognize", str(bundle_path)]) == 1


class TestBenchmark:
    def test_row_count_and_csv(self, corpus_dir, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(
            [
                "benchmark", str(corpus_dir), *TRAIN_ARGS,
                "--epsilon-grid", "8", "--epsilon-grid", "0.5",
                "--repeats", "2", "--out", str(out),
            ]
        )
        assert code == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == (2 + 1) * 2
        baselines = [r for r in rows if r["epsilon"] == ""]
        assert len(baselines) == 2
        for r in rows:
            assert float(r["perturb_time_per_image_s"]) > 0
            assert 0.0 <= float(r["weighted_f1"]) <= 1.0


class TestAttack:
    def test_fit_root_attack_writes_grid_and_csv(self, corpus_dir, tmp_path):
        out_dir = tmp_path / "attack"
        probes = sorted((corpus_dir / "person_01").glob("*.pgm"))[:2]
        code = main(
            [
                "attack", str(probes[0]), str(probes[1]),
                "--fit-root", str(corpus_dir),
                "--epsilon-grid", "none", "--epsilon-grid", "8",
                "--epsilon-grid", "0.5",
                "--seeds", "2", "--out", str(out_dir),
            ]
        )
        assert code == 0
        with open(out_dir / "rmse.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3 * 2 * 2  # grid x seeds x images
        originals = list(out_dir.glob("*_original.pgm"))
        assert len(originals) == 2
        assert len(list(out_dir.glob("*_np_seed*.pgm"))) == 4
        assert len(list(out_dir.glob("*_eps8_seed*.pgm"))) == 4

    def test_attack_with_saved_basis_bundle(self, corpus_dir, tmp_path):
        basis = tmp_path / "basis.peep"
        out1 = tmp_path / "a1"
        probe = sorted((corpus_dir / "person_02").glob("*.pgm"))[0]
        code = main(
            [
                "attack", str(probe), "--fit-root", str(corpus_dir),
                "--save-model", str(basis), "--epsilon-grid", "8",
                "--out", str(out1),
            ]
        )
        assert code == 0 and basis.exists()
        out2 = tmp_path / "a2"
        code = main(
            ["attack", str(probe), "--model", str(basis), "--epsilon-grid", "8",
             "--out", str(out2)]
        )
        assert code == 0
        assert (out2 / "rmse.csv").exists()

    def test_model_and_fit_root_mutually_exclusive(self, corpus_dir, tmp_path):
        probe = sorted((corpus_dir / "person_00").glob("*.pgm"))[0]
        assert main(["attack", str(probe), "--out", str(tmp_path / "x")]) == 1


class TestMergeDemo:
    def test_merge_demo_passes(self, corpus_dir, tmp_path, capsys):
        code = main(
            [
                "merge-demo", str(corpus_dir), "--partitions", "3",
                "--width", "16", "--height", "16", "--out", str(tmp_path / "stats"),
            ]
        )
        assert code == 0
        assert "PASS" in capsys.readouterr().out
        assert len(list((tmp_path / "stats").glob("*.peepstats"))) == 3

    def test_internal_failure_maps_to_exit_3(self, corpus_dir, tmp_path, monkeypatch):
        import peep.cli as cli_mod

        def boom(*args, **kwargs):
            raise EquivalenceCheckFailed("forced")

        monkeypatch.setattr(cli_mod, "run_merge_demo", boom)
        code = main(
            ["merge-demo", str(corpus_dir), "--out", str(tmp_path / "s")]
        )
        assert code == 3


class TestExitCodes:
    def test_unknown_command_is_usage_error(self):
        assert main(["frobnicate"]) == 1

    def test_empty_dataset_is_data_error(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        out = tmp_path / "x.peep"
        assert main(["train", str(empty), *TRAIN_ARGS, "--out", str(out)]) == 2
