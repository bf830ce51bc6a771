import hashlib
import json

import pytest

from crowdenergy.cli import main


SMALL_CONFIG = {
    "n_users": 60,
    "campaign_questions": 50,
    "trickle_before": 15,
    "trickle_after": 10,
}


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "data"
    cfg = out.parent / "config.json"
    cfg.write_text(json.dumps(SMALL_CONFIG))
    code = main(["simulate", "--seed", "3", "--out", str(out), "--config", str(cfg)])
    assert code == 0
    return out


class TestSimulate:
    def test_outputs_present(self, dataset):
        for name in ("questions.csv", "answers.csv", "meter.csv",
                     "ground_truth.json", "manifest.json"):
            assert (dataset / name).exists()

    def test_same_seed_checksum_identical(self, dataset, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(SMALL_CONFIG))
        again = tmp_path / "data2"
        assert main(["simulate", "--seed", "3", "--out", str(again),
                     "--config", str(cfg)]) == 0
        for name in ("questions.csv", "answers.csv", "meter.csv", "ground_truth.json"):
            assert sha(dataset / name) == sha(again / name), name

    def test_bad_config_is_data_error(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"volume": 11}))
        code = main(["simulate", "--out", str(tmp_path / "x"), "--config", str(cfg)])
        assert code == 2

    def test_missing_out_dir_created(self, tmp_path):
        nested = tmp_path / "a" / "b" / "c"
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(SMALL_CONFIG))
        assert main(["simulate", "--out", str(nested), "--config", str(cfg)]) == 0
        assert (nested / "manifest.json").exists()


class TestAnalyze:
    ARGS = ["--trees", "8", "--reps", "2", "--min-node-size", "10",
            "--nu-range", "2:10", "--seed", "1"]

    def test_artifacts_and_rerun_identical(self, dataset, tmp_path):
        out1 = tmp_path / "r1"
        assert main(["analyze", str(dataset), "--out", str(out1)] + self.ARGS) == 0
        names = ["manifest.json", "validation.json", "ranks.csv", "cutoffs.csv", "report.md"]
        for name in names:
            assert (out1 / name).exists()

        out2 = tmp_path / "r2"
        assert main(["analyze", str(dataset), "--out", str(out2),
                     "--manifest", str(out1 / "manifest.json")]) == 0
        for name in names:
            assert sha(out1 / name) == sha(out2 / name), name

    def test_validation_json_contents(self, dataset, tmp_path):
        out = tmp_path / "v"
        assert main(["analyze", str(dataset), "--out", str(out)] + self.ARGS) == 0
        payload = json.loads((out / "validation.json").read_text())
        assert set(payload) >= {"dataset", "oob_mse", "ks", "cutoff", "grid", "recovery"}
        assert len(payload["oob_mse"]["true"]) == 2
        assert 0.0 <= payload["ks"]["p_value"] <= 1.0

    def test_missing_dataset_is_data_error(self, tmp_path):
        assert main(["analyze", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == 2


class TestUsageErrors:
    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == 1

    def test_bad_range_flag(self, tmp_path):
        assert main(["analyze", str(tmp_path), "--out", str(tmp_path / "o"),
                     "--nu-range", "banana"]) == 1

    def test_missing_required_flag(self):
        assert main(["simulate"]) == 1
