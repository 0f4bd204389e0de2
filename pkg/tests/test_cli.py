"""Command-line interface: artifacts, exit codes, reproducibility."""

import json

import numpy as np
import pytest

import ocelad.cli as cli
from ocelad.autoencoder import NonFiniteLossError
from ocelad.cli import main
from ocelad.injection import GroundTruth
from ocelad.ocel import parse_ocel_json, write_ocel_json
from ocelad.scoring import (
    DetectionReport,
    iqr_threshold,
    label_events,
    report_from_json,
    report_to_json,
)

from conftest import make_log


def run(args):
    return main(args)


@pytest.fixture()
def small_log_path(tmp_path):
    path = tmp_path / "small.jsonocel"
    assert run(["generate", "--orders", "20", "--seed", "3", "-o", str(path)]) == 0
    return path


class TestGenerate:
    def test_writes_parseable_log(self, tmp_path):
        path = tmp_path / "log.jsonocel"
        assert run(["generate", "--orders", "5", "--seed", "7", "-o", str(path)]) == 0
        log = parse_ocel_json(path.read_bytes())
        assert len(log.events) > 0

    def test_byte_identical_reruns(self, tmp_path):
        a = tmp_path / "a.jsonocel"
        b = tmp_path / "b.jsonocel"
        run(["generate", "--orders", "8", "--seed", "1", "-o", str(a)])
        run(["generate", "--orders", "8", "--seed", "1", "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_shape_flags(self, tmp_path):
        path = tmp_path / "log.jsonocel"
        run(
            [
                "generate", "--orders", "4", "--seed", "0",
                "--items-min", "2", "--items-max", "2",
                "--group-min", "2", "--group-max", "2",
                "-o", str(path),
            ]
        )
        log = parse_ocel_json(path.read_bytes())
        assert len(log.events) == 4 * 3 + 2 * 2

    def test_config_file_and_flag_precedence(self, tmp_path):
        config = tmp_path / "settings.json"
        config.write_text(json.dumps({"orders": 2, "seed": 5}))
        from_config = tmp_path / "from_config.jsonocel"
        run(["generate", "--config", str(config), "-o", str(from_config)])
        flag_wins = tmp_path / "flag_wins.jsonocel"
        run(["generate", "--config", str(config), "--orders", "4", "-o", str(flag_wins)])
        n_config = len(parse_ocel_json(from_config.read_bytes()).events)
        n_flag = len(parse_ocel_json(flag_wins.read_bytes()).events)
        assert n_flag > n_config


class TestInject:
    def test_contaminates_with_truth(self, tmp_path, small_log_path):
        out = tmp_path / "dirty.jsonocel"
        truth_path = tmp_path / "truth.csv"
        code = run(
            ["inject", "-i", str(small_log_path), "-o", str(out), "--truth",
             str(truth_path), "--rate", "0.1", "--seed", "4"]
        )
        assert code == 0
        original = parse_ocel_json(small_log_path.read_bytes())
        contaminated = parse_ocel_json(out.read_bytes())
        truth = GroundTruth.from_csv(truth_path.read_text())
        n = len(original.events)
        per_type = round(0.1 * n / 2.9)
        assert len(contaminated.events) == n + per_type
        assert sum(1 for v in truth.labels.values() if v != "normal") == 3 * per_type

    def test_rate_zero_identity(self, tmp_path, small_log_path):
        out = tmp_path / "same.jsonocel"
        run(["inject", "-i", str(small_log_path), "-o", str(out), "--rate", "0"])
        assert parse_ocel_json(out.read_bytes()) == parse_ocel_json(small_log_path.read_bytes())

    def test_default_truth_path(self, tmp_path, small_log_path):
        out = tmp_path / "dirty.jsonocel"
        run(["inject", "-i", str(small_log_path), "-o", str(out), "--rate", "0.1"])
        assert (tmp_path / "dirty.truth.csv").exists()

    def test_missing_input_is_config_error(self, tmp_path):
        code = run(["inject", "-i", str(tmp_path / "nope.jsonocel"), "-o", str(tmp_path / "x")])
        assert code == 2

    def test_infeasible_injection_exit_code(self, tmp_path):
        rows = [(f"e{i:02d}", "act", i, ["hub"], {"x": 1.0}) for i in range(34)]
        log = make_log(rows, {"hub": "T"})
        path = tmp_path / "flat.jsonocel"
        path.write_bytes(write_ocel_json(log))
        code = run(["inject", "-i", str(path), "-o", str(tmp_path / "out.jsonocel")])
        assert code == 3


class TestDetect:
    def detect_args(self, log_path, out_path, seed="5"):
        return [
            "detect", "-i", str(log_path), "-o", str(out_path),
            "--epochs", "40", "--hidden1", "8", "--hidden2", "4", "--seed", seed,
        ]

    def test_writes_report_json_and_csv(self, tmp_path, small_log_path):
        out = tmp_path / "report.json"
        assert run(self.detect_args(small_log_path, out)) == 0
        report = report_from_json(out.read_text())
        log = parse_ocel_json(small_log_path.read_bytes())
        assert len(report.event_ids) == len(log.events)
        assert (tmp_path / "report.csv").exists()
        labels_from_scores = report.scores > report.threshold.tau
        np.testing.assert_array_equal(report.labels, labels_from_scores)

    def test_same_seed_byte_identical(self, tmp_path, small_log_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        run(self.detect_args(small_log_path, a))
        run(self.detect_args(small_log_path, b))
        assert a.read_bytes() == b.read_bytes()

    def test_missing_input(self, tmp_path):
        assert run(self.detect_args(tmp_path / "ghost.jsonocel", tmp_path / "r.json")) == 2

    def test_non_finite_loss_exit_code(self, tmp_path, small_log_path, monkeypatch):
        def explode(graph, config):
            raise NonFiniteLossError(3, float("inf"))

        monkeypatch.setattr(cli, "train", explode)
        code = run(self.detect_args(small_log_path, tmp_path / "r.json"))
        assert code == 4


def write_perfect_run(tmp_path):
    """Report + truth where the two anomalies separate cleanly from eight normals."""
    scores = np.array([9.0, 8.0, 0.3, 0.28, 0.26, 0.24, 0.22, 0.2, 0.15, 0.1])
    threshold = iqr_threshold(scores)
    event_ids = tuple(f"e{i}" for i in range(1, 11))
    report = DetectionReport(
        event_ids=event_ids,
        scores=scores,
        labels=label_events(scores, threshold),
        threshold=threshold,
    )
    report_path = tmp_path / "report.json"
    report_path.write_text(report_to_json(report))
    truth_path = tmp_path / "truth.csv"
    labels = {"e1": "attr_swap", "e2": "random_activity"}
    labels.update({f"e{i}": "normal" for i in range(3, 11)})
    truth_path.write_text(GroundTruth(labels=labels).to_csv())
    return report_path, truth_path


class TestEvaluate:
    def test_perfect_run_metrics(self, tmp_path, capsys):
        report_path, truth_path = write_perfect_run(tmp_path)
        metrics_path = tmp_path / "metrics.json"
        code = run(
            ["evaluate", "--report", str(report_path), "--truth", str(truth_path),
             "-o", str(metrics_path)]
        )
        assert code == 0
        table = capsys.readouterr().out
        assert "100.0" in table
        doc = json.loads(metrics_path.read_text())
        run0 = doc["runs"][0]
        assert run0["f1"] == 1.0
        assert run0["auc_roc"] == 1.0
        assert run0["auc_pr"] == 1.0
        assert run0["recall_at_k"] == 1.0
        assert run0["per_type_recall"] == {"attr_swap": 1.0, "random_activity": 1.0}

    def test_multiple_reports_aggregate(self, tmp_path, capsys):
        report_path, truth_path = write_perfect_run(tmp_path)
        code = run(
            ["evaluate", "--report", str(report_path), str(report_path),
             "--truth", str(truth_path), "-o", str(tmp_path / "m.json")]
        )
        assert code == 0
        assert "mean +/- std" in capsys.readouterr().out
        doc = json.loads((tmp_path / "m.json").read_text())
        assert doc["mean"]["f1"] == 1.0
        assert doc["std"]["f1"] == 0.0

    def test_id_mismatch_exit_code(self, tmp_path):
        report_path, truth_path = write_perfect_run(tmp_path)
        truth_path.write_text("event_id,label\nother,normal\n")
        code = run(["evaluate", "--report", str(report_path), "--truth", str(truth_path)])
        assert code == 5


class TestPipeline:
    def test_end_to_end_artifacts(self, tmp_path, capsys):
        out_dir = tmp_path / "run"
        code = run(
            [
                "pipeline", "-o", str(out_dir), "--orders", "30", "--seed", "5",
                "--repeat", "2", "--epochs", "40", "--hidden1", "8", "--hidden2", "4",
            ]
        )
        assert code == 0
        for name in ("clean.jsonocel", "contaminated.jsonocel", "truth.csv",
                     "metrics.json", "manifest.json"):
            assert (out_dir / name).exists()
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["seeds"]["detect"] == [7, 8]
        assert len(manifest["artifacts"]["reports"]) == 2
        for report_name in manifest["artifacts"]["reports"]:
            assert (out_dir / report_name).exists()
        assert "mean +/- std" in capsys.readouterr().out

    def test_repeat_must_be_positive(self, tmp_path):
        code = run(["pipeline", "-o", str(tmp_path / "x"), "--orders", "30", "--repeat", "0"])
        assert code == 2
