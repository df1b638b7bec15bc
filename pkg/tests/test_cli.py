"""End-to-end CLI behavior on the toy fixture, including golden outputs.

Expected values are hand-derived from the toy graph: the four training
sequences give edges {x1-x2, x1-x3, x2-x3, x3-x5, x2-x4, x4-x6}, and the
three test samples are ([x5], x6), ([x1], x2), ([x3, x4], x1).
"""

import json

import pytest

from crprobe.caches import read_json
from crprobe.cli import main

GOLDEN_ITEM_KNN_PREDICTIONS = (
    "0\tx3,x1,x2,x5,x4\n"
    "1\tx2,x3,x1,x5,x4\n"
    "2\tx6,x2,x1,x3,x5\n"
)


def run(args):
    return main([str(a) for a in args])


def toy_args(toy_workdir, command, *extra):
    return [command, "--config", toy_workdir / "toy.conf", *extra]


@pytest.fixture
def ingested(toy_workdir):
    assert run(toy_args(toy_workdir, "ingest")) == 0
    return toy_workdir


class TestIngest:
    def test_stats_golden(self, ingested):
        stats = read_json(ingested / "out" / "stats.json")
        assert stats == {
            "schema": "crprobe.stats/1",
            "items": 6,
            "interactions": 24,
            "sequences": 10,
            "avg_length": 2.4,
        }

    def test_rerun_byte_identical(self, ingested):
        cache_dir = next((ingested / "out" / "cache").iterdir())
        before = {p.name: p.read_bytes() for p in cache_dir.iterdir()}
        assert run(toy_args(ingested, "ingest")) == 0
        after = {p.name: p.read_bytes() for p in cache_dir.iterdir()}
        assert before == after

    def test_missing_input_exits_3(self, toy_workdir, capsys):
        rc = run(toy_args(toy_workdir, "ingest", "--set", "dataset.path=/nope/missing.tsv"))
        assert rc == 3
        assert "not found" in capsys.readouterr().err

    def test_split_sizes(self, ingested):
        manifest_dir = next((ingested / "out" / "cache").iterdir())
        manifest = read_json(manifest_dir / "manifest.json")
        assert manifest["train_sequences"] == 4
        assert manifest["valid_samples"] == 3
        assert manifest["test_samples"] == 3

    def test_sample_export_readable(self, ingested):
        cache_dir = next((ingested / "out" / "cache").iterdir())
        lines = (cache_dir / "test_samples.tsv").read_text().splitlines()
        assert lines[0] == "sample_id\tprefix\tlabel"
        assert lines[1] == "0\tx5\tx6"
        assert lines[3] == "2\tx3,x4\tx1"


class TestAnalyze:
    def test_pair_classes_golden(self, ingested):
        assert run(toy_args(ingested, "analyze")) == 0
        payload = read_json(ingested / "out" / "analysis" / "pair_classes.json")
        assert payload["classes"] == {
            "hop0": 6, "hop1": 5, "hop2": 3, "hop3": 1, "others": 0, "none": 0
        }
        assert payload["total_pairs"] == 15
        assert payload["schema"] == "crprobe.pair_classes/1"

    def test_label_cr_golden(self, ingested):
        assert run(toy_args(ingested, "analyze")) == 0
        payload = read_json(ingested / "out" / "analysis" / "label_cr.json")
        assert payload["classes"] == {
            "hop0": 2, "hop1": 1, "hop2": 0, "hop3": 1, "others": 0, "none": 0
        }
        assert payload["samples"] == 3
        assert payload["all_none_samples"] == 0

    def test_cooc_golden(self, ingested):
        assert run(toy_args(ingested, "analyze")) == 0
        payload = read_json(ingested / "out" / "analysis" / "cooc_freq.json")
        assert payload["buckets"] == [[1, 6]]
        assert payload["edges"] == 6

    def test_partition_goldens(self, ingested):
        assert run(toy_args(ingested, "analyze")) == 0
        pure = read_json(ingested / "out" / "analysis" / "pure_counts.json")
        assert pure["slices"] == {"pure-0": 1, "pure-1": 0, "pure-2": 0, "others": 1}
        assert pure["excluded_mixed"] == 1
        di = read_json(ingested / "out" / "analysis" / "direct_indirect.json")
        assert di["direct"] == 2
        assert di["indirect"] == 1
        assert di["samples"] == 3

    def test_without_ingest_exits_3(self, toy_workdir, capsys):
        rc = run(toy_args(toy_workdir, "analyze"))
        assert rc == 3
        assert "ingest" in capsys.readouterr().err

    def test_changed_preprocessing_refuses_stale_cache(self, ingested, capsys):
        rc = run(toy_args(ingested, "analyze", "--set", "min_item_freq=2"))
        assert rc == 3
        assert "ingest" in capsys.readouterr().err


class TestRunModel:
    def test_item_knn_golden_predictions(self, ingested):
        assert run(toy_args(ingested, "run-model", "--model", "item-knn")) == 0
        out = ingested / "out" / "models"
        assert (out / "item-knn.predictions.tsv").read_text() == GOLDEN_ITEM_KNN_PREDICTIONS

    def test_item_knn_golden_metrics(self, ingested):
        assert run(toy_args(ingested, "run-model", "--model", "item-knn")) == 0
        payload = read_json(ingested / "out" / "models" / "item-knn.metrics.json")
        by_name = {s["name"]: s for s in payload["slices"]}
        assert by_name["overall"]["n"] == 3
        assert by_name["overall"]["hits"] == 2
        assert by_name["overall"]["prec_at_k"] == pytest.approx(2 / 3)
        assert by_name["overall"]["mrr_at_k"] == pytest.approx(4 / 9)
        assert by_name["pure-0"]["prec_at_k"] == 1.0
        assert by_name["pure-0"]["mrr_at_k"] == 1.0
        assert by_name["direct"]["prec_at_k"] == 1.0
        assert by_name["direct"]["mrr_at_k"] == pytest.approx(2 / 3)
        assert by_name["indirect"]["prec_at_k"] == 0.0
        assert by_name["others"]["prec_at_k"] == 0.0
        assert payload["model"] == "item-knn"
        assert payload["k"] == 5

    def test_sknn_runs_and_reports(self, ingested):
        assert run(toy_args(ingested, "run-model", "--model", "sknn")) == 0
        payload = read_json(ingested / "out" / "models" / "sknn.metrics.json")
        overall = payload["slices"][0]
        assert overall["name"] == "overall"
        assert overall["n"] == 3

    def test_bpr_same_seed_identical_outputs(self, ingested):
        assert run(toy_args(ingested, "run-model", "--model", "bpr-mf")) == 0
        out = ingested / "out" / "models"
        first = (out / "bpr-mf.predictions.tsv").read_bytes()
        first_metrics = (out / "bpr-mf.metrics.json").read_bytes()
        assert run(toy_args(ingested, "run-model", "--model", "bpr-mf")) == 0
        assert (out / "bpr-mf.predictions.tsv").read_bytes() == first
        assert (out / "bpr-mf.metrics.json").read_bytes() == first_metrics

    def test_unknown_model_exits_2(self, ingested):
        with pytest.raises(SystemExit) as exc:
            run(toy_args(ingested, "run-model", "--model", "neural-magic"))
        assert exc.value.code == 2

    def test_k_larger_than_catalog_exits_2(self, ingested, capsys):
        rc = run(toy_args(ingested, "run-model", "--model", "item-knn", "--set", "k=7"))
        assert rc == 2
        assert "catalog" in capsys.readouterr().err


class TestAuditPredictions:
    def _write_oracle_predictions(self, ingested):
        # put each sample's label first, padded with distinct fillers
        labels = {0: "x6", 1: "x2", 2: "x1"}
        fillers = ["x1", "x2", "x3", "x4", "x5", "x6"]
        path = ingested / "oracle.tsv"
        with open(path, "w") as fh:
            for sid, label in labels.items():
                others = [f for f in fillers if f != label][:4]
                fh.write(f"{sid}\t{label}," + ",".join(others) + "\n")
        return path

    def test_oracle_predictions_score_one(self, ingested):
        path = self._write_oracle_predictions(ingested)
        assert run(toy_args(ingested, "audit-predictions", "--predictions", path)) == 0
        payload = read_json(ingested / "out" / "audit" / "oracle.metrics.json")
        assert payload["slices"][0]["prec_at_k"] == 1.0

    def test_proportions_written_with_schema(self, ingested):
        path = self._write_oracle_predictions(ingested)
        assert run(toy_args(ingested, "audit-predictions", "--predictions", path, "--name", "ext")) == 0
        payload = read_json(ingested / "out" / "audit" / "ext.proportions.json")
        assert payload["schema"] == "crprobe.prediction_cr/1"
        assert sum(payload["proportions"].values()) == pytest.approx(1.0)
        assert "none" in payload["classes"]

    def test_mostly_bad_file_exits_3(self, ingested, capsys):
        path = ingested / "bad.tsv"
        path.write_text("0\tx1,x2,x3,x4,x5\nnot a prediction line\n", encoding="utf-8")
        rc = run(toy_args(ingested, "audit-predictions", "--predictions", path))
        assert rc == 3
        assert "bad lines" in capsys.readouterr().err

    def test_unknown_sample_ids_tolerated(self, ingested):
        # well-formed lines for nonexistent samples parse fine; they are
        # skipped during auditing rather than failing the run
        good = self._write_oracle_predictions(ingested)
        padded = ingested / "padded.tsv"
        padded.write_text(
            good.read_text() + "77\tx1,x2,x3,x4,x5\n", encoding="utf-8"
        )
        rc = run(toy_args(ingested, "audit-predictions", "--predictions", padded, "--name", "p"))
        assert rc == 0
        payload = read_json(ingested / "out" / "audit" / "p.proportions.json")
        assert payload["skipped_records"] == 1

    def test_missing_file_exits_3(self, ingested):
        rc = run(toy_args(ingested, "audit-predictions", "--predictions", "/nope.tsv"))
        assert rc == 3


class TestCompareReports:
    def test_matrix_with_ranks(self, ingested, capsys, tmp_path):
        assert run(toy_args(ingested, "run-model", "--model", "item-knn")) == 0
        assert run(toy_args(ingested, "run-model", "--model", "sknn")) == 0
        out = ingested / "out" / "models"
        matrix_path = tmp_path / "matrix.json"
        rc = run(
            [
                "compare-reports",
                str(out / "item-knn.metrics.json"),
                str(out / "sknn.metrics.json"),
                "--out",
                str(matrix_path),
            ]
        )
        assert rc == 0
        text = capsys.readouterr().out
        assert "item-knn" in text and "sknn" in text and "^1" in text
        payload = json.loads(matrix_path.read_text())
        assert payload["schema"] == "crprobe.comparison/1"
        assert len(payload["rows"]) == 2

    def test_non_report_json_rejected(self, ingested, tmp_path, capsys):
        bogus = tmp_path / "x.json"
        bogus.write_text('{"schema": "other/1"}', encoding="utf-8")
        assert run(["compare-reports", str(bogus)]) == 3
