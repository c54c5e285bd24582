import json

import pytest
from click.testing import CliRunner

from knowvl.cli import main
from knowvl.formats import read_knowledge_base


@pytest.fixture
def runner():
    return CliRunner()


def fixture(name):
    from conftest import FIXTURES

    return str(FIXTURES / name)


class TestExtract:
    def test_concepts_from_caption_parses(self, runner, tmp_path):
        out = tmp_path / "phrases.jsonl"
        result = runner.invoke(main, ["extract", "--parses",
                                      fixture("caption_parses.conllu"),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(rows) == 25
        by_id = {r["sentence_id"]: r["phrase"] for r in rows}
        assert by_id["cap001"] == "Chinese paper cuttings"

    def test_categories(self, runner, tmp_path):
        out = tmp_path / "phrases.jsonl"
        result = runner.invoke(main, ["extract", "--parses",
                                      fixture("definition_parses.conllu"),
                                      "--kind", "category", "--out", str(out)])
        assert result.exit_code == 0
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert {r["sentence_id"]: r["phrase"] for r in rows}["def001"] \
            == "traditional Japanese gate"


class TestBuildKb:
    def test_builds_kb_from_pages(self, runner, tmp_path):
        pages = tmp_path / "pages.jsonl"
        pages.write_text(
            json.dumps({"name": "def001",
                        "text": "A torii is a traditional Japanese gate."}) + "\n")
        out = tmp_path / "kb.jsonl"
        result = runner.invoke(main, ["build-kb", "--pages", str(pages),
                                      "--parses", fixture("definition_parses.conllu"),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        [concept] = read_knowledge_base(out)
        assert concept.category == "traditional Japanese gate"


class TestBuildCorpus:
    def test_missing_seed_is_exit_1(self, runner, tmp_path):
        result = runner.invoke(main, [
            "build-corpus", "--records", fixture("records.jsonl"),
            "--kb", fixture("kb.jsonl"),
            "--embeddings", fixture("embeddings.vec"),
            "--out", str(tmp_path / "c.jsonl"),
        ])
        assert result.exit_code == 1
        err = json.loads(result.stderr.splitlines()[-1])
        assert "--seed" in err["message"]

    def test_build_and_reproducibility(self, runner, tmp_path):
        outs = []
        for name in ("a.jsonl", "b.jsonl"):
            out = tmp_path / name
            result = runner.invoke(main, [
                "build-corpus", "--records", fixture("records.jsonl"),
                "--kb", fixture("kb.jsonl"),
                "--embeddings", fixture("embeddings.vec"),
                "--seed", "21", "--out", str(out),
            ])
            assert result.exit_code == 0, result.output
            summary = json.loads(result.output.splitlines()[-1])
            assert summary["effective_seed"] == 21
            assert summary["examples"] == 40
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_config_file_provides_seed_flags_win(self, runner, tmp_path):
        cfg = tmp_path / "knowvl.cfg"
        cfg.write_text("seed = 5\nmlm_rate = 0.2\n")
        out = tmp_path / "c.jsonl"
        result = runner.invoke(main, [
            "build-corpus", "--records", fixture("records.jsonl"),
            "--kb", fixture("kb.jsonl"),
            "--embeddings", fixture("embeddings.vec"),
            "--config", str(cfg), "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output.splitlines()[-1])["effective_seed"] == 5


class TestSampleAudit:
    def test_audit_records_decisions(self, runner, tmp_path):
        out = tmp_path / "audit.jsonl"
        result = runner.invoke(main, [
            "sample-audit", "--records", fixture("records.jsonl"),
            "--kb", fixture("kb.jsonl"),
            "--embeddings", fixture("embeddings.vec"),
            "--seed", "4", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(rows) == 40
        assert all("locate" in r and "labels" in r for r in rows)


class TestGradcheckAndSelftest:
    def test_gradcheck_passes(self, runner):
        result = runner.invoke(main, ["gradcheck", "--hidden", "8", "--layers", "1"])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output.splitlines()[-1])
        assert payload["max_relative_error"] < 1e-4

    def test_selftest(self, runner):
        result = runner.invoke(main, ["selftest"])
        assert result.exit_code == 0, result.output
        assert "ok   gradient check < 1e-4" in result.output

    def test_unknown_subcommand(self, runner):
        result = runner.invoke(main, ["frobnicate"])
        assert result.exit_code == 2
        assert "No such command" in result.stderr


class TestValidate:
    @pytest.mark.parametrize("kind,name", [
        ("parse", "caption_parses.conllu"),
        ("detections", "detections.jsonl"),
        ("records", "records.jsonl"),
        ("embeddings", "embeddings.vec"),
        ("kb", "kb.jsonl"),
    ])
    def test_fixture_files_validate_cleanly(self, runner, kind, name):
        result = runner.invoke(main, ["validate", "--kind", kind, fixture(name)])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output.splitlines()[-1])
        assert payload["ok"] is True
        assert payload["warnings"] == []

    def test_invalid_file_is_exit_1(self, runner, tmp_path):
        bad = tmp_path / "bad.conllu"
        bad.write_text("1\tword\tNOUN\t0\troot\n")
        result = runner.invoke(main, ["validate", "--kind", "parse", str(bad)])
        assert result.exit_code == 1
        err = json.loads(result.stderr.splitlines()[-1])
        assert err["error"] == "MalformedRow"


class TestTrainEvalReportFlow:
    def test_end_to_end(self, runner, tmp_path):
        from knowvl.synthetic import make_class_setup
        from knowvl.zeroshot import write_zero_shot_task
        from knowvl.assembly import AssemblyConfig, build_corpus
        from knowvl.sampling import SamplerConfig
        from knowvl.formats import write_corpus

        records, kb, table, task = make_class_setup(seed=2, items_per_class=2)
        result = build_corpus(records, kb, AssemblyConfig(rng_seed=2),
                              SamplerConfig(rng_seed=2), table, 2)
        corpus = tmp_path / "corpus.jsonl"
        write_corpus(corpus, result.examples, result.manifest)
        task_path = tmp_path / "task.json"
        write_zero_shot_task(task_path, task)

        run = runner.invoke(main, ["train", "--corpus", str(corpus), "--seed", "8",
                                   "--steps", "15", "--batch-size", "4",
                                   "--out", str(tmp_path / "run")])
        assert run.exit_code == 0, run.output
        summary = json.loads(run.output.splitlines()[-1])
        assert summary["steps"] == 15

        ev = runner.invoke(main, ["eval-zeroshot",
                                  "--checkpoint", summary["checkpoint"],
                                  "--task", str(task_path),
                                  "--out", str(tmp_path / "results.json")])
        assert ev.exit_code == 0, ev.output
        assert "accuracy" in json.loads(ev.output.splitlines()[-1])

        rep = runner.invoke(main, ["report", "--metrics", summary["metrics"],
                                   "--run-meta", str(tmp_path / "run" / "run_meta.json"),
                                   "--eval", str(tmp_path / "results.json"),
                                   "--out", str(tmp_path / "report")])
        assert rep.exit_code == 0, rep.output
        assert "component" in rep.output
        assert (tmp_path / "report" / "loss_curves.csv").exists()
