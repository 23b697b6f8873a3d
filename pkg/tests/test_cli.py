import json

import pytest

from dmner.cli import main
from dmner.config import build_config, read_config_file
from dmner.corpus import parse_iob, write_predictions
from dmner.dictionary import load_dictionary
from dmner.embedding import load_store
from dmner.errors import ConfigError


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture
def toy_cfg(toy_dir):
    return toy_dir / "toy.cfg"


class TestConfigFile:
    def test_paths_resolve_relative_to_file(self, toy_cfg, toy_dir):
        values = read_config_file(toy_cfg)
        assert values["corpus"] == toy_dir / "corpus.iob"

    def test_flag_overrides_file(self, toy_cfg):
        cfg = build_config(toy_cfg, {"k": 7, "seed": None})
        assert cfg.k == 7
        assert cfg.seed == 42  # from the file

    def test_unknown_key_rejected(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("mystery = 3\n")
        with pytest.raises(ConfigError, match="mystery"):
            read_config_file(bad)

    def test_comments_and_blanks_ignored(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# a comment\n\nseed = 5\n")
        assert read_config_file(cfg) == {"seed": 5}

    def test_bad_boolean(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("use_llm = maybe\n")
        with pytest.raises(ConfigError, match="boolean"):
            read_config_file(cfg)


class TestEmbedBuild:
    def test_covers_exactly_the_fixture_surfaces(self, toy_cfg, toy_dir, tmp_path):
        assert run("embed-build", "--config", toy_cfg, "--out-dir", tmp_path) == 0
        with open(tmp_path / "embeddings.txt", encoding="utf-8") as fh:
            store = load_store(fh)

        expected = set()
        with open(toy_dir / "kb.tsv", encoding="utf-8") as fh:
            expected.update(line.split("\t")[0] for line in fh if line.strip())
        with open(toy_dir / "dict_init.tsv", encoding="utf-8") as fh:
            expected.update(line.split("\t")[0] for line in fh if line.strip())
        for name in ("corpus.iob", "dev.iob"):
            with open(toy_dir / name, encoding="utf-8") as fh:
                expected.update(e.surface for e in parse_iob(fh).gold)
        with open(toy_dir / "corpus.iob", encoding="utf-8") as fh:
            corpus = parse_iob(fh)
        for line in (toy_dir / "spans.tsv").read_text().splitlines():
            sid, start, end, _ = line.split("\t")
            expected.add(corpus.sentence(sid).surface(int(start), int(end)))
        assert set(store.keys()) == expected

    def test_rerun_is_byte_identical(self, toy_cfg, tmp_path):
        run("embed-build", "--config", toy_cfg, "--out-dir", tmp_path / "a")
        run("embed-build", "--config", toy_cfg, "--out-dir", tmp_path / "b")
        assert (tmp_path / "a/embeddings.txt").read_bytes() \
            == (tmp_path / "b/embeddings.txt").read_bytes()

    def test_store_mode_missing_key_names_it(self, toy_cfg, tmp_path, capsys):
        # a source store that misses every fixture surface
        partial = tmp_path / "partial.txt"
        partial.write_text("dim=8 count=1\nonlykey\t1.0 0.0 0.0 0.0 0.0 0.0 0.0 0.0\n")
        code = run("embed-build", "--config", toy_cfg, "--out-dir", tmp_path,
                   "--encoder", "store", "--store", partial, "--no-store-fallback")
        assert code == 1
        err = capsys.readouterr().err
        assert "no embedding for text" in err


class TestAnnotate:
    def test_without_unknown_sources_zero_unknowns(self, toy_cfg, tmp_path):
        assert run("annotate", "--config", toy_cfg, "--out-dir", tmp_path,
                   "--no-use-llm", "--no-use-kb-unknowns") == 0
        rows = [json.loads(line) for line in
                (tmp_path / "annotated.jsonl").read_text().splitlines()]
        assert sum(len(r["unknown"]) for r in rows) == 0
        assert sum(len(r["trusted"]) for r in rows) == 15

    def test_toy_counts_match_hand_annotation(self, toy_cfg, tmp_path):
        assert run("annotate", "--config", toy_cfg, "--out-dir", tmp_path) == 0
        rows = {r["sentence_id"]: r for r in map(
            json.loads, (tmp_path / "annotated.jsonl").read_text().splitlines())}
        # hand annotation: LLM-voted "patients" survives in s1 (3 of 3 runs);
        # in s8 the phrase "blood glucose" and the KB name "glucose" are the
        # only mined spans not conflicting with trusted entities
        assert [(u["start"], u["end"]) for u in rows["s1"]["unknown"]] == [(4, 4)]
        assert [(u["start"], u["end"]) for u in rows["s8"]["unknown"]] == [(2, 3), (3, 3)]
        for sid in ("s2", "s3", "s4", "s5", "s6", "s7"):
            assert rows[sid]["unknown"] == []
        assert sum(len(r["trusted"]) for r in rows.values()) == 15

    def test_rerun_identical(self, toy_cfg, tmp_path):
        run("annotate", "--config", toy_cfg, "--out-dir", tmp_path / "a")
        run("annotate", "--config", toy_cfg, "--out-dir", tmp_path / "b")
        assert (tmp_path / "a/annotated.jsonl").read_bytes() \
            == (tmp_path / "b/annotated.jsonl").read_bytes()

    def test_missing_llm_runs_directory_fails(self, toy_cfg, tmp_path, capsys):
        code = run("annotate", "--config", toy_cfg, "--out-dir", tmp_path,
                   "--llm-runs", tmp_path / "nowhere")
        assert code == 1
        assert "run-" in capsys.readouterr().err


class TestRefine:
    def test_k3_writes_three_dictionaries_and_traces(self, toy_cfg, tmp_path):
        assert run("refine", "--config", toy_cfg, "--out-dir", tmp_path) == 0
        for i in (1, 2, 3):
            assert (tmp_path / f"dict-{i}.tsv").exists()
            assert (tmp_path / f"trace-{i}.jsonl").exists()

    def test_no_dev_mode_outputs_d_init_verbatim(self, toy_cfg, toy_dir, tmp_path):
        assert run("refine", "--config", toy_cfg, "--out-dir", tmp_path, "--no-dev") == 0
        with open(tmp_path / "dict-1.tsv", encoding="utf-8") as fh:
            got = load_dictionary(fh)
        with open(toy_dir / "dict_init.tsv", encoding="utf-8") as fh:
            want = load_dictionary(fh)
        assert got == want
        assert not (tmp_path / "dict-2.tsv").exists()

    def test_dev_without_gold_advises_no_dev(self, toy_cfg, tmp_path, capsys):
        bare = tmp_path / "bare.iob"
        bare.write_text("hello\tO\nworld\tO\n")
        code = run("refine", "--config", toy_cfg, "--out-dir", tmp_path, "--dev", bare)
        assert code == 1
        assert "--no-dev" in capsys.readouterr().err or "no-dev" in capsys.readouterr().err

    def test_fixed_seed_rerun_identical(self, toy_cfg, tmp_path):
        run("refine", "--config", toy_cfg, "--out-dir", tmp_path / "a")
        run("refine", "--config", toy_cfg, "--out-dir", tmp_path / "b")
        for i in (1, 2, 3):
            assert (tmp_path / f"a/dict-{i}.tsv").read_bytes() \
                == (tmp_path / f"b/dict-{i}.tsv").read_bytes()
            assert (tmp_path / f"a/trace-{i}.jsonl").read_bytes() \
                == (tmp_path / f"b/trace-{i}.jsonl").read_bytes()

    def test_missing_seed_is_an_error(self, toy_dir, tmp_path, capsys):
        code = run("refine", "--corpus", toy_dir / "corpus.iob",
                   "--dev", toy_dir / "dev.iob", "--kb", toy_dir / "kb.tsv",
                   "--dict-init", toy_dir / "dict_init.tsv", "--out-dir", tmp_path)
        assert code == 1
        assert "seed" in capsys.readouterr().err


class TestMatchEnsembleEval:
    def test_k1_ensemble_byte_equal_to_single_match(self, toy_cfg, tmp_path):
        out = tmp_path / "out"
        assert run("refine", "--config", toy_cfg, "--out-dir", out, "--k", "1") == 0
        assert run("match", "--config", toy_cfg, "--out-dir", out) == 0
        assert run("ensemble", "--config", toy_cfg, "--out-dir", out, "--k", "1") == 0
        assert (out / "pred-1.tsv").read_bytes() == (out / "pred-ensemble.tsv").read_bytes()

    def test_match_requires_span_input(self, toy_cfg, tmp_path, capsys):
        code = run("match", "--config", toy_cfg, "--out-dir", tmp_path,
                   "--spans", "/dev/null", "--probs", "/dev/null")
        assert code == 1

    def test_match_decodes_probability_tensors(self, toy_dir, tmp_path):
        import numpy as np

        from dmner.ebd import SpanProbabilities, save_probabilities

        # s1 has 5 tokens; point mass on spans (0,0) and (2,2)
        p_start = np.array([1.0, 0, 1.0, 0, 0])
        p_end = np.array([1.0, 0, 1.0, 0, 0])
        p_span = np.zeros((5, 5))
        p_span[0, 0] = p_span[2, 2] = 1.0
        probs_path = tmp_path / "probs.jsonl"
        with open(probs_path, "w", encoding="utf-8") as fh:
            save_probabilities([SpanProbabilities("s1", p_start, p_end, p_span)], fh)

        code = run("match", "--corpus", toy_dir / "corpus.iob",
                   "--probs", probs_path, "--dict-init", toy_dir / "dict_init.tsv",
                   "--out-dir", tmp_path)
        assert code == 0
        rows = (tmp_path / "pred-1.tsv").read_text().splitlines()
        spans = {tuple(r.split("\t")[:3]) for r in rows}
        # "Aspirin" (0,0) matches its dictionary entry; "fever" (2,2) too
        assert ("s1", "0", "0") in spans and ("s1", "2", "2") in spans

    def test_arity_mismatch_rejected(self, toy_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        assert run("refine", "--config", toy_cfg, "--out-dir", out) == 0
        assert run("match", "--config", toy_cfg, "--out-dir", out) == 0
        (out / "dict-4.tsv").write_text("extra\tChemical\tkb\n")
        code = run("ensemble", "--config", toy_cfg, "--out-dir", out)
        assert code == 1
        assert "4 dictionaries but 3 prediction sets" in capsys.readouterr().err

    def test_eval_of_gold_as_predictions_is_perfect(self, toy_cfg, toy_dir, tmp_path):
        with open(toy_dir / "corpus.iob", encoding="utf-8") as fh:
            corpus = parse_iob(fh)
        pred_path = tmp_path / "gold-as-pred.tsv"
        with open(pred_path, "w", encoding="utf-8") as fh:
            write_predictions(corpus.gold, fh)
        assert run("eval", "--corpus", toy_dir / "corpus.iob", "--pred", pred_path,
                   "--out-dir", tmp_path) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["precision"] == 1.0
        assert report["recall"] == 1.0
        assert report["f1"] == 1.0

    def test_eval_without_predictions_fails(self, toy_cfg, tmp_path, capsys):
        code = run("eval", "--config", toy_cfg, "--out-dir", tmp_path / "empty")
        assert code == 1
        assert "pred" in capsys.readouterr().err


class TestStats:
    def test_prints_counts(self, toy_cfg, capsys):
        assert run("stats", "--config", toy_cfg) == 0
        out = capsys.readouterr().out
        assert "sentences      8" in out
        assert "Chemical" in out and "Disease" in out


class TestRunAll:
    def test_produces_all_artifacts(self, toy_cfg, tmp_path):
        assert run("run-all", "--config", toy_cfg, "--out-dir", tmp_path) == 0
        for name in ("embeddings.txt", "annotated.jsonl", "dict-1.tsv", "dict-3.tsv",
                     "pred-1.tsv", "pred-ensemble.tsv", "report.json", "report.txt"):
            assert (tmp_path / name).exists(), name

    def test_stale_outputs_do_not_leak(self, toy_cfg, tmp_path):
        out = tmp_path / "out"
        assert run("run-all", "--config", toy_cfg, "--out-dir", out) == 0
        assert run("refine", "--config", toy_cfg, "--out-dir", out, "--k", "2") == 0
        assert not (out / "dict-3.tsv").exists()
        assert run("match", "--config", toy_cfg, "--out-dir", out) == 0
        assert not (out / "pred-3.tsv").exists()
