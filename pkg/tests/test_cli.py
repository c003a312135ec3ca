"""End-to-end tests for the command-line interface (in-process)."""
import json
import math

import numpy as np
import pytest

from metavec.cli import main
from metavec.embeddings import EmbeddingSpace, load_embeddings, save_embeddings
from metavec.linalg import normalize_step0


def write_emb(path, tokens, rows, fmt="text"):
    space = EmbeddingSpace(tokens, np.array(rows, dtype=np.float64))
    save_embeddings(space, path, format=fmt)
    return space


@pytest.fixture
def pair(tmp_path):
    """Two overlapping 4-word 2-d spaces on disk."""
    rng = np.random.default_rng(11)
    p1 = tmp_path / "s1.vec"
    p2 = tmp_path / "s2.vec"
    write_emb(p1, ["a", "b", "c", "d"], rng.normal(size=(4, 2)))
    write_emb(p2, ["b", "c", "d", "e"], rng.normal(size=(4, 2)))
    return p1, p2


def stdout_value(capsys, key):
    out = capsys.readouterr().out
    for line in out.splitlines():
        if line.startswith(key + ":"):
            return line.split(":", 1)[1].strip()
    raise AssertionError(f"no '{key}:' line in {out!r}")


class TestMap:
    def test_self_alignment_residual_near_zero(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        src = tmp_path / "e.vec"
        space = write_emb(src, [f"w{i}" for i in range(12)], rng.normal(size=(12, 6)))
        out = tmp_path / "out.vec"
        assert main(["map", str(src), str(src), "-o", str(out)]) == 0
        assert float(stdout_value(capsys, "residual")) < 1e-9
        aligned = load_embeddings(out)
        expected = normalize_step0(space).matrix
        assert np.allclose(aligned.matrix, expected, atol=1e-9)

    def test_dictionary_size_printed(self, pair, tmp_path, capsys):
        p1, p2 = pair
        out = tmp_path / "out.vec"
        assert main(["map", str(p1), str(p2), "-o", str(out)]) == 0
        assert stdout_value(capsys, "dictionary size") == "3"

    def test_disjoint_vocabularies_fail_without_dict(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        p1 = tmp_path / "en.vec"
        p2 = tmp_path / "de.vec"
        write_emb(p1, ["one", "two", "three"], rng.normal(size=(3, 2)))
        write_emb(p2, ["eins", "zwei", "drei"], rng.normal(size=(3, 2)))
        out = tmp_path / "out.vec"
        assert main(["map", str(p1), str(p2), "-o", str(out)]) == 1
        assert "common vocabulary" in capsys.readouterr().err
        assert not out.exists()

    def test_explicit_bilingual_dictionary(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        p1 = tmp_path / "en.vec"
        p2 = tmp_path / "de.vec"
        write_emb(p1, ["one", "two", "three"], rng.normal(size=(3, 2)))
        write_emb(p2, ["eins", "zwei", "drei"], rng.normal(size=(3, 2)))
        dic = tmp_path / "en-de.tsv"
        dic.write_bytes(b"one\teins\ntwo\tzwei\nthree\tdrei\n")
        out = tmp_path / "out.vec"
        argv = ["map", str(p1), str(p2), "-o", str(out), "--dict", str(dic)]
        assert main(argv) == 0
        assert stdout_value(capsys, "dictionary size") == "3"
        assert load_embeddings(out).tokens == ("one", "two", "three")

    def test_prefixes_apply_to_tokens_and_dictionary(self, tmp_path, capsys):
        rng = np.random.default_rng(4)
        p1 = tmp_path / "en.vec"
        p2 = tmp_path / "de.vec"
        write_emb(p1, ["one", "two", "three"], rng.normal(size=(3, 2)))
        write_emb(p2, ["eins", "zwei", "drei"], rng.normal(size=(3, 2)))
        dic = tmp_path / "en-de.tsv"
        dic.write_bytes(b"one\teins\ntwo\tzwei\n")
        out = tmp_path / "out.vec"
        argv = [
            "map", str(p1), str(p2), "-o", str(out),
            "--dict", str(dic), "--prefix", "en/", "--prefix", "de/",
        ]
        assert main(argv) == 0
        assert stdout_value(capsys, "dictionary size") == "2"
        assert load_embeddings(out).tokens == ("en/one", "en/two", "en/three")

    def test_output_mirrors_binary_input_format(self, tmp_path):
        rng = np.random.default_rng(6)
        src = tmp_path / "e.bin"
        write_emb(src, ["a", "b", "c", "d"], rng.normal(size=(4, 3)), fmt="binary")
        out = tmp_path / "out.bin"
        assert main(["map", str(src), str(src), "-o", str(out)]) == 0
        assert load_embeddings(out, format="binary").tokens == ("a", "b", "c", "d")

    def test_format_flag_overrides_mirroring(self, tmp_path):
        rng = np.random.default_rng(6)
        src = tmp_path / "e.bin"
        write_emb(src, ["a", "b", "c"], rng.normal(size=(3, 2)), fmt="binary")
        out = tmp_path / "out.txt"
        argv = ["map", str(src), str(src), "-o", str(out), "--format", "text"]
        assert main(argv) == 0
        assert out.read_bytes().startswith(b"3 2\n")

    def test_repeat_runs_are_bitwise_identical(self, pair, tmp_path, capsys):
        p1, p2 = pair
        out1 = tmp_path / "r1.vec"
        out2 = tmp_path / "r2.vec"
        assert main(["map", str(p1), str(p2), "-o", str(out1)]) == 0
        assert main(["map", str(p1), str(p2), "-o", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_missing_input_is_reported(self, tmp_path, capsys):
        out = tmp_path / "out.vec"
        code = main(["map", str(tmp_path / "no.vec"), str(tmp_path / "no.vec"),
                     "-o", str(out)])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestMvm:
    def test_union_vocabulary_and_sidecar(self, pair, tmp_path, capsys):
        p1, p2 = pair
        out = tmp_path / "meta.vec"
        assert main(["mvm", str(p1), str(p2), "-o", str(out)]) == 0
        meta = load_embeddings(out)
        assert set(meta.tokens) == {"a", "b", "c", "d", "e"}
        sidecar = tmp_path / "meta.vec.provenance.json"
        record = json.loads(sidecar.read_text())
        assert record["method"] == "mvm"
        assert record["vocabulary"] == 5
        assert record["oov"] == "nn"
        assert record["synthesized"] == [1, 1]

    def test_target_index_recorded(self, pair, tmp_path):
        p1, p2 = pair
        out = tmp_path / "meta.vec"
        argv = ["mvm", str(p1), str(p2), "-o", str(out), "--target-index", "1"]
        assert main(argv) == 0
        record = json.loads((tmp_path / "meta.vec.provenance.json").read_text())
        assert record["target_index"] == 1

    def test_duplicate_input_path_is_self_ensemble(self, tmp_path):
        rng = np.random.default_rng(9)
        src = tmp_path / "e.vec"
        space = write_emb(src, [f"w{i}" for i in range(10)], rng.normal(size=(10, 4)))
        out = tmp_path / "meta.vec"
        assert main(["mvm", str(src), str(src), "-o", str(out)]) == 0
        meta = load_embeddings(out)
        expected = normalize_step0(space).matrix
        norms = np.linalg.norm(expected, axis=1, keepdims=True)
        expected = expected / np.where(norms == 0.0, 1.0, norms)
        assert np.allclose(meta.matrix, expected, atol=1e-9)

    def test_single_source_is_usage_error(self, tmp_path, pair):
        p1, _ = pair
        with pytest.raises(SystemExit) as exc:
            main(["mvm", str(p1), "-o", str(tmp_path / "x.vec")])
        assert exc.value.code == 2

    def test_dict_count_mismatch_is_usage_error(self, pair, tmp_path):
        p1, p2 = pair
        dic = tmp_path / "d.tsv"
        dic.write_bytes(b"a\ta\n")
        with pytest.raises(SystemExit) as exc:
            main(["mvm", str(p1), str(p2), "-o", str(tmp_path / "x.vec"),
                  "--dict", str(dic), "--dict", str(dic)])
        assert exc.value.code == 2

    def test_prefix_count_mismatch_is_usage_error(self, pair, tmp_path):
        p1, p2 = pair
        with pytest.raises(SystemExit) as exc:
            main(["mvm", str(p1), str(p2), "-o", str(tmp_path / "x.vec"),
                  "--prefix", "en/"])
        assert exc.value.code == 2

    def test_oov_policy_flag_recorded(self, pair, tmp_path):
        p1, p2 = pair
        out = tmp_path / "meta.vec"
        argv = ["mvm", str(p1), str(p2), "-o", str(out), "--oov", "zero"]
        assert main(argv) == 0
        record = json.loads((tmp_path / "meta.vec.provenance.json").read_text())
        assert record["oov"] == "zero"

    def test_repeat_runs_are_bitwise_identical(self, pair, tmp_path):
        p1, p2 = pair
        out1 = tmp_path / "m1.vec"
        out2 = tmp_path / "m2.vec"
        assert main(["mvm", str(p1), str(p2), "-o", str(out1)]) == 0
        assert main(["mvm", str(p1), str(p2), "-o", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_failed_sidecar_write_removes_embedding_output(self, pair, tmp_path, capsys):
        p1, p2 = pair
        out = tmp_path / "meta.vec"
        (tmp_path / "meta.vec.provenance.json").mkdir()
        assert main(["mvm", str(p1), str(p2), "-o", str(out)]) == 1
        assert not out.exists()
        assert not list(tmp_path.glob("*.tmp.*"))


class TestBaseline:
    def test_concat_dims_add_up(self, tmp_path):
        rng = np.random.default_rng(12)
        p1 = tmp_path / "lo.vec"
        p2 = tmp_path / "hi.vec"
        write_emb(p1, ["a", "b", "c"], rng.normal(size=(3, 2)))
        write_emb(p2, ["a", "b", "c"], rng.normal(size=(3, 3)))
        out = tmp_path / "cat.vec"
        argv = ["baseline", str(p1), str(p2), "-o", str(out), "--method", "concat"]
        assert main(argv) == 0
        assert load_embeddings(out).dim == 5

    def test_concat_reduce_requires_dim(self, pair, tmp_path):
        p1, p2 = pair
        with pytest.raises(SystemExit) as exc:
            main(["baseline", str(p1), str(p2), "-o", str(tmp_path / "x.vec"),
                  "--method", "concat-reduce"])
        assert exc.value.code == 2

    def test_dim_rejected_outside_concat_reduce(self, pair, tmp_path):
        p1, p2 = pair
        with pytest.raises(SystemExit) as exc:
            main(["baseline", str(p1), str(p2), "-o", str(tmp_path / "x.vec"),
                  "--method", "average", "--dim", "2"])
        assert exc.value.code == 2

    def test_concat_reduce_hits_requested_dim(self, pair, tmp_path):
        p1, p2 = pair
        out = tmp_path / "red.vec"
        argv = ["baseline", str(p1), str(p2), "-o", str(out),
                "--method", "concat-reduce", "--dim", "2", "--nn-oov"]
        assert main(argv) == 0
        reduced = load_embeddings(out)
        assert reduced.dim == 2
        assert set(reduced.tokens) == {"a", "b", "c", "d", "e"}

    def test_average_with_nn_oov_covers_union(self, pair, tmp_path):
        p1, p2 = pair
        out = tmp_path / "avg.vec"
        argv = ["baseline", str(p1), str(p2), "-o", str(out),
                "--method", "average", "--nn-oov"]
        assert main(argv) == 0
        assert set(load_embeddings(out).tokens) == {"a", "b", "c", "d", "e"}

    def test_average_default_keeps_union_with_available_policy(self, pair, tmp_path):
        p1, p2 = pair
        out = tmp_path / "avg.vec"
        argv = ["baseline", str(p1), str(p2), "-o", str(out), "--method", "average"]
        assert main(argv) == 0
        assert set(load_embeddings(out).tokens) == {"a", "b", "c", "d", "e"}


class TestSynthOov:
    def test_identical_vocab_outputs_equal_inputs(self, tmp_path, capsys):
        rng = np.random.default_rng(15)
        p1 = tmp_path / "x.vec"
        p2 = tmp_path / "y.vec"
        tokens = ["a", "b", "c", "d"]
        write_emb(p1, tokens, rng.normal(size=(4, 3)))
        write_emb(p2, tokens, rng.normal(size=(4, 3)))
        o1 = tmp_path / "x.out.vec"
        o2 = tmp_path / "y.out.vec"
        assert main(["synth-oov", str(p1), str(p2), str(o1), str(o2)]) == 0
        assert o1.read_bytes() == p1.read_bytes()
        assert o2.read_bytes() == p2.read_bytes()
        out = capsys.readouterr().out
        assert f"synthesized into {o1}: 0" in out
        assert f"synthesized into {o2}: 0" in out

    def test_union_vocabulary_and_counts(self, pair, tmp_path, capsys):
        p1, p2 = pair
        o1 = tmp_path / "o1.vec"
        o2 = tmp_path / "o2.vec"
        assert main(["synth-oov", str(p1), str(p2), str(o1), str(o2), "--k", "2"]) == 0
        e1 = load_embeddings(o1)
        e2 = load_embeddings(o2)
        assert e1.tokens == e2.tokens
        assert set(e1.tokens) == {"a", "b", "c", "d", "e"}
        out = capsys.readouterr().out
        assert f"synthesized into {o1}: 1" in out
        assert f"synthesized into {o2}: 1" in out

    def test_audit_dump_lists_neighbors(self, pair, tmp_path):
        p1, p2 = pair
        o1 = tmp_path / "o1.vec"
        o2 = tmp_path / "o2.vec"
        audit = tmp_path / "audit.tsv"
        argv = ["synth-oov", str(p1), str(p2), str(o1), str(o2),
                "--k", "2", "--audit", str(audit)]
        assert main(argv) == 0
        lines = audit.read_bytes().decode().splitlines()
        assert len(lines) == 2
        words = {line.split("\t")[0] for line in lines}
        assert words == {"a", "e"}
        for line in lines:
            neighbors = line.split("\t")[1].split(",")
            assert 1 <= len(neighbors) <= 2

    def test_dim_mismatch_fails(self, tmp_path, capsys):
        rng = np.random.default_rng(16)
        p1 = tmp_path / "x.vec"
        p2 = tmp_path / "y.vec"
        write_emb(p1, ["a", "b"], rng.normal(size=(2, 2)))
        write_emb(p2, ["a", "b"], rng.normal(size=(2, 3)))
        code = main(["synth-oov", str(p1), str(p2),
                     str(tmp_path / "o1.vec"), str(tmp_path / "o2.vec")])
        assert code == 1
        assert "dim" in capsys.readouterr().err
        assert not (tmp_path / "o1.vec").exists()


class TestEval:
    def make_embedding(self, tmp_path, prefix=""):
        angles = [0.1, 0.5, 0.9, 1.3]
        tokens = []
        rows = []
        for i, theta in enumerate(angles):
            tokens += [f"{prefix}a{i}", f"{prefix}b{i}"]
            rows += [[1.0, 0.0], [math.cos(theta), math.sin(theta)]]
        path = tmp_path / "emb.vec"
        write_emb(path, tokens, rows)
        return path

    def make_dataset(self, tmp_path, name="toyset", gold=(4.0, 3.0, 2.0, 1.0)):
        path = tmp_path / f"{name}.tsv"
        lines = [f"a{i}\tb{i}\t{g}\n" for i, g in enumerate(gold)]
        path.write_text("".join(lines))
        return path

    def test_single_dataset_table(self, tmp_path, capsys):
        emb = self.make_embedding(tmp_path)
        ds = self.make_dataset(tmp_path)
        assert main(["eval", str(emb), str(ds)]) == 0
        out = capsys.readouterr().out
        assert "toyset" in out
        assert "1.0000" in out
        assert "Av" in out

    def test_groups_file_adds_sim_rel_rows(self, tmp_path, capsys):
        emb = self.make_embedding(tmp_path)
        d1 = self.make_dataset(tmp_path, "simset")
        d2 = self.make_dataset(tmp_path, "relset", gold=(4.0, 2.0, 3.0, 1.0))
        groups = tmp_path / "groups.txt"
        groups.write_text("simset sim\nrelset rel\n")
        argv = ["eval", str(emb), str(d1), str(d2), "--groups", str(groups)]
        assert main(argv) == 0
        out = capsys.readouterr().out
        assert "Sim" in out
        assert "Rel" in out

    def test_report_file_has_one_record_per_dataset(self, tmp_path, capsys):
        emb = self.make_embedding(tmp_path)
        d1 = self.make_dataset(tmp_path, "one")
        d2 = self.make_dataset(tmp_path, "two")
        report = tmp_path / "report.jsonl"
        argv = ["eval", str(emb), str(d1), str(d2), "--report", str(report)]
        assert main(argv) == 0
        records = [json.loads(line) for line in report.read_text().splitlines()]
        assert [r["name"] for r in records] == ["one", "two"]
        assert records[0]["coverage"] == 100.0
        assert records[0]["pairs_used"] == 4

    def test_crosslingual_prefix_lookup(self, tmp_path, capsys):
        angles = [0.1, 0.5, 0.9, 1.3]
        tokens = []
        rows = []
        for i, theta in enumerate(angles):
            tokens += [f"en/a{i}", f"de/b{i}"]
            rows += [[1.0, 0.0], [math.cos(theta), math.sin(theta)]]
        emb = tmp_path / "xling.vec"
        write_emb(emb, tokens, rows)
        ds = self.make_dataset(tmp_path)
        argv = ["eval", str(emb), str(ds), "--crosslingual", "en/", "de/"]
        assert main(argv) == 0
        assert "1.0000" in capsys.readouterr().out

    def test_comma_delimiter(self, tmp_path, capsys):
        emb = self.make_embedding(tmp_path)
        ds = tmp_path / "c.csv"
        ds.write_text("a0,b0,4\na1,b1,3\na2,b2,2\na3,b3,1\n")
        argv = ["eval", str(emb), str(ds), "--delimiter", "comma"]
        assert main(argv) == 0
        assert "1.0000" in capsys.readouterr().out

    def test_lowercase_fallback_flag(self, tmp_path, capsys):
        emb = self.make_embedding(tmp_path)
        ds = tmp_path / "case.tsv"
        ds.write_text("A0\tB0\t2\na1\tb1\t1\n")
        assert main(["eval", str(emb), str(ds)]) == 0
        strict = capsys.readouterr().out
        assert "1/2" in strict
        argv = ["eval", str(emb), str(ds), "--lowercase-fallback"]
        assert main(argv) == 0
        assert "2/2" in capsys.readouterr().out

    def test_missing_embedding_fails(self, tmp_path, capsys):
        ds = self.make_dataset(tmp_path)
        assert main(["eval", str(tmp_path / "no.vec"), str(ds)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_groups_file_fails(self, tmp_path, capsys):
        emb = self.make_embedding(tmp_path)
        ds = self.make_dataset(tmp_path)
        argv = ["eval", str(emb), str(ds), "--groups", str(tmp_path / "no.txt")]
        assert main(argv) == 1

    def test_malformed_groups_line_fails(self, tmp_path, capsys):
        emb = self.make_embedding(tmp_path)
        ds = self.make_dataset(tmp_path)
        groups = tmp_path / "groups.txt"
        groups.write_text("toyset syntax\n")
        assert main(["eval", str(emb), str(ds), "--groups", str(groups)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_all_oov_dataset_reports_undefined(self, tmp_path, capsys):
        emb = self.make_embedding(tmp_path)
        ds = tmp_path / "gone.tsv"
        ds.write_text("nope\tnada\t1\nzip\tzilch\t2\n")
        assert main(["eval", str(emb), str(ds)]) == 0
        out = capsys.readouterr().out
        assert "n/a" in out
        assert "undefined: gone" in out


class TestCommonFlags:
    def test_threads_flag_does_not_change_output(self, pair, tmp_path):
        p1, p2 = pair
        free = tmp_path / "free.vec"
        capped = tmp_path / "capped.vec"
        assert main(["mvm", str(p1), str(p2), "-o", str(free)]) == 0
        assert main(["mvm", str(p1), str(p2), "-o", str(capped), "--threads", "1"]) == 0
        assert free.read_bytes() == capped.read_bytes()

    def test_precision_flag_shortens_text_output(self, tmp_path):
        rng = np.random.default_rng(21)
        src = tmp_path / "e.vec"
        write_emb(src, ["a", "b", "c"], rng.normal(size=(3, 2)))
        out = tmp_path / "out.vec"
        argv = ["map", str(src), str(src), "-o", str(out), "--precision", "3"]
        assert main(argv) == 0
        body = out.read_text().splitlines()[1]
        for value in body.split(" ")[1:]:
            mantissa = value.lstrip("-0.").replace(".", "")
            assert len(mantissa) <= 3

    def test_unknown_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "metavec" in capsys.readouterr().out
