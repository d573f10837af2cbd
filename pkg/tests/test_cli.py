import json
import re

import numpy as np
import pytest

from bli_toolkit.alignment import load_map
from bli_toolkit.cli import main, resolve_config
from bli_toolkit.embeddings import load_text_embeddings
from bli_toolkit.errors import ConfigError
from bli_toolkit.report import read_rows
from conftest import write_vec
from oracles import keep_token


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--seed", "3", "--n", "200", "--d", "12", "--out-dir", str(out)]) == 0
    return out


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def align(capsys, fx, tmp_path, method="procrustes", name="map.json"):
    mp = tmp_path / name
    code, out, err = run(capsys, "align", "--src-emb", fx / "src.vec", "--tgt-emb", fx / "tgt.vec",
                         "--train-dict", fx / "dict.txt", "--map", mp, "--method", method)
    assert code == 0, err
    return mp, out


def evaluate(capsys, fx, mp, tmp_path, *extra, tag="run"):
    js, cs = tmp_path / f"{tag}.json", tmp_path / f"{tag}.csv"
    code, out, err = run(capsys, "eval", "--src-emb", fx / "src.vec", "--tgt-emb", fx / "tgt.vec",
                         "--test-dict", fx / "dict.txt", "--map", mp, "--json-out", js, "--csv-out", cs,
                         "--pair", "s-t", *extra)
    assert code == 0, err
    return out, json.loads(js.read_text()), cs


def summary_value(out, key):
    return float(re.search(rf"{key}: (\S+)", out).group(1))


def test_align_procrustes_summary(capsys, fixture_dir, tmp_path):
    mp, out = align(capsys, fixture_dir, tmp_path)
    assert summary_value(out, "orthogonality defect") <= 1e-5
    assert "pairs used: 200 (dropped 0)" in out
    rot = load_map(fixture_dir / "rotation.json").matrix
    assert np.linalg.norm(load_map(mp).matrix - rot) <= 1e-6


def test_lstsq_residual_not_above_procrustes(capsys, fixture_dir, tmp_path):
    _, out_p = align(capsys, fixture_dir, tmp_path, "procrustes", "p.json")
    _, out_l = align(capsys, fixture_dir, tmp_path, "lstsq", "l.json")
    assert summary_value(out_l, "residual") <= summary_value(out_p, "residual")


def test_align_rcsls_prints_losses(capsys, fixture_dir, tmp_path):
    mp = tmp_path / "r.json"
    code, out, err = run(capsys, "align", "--src-emb", fixture_dir / "src.vec", "--tgt-emb", fixture_dir / "tgt.vec",
                         "--train-dict", fixture_dir / "dict.txt", "--map", mp, "--method", "rcsls",
                         "--rcsls-epochs", "3", "--rcsls-k", "5")
    assert code == 0, err
    losses = [float(v) for v in out.split("rcsls losses:")[1].splitlines()[0].split()]
    assert len(losses) == 4 and all(b <= a for a, b in zip(losses, losses[1:]))


def test_missing_train_dict_exit_2(capsys, fixture_dir, tmp_path):
    missing = tmp_path / "nope.txt"
    code, _, err = run(capsys, "align", "--src-emb", fixture_dir / "src.vec", "--tgt-emb", fixture_dir / "tgt.vec",
                       "--train-dict", missing, "--map", tmp_path / "m.json")
    assert code == 2
    assert str(missing) in err and "--train-dict" in err


def test_bad_method_exit_2(capsys, fixture_dir, tmp_path):
    code, _, err = run(capsys, "align", "--src-emb", fixture_dir / "src.vec", "--tgt-emb", fixture_dir / "tgt.vec",
                       "--train-dict", fixture_dir / "dict.txt", "--map", tmp_path / "m.json", "--method", "cca")
    assert code == 2 and "method" in err


@pytest.mark.parametrize("criterion", ["nn", "csls"])
def test_eval_perfect_alignment(capsys, fixture_dir, tmp_path, criterion):
    mp, _ = align(capsys, fixture_dir, tmp_path)
    out, doc, cs = evaluate(capsys, fixture_dir, mp, tmp_path, "--criterion", criterion)
    assert "P@1 = 100.0" in out
    rep = doc["reports"][0]
    assert rep["precision"]["1"] == 1.0 and rep["config"]["criterion"] == criterion
    assert len(doc["fingerprint"]) == 16
    (row,) = read_rows(cs)
    assert row.value(1) == 100.0 and row.criterion == criterion and row.pair == "s-t"


def test_stem_with_identity_rules_gives_identical_rows(capsys, fixture_dir, tmp_path):
    mp, _ = align(capsys, fixture_dir, tmp_path)
    _, doc, cs = evaluate(capsys, fixture_dir, mp, tmp_path, "--criterion", "nn", "--stem")
    exact, soft = read_rows(cs)
    assert (exact.mode, soft.mode) == ("exact", "stem")
    assert exact.values == soft.values
    a, b = doc["reports"]
    a.pop("mode"), b.pop("mode")
    assert a == b


def test_permissive_prune_is_identical(capsys, fixture_dir, tmp_path):
    mp, _ = align(capsys, fixture_dir, tmp_path)
    policy = tmp_path / "all.policy"
    policy.write_text("forbid_ascii_letters = false\nranges = 0000-10FFFF\nrequire_allowed_char = true\n")
    _, base, cs0 = evaluate(capsys, fixture_dir, mp, tmp_path, "--criterion", "nn", tag="base")
    out, pruned, cs1 = evaluate(capsys, fixture_dir, mp, tmp_path, "--criterion", "nn", "--prune",
                                "--prune-policy", policy, tag="pruned")
    assert "removed 0" in out
    strip = lambda rep: {k: v for k, v in rep.items() if k != "config"}  # noqa: E731
    assert strip(base["reports"][0]) == strip(pruned["reports"][0])
    assert read_rows(cs0)[0].values == read_rows(cs1)[0].values


def test_identical_reruns_give_identical_files(capsys, fixture_dir, tmp_path):
    mp, _ = align(capsys, fixture_dir, tmp_path)
    mp2, _ = align(capsys, fixture_dir, tmp_path, name="map2.json")
    assert mp.read_bytes() == mp2.read_bytes()
    args = ("--criterion", "csls", "--stem", "--ks", "1,5")
    evaluate(capsys, fixture_dir, mp, tmp_path, *args, tag="a")
    js_a, cs_a = (tmp_path / "a.json").read_bytes(), (tmp_path / "a.csv").read_bytes()
    evaluate(capsys, fixture_dir, mp, tmp_path, *args, tag="a")
    assert (tmp_path / "a.json").read_bytes() == js_a
    assert (tmp_path / "a.csv").read_bytes() == cs_a


def test_fingerprint_ignores_output_paths():
    a = resolve_config({"json_out": "x.json", "criterion": "nn"})
    b = resolve_config({"json_out": "y.json", "criterion": "nn"})
    c = resolve_config({"json_out": "x.json", "criterion": "csls"})
    assert a.fingerprint() == b.fingerprint() != c.fingerprint()


def test_config_file_and_flag_precedence(capsys, fixture_dir, tmp_path):
    mp, _ = align(capsys, fixture_dir, tmp_path)
    conf = tmp_path / "run.conf"
    conf.write_text(
        "# eval settings\n"
        f"src-emb = {fixture_dir / 'src.vec'}\n"
        f"tgt_emb = {fixture_dir / 'tgt.vec'}\n"
        f"test_dict = {fixture_dir / 'dict.txt'}\n"
        f"map = {mp}\n"
        "criterion = nn\n"
        "ks = 1, 5\n"
    )
    js = tmp_path / "c.json"
    code, out, err = run(capsys, "eval", "--config", conf, "--json-out", js)
    assert code == 0, err
    assert json.loads(js.read_text())["config"]["criterion"] == "nn"
    code, _, _ = run(capsys, "eval", "--config", conf, "--criterion", "csls", "--json-out", js)
    doc = json.loads(js.read_text())
    assert doc["config"]["criterion"] == "csls" and doc["config"]["ks"] == [1, 5]


def test_config_file_errors(capsys, tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = blue\n")
    code, _, err = run(capsys, "synth", "--config", conf, "--out-dir", tmp_path)
    assert code == 2 and "unknown setting" in err
    code, _, err = run(capsys, "synth", "--config", tmp_path / "absent.conf", "--out-dir", tmp_path)
    assert code == 2
    with pytest.raises(ConfigError):
        resolve_config({"ks": "1,x"})


def test_eval_empty_usable_lexicon_exit_1(capsys, fixture_dir, tmp_path):
    mp, _ = align(capsys, fixture_dir, tmp_path)
    oov = tmp_path / "oov.txt"
    oov.write_text("zzz t0\n")
    code, _, err = run(capsys, "eval", "--src-emb", fixture_dir / "src.vec", "--tgt-emb", fixture_dir / "tgt.vec",
                       "--test-dict", oov, "--map", mp)
    assert code == 1 and err


def test_synth_determinism(capsys, tmp_path):
    for name in ("a", "b"):
        assert run(capsys, "synth", "--seed", "9", "--n", "20", "--d", "4", "--noise", "0.1",
                   "--out-dir", tmp_path / name)[0] == 0
    for f in ("src.vec", "tgt.vec", "dict.txt", "rotation.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_synth_tiny(capsys, tmp_path):
    assert run(capsys, "synth", "--n", "3", "--d", "2", "--out-dir", tmp_path)[0] == 0
    space, stats = load_text_embeddings(tmp_path / "src.vec")
    assert (len(space), space.dim) == (3, 2)
    assert len((tmp_path / "dict.txt").read_text().splitlines()) == 3
    assert run(capsys, "synth", "--n", "0", "--out-dir", tmp_path)[0] == 2


MIXED_WORDS = ["дом", "house", "кот", "cat", "12", "мир", "domX", "කමල"]


def test_prune_command(capsys, tmp_path):
    src = tmp_path / "mixed.vec"
    rows = np.random.default_rng(1).standard_normal((len(MIXED_WORDS), 3))
    write_vec(src, MIXED_WORDS, rows)
    out = tmp_path / "pruned.vec"
    code, text, err = run(capsys, "prune", "--emb", src, "--out", out)
    assert code == 0, err
    expected = [w for w in MIXED_WORDS if keep_token(w, True, None, False)]
    assert f"removed {len(MIXED_WORDS) - len(expected)}" in text
    pruned, _ = load_text_embeddings(out)
    original, _ = load_text_embeddings(src)
    assert list(pruned.words) == expected
    np.testing.assert_array_equal(pruned.matrix, original.matrix[[original.lookup(w) for w in expected]])


def test_prune_permissive_round_trip(capsys, tmp_path):
    src = tmp_path / "mixed.vec"
    write_vec(src, MIXED_WORDS, np.random.default_rng(2).standard_normal((len(MIXED_WORDS), 3)))
    policy = tmp_path / "all.policy"
    policy.write_text("forbid_ascii_letters = false\nranges = 0000-10FFFF\nrequire_allowed_char = true\n")
    out = tmp_path / "same.vec"
    assert run(capsys, "prune", "--emb", src, "--out", out, "--prune-policy", policy)[0] == 0
    a, _ = load_text_embeddings(src)
    b, _ = load_text_embeddings(out)
    assert a.words == b.words
    np.testing.assert_array_equal(a.matrix, b.matrix)


def test_prune_empty_result_nonzero(capsys, tmp_path):
    src = tmp_path / "ascii.vec"
    write_vec(src, ["a", "b"], np.eye(2))
    code, _, err = run(capsys, "prune", "--emb", src, "--out", tmp_path / "o.vec")
    assert code != 0 and err


def test_report_command(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("pair,method,criterion,mode,pruned,P@1,P@5\nen-si,p,nn,exact,no,20.0000,40.0000\n")
    b.write_text("pair,method,criterion,mode,pruned,P@1,P@5\nen-si,p,nn,exact,yes,30.0000,40.0000\n")
    merged, text, fig, gfig = (tmp_path / n for n in ("m.csv", "t.txt", "f.png", "g.svg"))
    code, out, err = run(capsys, "report", b, a, "--out-csv", merged, "--out-text", text,
                         "--figure", fig, "--gain-figure", gfig)
    assert code == 0, err
    lines = merged.read_text().splitlines()
    assert lines[1].startswith("en-si,p,nn,exact,no,")
    assert lines[2].endswith("exact/unpruned,50.0000,0.0000")
    assert out == text.read_text() and "+50.0%" in out
    assert fig.stat().st_size > 0 and gfig.stat().st_size > 0


def test_report_inconsistent_ks_exit_1(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("pair,method,criterion,mode,pruned,P@1,P@5\nen-si,p,nn,exact,no,20.0000,40.0000\n")
    b.write_text("pair,method,criterion,mode,pruned,P@1\nen-si,p,nn,exact,yes,30.0000\n")
    code, _, err = run(capsys, "report", a, b)
    assert code == 1 and "inconsistent ks" in err
    code, _, _ = run(capsys, "report", tmp_path / "missing.csv")
    assert code == 2
