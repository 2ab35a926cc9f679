import pytest

from ctxbias.cli import main
from ctxbias.wfst import read_fst

from oracles import brute_relation

TRAIN = """u1\tcall @contact# jane smith #contact@ mobile
u2\tcall @contact# jane doe #contact@
u3\tcall mom
u4\tcall @contact# sister #contact@
u5\twhat is the weather
"""


@pytest.fixture
def work(tmp_path):
    (tmp_path / "train.txt").write_text(TRAIN * 10)
    (tmp_path / "bpe.txt").write_text(TRAIN * 3 + "u9\tjain jain sista sista\n")
    assert main(["bpe", "learn", "--corpus", str(tmp_path / "bpe.txt"), "--vocab-size", "200",
                 "--reserved", "@contact#", "#contact@", "--out", str(tmp_path / "bpe")]) == 0
    return tmp_path


def test_bpe_apply(work, capsys):
    (work / "in.txt").write_text("u1\tcall @contact# jain #contact@\n")
    assert main(["bpe", "apply", "--model", str(work / "bpe"), "--input", str(work / "in.txt")]) == 0
    assert capsys.readouterr().out == "u1\tcall</w> @contact# jain</w> #contact@\n"


def test_bias_build_with_mapping(work):
    (work / "phrases.tsv").write_text("sista\t1\njane smith\t3\n")
    out = work / "contact.fst"
    assert main(["bias", "build", "--phrases", str(work / "phrases.tsv"), "--bpe", str(work / "bpe"),
                 "--with-mapping", "--out", str(out)]) == 0
    rel = brute_relation(read_fst(out))
    assert {o for _, o in rel} == {("sista",), ("jane", "smith")}
    assert (("sister</w>",), ("sista",)) in rel


def test_map(capsys):
    assert main(["map", "sista", "Yvanna", "Vandendriessche"]) == 0
    assert capsys.readouterr().out == "sista\tsister\nYvanna\tivana\nVandendriessche\tvanden drey eske\n"


def test_relabel(tmp_path, capsys):
    (tmp_path / "refs").write_text("u1\tcall Jain Smith mobile\n")
    (tmp_path / "hyps").write_text("u1\tcall @contact# jane smith #contact@ mobile\n")
    assert main(["relabel", "--refs", str(tmp_path / "refs"), "--hyps", str(tmp_path / "hyps")]) == 0
    assert capsys.readouterr().out == "u1\tcall @contact# Jain Smith #contact@ mobile\n"


def test_decode_and_eval(work):
    (work / "contacts.tsv").write_text("jain smith\n")
    (work / "classes.tsv").write_text("contact\t@contact#\t#contact@\tcontacts.tsv\n")
    (work / "confusion.tsv").write_text("jain</w>\tjane</w>\t0.6\njain</w>\tjain</w>\t0.4\n")
    (work / "utts.tsv").write_text("t1\tcall @contact# jain smith #contact@\nt2\tcall mom\n")
    common = ["decode", "--utts", str(work / "utts.tsv"), "--bpe", str(work / "bpe"),
              "--train", str(work / "train.txt"), "--confusion", str(work / "confusion.tsv")]
    assert main(common + ["--out", str(work / "plain.nbest")]) == 0
    assert main(common + ["--classes", str(work / "classes.tsv"), "--out", str(work / "biased.nbest")]) == 0
    top = {l.split("\t")[0]: l.split("\t")[3] for l in (work / "biased.nbest").read_text().splitlines()
           if l.split("\t")[1] == "1"}
    assert top["t1"] == "call @contact# jain smith #contact@"

    for name in ["plain", "biased"]:
        assert main(["eval", "--decodes", str(work / f"{name}.nbest"), "--refs", str(work / "utts.tsv"),
                     "--out", str(work / f"{name}.tsv"), "--csv", str(work / f"{name}.csv")]) == 0
    assert (work / "biased.csv").read_text() == "bucket,count,wer\n0,1,0.000000\n1,1,0.000000\n"
    assert "1,1,0.333333" in (work / "plain.csv").read_text()
    first = (work / "biased.tsv").read_text()
    main(["eval", "--decodes", str(work / "biased.nbest"), "--refs", str(work / "utts.tsv"),
          "--out", str(work / "biased.tsv")])
    assert (work / "biased.tsv").read_text() == first


def test_fst_commands(work, capsys):
    (work / "p.tsv").write_text("jane\njane smith\n")
    main(["bias", "build", "--phrases", str(work / "p.tsv"), "--bpe", str(work / "bpe"), "--out", str(work / "a.fst")])
    for op in ["print", "determinize", "minimize", "shortest-path"]:
        assert main(["fst", op, str(work / "a.fst")]) == 0
    out = capsys.readouterr().out
    assert "0\t1\tjane</w>\tjane\t0.693147" in out
    assert main(["fst", "compose", str(work / "a.fst")]) == 2


def test_exit_codes(tmp_path):
    assert main(["relabel", "--refs", str(tmp_path / "missing"), "--hyps", str(tmp_path / "missing")]) == 1
    (tmp_path / "bad").write_text("no tab\n")
    assert main(["relabel", "--refs", str(tmp_path / "bad"), "--hyps", str(tmp_path / "bad")]) == 1
    assert main(["map"]) == 2
    assert main(["eval", "--decodes", "x", "--refs", "y", "--edges", "a,b"]) == 2
