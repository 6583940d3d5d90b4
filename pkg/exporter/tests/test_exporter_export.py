import base64
import json

import numpy as np
import pytest

from rxemb import export_embeddings, read_dataset, reference_encoder
from rxemb.cli import main
from rxemb.export import ExportJob, run_job


def _parse_emb1(path):
    """Minimal structural parse: header counts plus decoded records."""
    lines = path.read_text(encoding="utf-8").splitlines()
    magic, dim, n_s, n_d = lines[0].split()
    assert magic == "EMB1"
    dim, n_s, n_d = int(dim), int(n_s), int(n_d)
    sents, spans, comments = {}, {}, []
    for line in lines[1:]:
        if line.startswith("#"):
            comments.append(line)
            continue
        fields = line.split()
        vec = np.frombuffer(base64.b64decode(fields[-1]), dtype="<f4")
        assert vec.shape == (dim,)
        if fields[0] == "S":
            sents[fields[1]] = vec
        else:
            assert fields[0] == "D"
            spans[(fields[1], " ".join(fields[2:-1]))] = vec
    assert len(sents) == n_s
    assert len(spans) == n_d
    return dim, sents, spans, comments


def test_read_dataset_rows_and_errors(tiny_workspace, tmp_path):
    rows = read_dataset(tiny_workspace["dataset"])
    assert [pid for pid, _, _ in rows] == ["p0", "p1"]

    bad = tmp_path / "bad.jsonl"
    bad.write_text("not json\n", encoding="utf-8")
    with pytest.raises(ValueError, match=":1"):
        read_dataset(bad)
    bad.write_text('{"id": "x", "text_a": "a"}\n', encoding="utf-8")
    with pytest.raises(ValueError, match="text_b"):
        read_dataset(bad)
    bad.write_text('{"id": "x y", "text_a": "a", "text_b": "b"}\n', encoding="utf-8")
    with pytest.raises(ValueError, match="whitespace"):
        read_dataset(bad)
    row = json.dumps({"id": "x", "text_a": "a", "text_b": "b"})
    bad.write_text(row + "\n" + row + "\n", encoding="utf-8")
    with pytest.raises(ValueError, match="duplicate"):
        read_dataset(bad)


def test_export_writes_conformant_records(tiny_workspace, encoder):
    out = tiny_workspace["dir"] / "vectors.emb1"
    summary = export_embeddings(tiny_workspace["dataset"], tiny_workspace["lexicon"],
                                encoder, out)
    assert (summary.dim, summary.n_sentences, summary.n_fallbacks) == (16, 4, 0)
    dim, sents, spans, comments = _parse_emb1(out)
    assert dim == encoder.hidden_size
    assert set(sents) == {"p0/a", "p0/b", "p1/a", "p1/b"}
    assert ("p0/a", "ab") in spans and ("p1/a", "xy") in spans
    assert comments == []


def test_export_rerun_and_batch_size_byte_identical(tiny_workspace):
    d = tiny_workspace["dir"]
    export_embeddings(tiny_workspace["dataset"], tiny_workspace["lexicon"],
                      reference_encoder(), d / "v1.emb1", batch_size=16)
    export_embeddings(tiny_workspace["dataset"], tiny_workspace["lexicon"],
                      reference_encoder(), d / "v2.emb1", batch_size=16)
    export_embeddings(tiny_workspace["dataset"], tiny_workspace["lexicon"],
                      reference_encoder(), d / "v3.emb1", batch_size=1)
    b1 = (d / "v1.emb1").read_bytes()
    assert (d / "v2.emb1").read_bytes() == b1
    assert (d / "v3.emb1").read_bytes() == b1


def test_multi_word_drug_name_layout(tmp_path, encoder):
    dataset = tmp_path / "d.jsonl"
    dataset.write_text(json.dumps({"id": "p0", "text_a": "take ab plus 5 mg",
                                   "text_b": "use xy drops"}) + "\n", encoding="utf-8")
    lexicon = tmp_path / "lex.txt"
    lexicon.write_text("ab plus\nxy\n", encoding="utf-8")
    out = tmp_path / "v.emb1"
    export_embeddings(dataset, lexicon, encoder, out)
    _, _, spans, _ = _parse_emb1(out)
    assert ("p0/a", "ab plus") in spans


def test_unaligned_span_falls_back_to_sentence_vector(tmp_path, encoder):
    # the drug sits past the encoder's 128-token window, so no token aligns
    long_head = "take " + "word " * 40
    dataset = tmp_path / "d.jsonl"
    dataset.write_text(json.dumps({"id": "p0", "text_a": long_head + "ab 5 mg",
                                   "text_b": "use ab now"}) + "\n", encoding="utf-8")
    lexicon = tmp_path / "lex.txt"
    lexicon.write_text("ab\n", encoding="utf-8")
    out = tmp_path / "v.emb1"
    with pytest.warns(UserWarning, match="no aligned tokens"):
        summary = export_embeddings(dataset, lexicon, encoder, out)
    assert summary.n_fallbacks == 1
    _, sents, spans, comments = _parse_emb1(out)
    assert np.array_equal(spans[("p0/a", "ab")], sents["p0/a"])
    assert any("fallback p0/a ab" in c for c in comments)
    # the well-aligned side still pools real tokens
    assert not np.array_equal(spans[("p0/b", "ab")], sents["p0/b"])


def test_run_job_accepts_model_id_string(tiny_workspace):
    out = tiny_workspace["dir"] / "job.emb1"
    summary = run_job(ExportJob(dataset=str(tiny_workspace["dataset"]),
                                lexicon=str(tiny_workspace["lexicon"]),
                                encoder_id="reference", out=str(out)))
    assert summary.n_sentences == 4
    assert out.exists()


def test_cli_export_and_error_paths(tiny_workspace, capsys):
    out = tiny_workspace["dir"] / "cli.emb1"
    code = main(["--dataset", str(tiny_workspace["dataset"]),
                 "--lexicon", str(tiny_workspace["lexicon"]),
                 "--model", "reference", "--out", str(out)])
    assert code == 0
    assert "sentences=4" in capsys.readouterr().out
    assert out.exists()

    code = main(["--dataset", str(tiny_workspace["dir"] / "missing.jsonl"),
                 "--lexicon", str(tiny_workspace["lexicon"]),
                 "--model", "reference", "--out", str(out)])
    assert code == 1
    assert "error:" in capsys.readouterr().err
