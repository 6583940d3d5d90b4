import json

import pytest

from rxsim.cli import main, parse_config_file


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# budgets\n"
        "iterations = 2\n"
        "gamma_b = 0.25   # pseudo weight\n"
        "mode = \"local\"\n"
        "backbone = lexical\n"
        "gcn_layer_sizes = (32, 64)\n"
        "\n"
    )
    cfg = parse_config_file(path)
    assert cfg == {
        "iterations": 2,
        "gamma_b": 0.25,
        "mode": "local",
        "backbone": "lexical",
        "gcn_layer_sizes": (32, 64),
    }


def test_parse_config_bools_and_errors(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("flag = true\nother = false\n")
    assert parse_config_file(path) == {"flag": True, "other": False}
    path.write_text("no equals sign here\n")
    with pytest.raises(ValueError, match=":1"):
        parse_config_file(path)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """synth -> split once; the training commands reuse these files."""
    root = tmp_path_factory.mktemp("cli")
    data_dir = root / "data"
    code = main([
        "synth", "--n-drugs", "12", "--n-pairs", "50", "--sigma", "0.4",
        "--seed", "0", "--out-dir", str(data_dir),
    ])
    assert code == 0
    code = main([
        "split", "--dataset", str(data_dir / "dataset.jsonl"), "--ratio", "0.65",
        "--seed", "0",
    ])
    assert code == 0
    cfg = root / "quick.cfg"
    cfg.write_text("backbone_epochs = 40\ngcn_epochs = 40\niterations = 2\n")
    return {
        "root": root,
        "dataset": str(data_dir / "dataset.jsonl"),
        "lexicon": str(data_dir / "lexicon.txt"),
        "edges": str(data_dir / "ontology_edges.tsv"),
        "map": str(data_dir / "drug_map.tsv"),
        "config": str(cfg),
    }


def _inputs(ws):
    return [
        "--dataset", ws["dataset"], "--lexicon", ws["lexicon"],
        "--ontology-edges", ws["edges"], "--drug-map", ws["map"],
        "--config", ws["config"], "--seed", "0",
    ]


def test_synth_files_exist(workspace):
    for key in ("dataset", "lexicon", "edges", "map"):
        assert len(open(workspace[key]).readlines()) > 0


def test_parse_sentence(workspace, capsys):
    drug = open(workspace["lexicon"]).readline().strip()
    code = main([
        "parse", "--lexicon", workspace["lexicon"],
        "--sentence", f"take 1 tablet of {drug} 500 mg by mouth twice daily",
    ])
    out = capsys.readouterr().out
    assert code == 0
    doc = json.loads(out)
    assert doc["drug_name"] == drug
    assert doc["strength_value"] == 500.0
    assert doc["form"] == "tablet"
    assert doc["frequency_per_day"] == 2.0


def test_parse_dataset_lines(workspace, capsys):
    code = main(["parse", "--lexicon", workspace["lexicon"], "--dataset", workspace["dataset"]])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert len(out) == 50
    first = json.loads(out[0])
    assert {"id", "a", "b"} <= set(first)


def test_parse_requires_input(workspace):
    with pytest.raises(SystemExit):
        main(["parse", "--lexicon", workspace["lexicon"]])


def test_parse_failure_exit_code(workspace, capsys):
    code = main([
        "parse", "--lexicon", workspace["lexicon"],
        "--sentence", "no recognizable drug here",
    ])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_train_backbone(workspace, capsys):
    out_dir = workspace["root"] / "backbone"
    code = main(["train-backbone", *_inputs(workspace), "--out-dir", str(out_dir)])
    assert code == 0
    assert "backbone test pearson=" in capsys.readouterr().out
    assert (out_dir / "backbone_0000.json").exists()
    workspace["backbone_ckpt"] = str(out_dir / "backbone_0000.json")


def test_build_graph(workspace, capsys):
    out_dir = workspace["root"] / "graph"
    code = main([
        "build-graph", *_inputs(workspace), "--out-dir", str(out_dir),
        "--backbone", workspace["backbone_ckpt"],
    ])
    assert code == 0
    doc = json.loads((out_dir / "graph.json").read_text())
    assert doc["mode"] == "medical"
    assert doc["edges"]


def test_run_cycle_and_eval(workspace, capsys):
    out_dir = workspace["root"] / "cycle"
    code = main(["run-cycle", *_inputs(workspace), "--out-dir", str(out_dir)])
    out = capsys.readouterr().out
    assert code == 0
    assert "iteration 0:" in out and "iteration 1:" in out
    assert (out_dir / "metrics.csv").exists()
    assert (out_dir / "gcn_0001.json").exists()

    code = main([
        "eval", *_inputs(workspace),
        "--backbone", str(out_dir / "backbone_0001.json"),
        "--gcn", str(out_dir / "gcn_0001.json"),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "backbone test pearson=" in out and "gcn test pearson=" in out

    report_dir = workspace["root"] / "report"
    code = main([
        "export-report", *_inputs(workspace), "--out-dir", str(report_dir),
        "--backbone", str(out_dir / "backbone_0001.json"),
        "--gcn", str(out_dir / "gcn_0001.json"),
    ])
    assert code == 0
    report = (report_dir / "report.csv").read_text().splitlines()
    assert report[0] == "pair_id,gold,backbone,gcn"
    assert len(report) > 1
    plot = (report_dir / "plot.tsv").read_text().splitlines()
    assert plot[0] == "index\tpair_id\tgold\tbackbone\tgcn"
    assert len(plot) == len(report)


def test_eval_requires_backbone(workspace):
    with pytest.raises(SystemExit):
        main(["eval", *_inputs(workspace)])


def test_unknown_config_key(workspace, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("not_a_real_knob = 3\n")
    args = _inputs(workspace)
    args[args.index(workspace["config"])] = str(bad)
    with pytest.raises(SystemExit, match="not_a_real_knob"):
        main(["train-backbone", *args, "--out-dir", str(tmp_path / "out")])


def test_missing_out_dir(workspace):
    with pytest.raises(SystemExit, match="out-dir"):
        main(["run-cycle", *_inputs(workspace)])


def test_medical_mode_needs_ontology_flags(workspace, tmp_path):
    code_args = [
        "run-cycle", "--dataset", workspace["dataset"], "--lexicon", workspace["lexicon"],
        "--config", workspace["config"], "--seed", "0",
        "--out-dir", str(tmp_path / "x"),
    ]
    with pytest.raises(SystemExit, match="ontology"):
        main(code_args)


def test_missing_file_exit_code(workspace, capsys):
    code = main([
        "parse", "--lexicon", "/nonexistent/lexicon.txt", "--sentence", "x",
    ])
    assert code == 1
    assert "error:" in capsys.readouterr().err
