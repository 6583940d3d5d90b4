import json

import pytest

from rxemb import reference_encoder


@pytest.fixture(scope="session")
def encoder():
    return reference_encoder()


@pytest.fixture()
def tiny_workspace(tmp_path):
    rows = [
        {"id": "p0", "text_a": "take ab 500 mg tablet daily",
         "text_b": "use ab 250 mg capsule"},
        {"id": "p1", "text_a": "inject xy 10 ml solution",
         "text_b": "take ab 500 mg tablet twice daily"},
    ]
    dataset = tmp_path / "dataset.jsonl"
    dataset.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    lexicon = tmp_path / "lexicon.txt"
    lexicon.write_text("ab\nxy\n", encoding="utf-8")
    return {"dir": tmp_path, "dataset": dataset, "lexicon": lexicon, "rows": rows}
