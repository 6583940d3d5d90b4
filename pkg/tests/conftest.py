import json

import pytest

from rxsim import parse
from rxsim_test_support import FIXTURES, small_benchmark


@pytest.fixture(scope="session")
def fixture_lexicon():
    return parse.load_lexicon(FIXTURES / "lexicon.txt")


@pytest.fixture(scope="session")
def corpus_rows():
    with open(FIXTURES / "parser_corpus.jsonl", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


@pytest.fixture(scope="session")
def fixture_ontology():
    from rxsim.ontology import load_ontology

    return load_ontology(FIXTURES / "ontology_edges.tsv", FIXTURES / "drug_map.tsv")


@pytest.fixture(scope="session")
def small_data():
    return small_benchmark()
