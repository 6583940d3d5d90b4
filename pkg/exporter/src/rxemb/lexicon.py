"""Lexicon loading and drug-span location.

Matching must agree with the similarity package's parser so both sides key
drug spans identically: lowercase token stream (numbers keep interior
decimal points, '%' and '/' survive as their own tokens, other punctuation
separates), then greedy earliest-start longest-span lookup of tokenized
lexicon names.
"""

import re

_TOKEN_RE = re.compile(r"\d+\.\d+|\d+|[a-z]+|[%/]")


def load_lexicon(path) -> frozenset:
    """One lowercase drug name per line; blank lines and '#' comments skipped."""
    names = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            name = line.split("#", 1)[0].strip().lower()
            if name:
                names.add(name)
    return frozenset(names)


def tokenize_with_offsets(sentence: str):
    """Lowercased tokens with their character spans in the original text."""
    return [
        (m.group(0), m.start(), m.end())
        for m in _TOKEN_RE.finditer(sentence.lower())
    ]


def _span_table(lexicon) -> dict:
    table = {}
    for name in lexicon:
        parts = tuple(tok for tok, _, _ in tokenize_with_offsets(name))
        if parts:
            table[parts] = name
    return table


def find_drug_spans(sentence: str, lexicon) -> list:
    """All non-overlapping lexicon matches as (drug, char_start, char_end),
    earliest start then longest token span, in textual order."""
    table = _span_table(lexicon)
    if not table:
        return []
    tokens = tokenize_with_offsets(sentence)
    max_len = max(len(k) for k in table)
    found = []
    i = 0
    while i < len(tokens):
        hit = None
        for span in range(min(max_len, len(tokens) - i), 0, -1):
            name = table.get(tuple(t for t, _, _ in tokens[i:i + span]))
            if name is not None:
                hit = (name, span)
                break
        if hit:
            name, span = hit
            found.append((name, tokens[i][1], tokens[i + span - 1][2]))
            i += span
        else:
            i += 1
    return found
