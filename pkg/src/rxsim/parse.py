"""Rule-based concept extraction from tablet prescription sentences.

A fixed-order pattern scan over lowercase tokens: drug name from a
lexicon (earliest start, longest span), strength as the first positive
number glued to a unit, then form, dose, frequency and route from small
phrase tables. Deterministic by construction.
"""

import re
from dataclasses import dataclass, field

STRENGTH_UNITS = ("mg", "mcg", "g", "ml", "unit", "%")
FORMS = ("tablet", "capsule", "solution", "cream", "spray", "other")
ROUTES = ("oral", "topical", "nasal", "injection", "other", "unknown")

_UNIT_ALIASES = {
    "mg": "mg",
    "mcg": "mcg",
    "g": "g",
    "ml": "ml",
    "unit": "unit",
    "units": "unit",
    "%": "%",
}

_FORM_ALIASES = {
    "tablet": "tablet",
    "tablets": "tablet",
    "capsule": "capsule",
    "capsules": "capsule",
    "solution": "solution",
    "cream": "cream",
    "spray": "spray",
    "sprays": "spray",
}

# Route phrases, matched as contiguous token sequences.
_ROUTE_PHRASES = (
    (("by", "mouth"), "oral"),
    (("orally",), "oral"),
    (("topically",), "topical"),
    (("to", "the", "skin"), "topical"),
    (("nasally",), "nasal"),
    (("in", "each", "nostril"), "nasal"),
    (("by", "injection"), "injection"),
    (("subcutaneously",), "injection"),
    (("intramuscularly",), "injection"),
)

# Tokens: numbers keep interior decimal points, '%' and '/' survive as
# their own tokens, all other punctuation is a separator.
_TOKEN_RE = re.compile(r"\d+\.\d+|\d+|[a-z]+|[%/]")

_NUMBER_RE = re.compile(r"^(?:\d+\.\d+|\d+)$")


class ParseFailure(Exception):
    """Sentence lacks a lexicon drug name or a positive strength."""

    def __init__(self, reason: str, sentence: str = ""):
        super().__init__(reason)
        self.reason = reason
        self.sentence = sentence


@dataclass(frozen=True)
class PrescriptionConcepts:
    """Structured medical elements extracted from one sentence."""

    drug_name: str
    strength_value: float
    strength_unit: str
    form: str
    dose_amount: float
    frequency_per_day: float
    route: str
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.drug_name:
            raise ValueError("drug_name must be non-empty")
        if self.strength_value < 0 or self.dose_amount < 0 or self.frequency_per_day < 0:
            raise ValueError("numeric concept fields must be non-negative")
        if self.strength_unit not in STRENGTH_UNITS:
            raise ValueError(f"unknown strength unit: {self.strength_unit!r}")
        if self.form not in FORMS:
            raise ValueError(f"unknown form: {self.form!r}")
        if self.route not in ROUTES:
            raise ValueError(f"unknown route: {self.route!r}")

    def to_dict(self) -> dict:
        return {
            "drug_name": self.drug_name,
            "strength_value": self.strength_value,
            "strength_unit": self.strength_unit,
            "form": self.form,
            "dose_amount": self.dose_amount,
            "frequency_per_day": self.frequency_per_day,
            "route": self.route,
        }


def tokenize(sentence: str) -> list:
    """Lowercase tokens; '10mg' splits into '10','mg', '2/day' keeps the slash."""
    return _TOKEN_RE.findall(sentence.lower())


def load_lexicon(path) -> frozenset:
    """Read a lexicon file: one lowercase drug name per line, '#' comments."""
    names = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                names.add(line.lower())
    return frozenset(names)


def _span_table(lexicon) -> dict:
    """Map token tuples to canonical lexicon names (sorted for determinism)."""
    table = {}
    for name in sorted(lexicon):
        toks = tuple(tokenize(name))
        if toks and toks not in table:
            table[toks] = name
    return table


def find_drugs(tokens, lexicon) -> list:
    """All non-overlapping lexicon matches, earliest start then longest span."""
    table = _span_table(lexicon)
    if not table:
        return []
    max_len = max(len(k) for k in table)
    found = []
    i = 0
    while i < len(tokens):
        hit = None
        for span in range(min(max_len, len(tokens) - i), 0, -1):
            name = table.get(tuple(tokens[i:i + span]))
            if name is not None:
                hit = (name, span)
                break
        if hit:
            found.append(hit[0])
            i += hit[1]
        else:
            i += 1
    return found


def _is_number(tok: str) -> bool:
    return bool(_NUMBER_RE.match(tok))


_FREQ_HOUR_WORDS = ("hours", "hour")


def _match_frequency(tokens):
    """First frequency phrase scanning left to right, or None."""
    n = len(tokens)
    for i in range(n):
        t = tokens[i]
        if (
            t == "every"
            and i + 2 < n
            and _is_number(tokens[i + 1])
            and tokens[i + 2] in _FREQ_HOUR_WORDS
        ):
            hours = float(tokens[i + 1])
            if hours > 0:
                return 24.0 / hours
        if t == "four" and i + 1 < n and tokens[i + 1] == "times":
            return 4.0
        if t == "three" and i + 1 < n and tokens[i + 1] == "times":
            return 3.0
        if t == "two" and i + 1 < n and tokens[i + 1] == "times":
            return 2.0
        if t == "twice":
            return 2.0
        if t == "one" and i + 2 < n and tokens[i + 1] == "time" and tokens[i + 2] == "daily":
            return 1.0
        if t == "once" and i + 1 < n and tokens[i + 1] == "daily":
            return 1.0
        if t == "daily":
            return 1.0
        if t == "weekly":
            return 1.0 / 7.0
        if t == "as" and i + 1 < n and tokens[i + 1] == "needed":
            return 1.0
    return None


def normalize_frequency(tokens) -> float:
    """Administrations per day from the sig phrase table; 1.0 when no phrase matches."""
    value = _match_frequency(tokens)
    return 1.0 if value is None else value


def _find_route(tokens):
    for i in range(len(tokens)):
        for phrase, route in _ROUTE_PHRASES:
            if tuple(tokens[i:i + len(phrase)]) == phrase:
                return route
    return None


def _find_strength(tokens):
    """First positive number immediately followed by a unit token."""
    for i in range(len(tokens) - 1):
        if _is_number(tokens[i]) and tokens[i + 1] in _UNIT_ALIASES:
            value = float(tokens[i])
            if value > 0:
                return value, _UNIT_ALIASES[tokens[i + 1]], i
    return None


_DOSE_VERBS = ("take", "use", "apply", "inject", "instill")


def _find_dose(tokens, form_idx):
    """Number directly before the form token, else the first number after it
    (skipping strength and 'every N hours' numbers), else the number right
    after an administration verb."""
    if form_idx is not None:
        if form_idx > 0 and _is_number(tokens[form_idx - 1]):
            return float(tokens[form_idx - 1])
        for i in range(form_idx + 1, len(tokens)):
            if not _is_number(tokens[i]):
                continue
            if i > 0 and tokens[i - 1] == "every":
                continue
            if i + 1 < len(tokens) and tokens[i + 1] in _UNIT_ALIASES:
                continue
            return float(tokens[i])
    for i in range(len(tokens) - 1):
        if tokens[i] in _DOSE_VERBS and _is_number(tokens[i + 1]):
            return float(tokens[i + 1])
    return None


def extract_concepts(sentence: str, lexicon) -> PrescriptionConcepts:
    """Parse one sentence; raises ParseFailure without a drug name or strength."""
    if not lexicon:
        raise ValueError("lexicon must be non-empty")
    tokens = tokenize(sentence)

    drugs = find_drugs(tokens, lexicon)
    if not drugs:
        raise ParseFailure("no lexicon drug name found", sentence)
    drug_name = drugs[0]

    strength = _find_strength(tokens)
    if strength is None:
        raise ParseFailure("no positive strength with a valid unit found", sentence)
    strength_value, strength_unit, _ = strength

    warnings = []

    form_idx = None
    form = "other"
    for i, tok in enumerate(tokens):
        if tok in _FORM_ALIASES:
            form_idx = i
            form = _FORM_ALIASES[tok]
            break
    if form_idx is None:
        warnings.append("form_defaulted")

    dose = _find_dose(tokens, form_idx)
    if dose is None:
        dose = 1.0
        warnings.append("dose_defaulted")

    freq = _match_frequency(tokens)
    if freq is None:
        freq = 1.0
        warnings.append("frequency_defaulted")

    route = _find_route(tokens)
    if route is None:
        route = "unknown"
        warnings.append("route_defaulted")

    return PrescriptionConcepts(
        drug_name=drug_name,
        strength_value=strength_value,
        strength_unit=strength_unit,
        form=form,
        dose_amount=dose,
        frequency_per_day=freq,
        route=route,
        warnings=tuple(warnings),
    )
