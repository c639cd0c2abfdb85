"""Rule engine mapping free-text diagnosis strings to disease flags.

The rule file (see ``data/default_rules.txt`` for the shipped defaults and
the format description) is immutable after load; mapping is pure. Matching
is case-insensitive, umlauts are transliterated, tokens are expanded via
the abbreviation table and then stemmed against the dictionary. A negation
token inverts a pattern matched in the same comma/semicolon fragment; the
``*`` fallback of a disease fires only when no explicit pattern matched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import InvalidRuleSet

_UMLAUTS = str.maketrans({"ä": "ae", "ö": "oe", "ü": "ue", "ß": "ss"})
_TOKEN_RE = re.compile(r"[a-z0-9]+")
_FRAGMENT_RE = re.compile(r"[,;]")


@dataclass(frozen=True)
class Pattern:
    tokens: tuple
    flag: bool


@dataclass
class RuleSet:
    version: int
    stemming: dict
    abbreviations: dict  # token -> tuple of expansion tokens
    negation_tokens: frozenset
    diseases: dict  # disease name -> (ordered tuple[Pattern], fallback flag)

    def disease_names(self):
        return tuple(self.diseases)


@dataclass
class MappedFlags:
    flags: dict = field(default_factory=dict)
    explicit: dict = field(default_factory=dict)  # flag -> bool, True when a non-* rule hit

    @property
    def any_explicit(self) -> bool:
        return any(self.explicit.values())


def default_rules() -> RuleSet:
    text = resources.files("visus").joinpath("data/default_rules.txt").read_text("utf-8")
    return parse_rules(text)


def load_rules(path) -> RuleSet:
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh.read())


def parse_rules(text: str) -> RuleSet:
    version = 0
    stemming: dict = {}
    abbreviations: dict = {}
    negation: set = set()
    diseases: dict = {}
    section = None
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section.startswith("disease."):
                name = section[len("disease."):]
                if not name:
                    raise InvalidRuleSet("empty disease name")
                if name in diseases:
                    raise InvalidRuleSet(f"duplicate disease section {name!r}")
                diseases[name] = []
            continue
        if section is None:
            if line.replace(" ", "").startswith("version="):
                version = int(line.split("=", 1)[1])
                continue
            raise InvalidRuleSet(f"line outside any section: {raw_line!r}")
        if section == "stemming":
            token, _, stem = line.partition("=")
            stemming[_fold(token)] = _fold(stem)
        elif section == "abbreviations":
            token, _, expansion = line.partition("=")
            abbreviations[_fold(token)] = tuple(_fold(expansion).split())
        elif section == "negation":
            negation.add(_fold(line))
        elif section.startswith("disease."):
            name = section[len("disease."):]
            pattern, _, flag_text = line.partition("->")
            flag_text = flag_text.strip().lower()
            if flag_text not in ("true", "false"):
                raise InvalidRuleSet(f"{name}: flag must be true/false, got {flag_text!r}")
            diseases[name].append((pattern.strip(), flag_text == "true"))
        else:
            raise InvalidRuleSet(f"unknown section {section!r}")

    ruleset_diseases: dict = {}
    # Stems are applied to pattern tokens too, so rules match post-stemming text.
    for name, entries in diseases.items():
        patterns = []
        fallback = None
        for pattern_text, flag in entries:
            if pattern_text == "*":
                if fallback is not None:
                    raise InvalidRuleSet(f"{name}: more than one '*' fallback")
                fallback = flag
                continue
            tokens = tuple(
                stemming.get(t, t) for t in _TOKEN_RE.findall(_fold(pattern_text))
            )
            if not tokens:
                raise InvalidRuleSet(f"{name}: empty pattern {pattern_text!r}")
            patterns.append(Pattern(tokens=tokens, flag=flag))
        if fallback is None:
            raise InvalidRuleSet(f"{name}: missing '*' fallback")
        ruleset_diseases[name] = (tuple(patterns), fallback)
    if not ruleset_diseases:
        raise InvalidRuleSet("rule file defines no diseases")
    return RuleSet(
        version=version,
        stemming=stemming,
        abbreviations=abbreviations,
        negation_tokens=frozenset(negation),
        diseases=ruleset_diseases,
    )


def _fold(text: str) -> str:
    return text.strip().lower().translate(_UMLAUTS)


def normalize(text: str, rules: RuleSet | None = None) -> list:
    """Lowercased, punctuation-stripped, abbreviation-expanded, stemmed tokens."""
    if rules is None:
        rules = default_rules()
    tokens = []
    for tok in _TOKEN_RE.findall(_fold(text)):
        expanded = rules.abbreviations.get(tok, (tok,))
        for t in expanded:
            tokens.append(rules.stemming.get(t, t))
    return tokens


def _fragments(text: str, rules: RuleSet) -> list:
    return [frozenset(normalize(frag, rules)) for frag in _FRAGMENT_RE.split(text)]


def map_diagnosis(text: str, rules: RuleSet | None = None) -> MappedFlags:
    """Resolve every disease flag for one free-text string.

    First matching pattern wins per disease; negation tokens in the same
    fragment invert an explicit match; the '*' fallback resolves the rest.
    """
    if rules is None:
        rules = default_rules()
    frags = _fragments(text, rules)
    result = MappedFlags()
    for name, (patterns, fallback) in rules.diseases.items():
        value = None
        for pattern in patterns:
            for frag in frags:
                if all(t in frag for t in pattern.tokens):
                    value = pattern.flag
                    if rules.negation_tokens & frag:
                        value = not value
                    break
            if value is not None:
                break
        if value is None:
            result.flags[name] = fallback
            result.explicit[name] = False
        else:
            result.flags[name] = value
            result.explicit[name] = True
    return result


@dataclass
class CoverageReport:
    total: int = 0
    mapped: int = 0
    unmapped: dict = field(default_factory=dict)  # text -> occurrence count

    @property
    def coverage(self) -> float:
        return self.mapped / self.total if self.total else 1.0

    def to_text(self) -> str:
        lines = [f"diagnosis strings: {self.total}, with explicit match: {self.mapped}"]
        for text, n in sorted(self.unmapped.items()):
            lines.append(f"unmapped x{n}: {text}")
        return "\n".join(lines) + "\n"


def map_corpus(corpus, rules: RuleSet | None = None):
    """Attach flags to every diagnosis event; returns (corpus, CoverageReport)."""
    if rules is None:
        rules = default_rules()
    report = CoverageReport()
    for patient in corpus.patients:
        for eye in patient.eyes.values():
            for diag in eye.diagnoses:
                mapped = map_diagnosis(diag.text, rules)
                diag.flags = mapped.flags
                diag.explicit = mapped.explicit
                report.total += 1
                if mapped.any_explicit:
                    report.mapped += 1
                else:
                    report.unmapped[diag.text] = report.unmapped.get(diag.text, 0) + 1
    return corpus, report
