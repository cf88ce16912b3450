"""Suffix-replacement lemmatizer trained from (form, UPOS, lemma) triples.

For each training triple the learned rule is: strip the form suffix left
after removing the longest common prefix of form and lemma, append the
corresponding lemma suffix.  Exact (form, UPOS) pairs seen in training are
memorized in an exceptions table that takes precedence, so the trained
model reproduces its training data perfectly.  Unknown forms fall back to
the longest matching suffix rule, then to wildcard-UPOS rules, then to the
identity.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from udkit.errors import DataError, ResourceError

WILDCARD = "*"

MODEL_HEADER = "lemma-model v1"


class TrainingError(DataError):
    pass


@dataclass(frozen=True)
class SuffixRule:
    upos: str
    form_suffix: str
    lemma_suffix: str
    frequency: int


@dataclass
class LemmaModel:
    # (upos, form_suffix) -> winning lemma_suffix; WILDCARD keys aggregate
    # over all UPOS values.
    rules: dict[tuple[str, str], str] = field(default_factory=dict)
    # (form, upos) -> lemma, plus WILDCARD-upos entries for untagged lookup.
    exceptions: dict[tuple[str, str], str] = field(default_factory=dict)
    rule_stats: list[SuffixRule] = field(default_factory=list)
    exception_stats: list[tuple[str, str, str, int]] = field(
        default_factory=list)
    max_suffix_len: int = 0


def _common_prefix_len(a, b):
    n = min(len(a), len(b))
    i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return i


def extract_rule(form, upos, lemma):
    """The (upos, form_suffix, lemma_suffix) rule a single triple teaches."""
    cut = _common_prefix_len(form, lemma)
    return (upos, form[cut:], lemma[cut:])


def _pick_best(counter):
    """Break ties by frequency (desc) then lexicographic order (asc)."""
    return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))


def train_lemmatizer(doc):
    """Learn suffix rules and an exceptions table from a treebank."""
    rule_counts: Counter = Counter()
    exception_counts: Counter = Counter()
    saw_any = False
    for si, sentence in enumerate(doc.sentences):
        for token in sentence.tokens:
            if token.lemma == "_":
                label = sentence.sent_id or f"#{si + 1}"
                raise TrainingError(
                    f"sentence {label}: token {token.id} ({token.form!r}) "
                    f"has no lemma")
            saw_any = True
            upos, fs, ls = extract_rule(token.form, token.upos, token.lemma)
            rule_counts[(upos, fs, ls)] += 1
            rule_counts[(WILDCARD, fs, ls)] += 1
            exception_counts[(token.form, token.upos, token.lemma)] += 1
            exception_counts[(token.form, WILDCARD, token.lemma)] += 1
    if not saw_any:
        raise TrainingError("treebank has no tokens")
    return _build_model(rule_counts, exception_counts)


def _build_model(rule_counts, exception_counts):
    model = LemmaModel()
    by_key: dict[tuple[str, str], Counter] = {}
    for (upos, fs, ls), freq in rule_counts.items():
        by_key.setdefault((upos, fs), Counter())[ls] += freq
        if upos != WILDCARD:
            model.rule_stats.append(SuffixRule(upos, fs, ls, freq))
    for key, candidates in by_key.items():
        model.rules[key] = _pick_best(candidates)[0]
        model.max_suffix_len = max(model.max_suffix_len, len(key[1]))

    by_form: dict[tuple[str, str], Counter] = {}
    for (form, upos, lemma), freq in exception_counts.items():
        by_form.setdefault((form, upos), Counter())[lemma] += freq
        if upos != WILDCARD:
            model.exception_stats.append((form, upos, lemma, freq))
    for key, candidates in by_form.items():
        model.exceptions[key] = _pick_best(candidates)[0]

    model.rule_stats.sort(key=lambda r: (r.upos, r.form_suffix,
                                         r.lemma_suffix))
    model.exception_stats.sort()
    return model


def lemmatize(form, upos, model):
    """Lemmatize one form.  Total: unknown input falls back to itself.

    An unset UPOS ("_") skips straight to the wildcard tables, which is how
    the pipeline runs when lemmatization precedes tagging.
    """
    keys = [(form, upos)] if upos != "_" else []
    keys.append((form, WILDCARD))
    for key in keys:
        hit = model.exceptions.get(key)
        if hit is not None:
            return hit

    upos_passes = [upos] if upos != "_" else []
    upos_passes.append(WILDCARD)
    top = min(len(form), model.max_suffix_len)
    for pass_upos in upos_passes:
        for k in range(top, -1, -1):
            fs = form[len(form) - k:] if k else ""
            ls = model.rules.get((pass_upos, fs))
            if ls is not None:
                return (form[:len(form) - k] if k else form) + ls
    return form


def save_lemma_model(model, path):
    lines = [MODEL_HEADER]
    for form, upos, lemma, freq in model.exception_stats:
        lines.append(f"E\t{form}\t{upos}\t{lemma}\t{freq}")
    for rule in model.rule_stats:
        lines.append(f"R\t{rule.upos}\t{rule.form_suffix}"
                     f"\t{rule.lemma_suffix}\t{rule.frequency}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_lemma_model(path):
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0] != MODEL_HEADER:
        raise ResourceError(f"{path}: not a {MODEL_HEADER!r} file")
    rule_counts: Counter = Counter()
    exception_counts: Counter = Counter()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cols = line.split("\t")
        if cols[0] == "E" and len(cols) == 5:
            form, upos, lemma, freq = cols[1:]
            exception_counts[(form, upos, lemma)] += int(freq)
            exception_counts[(form, WILDCARD, lemma)] += int(freq)
        elif cols[0] == "R" and len(cols) == 5:
            upos, fs, ls, freq = cols[1:]
            rule_counts[(upos, fs, ls)] += int(freq)
            rule_counts[(WILDCARD, fs, ls)] += int(freq)
        else:
            raise ResourceError(f"{path}:{line_no}: unrecognized record")
    return _build_model(rule_counts, exception_counts)
