"""Multi-word-token expansion: split clitic-bearing surface tokens into
syntactic words, recording the original surface form as an MwtSpan.

Expansion is driven by an ordered rule table (see data/clitic_rules.tsv).
Policy: at most one split per token, and words already covered by an MWT
span are never re-split, which makes sentence-level expansion idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from udkit.conllu import MwtSpan, Sentence, Token
from udkit.errors import ResourceError
from importlib import resources


@dataclass(frozen=True)
class CliticRule:
    suffix: str
    min_stem_length: int
    split_upos_hint: str | None
    priority: int


def load_clitic_rules(path):
    """Load "suffix<TAB>min_stem_length<TAB>upos_hint<TAB>priority" rules.

    Lower priority numbers are tried first; priorities must be unique.
    A "_" hint means no UPOS hint.
    """
    rules = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ResourceError(
                    f"{path}:{line_no}: expected 4 tab-separated fields")
            suffix, min_len, hint, priority = cols
            if not suffix:
                raise ResourceError(f"{path}:{line_no}: empty suffix")
            try:
                min_len_i = int(min_len)
                priority_i = int(priority)
            except ValueError:
                raise ResourceError(
                    f"{path}:{line_no}: non-numeric field") from None
            if min_len_i < 1:
                raise ResourceError(
                    f"{path}:{line_no}: min_stem_length must be >= 1")
            rules.append(CliticRule(
                suffix=suffix,
                min_stem_length=min_len_i,
                split_upos_hint=None if hint == "_" else hint,
                priority=priority_i,
            ))
    priorities = [r.priority for r in rules]
    if len(set(priorities)) != len(priorities):
        raise ResourceError(f"{path}: duplicate rule priorities")
    return sorted(rules, key=lambda r: r.priority)


def default_clitic_rules():
    table = resources.files("udkit.data").joinpath("clitic_rules.tsv")
    with resources.as_file(table) as path:
        return load_clitic_rules(path)


def expand_token(form, rules, stem_check=None):
    """Split `form` into [stem, clitic] by the first matching rule.

    Returns None when no rule applies.  A rule matches when the form ends
    with its suffix, the remaining stem is at least min_stem_length long,
    and the stem passes `stem_check` (when one is configured).
    """
    for rule in sorted(rules, key=lambda r: r.priority):
        if len(form) <= len(rule.suffix) or not form.endswith(rule.suffix):
            continue
        stem = form[:len(form) - len(rule.suffix)]
        if len(stem) < rule.min_stem_length:
            continue
        if stem_check is not None and not stem_check(stem):
            continue
        return [stem, rule.suffix]
    return None


def expand_sentence(sentence, rules, stem_check=None):
    """Expand every clitic-bearing token in the sentence.

    Word ids are renumbered 1..n and heads of untouched tokens remapped;
    heads that pointed at an expanded token point at its stem word.  Each
    split adds one MwtSpan carrying the original surface form, and the
    original token's MISC moves to the span line (surface-level information
    belongs to the surface token).
    """
    ordered = sorted(rules, key=lambda r: r.priority)
    by_suffix = {r.suffix: r for r in ordered}
    covered = set()
    for span in sentence.mwt_spans:
        covered.update(range(span.start, span.end + 1))

    splits = {}  # old id -> (stem, clitic, rule)
    for token in sentence.tokens:
        if token.id in covered:
            continue
        parts = expand_token(token.form, ordered, stem_check)
        if parts is not None:
            splits[token.id] = (parts[0], parts[1], by_suffix[parts[1]])
    if not splits:
        return sentence

    stem_id = {}  # old id -> new id of the stem / of the word itself
    last_id = {}  # old id -> new id of the last word produced from it
    next_id = 1
    for token in sentence.tokens:
        stem_id[token.id] = next_id
        last_id[token.id] = next_id + (1 if token.id in splits else 0)
        next_id = last_id[token.id] + 1

    def remap_head(head):
        if head is None or head == 0:
            return head
        return stem_id.get(head, head)

    tokens = []
    spans = []
    for token in sentence.tokens:
        if token.id in splits:
            stem, clitic, rule = splits[token.id]
            new_id = stem_id[token.id]
            tokens.append(replace(
                token, id=new_id, form=stem, head=remap_head(token.head),
                misc="_"))
            tokens.append(Token(
                id=new_id + 1,
                form=clitic,
                upos=rule.split_upos_hint or "_",
                head=new_id if token.head is not None else None,
                deprel="dep" if token.head is not None else "_",
            ))
            spans.append(MwtSpan(new_id, new_id + 1, token.form,
                                 misc=token.misc))
        else:
            tokens.append(replace(
                token, id=stem_id[token.id], head=remap_head(token.head)))
    for span in sentence.mwt_spans:
        spans.append(MwtSpan(stem_id[span.start], last_id[span.end],
                             span.surface_form, misc=span.misc))
    spans.sort(key=lambda s: s.start)

    empty_nodes = [(last_id.get(anchor, 0), line)
                   for anchor, line in sentence.empty_nodes]
    return Sentence(tokens, spans, list(sentence.comments), empty_nodes)
