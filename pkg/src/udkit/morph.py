"""Rule-based morphological analysis: lexicon + paradigm suffix tables.

A paradigm rule turns a lemma into a surface form in two steps: apply the
stem transform (strip a trailing piece, append another), then add the
suffix.  Analysis inverts this exactly, so analyze() returns precisely the
set of (entry, rule) pairs that generate the form.  Out-of-vocabulary forms
go to a guesser that hypothesizes a lemma from any rule with a non-empty
suffix; guessing may legitimately fail (foreign words, punctuation).

The UPOS of an analysis comes from the paradigm class name: the part
before the first "-" must be a UPOS label spelled in lowercase ("noun-a",
"verb-strong", ...), which keeps both data files free of a redundant
column.

Lexicon file:  lemma<TAB>pos_class<TAB>inherent_feats
Paradigm file: pos_class<TAB>suffix<TAB>feats<TAB>strip<TAB>append
Feature bundles use CoNLL-U syntax ("Case=Acc|Number=Sing", "_" for none);
inherent features of the lexical entry merge into every analysis, with the
rule's features winning on a name clash.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from udkit.conllu import UPOS_TAGS, format_feats, parse_feats
from udkit.errors import DataError, ResourceError

MIN_GUESS_STEM = 2

LEXICON_SOURCE = "lexicon"
GUESSER_SOURCE = "guesser"


class GenerationError(DataError):
    pass


@dataclass(frozen=True)
class LexEntry:
    lemma: str
    pos_class: str
    inherent_feats: tuple = ()


@dataclass(frozen=True)
class ParadigmRule:
    pos_class: str
    suffix: str
    feats: tuple = ()
    strip: str = ""
    append: str = ""


@dataclass(frozen=True)
class MorphAnalysis:
    lemma: str
    upos: str
    feats: tuple
    source: str  # lexicon | guesser


@dataclass
class MorphResources:
    entries: list = field(default_factory=list)
    rules: list = field(default_factory=list)
    by_lemma: dict = field(default_factory=dict)

    def index(self):
        self.by_lemma = {}
        for entry in self.entries:
            self.by_lemma.setdefault(entry.lemma, []).append(entry)
        return self


def upos_for_class(pos_class):
    prefix = pos_class.split("-", 1)[0].upper()
    if prefix not in UPOS_TAGS:
        raise ResourceError(
            f"paradigm class {pos_class!r} does not start with a UPOS "
            f"label prefix")
    return prefix


def _parse_bundle(text, path, line_no):
    try:
        return tuple(sorted(parse_feats(text, line_no),
                            key=lambda p: (p[0].lower(), p[0])))
    except DataError as exc:
        raise ResourceError(f"{path}: {exc}") from None


def load_lexicon(path):
    entries = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ResourceError(
                    f"{path}:{line_no}: expected 3 tab-separated fields")
            lemma, pos_class, feats = cols
            if not lemma:
                raise ResourceError(f"{path}:{line_no}: empty lemma")
            upos_for_class(pos_class)
            entries.append(LexEntry(lemma, pos_class,
                                    _parse_bundle(feats, path, line_no)))
    return entries


def load_paradigms(path):
    rules = []
    seen = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ResourceError(
                    f"{path}:{line_no}: expected 5 tab-separated fields")
            pos_class, suffix, feats, strip, append = cols
            upos_for_class(pos_class)
            rule = ParadigmRule(
                pos_class=pos_class,
                suffix="" if suffix == "_" else suffix,
                feats=_parse_bundle(feats, path, line_no),
                strip="" if strip == "_" else strip,
                append="" if append == "_" else append,
            )
            key = (rule.pos_class, rule.suffix, rule.feats)
            if key in seen:
                raise ResourceError(
                    f"{path}:{line_no}: duplicate (class, suffix, feats)")
            seen.add(key)
            rules.append(rule)
    return rules


def load_resources(lexicon_path, paradigm_path):
    resources = MorphResources(
        entries=load_lexicon(lexicon_path),
        rules=load_paradigms(paradigm_path),
    )
    classes = {rule.pos_class for rule in resources.rules}
    for entry in resources.entries:
        if entry.pos_class not in classes:
            raise ResourceError(
                f"lexicon entry {entry.lemma!r} uses class "
                f"{entry.pos_class!r} with no paradigm rules")
    return resources.index()


def merge_feats(inherent, rule_feats):
    """Inherent entry features plus rule features; the rule wins clashes."""
    merged = dict(inherent)
    merged.update(dict(rule_feats))
    return tuple(sorted(merged.items(), key=lambda p: (p[0].lower(), p[0])))


def _apply_stem(lemma, rule):
    """Stem transform + suffix; None when the transform does not apply."""
    stem = lemma
    if rule.strip:
        if not stem.endswith(rule.strip):
            return None
        stem = stem[:-len(rule.strip)]
    return stem + rule.append + rule.suffix


def generate(lemma, pos_class, feats, resources):
    """Generate the surface form for (lemma, pos_class, feats).

    Uses the first applicable rule in table order; raises GenerationError
    when the class has no rule with those features.
    """
    want = tuple(sorted(feats, key=lambda p: (p[0].lower(), p[0])))
    for rule in resources.rules:
        if rule.pos_class != pos_class or rule.feats != want:
            continue
        form = _apply_stem(lemma, rule)
        if form is not None:
            return form
    raise GenerationError(
        f"no paradigm rule for class {pos_class!r} with features "
        f"{format_feats(want)}")


def _invert(form, rule):
    """The lemma that `rule` would turn into `form`, or None."""
    if rule.suffix:
        if not form.endswith(rule.suffix) or len(form) <= len(rule.suffix):
            return None
        core = form[:-len(rule.suffix)]
    else:
        core = form
    if rule.append:
        if not core.endswith(rule.append):
            return None
        core = core[:-len(rule.append)]
    if not core:
        return None
    return core + rule.strip


def analyze(form, resources):
    """All lexical analyses of a surface form.

    Sound and complete with respect to enumerating every (entry, rule)
    pair: an analysis is returned iff some pair generates the form.  An
    empty set means the form is out of vocabulary.
    """
    analyses = set()
    for rule in resources.rules:
        lemma = _invert(form, rule)
        if lemma is None:
            continue
        for entry in resources.by_lemma.get(lemma, ()):
            if entry.pos_class != rule.pos_class:
                continue
            analyses.add(MorphAnalysis(
                lemma=entry.lemma,
                upos=upos_for_class(entry.pos_class),
                feats=merge_feats(entry.inherent_feats, rule.feats),
                source=LEXICON_SOURCE,
            ))
    return analyses


def guess(form, resources):
    """Hypothesize analyses for an out-of-vocabulary form.

    Only rules with a non-empty suffix count as evidence, and the residual
    stem must keep at least MIN_GUESS_STEM characters; both keep the
    guesser from blessing arbitrary strings.  May return an empty set.
    """
    analyses = set()
    for rule in resources.rules:
        if not rule.suffix:
            continue
        core = form[:-len(rule.suffix)] if form.endswith(rule.suffix) else None
        if core is None or len(core) < MIN_GUESS_STEM:
            continue
        lemma = _invert(form, rule)
        if lemma is None:
            continue
        analyses.add(MorphAnalysis(
            lemma=lemma,
            upos=upos_for_class(rule.pos_class),
            feats=tuple(rule.feats),
            source=GUESSER_SOURCE,
        ))
    return analyses


def disambiguate(analyses, context_upos):
    """Pick a single analysis for a context.

    Filter to the context UPOS (falling back to all analyses when nothing
    survives), then prefer lexicon over guesser, fewer features, and the
    lexicographically smallest (lemma, feats) rendering.  Returns None only
    for an empty input set.
    """
    if not analyses:
        return None
    pool = [a for a in analyses if a.upos == context_upos] or list(analyses)
    return min(pool, key=lambda a: (
        0 if a.source == LEXICON_SOURCE else 1,
        len(a.feats),
        a.lemma,
        format_feats(a.feats),
    ))
