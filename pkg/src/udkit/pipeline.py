"""End-to-end pipeline: manifest loading and stage orchestration.

A manifest is an INI-style file with one section per stage plus a
[pipeline] section:

    [pipeline]
    stages = normalize tokenize mwt lemmatize tag analyze-morph parse
    gold_pos = false
    strict_labels = false

    [normalize]
    rewrite_table = path        ; optional, packaged default otherwise
    script_ranges = 0B80-0BFF   ; optional

    [tokenize]
    config = path               ; optional

    [mwt]
    rules = path                ; optional, packaged default otherwise

    [lemmatize]
    model = path

    [tag]
    model = path

    [analyze-morph]
    lexicon = path
    paradigms = path

    [parse]
    model = path
    treebank_id = name          ; optional

Relative paths resolve against the manifest's directory.  Stages must be a
subsequence of the canonical order above; resources of enabled stages are
loaded (and validated) up front, before any text is processed.  Failures
inside a stage are localized: the affected sentence gets a
"# pipeline-error = stage: message" comment and processing continues.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from udkit import lemma as lemma_mod
from udkit import morph as morph_mod
from udkit import mwt as mwt_mod
from udkit import normalize as norm_mod
from udkit import parse as parse_mod
from udkit import pos as pos_mod
from udkit import tokenize as tok_mod
from udkit.conllu import Document, Sentence, Token, set_annotation
from udkit.errors import ResourceError

CANONICAL_STAGES = (
    "normalize", "tokenize", "mwt", "lemmatize", "tag", "analyze-morph",
    "parse",
)


class ManifestError(ResourceError):
    pass


@dataclass
class PipelineManifest:
    stages: tuple = CANONICAL_STAGES
    rewrite_table: Path | None = None
    script_ranges: tuple | None = None
    tokenizer_config: Path | None = None
    mwt_rules: Path | None = None
    lemma_model: Path | None = None
    tagger_model: Path | None = None
    morph_lexicon: Path | None = None
    morph_paradigms: Path | None = None
    parser_model: Path | None = None
    treebank_id: str | None = None
    gold_pos: bool = False
    strict_labels: bool = False
    required: dict = field(default_factory=dict)


def _is_subsequence(stages, canonical):
    it = iter(canonical)
    return all(stage in it for stage in stages)


def _parse_ranges(text):
    ranges = []
    for part in text.replace(",", " ").split():
        lo, _, hi = part.partition("-")
        try:
            ranges.append((int(lo, 16), int(hi or lo, 16)))
        except ValueError:
            raise ManifestError(f"bad script range {part!r}") from None
    return tuple(ranges)


def load_manifest(path):
    """Load and validate a pipeline manifest."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}")
    base = Path(path).parent

    def resolve(section, key):
        if parser.has_option(section, key):
            return (base / parser.get(section, key)).resolve()
        return None

    manifest = PipelineManifest()
    if parser.has_option("pipeline", "stages"):
        manifest.stages = tuple(
            parser.get("pipeline", "stages").replace(",", " ").split())
    unknown = [s for s in manifest.stages if s not in CANONICAL_STAGES]
    if unknown:
        raise ManifestError(f"unknown stages {unknown}")
    if not _is_subsequence(manifest.stages, CANONICAL_STAGES):
        raise ManifestError(
            f"stages {manifest.stages} are not in canonical order "
            f"{CANONICAL_STAGES}")
    if parser.has_option("pipeline", "gold_pos"):
        manifest.gold_pos = parser.getboolean("pipeline", "gold_pos")
    if parser.has_option("pipeline", "strict_labels"):
        manifest.strict_labels = parser.getboolean("pipeline",
                                                   "strict_labels")

    manifest.rewrite_table = resolve("normalize", "rewrite_table")
    if parser.has_option("normalize", "script_ranges"):
        manifest.script_ranges = _parse_ranges(
            parser.get("normalize", "script_ranges"))
    manifest.tokenizer_config = resolve("tokenize", "config")
    manifest.mwt_rules = resolve("mwt", "rules")
    manifest.lemma_model = resolve("lemmatize", "model")
    manifest.tagger_model = resolve("tag", "model")
    manifest.morph_lexicon = resolve("analyze-morph", "lexicon")
    manifest.morph_paradigms = resolve("analyze-morph", "paradigms")
    manifest.parser_model = resolve("parse", "model")
    if parser.has_option("parse", "treebank_id"):
        manifest.treebank_id = parser.get("parse", "treebank_id")

    manifest.required = {
        "lemmatize": [manifest.lemma_model],
        "tag": [manifest.tagger_model],
        "analyze-morph": [manifest.morph_lexicon, manifest.morph_paradigms],
        "parse": [manifest.parser_model],
    }
    for stage in manifest.stages:
        for resource in manifest.required.get(stage, ()):
            if resource is None:
                raise ManifestError(
                    f"stage {stage!r} is enabled but its resource is not "
                    f"configured")
            if not Path(resource).exists():
                raise ManifestError(
                    f"stage {stage!r}: resource {resource} does not exist")
    for optional in (manifest.rewrite_table, manifest.tokenizer_config,
                     manifest.mwt_rules):
        if optional is not None and not Path(optional).exists():
            raise ManifestError(f"resource {optional} does not exist")
    return manifest


class Pipeline:
    """Loaded resources for a manifest; reusable across documents."""

    def __init__(self, manifest):
        self.manifest = manifest
        stages = manifest.stages
        self.normalizer = None
        if "normalize" in stages:
            config = norm_mod.default_config()
            if manifest.rewrite_table is not None:
                config = norm_mod.NormalizerConfig(
                    rewrite_rules=norm_mod.load_rewrite_rules(
                        manifest.rewrite_table),
                    script_ranges=config.script_ranges)
            if manifest.script_ranges is not None:
                config = norm_mod.NormalizerConfig(
                    rewrite_rules=config.rewrite_rules,
                    script_ranges=manifest.script_ranges)
            self.normalizer = config
        self.tokenizer = None
        if "tokenize" in stages:
            self.tokenizer = (
                tok_mod.load_tokenizer_config(manifest.tokenizer_config)
                if manifest.tokenizer_config is not None
                else tok_mod.default_tokenizer_config())
        self.clitic_rules = None
        if "mwt" in stages:
            self.clitic_rules = (
                mwt_mod.load_clitic_rules(manifest.mwt_rules)
                if manifest.mwt_rules is not None
                else mwt_mod.default_clitic_rules())
        self.lemmatizer = (lemma_mod.load_lemma_model(manifest.lemma_model)
                           if "lemmatize" in stages else None)
        self.tagger = (pos_mod.load_tagger_model(manifest.tagger_model)
                       if "tag" in stages else None)
        self.morph = (morph_mod.load_resources(manifest.morph_lexicon,
                                               manifest.morph_paradigms)
                      if "analyze-morph" in stages else None)
        self.parser = (parse_mod.load_parser_model(manifest.parser_model)
                       if "parse" in stages else None)

    # -- per-sentence stage transforms ------------------------------------

    def _stage_mwt(self, sentence):
        return mwt_mod.expand_sentence(sentence, self.clitic_rules)

    def _stage_lemmatize(self, sentence):
        out = sentence
        for i, token in enumerate(out.tokens):
            out = set_annotation(
                out, i,
                lemma=lemma_mod.lemmatize(token.form, token.upos,
                                          self.lemmatizer))
        return out

    def _stage_tag(self, sentence):
        if self.manifest.gold_pos and all(
                t.upos != "_" for t in sentence.tokens):
            return sentence
        return pos_mod.tag(sentence, self.tagger)

    def _stage_morph(self, sentence):
        out = sentence
        for i, token in enumerate(out.tokens):
            analyses = morph_mod.analyze(token.form, self.morph)
            if not analyses:
                analyses = morph_mod.guess(token.form, self.morph)
            chosen = morph_mod.disambiguate(analyses, token.upos)
            if chosen is None:
                out = set_annotation(
                    out, i, misc=_merge_misc(token.misc, "MorphSource=none"))
                continue
            changes = {
                "feats": chosen.feats,
                "misc": _merge_misc(token.misc,
                                    f"MorphSource={chosen.source}"),
            }
            if token.lemma == "_":
                changes["lemma"] = chosen.lemma
            out = set_annotation(out, i, **changes)
        return out

    def _stage_parse(self, sentence):
        return parse_mod.parse_sentence(sentence, self.parser,
                                        self.manifest.treebank_id)

    def run_document(self, doc):
        """Apply every enabled stage after tokenization to a document."""
        transforms = {
            "mwt": self._stage_mwt,
            "lemmatize": self._stage_lemmatize,
            "tag": self._stage_tag,
            "analyze-morph": self._stage_morph,
            "parse": self._stage_parse,
        }
        sentences = list(doc.sentences)
        for stage in self.manifest.stages:
            transform = transforms.get(stage)
            if transform is None:
                continue
            for i, sentence in enumerate(sentences):
                try:
                    sentences[i] = transform(sentence)
                except Exception as exc:  # reported per sentence, run goes on
                    flagged = Sentence(
                        list(sentence.tokens), list(sentence.mwt_spans),
                        list(sentence.comments), list(sentence.empty_nodes))
                    flagged.comments.append(
                        f"# pipeline-error = {stage}: {exc}")
                    sentences[i] = flagged
        return Document(sentences, doc.source_name)

    def run_text(self, text):
        """Run the full pipeline on raw text."""
        if "tokenize" not in self.manifest.stages:
            raise ManifestError(
                "raw-text input needs the tokenize stage enabled")
        if self.normalizer is not None:
            text = norm_mod.normalize_text(text, self.normalizer).output
        sentences = []
        for n, (sent_text, _offset) in enumerate(
                tok_mod.split_sentences(text, self.tokenizer), start=1):
            raw_tokens = tok_mod.tokenize(sent_text, self.tokenizer)
            tokens = [Token(id=i, form=raw.form)
                      for i, raw in enumerate(raw_tokens, start=1)]
            sentences.append(Sentence(
                tokens=tokens,
                comments=[f"# sent_id = {n}", f"# text = {sent_text}"]))
        return self.run_document(Document(sentences))


def _merge_misc(misc, extra):
    return extra if misc == "_" else f"{misc}|{extra}"


def run_pipeline(text, manifest):
    """Convenience wrapper: load resources, run raw text end to end."""
    return Pipeline(manifest).run_text(text)
