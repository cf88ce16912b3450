"""POS tagging: source-tagset harmonization and a trainable tagger.

Two independent pieces live here.  ``map_tag``/``convert_corpus`` apply a
total source-tag -> UPOS lookup (the packaged table covers the 31 Amrita
tags); unknown tags raise instead of defaulting, so gaps in the table
surface immediately.  The tagger is an averaged perceptron with Viterbi
decoding over tag bigrams: reproducible at desk scale, no pretrained
resources, deterministic given a seed.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources

from udkit.conllu import Document, Sentence, Token, UPOS_TAGS, set_annotation
from udkit.errors import DataError, ResourceError

MODEL_HEADER = "pos-model v1"

BOS = "<s>"


class MappingError(DataError):
    pass


class TrainingError(DataError):
    pass


@dataclass(frozen=True)
class TagMapping:
    entries: dict


def load_tag_mapping(path):
    """Load "source<TAB>upos" lines; every target must be a UPOS label."""
    entries = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ResourceError(
                    f"{path}:{line_no}: expected 'source<TAB>upos'")
            source, upos = cols
            if upos not in UPOS_TAGS:
                raise ResourceError(
                    f"{path}:{line_no}: {upos!r} is not a UPOS label")
            if source in entries:
                raise ResourceError(
                    f"{path}:{line_no}: duplicate source tag {source!r}")
            entries[source] = upos
    return TagMapping(entries)


def amrita_mapping():
    """The packaged Amrita -> UPOS harmonization table."""
    table = resources.files("udkit.data").joinpath("amrita_upos.tsv")
    with resources.as_file(table) as path:
        return load_tag_mapping(path)


def map_tag(source, mapping):
    try:
        return mapping.entries[source]
    except KeyError:
        raise MappingError(f"unknown source tag {source!r}") from None


def convert_corpus(corpus, mapping):
    """Convert a tagged corpus (sentences of (form, source_tag) pairs) into
    a Document with UPOS set and XPOS preserving the source tag."""
    sentences = []
    for si, tagged in enumerate(corpus):
        tokens = []
        for i, (form, source) in enumerate(tagged, start=1):
            try:
                upos = map_tag(source, mapping)
            except MappingError:
                raise MappingError(
                    f"sentence {si + 1}: unknown source tag {source!r}"
                ) from None
            tokens.append(Token(id=i, form=form, upos=upos, xpos=source))
        sentences.append(Sentence(tokens))
    return Document(sentences)


# ---------------------------------------------------------------------------
# Averaged perceptron tagger


@dataclass
class TaggerModel:
    tags: list[str]
    weights: dict = field(default_factory=dict)      # feature -> {tag: w}
    trans: dict = field(default_factory=dict)        # (prev, tag) -> w
    epochs: int = 0
    seed: int = 0


def token_features(forms, i):
    """Emission feature strings for position i of a form sequence."""
    form = forms[i]
    feats = [f"w={form}", f"low={form.lower()}"]
    for k in range(1, min(4, len(form)) + 1):
        feats.append(f"p{k}={form[:k]}")
        feats.append(f"s{k}={form[-k:]}")
    if any(ch.isdigit() for ch in form):
        feats.append("hasdigit")
    feats.append(f"w-1={forms[i - 1]}" if i > 0 else "w-1=<s>")
    feats.append(f"w+1={forms[i + 1]}" if i + 1 < len(forms) else "w+1=</s>")
    return feats


def _score_table(forms, weights, tags):
    """Per-position emission scores: list of {tag: score}."""
    table = []
    for i in range(len(forms)):
        scores = dict.fromkeys(tags, 0.0)
        for feat in token_features(forms, i):
            per_tag = weights.get(feat)
            if per_tag:
                for tag, w in per_tag.items():
                    scores[tag] += w
        table.append(scores)
    return table


def viterbi(forms, weights, trans, tags):
    """Highest-scoring tag sequence under emission + bigram scores.

    Ties break toward the lexicographically earlier tag, so decoding is
    deterministic.
    """
    if not forms:
        return []
    tags = sorted(tags)
    emit = _score_table(forms, weights, tags)
    best = [{tag: emit[0][tag] + trans.get((BOS, tag), 0.0) for tag in tags}]
    back: list[dict] = [{}]
    for i in range(1, len(forms)):
        scores = {}
        pointers = {}
        for tag in tags:
            top_prev = None
            top_score = None
            for prev in tags:
                s = best[i - 1][prev] + trans.get((prev, tag), 0.0)
                if top_score is None or s > top_score:
                    top_score = s
                    top_prev = prev
            scores[tag] = top_score + emit[i][tag]
            pointers[tag] = top_prev
        best.append(scores)
        back.append(pointers)
    # max() keeps the first maximum, i.e. the earliest tag in sorted order
    last = max(tags, key=lambda t: best[-1][t])
    path = [last]
    for i in range(len(forms) - 1, 0, -1):
        path.append(back[i][path[-1]])
    path.reverse()
    return path


def sequence_score(forms, tag_seq, weights, trans, tags=None):
    """Score of an arbitrary tag sequence under the model."""
    total = 0.0
    prev = BOS
    for i, tag in enumerate(tag_seq):
        for feat in token_features(forms, i):
            per_tag = weights.get(feat)
            if per_tag:
                total += per_tag.get(tag, 0.0)
        total += trans.get((prev, tag), 0.0)
        prev = tag
    return total


class _Averager:
    """Perceptron weights with the running-total averaging trick."""

    def __init__(self):
        self.current = defaultdict(float)
        self.totals = defaultdict(float)
        self.stamps = defaultdict(int)
        self.step = 0

    def update(self, key, delta):
        self.totals[key] += (self.step - self.stamps[key]) * self.current[key]
        self.stamps[key] = self.step
        self.current[key] += delta

    def averaged(self):
        out = {}
        for key, w in self.current.items():
            total = self.totals[key] + (self.step - self.stamps[key]) * w
            value = total / self.step if self.step else 0.0
            if value:
                out[key] = value
        return out


def train_tagger(doc, epochs, seed):
    """Train an averaged-perceptron tagger; deterministic given the seed."""
    data = []
    for sentence in doc.sentences:
        forms = [t.form for t in sentence.tokens]
        gold = [t.upos for t in sentence.tokens]
        if forms:
            data.append((forms, gold))
    if not data:
        raise TrainingError("treebank has no tokens")
    tags = sorted({tag for _, gold in data for tag in gold})

    emit = _Averager()
    trans = _Averager()
    rng = random.Random(seed)
    order = list(range(len(data)))
    for _ in range(epochs):
        rng.shuffle(order)
        for idx in order:
            forms, gold = data[idx]
            emit.step += 1
            trans.step += 1
            weights = _materialize(emit.current)
            pred = viterbi(forms, weights, dict(trans.current), tags)
            if pred == gold:
                continue
            for i in range(len(forms)):
                if pred[i] != gold[i]:
                    for feat in token_features(forms, i):
                        emit.update((feat, gold[i]), 1.0)
                        emit.update((feat, pred[i]), -1.0)
                gold_bigram = (gold[i - 1] if i else BOS, gold[i])
                pred_bigram = (pred[i - 1] if i else BOS, pred[i])
                if gold_bigram != pred_bigram:
                    trans.update(gold_bigram, 1.0)
                    trans.update(pred_bigram, -1.0)

    model = TaggerModel(tags=tags, epochs=epochs, seed=seed)
    model.weights = _materialize(emit.averaged())
    model.trans = trans.averaged()
    return model


def _materialize(flat):
    nested: dict = {}
    for (feat, tag), w in flat.items():
        if w:
            nested.setdefault(feat, {})[tag] = w
    return nested


def tag(sentence, model):
    """Return the sentence with Viterbi-optimal UPOS tags filled in."""
    forms = [t.form for t in sentence.tokens]
    if not forms:
        return sentence
    pred = viterbi(forms, model.weights, model.trans, model.tags)
    out = sentence
    for i, upos in enumerate(pred):
        out = set_annotation(out, i, upos=upos)
    return out


def save_tagger_model(model, path):
    lines = [MODEL_HEADER, f"meta\t{model.epochs}\t{model.seed}",
             "tags\t" + "\t".join(model.tags)]
    for feat in sorted(model.weights):
        for tg in sorted(model.weights[feat]):
            lines.append(f"w\t{feat}\t{tg}\t{model.weights[feat][tg]!r}")
    for (prev, tg) in sorted(model.trans):
        lines.append(f"t\t{prev}\t{tg}\t{model.trans[(prev, tg)]!r}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_tagger_model(path):
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0] != MODEL_HEADER:
        raise ResourceError(f"{path}: not a {MODEL_HEADER!r} file")
    model = TaggerModel(tags=[])
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cols = line.split("\t")
        if cols[0] == "meta" and len(cols) == 3:
            model.epochs, model.seed = int(cols[1]), int(cols[2])
        elif cols[0] == "tags":
            model.tags = cols[1:]
        elif cols[0] == "w" and len(cols) == 4:
            model.weights.setdefault(cols[1], {})[cols[2]] = float(cols[3])
        elif cols[0] == "t" and len(cols) == 4:
            model.trans[(cols[1], cols[2])] = float(cols[3])
        else:
            raise ResourceError(f"{path}:{line_no}: unrecognized record")
    return model
