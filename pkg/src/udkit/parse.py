"""Transition-based dependency parser: arc-hybrid system, static oracle,
averaged-perceptron scorer, multilingual training via treebank-id features.

The transition system is arc-hybrid with the artificial root at the end of
the buffer:

* SHIFT         move the buffer front onto the stack (never the root),
* LEFT-ARC(l)   attach the stack top to the buffer front and pop,
* RIGHT-ARC(l)  attach the stack top to the next stack item and pop.

LEFT-ARC with the root at the buffer front is only legal when one word
remains on the stack, which forces exactly one root attachment; every parse
therefore terminates in exactly 2n transitions with a single-rooted tree.

Multilingual training concatenates any number of treebanks; every feature
template is emitted twice, once bare (shared across treebanks) and once
conjoined with the sentence's treebank id, so one model can serve several
treebanks while still sharing evidence between them.  Non-projective
training sentences are skipped and counted.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field, replace

from udkit.conllu import Sentence
from udkit.errors import DataError, ResourceError

MODEL_HEADER = "parser-model v1"

UNKNOWN_TREEBANK = "<unk>"

SHIFT, LEFT, RIGHT = "SHIFT", "LEFT-ARC", "RIGHT-ARC"

FEATURE_TEMPLATES = (
    "bias; s0/s1/b0/b1 form+upos; s0 and b0 feats; s0-b0 form/upos pairs; "
    "s0-s1 and b0-b1 upos pairs; s0-b0 distance buckets; every template "
    "repeated conjoined with the treebank id"
)


class TreeError(DataError):
    """The head annotation of a sentence is not a single rooted tree."""


class OracleError(DataError):
    pass


class TrainingError(DataError):
    pass


@dataclass(frozen=True)
class Transition:
    kind: str
    label: str | None = None

    def encode(self):
        return self.kind if self.kind == SHIFT else f"{self.kind}:{self.label}"

    @staticmethod
    def decode(text):
        kind, sep, label = text.partition(":")
        return Transition(kind, label if sep else None)


@dataclass
class ParserState:
    stack: list[int] = field(default_factory=list)
    buffer: list[int] = field(default_factory=list)
    arcs: set = field(default_factory=set)  # (head, dependent, label)


@dataclass
class EvalSplit:
    treebank_id: str
    role: str  # train | dev | test
    document: object


@dataclass
class ParserModel:
    weights: dict = field(default_factory=dict)   # (feature, trans) -> w
    labels: list[str] = field(default_factory=list)
    treebank_ids: list[str] = field(default_factory=list)
    epochs: int = 0
    seed: int = 0
    skipped_nonprojective: int = 0


def initial_state(n):
    """Words 1..n in the buffer, the artificial root (0) at its end."""
    return ParserState(stack=[], buffer=list(range(1, n + 1)) + [0])


def is_terminal(state):
    return not state.stack and state.buffer == [0]


def is_legal(state, transition):
    if transition.kind == SHIFT:
        return bool(state.buffer) and state.buffer[0] != 0
    if transition.kind == LEFT:
        if not state.stack or not state.buffer:
            return False
        # root attachment must be the last action: one stack word left
        return state.buffer[0] != 0 or len(state.stack) == 1
    if transition.kind == RIGHT:
        return len(state.stack) >= 2
    return False


def apply_transition(state, transition):
    stack, buffer, arcs = (list(state.stack), list(state.buffer),
                           set(state.arcs))
    if transition.kind == SHIFT:
        stack.append(buffer.pop(0))
    elif transition.kind == LEFT:
        dep = stack.pop()
        arcs.add((buffer[0], dep, transition.label))
    elif transition.kind == RIGHT:
        dep = stack.pop()
        arcs.add((stack[-1], dep, transition.label))
    return ParserState(stack, buffer, arcs)


def _gold_maps(sentence):
    heads = {}
    labels = {}
    n = len(sentence.tokens)
    for token in sentence.tokens:
        if token.head is None or not 0 <= token.head <= n:
            raise TreeError(f"token {token.id} has no usable head")
        heads[token.id] = token.head
        labels[token.id] = token.deprel
    if sum(1 for h in heads.values() if h == 0) != 1:
        raise TreeError("sentence does not have exactly one root")
    for start in heads:
        node, steps = start, 0
        while node != 0:
            node = heads[node]
            steps += 1
            if steps > n:
                raise TreeError("head cycle")
    return heads, labels


def is_projective(sentence):
    """True iff no two dependency arcs cross.  Raises TreeError when the
    heads do not form a single rooted tree."""
    heads, _ = _gold_maps(sentence)
    arcs = [(min(h, d), max(h, d)) for d, h in heads.items()]
    for i, (a1, b1) in enumerate(arcs):
        for a2, b2 in arcs[i + 1:]:
            if a1 < a2 < b1 < b2 or a2 < a1 < b2 < b1:
                return False
    return True


def oracle_transitions(sentence):
    """Static arc-hybrid oracle: the transition sequence whose replay
    reconstructs the gold tree.  Raises OracleError for non-projective or
    non-tree input."""
    try:
        projective = is_projective(sentence)
    except TreeError as exc:
        raise OracleError(f"gold annotation is not a tree: {exc}") from exc
    if not projective:
        raise OracleError("gold tree is not projective")
    heads, labels = _gold_maps(sentence)
    pending = defaultdict(int)  # head -> number of unattached dependents
    for head in heads.values():
        pending[head] += 1

    state = initial_state(len(sentence.tokens))
    sequence = []
    while not is_terminal(state):
        transition = None
        if state.stack:
            s0 = state.stack[-1]
            b0 = state.buffer[0] if state.buffer else None
            if (b0 is not None and heads[s0] == b0 and pending[s0] == 0):
                transition = Transition(LEFT, labels[s0])
            elif (len(state.stack) >= 2 and heads[s0] == state.stack[-2]
                  and pending[s0] == 0):
                transition = Transition(RIGHT, labels[s0])
        if transition is None:
            if state.buffer and state.buffer[0] != 0:
                transition = Transition(SHIFT)
            else:
                raise OracleError("oracle is stuck")  # unreachable for
                # projective single-root trees; kept as a tripwire
        if not is_legal(state, transition):
            raise OracleError(f"oracle chose illegal {transition.encode()}")
        if transition.kind in (LEFT, RIGHT):
            pending[heads[state.stack[-1]]] -= 1
        state = apply_transition(state, transition)
        sequence.append(transition)
    return sequence


def replay(n, transitions):
    """Execute a transition sequence from the initial state for n words.

    Returns the resulting arc set; raises OracleError on an illegal step or
    when the sequence does not reach the terminal state.
    """
    state = initial_state(n)
    for transition in transitions:
        if not is_legal(state, transition):
            raise OracleError(f"illegal transition {transition.encode()}")
        state = apply_transition(state, transition)
    if not is_terminal(state):
        raise OracleError("transition sequence did not reach terminal state")
    return state.arcs


# ---------------------------------------------------------------------------
# Features and scoring


def _token_view(sentence):
    view = {0: ("<root>", "<root>", ())}
    for token in sentence.tokens:
        view[token.id] = (token.form, token.upos, token.feats)
    return view


def state_features(state, view, treebank_id):
    """Feature strings for one configuration, bare and treebank-conjoined."""
    def at(seq, i):
        return view.get(seq[i]) if i < len(seq) else None

    s0 = at(state.stack[::-1], 0)
    s1 = at(state.stack[::-1], 1)
    b0 = at(state.buffer, 0)
    b1 = at(state.buffer, 1)

    feats = ["bias"]
    for name, tok in (("s0", s0), ("s1", s1), ("b0", b0), ("b1", b1)):
        if tok is None:
            feats.append(f"{name}=∅")
            continue
        form, upos, _ = tok
        feats.append(f"{name}.w={form}")
        feats.append(f"{name}.p={upos}")
    if s0 is not None:
        for fname, fvalue in s0[2]:
            feats.append(f"s0.f={fname}={fvalue}")
    if b0 is not None:
        for fname, fvalue in b0[2]:
            feats.append(f"b0.f={fname}={fvalue}")
    if s0 is not None and b0 is not None:
        feats.append(f"s0b0.w={s0[0]}|{b0[0]}")
        feats.append(f"s0b0.p={s0[1]}|{b0[1]}")
        feats.append(f"s0b0.wp={s0[0]}|{b0[1]}")
        feats.append(f"s0b0.pw={s0[1]}|{b0[0]}")
    if s0 is not None and s1 is not None:
        feats.append(f"s0s1.p={s0[1]}|{s1[1]}")
    if b0 is not None and b1 is not None:
        feats.append(f"b0b1.p={b0[1]}|{b1[1]}")
    if state.stack and state.buffer:
        distance = min(abs(state.buffer[0] - state.stack[-1]), 5)
        feats.append(f"dist={distance}")
        if s0 is not None and b0 is not None:
            feats.append(f"dist={distance}|{s0[1]}|{b0[1]}")

    conjoined = [f"tb={treebank_id}#{f}" for f in feats]
    return feats + conjoined


def candidate_transitions(labels):
    """All transitions in canonical tie-break order: SHIFT, then LEFT-ARCs,
    then RIGHT-ARCs, labels lexicographic."""
    ordered = [Transition(SHIFT)]
    for label in sorted(labels):
        ordered.append(Transition(LEFT, label))
    for label in sorted(labels):
        ordered.append(Transition(RIGHT, label))
    return ordered


def _best_transition(state, feats, weights, candidates):
    """Highest-scoring legal transition; candidate order breaks ties."""
    get = weights.get
    best = None
    best_score = None
    for transition in candidates:
        if not is_legal(state, transition):
            continue
        key = transition.encode()
        score = 0.0
        for feat in feats:
            w = get((feat, key))
            if w is not None:
                score += w
        if best_score is None or score > best_score:
            best = transition
            best_score = score
    return best


# ---------------------------------------------------------------------------
# Training


class _Averager:
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


def train_parser(splits, epochs, seed):
    """Train on the concatenation of all role=train splits.

    Each sentence keeps its split's treebank id; non-projective or non-tree
    sentences are skipped and counted.  Deterministic given seed and input
    order.  Raises TrainingError when no usable sentence remains.
    """
    data = []
    skipped = 0
    label_set = set()
    treebank_ids = []
    for split in splits:
        if split.role != "train":
            continue
        if split.treebank_id not in treebank_ids:
            treebank_ids.append(split.treebank_id)
        for sentence in split.document.sentences:
            if not sentence.tokens:
                continue
            try:
                gold = oracle_transitions(sentence)
            except (OracleError, TreeError):
                skipped += 1
                continue
            for transition in gold:
                if transition.label is not None:
                    label_set.add(transition.label)
            data.append((sentence, split.treebank_id, gold))
    if not data:
        raise TrainingError(
            f"no usable training sentences ({skipped} skipped)")

    labels = sorted(label_set)
    candidates = candidate_transitions(labels)
    averager = _Averager()
    rng = random.Random(seed)
    order = list(range(len(data)))
    for _ in range(epochs):
        rng.shuffle(order)
        for idx in order:
            sentence, treebank_id, gold = data[idx]
            view = _token_view(sentence)
            state = initial_state(len(sentence.tokens))
            for gold_transition in gold:
                averager.step += 1
                feats = state_features(state, view, treebank_id)
                predicted = _best_transition(state, feats, averager.current,
                                             candidates)
                if predicted != gold_transition:
                    gold_key = gold_transition.encode()
                    pred_key = predicted.encode()
                    for feat in feats:
                        averager.update((feat, gold_key), 1.0)
                        averager.update((feat, pred_key), -1.0)
                state = apply_transition(state, gold_transition)

    model = ParserModel(
        weights=averager.averaged(),
        labels=labels,
        treebank_ids=sorted(treebank_ids),
        epochs=epochs,
        seed=seed,
        skipped_nonprojective=skipped,
    )
    return model


def parse_sentence(sentence, model, treebank_id=None):
    """Greedily parse one sentence; always yields a single-rooted tree.

    An unknown or missing treebank id falls back to the designated
    unknown-id feature, so models can be applied to new data.
    """
    n = len(sentence.tokens)
    if n == 0:
        return sentence
    if treebank_id is None or treebank_id not in model.treebank_ids:
        treebank_id = UNKNOWN_TREEBANK
    labels = model.labels or ["dep"]
    candidates = candidate_transitions(labels)
    view = _token_view(sentence)
    state = initial_state(n)
    while not is_terminal(state):
        feats = state_features(state, view, treebank_id)
        transition = _best_transition(state, feats, model.weights, candidates)
        state = apply_transition(state, transition)

    head_of = {dep: (head, label) for head, dep, label in state.arcs}
    tokens = []
    for token in sentence.tokens:
        head, label = head_of[token.id]
        tokens.append(replace(token, head=head, deprel=label))
    return Sentence(tokens, list(sentence.mwt_spans),
                    list(sentence.comments), list(sentence.empty_nodes))


# ---------------------------------------------------------------------------
# Model files


def save_parser_model(model, path):
    lines = [
        MODEL_HEADER,
        f"meta\t{model.epochs}\t{model.seed}\t{model.skipped_nonprojective}",
        f"templates\t{FEATURE_TEMPLATES}",
        "labels\t" + "\t".join(model.labels),
        "treebanks\t" + "\t".join(model.treebank_ids),
    ]
    for feat, trans in sorted(model.weights):
        lines.append(f"w\t{feat}\t{trans}\t{model.weights[(feat, trans)]!r}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_parser_model(path):
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0] != MODEL_HEADER:
        raise ResourceError(f"{path}: not a {MODEL_HEADER!r} file")
    model = ParserModel()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cols = line.split("\t")
        if cols[0] == "meta" and len(cols) == 4:
            model.epochs = int(cols[1])
            model.seed = int(cols[2])
            model.skipped_nonprojective = int(cols[3])
        elif cols[0] == "templates":
            continue
        elif cols[0] == "labels":
            model.labels = cols[1:]
        elif cols[0] == "treebanks":
            model.treebank_ids = cols[1:]
        elif cols[0] == "w" and len(cols) == 4:
            model.weights[(cols[1], cols[2])] = float(cols[3])
        else:
            raise ResourceError(f"{path}:{line_no}: unrecognized record")
    return model
