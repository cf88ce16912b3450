"""CoNLL-U data model, reader, writer, and structural validator.

The in-memory model mirrors the ten-column word lines of CoNLL-U v2 plus
multi-word-token range lines and comments.  Values are treated as immutable
after construction, so documents can be shared freely between threads.

Canonical form, as produced by :func:`serialize_document`:

* LF line endings (CRLF is accepted on input),
* morphological features sorted case-insensitively by name,
* ``_`` for every unset field,
* MWT range lines emitted immediately before their first covered word,
* one blank line after every sentence.

Parsing is strict about file *structure* (field counts, ID sequences) and
lenient about annotation quality: questionable annotation is reported by
:func:`validate` as :class:`Violation` values instead of being rejected, so
dirty real-world treebanks stay loadable.

Violation codes form a closed set:

===============  ======================================================
``ID_SEQ``       token ids are not exactly 1..n
``FORM_EMPTY``   a token has an empty FORM
``HEAD_RANGE``   head outside [0, sentence length]
``HEAD_SELF``    a token is its own head
``NO_ROOT``      every head set, but none is 0
``MULTI_ROOT``   more than one token has head 0
``CYCLE``        the head graph contains a cycle
``MWT_RANGE``    MWT span outside the sentence or start > end
``MWT_OVERLAP``  two MWT spans share a word
``FEATS_ORDER``  features not sorted case-insensitively by name
``FEATS_DUP``    duplicate feature name on one token
``UPOS_INVALID`` UPOS outside the 17-label inventory
===============  ======================================================
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from udkit.errors import DataError

UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

VIOLATION_CODES = frozenset({
    "ID_SEQ", "FORM_EMPTY", "HEAD_RANGE", "HEAD_SELF", "NO_ROOT",
    "MULTI_ROOT", "CYCLE", "MWT_RANGE", "MWT_OVERLAP", "FEATS_ORDER",
    "FEATS_DUP", "UPOS_INVALID",
})


class ParseError(DataError):
    """Malformed CoNLL-U input.  Carries the 1-based line number."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SerializationError(DataError):
    """The document violates an invariant required for well-formed output."""


Feats = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Token:
    """One CoNLL-U word line."""

    id: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: Feats = ()
    head: int | None = None
    deprel: str = "_"
    deps: str = "_"
    misc: str = "_"


@dataclass(frozen=True)
class MwtSpan:
    """A multi-word token covering word ids start..end inclusive."""

    start: int
    end: int
    surface_form: str
    misc: str = "_"


@dataclass
class Sentence:
    tokens: list[Token] = field(default_factory=list)
    mwt_spans: list[MwtSpan] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)
    # Empty-node lines (ID "a.b") are preserved verbatim and are not modeled.
    # Each entry is (anchor, raw_line): the line is re-emitted after word
    # `anchor` (0 = before the first word).
    empty_nodes: list[tuple[int, str]] = field(default_factory=list)

    def _comment_value(self, key):
        prefix = f"# {key} ="
        for line in self.comments:
            if line.startswith(prefix):
                return line[len(prefix):].strip()
        return None

    @property
    def sent_id(self):
        return self._comment_value("sent_id")

    @property
    def text(self):
        return self._comment_value("text")


@dataclass
class Document:
    sentences: list[Sentence] = field(default_factory=list)
    source_name: str = "<string>"


@dataclass(frozen=True)
class Violation:
    """One structural problem found by :func:`validate`.

    ``line_hint`` is the word id the violation concerns, 0 for
    sentence-level problems.
    """

    sentence_index: int
    line_hint: int
    code: str
    message: str


def parse_feats(text, line):
    """Parse a FEATS column into an ordered tuple of (name, value) pairs."""
    if text == "_":
        return ()
    pairs = []
    for item in text.split("|"):
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ParseError(f"malformed feature {item!r}", line)
        pairs.append((name, value))
    return tuple(pairs)


def format_feats(feats):
    """Render feature pairs sorted case-insensitively, or "_" when empty."""
    if not feats:
        return "_"
    ordered = sorted(feats, key=lambda p: (p[0].lower(), p[0]))
    return "|".join(f"{name}={value}" for name, value in ordered)


def _parse_int(text, what, line):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"non-numeric {what} {text!r}", line) from None


def parse_document(text, source_name="<string>"):
    """Parse CoNLL-U text into a Document.

    Raises ParseError (with line number) on structural problems: wrong field
    count, non-numeric or out-of-sequence ids, malformed features.  Lines
    are never silently skipped.
    """
    sentences = []
    comments: list[str] = []
    tokens: list[Token] = []
    spans: list[MwtSpan] = []
    empties: list[tuple[int, str]] = []
    in_words = False

    def flush(line_no):
        nonlocal comments, tokens, spans, empties, in_words
        if not tokens:
            raise ParseError("sentence block has no word lines", line_no)
        sentences.append(Sentence(tokens, spans, comments, empties))
        comments, tokens, spans, empties = [], [], [], []
        in_words = False

    lines = text.split("\n")
    for line_no, raw in enumerate(lines, start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        if line == "":
            if tokens or comments:
                flush(line_no)
            continue
        if line.startswith("#"):
            if in_words:
                raise ParseError("comment line after word lines", line_no)
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(
                f"expected 10 tab-separated fields, got {len(cols)}", line_no)
        in_words = True
        wid = cols[0]
        if "-" in wid:
            a, _, b = wid.partition("-")
            start = _parse_int(a, "MWT range start", line_no)
            end = _parse_int(b, "MWT range end", line_no)
            if start > end:
                raise ParseError(f"MWT range {wid} runs backwards", line_no)
            if start != len(tokens) + 1:
                raise ParseError(
                    f"MWT range {wid} does not start at the next word id",
                    line_no)
            if any(c != "_" for c in cols[2:9]):
                raise ParseError(
                    "MWT range line must have '_' in columns 3-9", line_no)
            spans.append(MwtSpan(start, end, cols[1], misc=cols[9]))
            continue
        if "." in wid:
            # Empty node (Enhanced UD): preserved verbatim, anchored to the
            # preceding word so serialization is byte-identical.
            empties.append((len(tokens), line))
            continue
        num = _parse_int(wid, "ID", line_no)
        if num != len(tokens) + 1:
            raise ParseError(
                f"ID {num} out of sequence (expected {len(tokens) + 1})",
                line_no)
        if num < 1:
            raise ParseError(f"ID must be positive, got {num}", line_no)
        if cols[1] == "":
            raise ParseError("empty FORM", line_no)
        head = None if cols[6] == "_" else _parse_int(cols[6], "HEAD", line_no)
        tokens.append(Token(
            id=num,
            form=cols[1],
            lemma=cols[2],
            upos=cols[3],
            xpos=cols[4],
            feats=parse_feats(cols[5], line_no),
            head=head,
            deprel=cols[7],
            deps=cols[8],
            misc=cols[9],
        ))

    if tokens or comments:
        flush(len(lines))
    return Document(sentences, source_name)


def _token_line(token):
    return "\t".join((
        str(token.id),
        token.form,
        token.lemma,
        token.upos,
        token.xpos,
        format_feats(token.feats),
        "_" if token.head is None else str(token.head),
        token.deprel,
        token.deps,
        token.misc,
    ))


def serialize_document(doc):
    """Serialize a Document to canonical CoNLL-U text.

    Raises SerializationError when the document cannot be expressed as a
    well-formed file (ids not 1..n, empty FORM, MWT span outside the id
    range).  Annotation-level problems (broken trees, unsorted features)
    serialize fine and are validate()'s business.
    """
    out = []
    for sentence in doc.sentences:
        n = len(sentence.tokens)
        for i, token in enumerate(sentence.tokens, start=1):
            if token.id != i:
                raise SerializationError(
                    f"token ids must be exactly 1..{n}, found {token.id} "
                    f"at position {i}")
            if token.form == "":
                raise SerializationError(f"token {i} has an empty form")
        for span in sentence.mwt_spans:
            if span.start > span.end:
                raise SerializationError(
                    f"MWT span {span.start}-{span.end} runs backwards")
            if not 1 <= span.start <= n:
                raise SerializationError(
                    f"MWT span start {span.start} is not a valid token id")
        spans_at = {span.start: span for span in sentence.mwt_spans}
        empties_at: dict[int, list[str]] = {}
        for anchor, line in sentence.empty_nodes:
            empties_at.setdefault(anchor, []).append(line)
        out.extend(sentence.comments)
        out.extend(empties_at.get(0, ()))
        for token in sentence.tokens:
            span = spans_at.get(token.id)
            if span is not None:
                out.append("\t".join((
                    f"{span.start}-{span.end}", span.surface_form,
                    "_", "_", "_", "_", "_", "_", "_", span.misc)))
            out.append(_token_line(token))
            out.extend(empties_at.get(token.id, ()))
        out.append("")
    if not out:
        return ""
    return "\n".join(out) + "\n"


def read_file(path):
    """Parse a CoNLL-U file from disk."""
    with open(path, encoding="utf-8") as handle:
        return parse_document(handle.read(), source_name=str(path))


def write_file(doc, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_document(doc))


def _find_cycles(heads):
    """Return cycles in the head map {id: head}, each as a sorted id list."""
    cycles = []
    state: dict[int, int] = {}  # 0 = on current path, 1 = done
    for start in heads:
        if state.get(start) == 1:
            continue
        path = []
        node = start
        while True:
            if node == 0 or node not in heads:
                break
            mark = state.get(node)
            if mark == 1:
                break
            if mark == 0:
                at = path.index(node)
                cycles.append(sorted(path[at:]))
                break
            state[node] = 0
            path.append(node)
            node = heads[node]
        for visited in path:
            state[visited] = 1
    return cycles


def validate(doc):
    """Return every structural violation in the document; [] means valid."""
    violations = []

    def report(si, hint, code, message):
        violations.append(Violation(si, hint, code, message))

    for si, sentence in enumerate(doc.sentences):
        n = len(sentence.tokens)
        ids = [t.id for t in sentence.tokens]
        if ids != list(range(1, n + 1)):
            report(si, 0, "ID_SEQ", f"token ids {ids} are not 1..{n}")
        for token in sentence.tokens:
            if token.form == "":
                report(si, token.id, "FORM_EMPTY", "empty FORM")
            if token.upos != "_" and token.upos not in UPOS_TAGS:
                report(si, token.id, "UPOS_INVALID",
                       f"{token.upos!r} is not a UPOS label")
            names = [name for name, _ in token.feats]
            lowered = [name.lower() for name in names]
            if lowered != sorted(lowered):
                report(si, token.id, "FEATS_ORDER",
                       f"features {names} not sorted")
            if len(set(names)) != len(names):
                report(si, token.id, "FEATS_DUP",
                       f"duplicate feature names in {names}")
            if token.head is not None:
                if not 0 <= token.head <= n:
                    report(si, token.id, "HEAD_RANGE",
                           f"head {token.head} outside [0, {n}]")
                elif token.head == token.id:
                    report(si, token.id, "HEAD_SELF",
                           f"token {token.id} is its own head")

        heads = {t.id: t.head for t in sentence.tokens if t.head is not None}
        all_set = len(heads) == n and n > 0
        roots = [i for i, h in heads.items() if h == 0]
        if all_set and not roots:
            report(si, 0, "NO_ROOT", "no token has head 0")
        if len(roots) > 1:
            report(si, 0, "MULTI_ROOT",
                   f"tokens {roots} all have head 0")
        chaseable = {i: h for i, h in heads.items()
                     if 0 <= h <= n and h != i}
        for cycle in _find_cycles(chaseable):
            report(si, cycle[0], "CYCLE", f"head cycle through {cycle}")

        seen_words: set[int] = set()
        for span in sentence.mwt_spans:
            if span.start > span.end or span.start < 1 or span.end > n:
                report(si, span.start, "MWT_RANGE",
                       f"span {span.start}-{span.end} outside sentence")
                continue
            covered = set(range(span.start, span.end + 1))
            if covered & seen_words:
                report(si, span.start, "MWT_OVERLAP",
                       f"span {span.start}-{span.end} overlaps another span")
            seen_words |= covered

    return violations


def is_tree(sentence):
    """True iff every head is set and forms a single tree rooted at 0."""
    n = len(sentence.tokens)
    if n == 0:
        return False
    heads = {}
    for token in sentence.tokens:
        if token.head is None or not 0 <= token.head <= n:
            return False
        heads[token.id] = token.head
    if sum(1 for h in heads.values() if h == 0) != 1:
        return False
    for start in heads:
        node = start
        steps = 0
        while node != 0:
            node = heads[node]
            steps += 1
            if steps > n:
                return False
    return True


def set_annotation(sentence, index, **changes):
    """Return a copy of the sentence with token `index` (0-based) updated."""
    tokens = list(sentence.tokens)
    tokens[index] = replace(tokens[index], **changes)
    return Sentence(tokens, list(sentence.mwt_spans),
                    list(sentence.comments), list(sentence.empty_nodes))
