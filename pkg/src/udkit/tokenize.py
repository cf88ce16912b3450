"""Rule-based sentence splitting and word tokenization with exact offsets.

Deterministic replacement for a trained tokenizer at desk scale: sentences
end after a terminator character followed by whitespace (abbreviations
exempt), words are whitespace chunks with punctuation split off into
single-character tokens.  Decimal-style numbers ("3.5") stay whole via a
digit-context exception.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources

from udkit.errors import ResourceError

DEFAULT_TERMINATORS = frozenset(".?!")
DEFAULT_PUNCTUATION = frozenset(".,?!;:()[]{}\"'«»…%-")
DEFAULT_ABBREVIATIONS = frozenset({"e.g.", "i.e.", "etc.", "Dr.", "Mr.", "No."})


@dataclass(frozen=True)
class RawToken:
    form: str
    start: int
    end: int


@dataclass(frozen=True)
class TokenizerConfig:
    terminators: frozenset[str] = DEFAULT_TERMINATORS
    punctuation: frozenset[str] = DEFAULT_PUNCTUATION
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS


def load_tokenizer_config(path):
    """Load a [tokenizer] config file; missing keys keep their defaults."""
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as exc:
        raise ResourceError(f"cannot load tokenizer config {path}: {exc}")
    if not parser.has_section("tokenizer"):
        raise ResourceError(f"{path}: missing [tokenizer] section")
    section = parser["tokenizer"]

    def chars(key, default):
        if key not in section:
            return default
        return frozenset(section[key].split())

    return TokenizerConfig(
        terminators=chars("terminators", DEFAULT_TERMINATORS),
        punctuation=chars("punctuation", DEFAULT_PUNCTUATION),
        abbreviations=chars("abbreviations", DEFAULT_ABBREVIATIONS),
    )


def default_tokenizer_config():
    cfg = resources.files("udkit.data").joinpath("tokenizer.cfg")
    with resources.as_file(cfg) as path:
        return load_tokenizer_config(path)


def _word_ending_at(text, end):
    """The maximal non-whitespace run ending at index `end` (inclusive)."""
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:end + 1]


def split_sentences(text, config=None):
    """Split text into (sentence, start_offset) pairs.

    Sentences are exact slices of the input with surrounding whitespace
    trimmed, so joining them with the inter-sentence gaps reconstructs the
    input.  Input without a terminator yields a single sentence.
    """
    if config is None:
        config = TokenizerConfig()
    boundaries = []
    for i, ch in enumerate(text):
        if ch not in config.terminators:
            continue
        if i + 1 < len(text) and not text[i + 1].isspace():
            continue
        if ch == "." and _word_ending_at(text, i) in config.abbreviations:
            continue
        boundaries.append(i + 1)
    boundaries.append(len(text))

    sentences = []
    prev = 0
    for end in boundaries:
        segment = text[prev:end]
        stripped = segment.strip()
        if stripped:
            start = prev + segment.index(stripped[0])
            sentences.append((text[start:start + len(stripped)], start))
        prev = end
    return sentences


def _digit_context(text, i):
    # Keep "." and "," inside numbers: 3.5 or 10,000.
    return (text[i] in ".," and 0 < i < len(text) - 1
            and text[i - 1].isdigit() and text[i + 1].isdigit())


def tokenize(sentence, config=None, offset=0):
    """Tokenize one sentence into RawTokens with exact character offsets.

    `offset` shifts the recorded offsets, so callers can report positions
    relative to a whole document.
    """
    if config is None:
        config = TokenizerConfig()
    tokens = []
    start = None

    def flush(end):
        nonlocal start
        if start is not None:
            tokens.append(
                RawToken(sentence[start:end], offset + start, offset + end))
            start = None

    for i, ch in enumerate(sentence):
        if ch.isspace():
            flush(i)
        elif ch in config.punctuation and not _digit_context(sentence, i):
            flush(i)
            tokens.append(RawToken(ch, offset + i, offset + i + 1))
        elif start is None:
            start = i
    flush(len(sentence))
    return tokens
