"""Unicode canonicalization and script validation.

The same surface character is often stored as different code point
sequences (two-part vowel signs typed in either order, composed vs
decomposed forms).  ``normalize_text`` maps all of them to one canonical
byte sequence: NFC composition followed by a data-driven rewrite table for
visually equivalent sequences that are *not* canonically equivalent, so NFC
alone cannot repair them.

The rewrite table is data, not ground truth; see data/rewrite_rules.txt for
the shipped best-effort inventory and its file format.
"""

from __future__ import annotations

import difflib
import string
import unicodedata
from dataclasses import dataclass, field
from importlib import resources

from udkit.errors import ResourceError

# Tamil block; overridable per config, the module is script-neutral.
DEFAULT_SCRIPT_RANGES = ((0x0B80, 0x0BFF),)

_ALLOWED_ASCII = frozenset(string.digits) | frozenset(string.punctuation)

_MAX_REWRITE_PASSES = 10


@dataclass(frozen=True)
class NormalizerConfig:
    rewrite_rules: tuple[tuple[str, str], ...] = ()
    script_ranges: tuple[tuple[int, int], ...] = DEFAULT_SCRIPT_RANGES


@dataclass
class NormalizationReport:
    output: str
    # (offset into the input, replaced sequence, replacement sequence);
    # offsets strictly increasing, splicing them into the input gives output.
    replacements: list[tuple[int, str, str]] = field(default_factory=list)
    non_script_runs: list[tuple[int, int]] = field(default_factory=list)


def _parse_codepoints(text, path, line_no):
    points = []
    for item in text.split(","):
        item = item.strip()
        if not item.upper().startswith("U+"):
            raise ResourceError(
                f"{path}:{line_no}: expected U+XXXX, got {item!r}")
        try:
            points.append(chr(int(item[2:], 16)))
        except ValueError:
            raise ResourceError(
                f"{path}:{line_no}: bad code point {item!r}") from None
    return "".join(points)


def load_rewrite_rules(path):
    """Load a rewrite table: one "U+XXXX[,U+XXXX...] -> U+XXXX[,...]" rule
    per line, "#" comments."""
    rules = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "->" not in line:
                raise ResourceError(f"{path}:{line_no}: missing '->'")
            src, dst = line.split("->", 1)
            rules.append((
                _parse_codepoints(src, path, line_no),
                _parse_codepoints(dst, path, line_no),
            ))
    return tuple(rules)


def default_config():
    """Config with the packaged rewrite table and the default script range."""
    table = resources.files("udkit.data").joinpath("rewrite_rules.txt")
    with resources.as_file(table) as path:
        return NormalizerConfig(rewrite_rules=load_rewrite_rules(path))


def _apply_rewrites(text, rules):
    # Longest source first so overlapping rules resolve deterministically.
    ordered = sorted(rules, key=lambda r: -len(r[0]))
    for _ in range(_MAX_REWRITE_PASSES):
        changed = False
        for src, dst in ordered:
            if src in text:
                text = text.replace(src, dst)
                changed = True
        if not changed:
            break
    return text


def normalize_text(text, config=None):
    """Canonicalize text: NFC plus the configured rewrite table.

    Idempotent: normalizing the output changes nothing.  The report's
    replacement list reconstructs the output from the input.
    """
    if config is None:
        config = default_config()
    output = unicodedata.normalize("NFC", text)
    output = _apply_rewrites(output, config.rewrite_rules)
    output = unicodedata.normalize("NFC", output)

    replacements = []
    if output != text:
        matcher = difflib.SequenceMatcher(None, text, output, autojunk=False)
        for tag, i1, i2, j1, j2 in matcher.get_opcodes():
            if tag != "equal":
                replacements.append((i1, text[i1:i2], output[j1:j2]))

    return NormalizationReport(
        output=output,
        replacements=replacements,
        non_script_runs=check_script(output, config),
    )


def _char_allowed(ch, ranges):
    if ch.isspace():
        return True
    if ch in _ALLOWED_ASCII:
        return True
    point = ord(ch)
    return any(lo <= point <= hi for lo, hi in ranges)


def check_script(text, config=None):
    """Find maximal runs of characters outside the configured script.

    ASCII digits, ASCII punctuation, and whitespace are always allowed.
    Returns a list of (offset, length) runs covering exactly the offending
    characters.
    """
    ranges = (config.script_ranges if config is not None
              else DEFAULT_SCRIPT_RANGES)
    runs = []
    start = None
    for i, ch in enumerate(text):
        if _char_allowed(ch, ranges):
            if start is not None:
                runs.append((start, i - start))
                start = None
        elif start is None:
            start = i
    if start is not None:
        runs.append((start, len(text) - start))
    return runs
