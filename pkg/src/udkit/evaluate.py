"""Attachment, POS, and tokenization scoring.

Two modes.  ``score_attachments``/``score_pos`` require identical word
segmentation (gold-tokenization mode, the default for comparable numbers).
``score_aligned`` aligns words by character spans first, CoNLL-shared-task
style, so end-to-end runs with diverging tokenization stay scorable: token
precision/recall/F1 come from span matches, attachment scores count
unaligned gold words as errors.

Dependency label subtypes (everything after ":") are ignored unless
``strict_labels`` is set; empty inputs score as vacuously perfect (100.00
with zero counts).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from udkit.errors import DataError


class AlignmentError(DataError):
    pass


@dataclass
class EvalCounts:
    words: int = 0
    correct_heads: int = 0
    correct_labeled: int = 0
    correct_upos: int = 0
    gold_tokens: int = 0
    system_tokens: int = 0
    matched_tokens: int = 0
    aligned_words: int = 0


@dataclass
class EvalReport:
    las: float = 100.0
    uas: float = 100.0
    pos_accuracy: float = 100.0
    pos_f1: float = 100.0
    token_f1: float = 100.0
    token_precision: float = 100.0
    token_recall: float = 100.0
    counts: EvalCounts = field(default_factory=EvalCounts)
    per_treebank: dict = field(default_factory=dict)
    mode: str = "gold-tokenization"
    strict_labels: bool = False


def _pct(numerator, denominator):
    # vacuous perfection on empty denominators, by documented convention
    if denominator == 0:
        return 100.0
    return 100.0 * numerator / denominator


def _match_label(gold, system, strict):
    if strict:
        return gold == system
    return gold.split(":")[0] == system.split(":")[0]


def _check_same_segmentation(gold, system):
    if len(gold.sentences) != len(system.sentences):
        raise AlignmentError(
            f"sentence counts differ ({len(gold.sentences)} vs "
            f"{len(system.sentences)})")
    for i, (g, s) in enumerate(zip(gold.sentences, system.sentences)):
        if [t.form for t in g.tokens] != [t.form for t in s.tokens]:
            raise AlignmentError(
                f"sentence {i + 1}: word forms differ; use aligned mode "
                f"for diverging tokenization")


def _treebank_of(sentence):
    return sentence._comment_value("treebank_id")


def score_attachments(gold, system, strict_labels=False):
    """LAS/UAS in gold-tokenization mode.

    Requires identical segmentation; raises AlignmentError otherwise.  When
    sentences carry "# treebank_id = x" comments the report includes
    per-treebank sub-reports.
    """
    _check_same_segmentation(gold, system)
    report = EvalReport(mode="gold-tokenization", strict_labels=strict_labels)
    buckets: dict = {}
    for g_sent, s_sent in zip(gold.sentences, system.sentences):
        counts_list = [report.counts]
        treebank = _treebank_of(g_sent)
        if treebank is not None:
            sub = buckets.setdefault(
                treebank,
                EvalReport(mode=report.mode, strict_labels=strict_labels))
            counts_list.append(sub.counts)
        for g_tok, s_tok in zip(g_sent.tokens, s_sent.tokens):
            head_ok = g_tok.head == s_tok.head
            label_ok = head_ok and _match_label(
                g_tok.deprel, s_tok.deprel, strict_labels)
            for counts in counts_list:
                counts.words += 1
                counts.aligned_words += 1
                counts.correct_heads += head_ok
                counts.correct_labeled += label_ok
    for rep in [report, *buckets.values()]:
        rep.uas = _pct(rep.counts.correct_heads, rep.counts.words)
        rep.las = _pct(rep.counts.correct_labeled, rep.counts.words)
    report.per_treebank = buckets
    return report


def score_pos(gold, system):
    """UPOS accuracy plus micro-averaged F1 over tags.

    With exactly one tag per word on both sides, micro precision, recall,
    and F1 all coincide with accuracy; they are still computed from per-tag
    counts rather than assumed.
    """
    _check_same_segmentation(gold, system)
    report = EvalReport(mode="gold-tokenization")
    tp = 0
    gold_total = 0
    system_total = 0
    for g_sent, s_sent in zip(gold.sentences, system.sentences):
        for g_tok, s_tok in zip(g_sent.tokens, s_sent.tokens):
            report.counts.words += 1
            gold_total += 1
            system_total += 1
            if g_tok.upos == s_tok.upos:
                tp += 1
                report.counts.correct_upos += 1
    report.pos_accuracy = _pct(report.counts.correct_upos,
                               report.counts.words)
    precision = _pct(tp, system_total)
    recall = _pct(tp, gold_total)
    report.pos_f1 = (2 * precision * recall / (precision + recall)
                     if precision + recall else 0.0)
    return report


# ---------------------------------------------------------------------------
# Character-span alignment


def _char_layout(doc):
    """Character spans for tokens and words over the concatenated surface
    text (no whitespace).

    Words inside an MWT share the surface token's span and are told apart
    by their index within it, mirroring how range lines subsume their word
    lines in the file.
    """
    tokens = []   # (start, end) per surface token
    words = []    # (sentence_idx, token, key) with key = (start, end, sub)
    chars = []
    offset = 0
    for si, sentence in enumerate(doc.sentences):
        n = len(sentence.tokens)
        span_at = {sp.start: sp for sp in sentence.mwt_spans
                   if 1 <= sp.start <= sp.end <= n}
        wid = 1
        while wid <= n:
            span = span_at.get(wid)
            if span is not None:
                surface = span.surface_form
                start, end = offset, offset + len(surface)
                tokens.append((start, end))
                chars.append(surface)
                for sub, inner in enumerate(range(span.start, span.end + 1)):
                    token = sentence.tokens[inner - 1]
                    words.append((si, token, (start, end, sub, token.form)))
                offset = end
                wid = span.end + 1
            else:
                token = sentence.tokens[wid - 1]
                start, end = offset, offset + len(token.form)
                tokens.append((start, end))
                chars.append(token.form)
                words.append((si, token, (start, end, 0, token.form)))
                offset = end
                wid += 1
    return "".join(chars), tokens, words


def score_aligned(gold, system, strict_labels=False):
    """Character-span alignment scoring for diverging tokenizations."""
    gold_chars, gold_tokens, gold_words = _char_layout(gold)
    system_chars, system_tokens, system_words = _char_layout(system)
    if gold_chars != system_chars:
        raise AlignmentError(
            "gold and system have different character content")

    report = EvalReport(mode="aligned", strict_labels=strict_labels)
    counts = report.counts
    counts.gold_tokens = len(gold_tokens)
    counts.system_tokens = len(system_tokens)
    counts.matched_tokens = len(set(gold_tokens) & set(system_tokens))
    report.token_precision = _pct(counts.matched_tokens, counts.system_tokens)
    report.token_recall = _pct(counts.matched_tokens, counts.gold_tokens)
    denom = counts.gold_tokens + counts.system_tokens
    report.token_f1 = (_pct(2 * counts.matched_tokens, denom)
                       if denom else 100.0)

    system_by_key = {key: (si, tok) for si, tok, key in system_words}
    # word-level alignment map: (gold sentence, gold id) -> system word
    pair_of = {}
    aligned = []
    for si, g_tok, key in gold_words:
        hit = system_by_key.get(key)
        if hit is not None:
            pair_of[(si, g_tok.id)] = hit
            aligned.append((si, g_tok, hit))
    counts.words = len(gold_words)
    counts.aligned_words = len(aligned)

    for si, g_tok, (s_si, s_tok) in aligned:
        if g_tok.head == 0 and s_tok.head == 0:
            head_ok = True
        elif g_tok.head is None or s_tok.head is None:
            head_ok = g_tok.head is None and s_tok.head is None
        else:
            mapped = pair_of.get((si, g_tok.head))
            head_ok = (mapped is not None and mapped[0] == s_si
                       and mapped[1].id == s_tok.head)
        label_ok = head_ok and _match_label(
            g_tok.deprel, s_tok.deprel, strict_labels)
        counts.correct_heads += head_ok
        counts.correct_labeled += label_ok
        counts.correct_upos += g_tok.upos == s_tok.upos
    report.uas = _pct(counts.correct_heads, counts.words)
    report.las = _pct(counts.correct_labeled, counts.words)
    report.pos_accuracy = _pct(counts.correct_upos, counts.words)
    report.pos_f1 = report.pos_accuracy
    return report


# ---------------------------------------------------------------------------
# Rendering


_METRIC_FIELDS = (
    ("LAS", "las"), ("UAS", "uas"),
    ("POS accuracy", "pos_accuracy"), ("POS micro-F1", "pos_f1"),
    ("Token F1", "token_f1"), ("Token precision", "token_precision"),
    ("Token recall", "token_recall"),
)

_COUNT_FIELDS = (
    "words", "aligned_words", "correct_heads", "correct_labeled",
    "correct_upos", "gold_tokens", "system_tokens", "matched_tokens",
)


def render_report(report):
    """Aligned plain-text table followed by a machine-readable key=value
    block."""
    lines = [f"{'metric':<16}{'value':>8}"]
    for label, attr in _METRIC_FIELDS:
        lines.append(f"{label:<16}{getattr(report, attr):>8.2f}")
    for treebank in sorted(report.per_treebank):
        sub = report.per_treebank[treebank]
        lines.append(f"[{treebank}]  LAS {sub.las:.2f}  UAS {sub.uas:.2f}  "
                     f"words {sub.counts.words}")
    lines.append("")
    lines.append(f"mode={report.mode}")
    lines.append(f"strict_labels={str(report.strict_labels).lower()}")
    for _, attr in _METRIC_FIELDS:
        lines.append(f"{attr}={getattr(report, attr):.2f}")
    for attr in _COUNT_FIELDS:
        lines.append(f"{attr}={getattr(report.counts, attr)}")
    for treebank in sorted(report.per_treebank):
        sub = report.per_treebank[treebank]
        lines.append(f"las[{treebank}]={sub.las:.2f}")
        lines.append(f"uas[{treebank}]={sub.uas:.2f}")
    return "\n".join(lines) + "\n"
