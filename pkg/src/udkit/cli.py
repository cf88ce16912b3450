"""Command-line interface.

One subcommand per pipeline stage plus training, conversion, evaluation,
validation, and the end-to-end pipeline runner.  Data flows as CoNLL-U on
stdin/stdout unless a file or --out is given.  Exit codes: 0 success,
1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from udkit import conllu, evaluate, lemma, morph, mwt, normalize, pos
from udkit import parse as parsemod
from udkit import pipeline as pipemod
from udkit import tokenize as tokmod
from udkit.errors import UdkitError


def _read_text(path):
    """Read UTF-8 text from a file or stdin; decoding errors carry the
    byte offset."""
    if path is None or path == "-":
        data = sys.stdin.buffer.read()
        name = "<stdin>"
    else:
        data = Path(path).read_bytes()
        name = str(path)
    try:
        return data.decode("utf-8"), name
    except UnicodeDecodeError as exc:
        raise UdkitError(
            f"{name}: invalid UTF-8 at byte {exc.start}") from None


def _read_document(path):
    text, name = _read_text(path)
    return conllu.parse_document(text, source_name=name)


def _write(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _emit_document(doc, out):
    _write(conllu.serialize_document(doc), out)


def _per_sentence(doc, transform):
    return conllu.Document(
        [transform(s) for s in doc.sentences], doc.source_name)


def _build_argparser():
    parser = argparse.ArgumentParser(
        prog="udkit",
        description="Universal Dependencies processing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help筋=None, **kwargs):
        return sub.add_parser(name, **kwargs)

    p = sub.add_parser("normalize", help="canonicalize Unicode text")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--table", help="rewrite table file")
    p.add_argument("--scripts", help="script ranges, e.g. 0B80-0BFF")
    p.add_argument("--report", action="store_true",
                   help="print a replacement summary to stderr")

    p = sub.add_parser("tokenize", help="split text into CoNLL-U tokens")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--config", help="tokenizer config file")

    p = sub.add_parser("expand-mwt", help="split clitic-bearing tokens")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--rules", help="clitic rule table")

    p = sub.add_parser("lemmatize", help="fill the LEMMA column")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--model", required=True)

    p = sub.add_parser("tag", help="fill the UPOS column")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--model", required=True)
    p.add_argument("--keep-existing", action="store_true",
                   help="skip sentences that already carry UPOS tags")

    p = sub.add_parser("analyze", help="fill FEATS from the morphological "
                                       "analyzer")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--paradigms", required=True)

    p = sub.add_parser("parse", help="fill HEAD/DEPREL")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--model", required=True)
    p.add_argument("--treebank-id")

    p = sub.add_parser("train-lemmatizer")
    p.add_argument("--train", required=True, help="CoNLL-U training file")
    p.add_argument("--model", required=True, help="output model path")

    p = sub.add_parser("train-tagger")
    p.add_argument("--train", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("train-parser")
    p.add_argument("--train", action="append", required=True,
                   metavar="FILE:TREEBANK_ID",
                   help="training file tagged with a treebank id; repeatable")
    p.add_argument("--cap", action="append", default=[],
                   metavar="TREEBANK_ID=N",
                   help="use at most N sentences of one treebank")
    p.add_argument("--model", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("convert-tagset",
                       help="convert 'form<TAB>tag' sentences to CoNLL-U")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--mapping", help="source<TAB>upos table "
                                     "(default: packaged Amrita table)")

    p = sub.add_parser("evaluate")
    p.add_argument("--gold", required=True)
    p.add_argument("--system", required=True)
    p.add_argument("--aligned", action="store_true",
                   help="align words by character spans first")
    p.add_argument("--strict-labels", action="store_true",
                   help="compare dependency label subtypes too")
    p.add_argument("--out")

    p = sub.add_parser("pipeline", help="run the full pipeline on raw text")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")
    p.add_argument("--manifest", required=True)
    p.add_argument("--from-conllu", action="store_true",
                   help="input is CoNLL-U; skip normalize/tokenize")

    p = sub.add_parser("validate", help="report structural violations")
    p.add_argument("files", nargs="+")

    return parser


def _cmd_normalize(args):
    text, _ = _read_text(args.input)
    config = normalize.default_config()
    if args.table:
        config = normalize.NormalizerConfig(
            rewrite_rules=normalize.load_rewrite_rules(args.table),
            script_ranges=config.script_ranges)
    if args.scripts:
        ranges = []
        for part in args.scripts.replace(",", " ").split():
            lo, _, hi = part.partition("-")
            ranges.append((int(lo, 16), int(hi or lo, 16)))
        config = normalize.NormalizerConfig(
            rewrite_rules=config.rewrite_rules,
            script_ranges=tuple(ranges))
    report = normalize.normalize_text(text, config)
    _write(report.output, args.out)
    if args.report:
        print(f"replacements={len(report.replacements)}", file=sys.stderr)
        print(f"non_script_runs={len(report.non_script_runs)}",
              file=sys.stderr)
    return 0


def _cmd_tokenize(args):
    text, _ = _read_text(args.input)
    config = (tokmod.load_tokenizer_config(args.config)
              if args.config else tokmod.default_tokenizer_config())
    sentences = []
    for n, (sent_text, _off) in enumerate(
            tokmod.split_sentences(text, config), start=1):
        tokens = [conllu.Token(id=i, form=raw.form)
                  for i, raw in enumerate(tokmod.tokenize(sent_text, config),
                                          start=1)]
        sentences.append(conllu.Sentence(
            tokens=tokens,
            comments=[f"# sent_id = {n}", f"# text = {sent_text}"]))
    _emit_document(conllu.Document(sentences), args.out)
    return 0


def _cmd_expand_mwt(args):
    doc = _read_document(args.input)
    rules = (mwt.load_clitic_rules(args.rules)
             if args.rules else mwt.default_clitic_rules())
    _emit_document(
        _per_sentence(doc, lambda s: mwt.expand_sentence(s, rules)),
        args.out)
    return 0


def _cmd_lemmatize(args):
    doc = _read_document(args.input)
    model = lemma.load_lemma_model(args.model)

    def transform(sentence):
        out = sentence
        for i, token in enumerate(out.tokens):
            out = conllu.set_annotation(
                out, i, lemma=lemma.lemmatize(token.form, token.upos, model))
        return out

    _emit_document(_per_sentence(doc, transform), args.out)
    return 0


def _cmd_tag(args):
    doc = _read_document(args.input)
    model = pos.load_tagger_model(args.model)

    def transform(sentence):
        if args.keep_existing and all(
                t.upos != "_" for t in sentence.tokens):
            return sentence
        return pos.tag(sentence, model)

    _emit_document(_per_sentence(doc, transform), args.out)
    return 0


def _cmd_analyze(args):
    doc = _read_document(args.input)
    resources = morph.load_resources(args.lexicon, args.paradigms)

    def transform(sentence):
        out = sentence
        for i, token in enumerate(out.tokens):
            analyses = morph.analyze(token.form, resources)
            if not analyses:
                analyses = morph.guess(token.form, resources)
            chosen = morph.disambiguate(analyses, token.upos)
            if chosen is None:
                out = conllu.set_annotation(
                    out, i, misc=_merge_misc(token.misc, "MorphSource=none"))
                continue
            changes = {
                "feats": chosen.feats,
                "misc": _merge_misc(token.misc,
                                    f"MorphSource={chosen.source}"),
            }
            if token.lemma == "_":
                changes["lemma"] = chosen.lemma
            out = conllu.set_annotation(out, i, **changes)
        return out

    _emit_document(_per_sentence(doc, transform), args.out)
    return 0


def _merge_misc(misc, extra):
    return extra if misc == "_" else f"{misc}|{extra}"


def _cmd_parse(args):
    doc = _read_document(args.input)
    model = parsemod.load_parser_model(args.model)
    _emit_document(
        _per_sentence(doc, lambda s: parsemod.parse_sentence(
            s, model, args.treebank_id)),
        args.out)
    n = sum(len(s.tokens) for s in doc.sentences)
    print(f"parsed {len(doc.sentences)} sentences / {n} words "
          f"(pos=as-given, treebank_id={args.treebank_id or '<unk>'})",
          file=sys.stderr)
    return 0


def _cmd_train_lemmatizer(args):
    model = lemma.train_lemmatizer(_read_document(args.train))
    lemma.save_lemma_model(model, args.model)
    return 0


def _cmd_train_tagger(args):
    model = pos.train_tagger(_read_document(args.train), args.epochs,
                             args.seed)
    pos.save_tagger_model(model, args.model)
    return 0


def _cmd_train_parser(args):
    caps = {}
    for cap in args.cap:
        treebank_id, _, n = cap.partition("=")
        try:
            caps[treebank_id] = int(n)
        except ValueError:
            raise UdkitError(f"bad --cap {cap!r}, expected ID=N") from None
    splits = []
    for item in args.train:
        path, sep, treebank_id = item.rpartition(":")
        if not sep or not path:
            raise UdkitError(
                f"bad --train {item!r}, expected FILE:TREEBANK_ID")
        doc = _read_document(path)
        if treebank_id in caps:
            doc = conllu.Document(doc.sentences[:caps[treebank_id]],
                                  doc.source_name)
        splits.append(parsemod.EvalSplit(treebank_id, "train", doc))
    model = parsemod.train_parser(splits, args.epochs, args.seed)
    parsemod.save_parser_model(model, args.model)
    if model.skipped_nonprojective:
        print(f"skipped {model.skipped_nonprojective} non-projective "
              f"sentences", file=sys.stderr)
    return 0


def _cmd_convert_tagset(args):
    text, name = _read_text(args.input)
    mapping = (pos.load_tag_mapping(args.mapping)
               if args.mapping else pos.amrita_mapping())
    corpus = []
    sentence = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            if sentence:
                corpus.append(sentence)
                sentence = []
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise UdkitError(
                f"{name}:{line_no}: expected 'form<TAB>tag'")
        sentence.append((cols[0], cols[1]))
    if sentence:
        corpus.append(sentence)
    _emit_document(pos.convert_corpus(corpus, mapping), args.out)
    return 0


def _cmd_evaluate(args):
    gold = _read_document(args.gold)
    system = _read_document(args.system)
    if args.aligned:
        report = evaluate.score_aligned(gold, system,
                                        strict_labels=args.strict_labels)
    else:
        report = evaluate.score_attachments(
            gold, system, strict_labels=args.strict_labels)
        pos_report = evaluate.score_pos(gold, system)
        report.pos_accuracy = pos_report.pos_accuracy
        report.pos_f1 = pos_report.pos_f1
        report.counts.correct_upos = pos_report.counts.correct_upos
    _write(evaluate.render_report(report), args.out)
    return 0


def _cmd_pipeline(args):
    manifest = pipemod.load_manifest(args.manifest)
    runner = pipemod.Pipeline(manifest)
    if args.from_conllu:
        doc = _read_document(args.input)
        result = runner.run_document(doc)
    else:
        text, _ = _read_text(args.input)
        result = runner.run_text(text)
    _emit_document(result, args.out)
    return 0


def _cmd_validate(args):
    status = 0
    for path in args.files:
        doc = _read_document(path)
        for v in conllu.validate(doc):
            status = 1
            print(f"{path}:{v.sentence_index + 1}:{v.line_hint} "
                  f"{v.code} {v.message}")
    return status


_COMMANDS = {
    "normalize": _cmd_normalize,
    "tokenize": _cmd_tokenize,
    "expand-mwt": _cmd_expand_mwt,
    "lemmatize": _cmd_lemmatize,
    "tag": _cmd_tag,
    "analyze": _cmd_analyze,
    "parse": _cmd_parse,
    "train-lemmatizer": _cmd_train_lemmatizer,
    "train-tagger": _cmd_train_tagger,
    "train-parser": _cmd_train_parser,
    "convert-tagset": _cmd_convert_tagset,
    "evaluate": _cmd_evaluate,
    "pipeline": _cmd_pipeline,
    "validate": _cmd_validate,
}


def cli(argv):
    """Run one command; returns the exit status instead of raising."""
    parser = _build_argparser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except UdkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
