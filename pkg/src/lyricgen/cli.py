"""Command-line pipeline: preprocess, train, generate, evaluate, gradcheck.

Option precedence: explicit command-line flags override the --config file,
which overrides the built-in defaults (the published model settings). The
config file is flat text, one `key = value` per line, keys being the flag
names without the leading dashes (e.g. `beam-width = 5`); blank lines and
`#` comments are ignored.
"""

import argparse
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluation, gradcheck, inference, training
from .corpus import read_vocab
from .inference import InferenceConfig, generate_paragraph
from .model import VARIANTS
from .training import AdamHyper, TrainConfig, load_checkpoint, save_checkpoint


class _Option:
    """One resolvable option: CLI flag > config file > default."""

    def __init__(self, flag, type_, default, help_):
        self.flag = flag
        self.key = flag.lstrip("-")
        self.dest = self.key.replace("-", "_")
        self.type = type_
        self.default = default
        self.help = help_


def _add_options(parser, options):
    for opt in options:
        shown = "none" if opt.default is None else opt.default
        parser.add_argument(opt.flag, dest=opt.dest, type=opt.type, default=None,
                            help=f"{opt.help} (default: {shown})")


def _parse_config_file(path):
    values = {}
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{number}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("_", "-")] = value.strip()
    return values


def _resolve(args, options):
    """Merge CLI values, config-file values, and defaults into a dict."""
    file_values = {}
    if getattr(args, "config", None):
        file_values = _parse_config_file(args.config)
    resolved = {}
    for opt in options:
        cli_value = getattr(args, opt.dest)
        if cli_value is not None:
            resolved[opt.dest] = cli_value
        elif opt.key in file_values:
            resolved[opt.dest] = opt.type(file_values[opt.key])
        else:
            resolved[opt.dest] = opt.default
    return resolved


def _variant(value):
    if value not in VARIANTS:
        raise argparse.ArgumentTypeError(f"variant must be one of {', '.join(VARIANTS)}")
    return value


_CORPUS_OPTIONS = [
    _Option("--min-count", int, 10, "drop tokens occurring fewer times than this"),
    _Option("--max-sentence-len", int, 20, "drop sentences longer than this many tokens"),
    _Option("--tokenizer", str, "whitespace", "tokenizer: whitespace or char"),
    _Option("--train-fraction", float, 0.9, "fraction of paragraphs used for training"),
]

_MODEL_OPTIONS = [
    _Option("--variant", _variant, "hred_attention",
            "model wiring: seq2seq, hred, or hred_attention"),
    _Option("--embed-dim", int, 300, "word embedding dimension"),
    _Option("--word-hidden", int, 1000, "word-level encoder hidden units"),
    _Option("--word-layers", int, 3, "word-level encoder layers"),
    _Option("--sent-hidden", int, 1500, "sentence-level encoder hidden units"),
    _Option("--dec-hidden", int, 1500, "decoder hidden units"),
    _Option("--num-window", int, 5, "previous sentences fed to the encoder"),
]

_TRAIN_OPTIONS = [
    _Option("--batch-size", int, 256, "mini-batch size"),
    _Option("--max-epochs", int, 50, "epoch cap"),
    _Option("--patience", int, 3, "epochs without validation improvement before stopping"),
    _Option("--learning-rate", float, 1e-3, "Adam learning rate"),
    _Option("--init-range", float, 0.5, "uniform init range [-r, +r]"),
    _Option("--clip-norm", float, 5.0, "global gradient-norm clip (<=0 disables)"),
    _Option("--rng-seed", int, 0, "seed for init and shuffling"),
]

_DECODE_OPTIONS = [
    _Option("--beam-width", int, 5, "beam search width"),
    _Option("--max-decode-len", int, 21, "max generated tokens per sentence (incl. eos)"),
    _Option("--length-norm-alpha", float, 0.0, "beam score length-normalization exponent"),
]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lyricgen",
        description="Hierarchical attention Seq2Seq next-sentence generator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="build vocabulary and train/test split")
    p.add_argument("--corpus", required=True, help="raw corpus file (paragraph text format)")
    p.add_argument("--out", required=True, help="output directory for vocab.txt/train.txt/test.txt")
    p.add_argument("--vocab", default=None, help="vocabulary output path (default: OUT/vocab.txt)")
    p.add_argument("--config", default=None, help="key = value config file")
    _add_options(p, _CORPUS_OPTIONS + [_Option("--rng-seed", int, 0, "split shuffle seed")])

    p = sub.add_parser("train", help="train a model and write the best checkpoint")
    p.add_argument("--corpus", required=True, help="training split (paragraph text format)")
    p.add_argument("--val-corpus", default=None,
                   help="held-out split for early stopping (default: train split)")
    p.add_argument("--vocab", required=True, help="vocabulary file")
    p.add_argument("--checkpoint", required=True, help="checkpoint output path")
    p.add_argument("--out", default=None,
                   help="loss log output path (default: CHECKPOINT.losses.txt)")
    p.add_argument("--config", default=None, help="key = value config file")
    _add_options(p, _MODEL_OPTIONS + _TRAIN_OPTIONS + [
        _Option("--max-sentence-len", int, 20, "drop sentences longer than this"),
        _Option("--tokenizer", str, "whitespace", "tokenizer: whitespace or char")])

    p = sub.add_parser("generate", help="extend a seed line into a paragraph")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--seed-text", required=True, help="first line of the paragraph")
    p.add_argument("--out", default=None, help="also write the paragraph to this path")
    p.add_argument("--config", default=None, help="key = value config file")
    _add_options(p, [_Option("--sentences", int, 4, "number of new sentences")]
                 + _DECODE_OPTIONS
                 + [_Option("--num-window", int, 0, "context window (0: use checkpoint value)")])

    p = sub.add_parser("evaluate", help="BLEU of decoded next sentences on a test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True, help="test split (paragraph text format)")
    p.add_argument("--out", required=True, help="metric report output path")
    p.add_argument("--generations", default=None,
                   help="generations output path (default: OUT.generations.txt)")
    p.add_argument("--config", default=None, help="key = value config file")
    _add_options(p, _DECODE_OPTIONS + [
        _Option("--num-window", int, 0, "context window (0: use checkpoint value)"),
        _Option("--max-sentence-len", int, 20, "drop sentences longer than this"),
        _Option("--tokenizer", str, "whitespace", "tokenizer: whitespace or char")])

    p = sub.add_parser("gradcheck", help="finite-difference check of the full backward pass")
    p.add_argument("--config", default=None, help="key = value config file")
    _add_options(p, [
        _Option("--variant", str, "all", "seq2seq, hred, hred_attention, or all"),
        _Option("--rng-seed", int, 0, "model/example seed"),
        _Option("--epsilon", float, 1e-5, "finite-difference step"),
        _Option("--tolerance", float, 1e-4, "max allowed relative error")])
    return parser


def _cmd_preprocess(args):
    opts = _resolve(args, _CORPUS_OPTIONS + [_Option("--rng-seed", int, 0, "")])
    paragraphs = corpus_mod.load_corpus(args.corpus,
                                        max_sentence_len=opts["max_sentence_len"],
                                        tokenizer=opts["tokenizer"])
    if not paragraphs:
        raise ValueError(f"{args.corpus}: no usable paragraphs")
    vocab = corpus_mod.build_vocab(paragraphs, min_count=opts["min_count"])
    train, test = corpus_mod.split_corpus(paragraphs, opts["train_fraction"],
                                          seed=opts["rng_seed"])
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab_path = Path(args.vocab) if args.vocab else out_dir / "vocab.txt"
    corpus_mod.write_vocab(vocab, vocab_path)
    corpus_mod.write_corpus(train, out_dir / "train.txt")
    corpus_mod.write_corpus(test, out_dir / "test.txt")
    print(f"vocab: {vocab.size} tokens -> {vocab_path}")
    print(f"split: {len(train)} train / {len(test)} test paragraphs -> {out_dir}")
    return 0


def _cmd_train(args):
    opts = _resolve(args, _MODEL_OPTIONS + _TRAIN_OPTIONS + [
        _Option("--max-sentence-len", int, 20, ""),
        _Option("--tokenizer", str, "whitespace", "")])
    vocab = read_vocab(args.vocab)
    load = lambda path: corpus_mod.load_corpus(
        path, max_sentence_len=opts["max_sentence_len"], tokenizer=opts["tokenizer"])
    train_paragraphs = load(args.corpus)
    config = TrainConfig(
        embed_dim=opts["embed_dim"], word_hidden=opts["word_hidden"],
        word_layers=opts["word_layers"], sent_hidden=opts["sent_hidden"],
        dec_hidden=opts["dec_hidden"], num_window=opts["num_window"],
        batch_size=opts["batch_size"], init_range=opts["init_range"],
        adam=AdamHyper(lr=opts["learning_rate"]), patience=opts["patience"],
        max_epochs=opts["max_epochs"], clip_norm=opts["clip_norm"],
        seed=opts["rng_seed"])
    train_examples = corpus_mod.corpus_examples(train_paragraphs, config.num_window, vocab)
    val_examples = None
    if args.val_corpus:
        val_examples = corpus_mod.corpus_examples(load(args.val_corpus),
                                                  config.num_window, vocab)

    def report(epoch, _model, train_loss, val_loss):
        print(f"epoch {epoch:3d}  train {train_loss:.4f}  val {val_loss:.4f}")
        return False

    checkpoint = training.train(config, opts["variant"], vocab.size, train_examples,
                                val_examples, on_epoch=report)
    save_checkpoint(checkpoint, args.checkpoint)
    log_path = args.out or f"{args.checkpoint}.losses.txt"
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("epoch\ttrain_loss\tval_loss\n")
        for i, (tr, va) in enumerate(zip(checkpoint.train_losses,
                                         checkpoint.val_losses), 1):
            fh.write(f"{i}\t{tr!r}\t{va!r}\n")
    print(f"best epoch {checkpoint.epoch} "
          f"(val {checkpoint.val_losses[checkpoint.epoch - 1]:.4f}) -> {args.checkpoint}")
    return 0


def _decode_config(opts):
    return InferenceConfig(beam_width=opts["beam_width"],
                           max_decode_len=opts["max_decode_len"],
                           length_norm_alpha=opts["length_norm_alpha"])


def _cmd_generate(args):
    opts = _resolve(args, [_Option("--sentences", int, 4, "")] + _DECODE_OPTIONS
                    + [_Option("--num-window", int, 0, "")])
    checkpoint = load_checkpoint(args.checkpoint)
    vocab = read_vocab(args.vocab)
    if vocab.size != checkpoint.vocab_size:
        raise ValueError(f"vocabulary size {vocab.size} does not match "
                         f"checkpoint ({checkpoint.vocab_size})")
    seed_tokens = args.seed_text.split()
    if not seed_tokens:
        raise ValueError("--seed-text must contain at least one token")
    num_window = opts["num_window"] or checkpoint.config.num_window
    paragraph = generate_paragraph(checkpoint.model, vocab, seed_tokens,
                                   opts["sentences"], _decode_config(opts),
                                   num_window=num_window)
    text = "\n".join(" ".join(s) for s in paragraph.sentences) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def _cmd_evaluate(args):
    opts = _resolve(args, _DECODE_OPTIONS + [
        _Option("--num-window", int, 0, ""),
        _Option("--max-sentence-len", int, 20, ""),
        _Option("--tokenizer", str, "whitespace", "")])
    checkpoint = load_checkpoint(args.checkpoint)
    vocab = read_vocab(args.vocab)
    if vocab.size != checkpoint.vocab_size:
        raise ValueError(f"vocabulary size {vocab.size} does not match "
                         f"checkpoint ({checkpoint.vocab_size})")
    paragraphs = corpus_mod.load_corpus(args.corpus,
                                        max_sentence_len=opts["max_sentence_len"],
                                        tokenizer=opts["tokenizer"])
    num_window = opts["num_window"] or checkpoint.config.num_window
    examples = corpus_mod.corpus_examples(paragraphs, num_window, vocab)
    if not examples:
        raise ValueError(f"{args.corpus}: no evaluable examples (paragraphs too short?)")
    cfg = _decode_config(opts)
    candidates, references = evaluation.decode_test_set(checkpoint.model, examples, cfg)
    report = evaluation.bleu(candidates, references)
    evaluation.write_report(report, args.out)
    generations_path = args.generations or f"{args.out}.generations.txt"
    with open(generations_path, "w", encoding="utf-8") as fh:
        for i, (example, cand) in enumerate(zip(examples, candidates)):
            if i:
                fh.write("\n")
            for sentence_ids in example.context:
                fh.write(" ".join(corpus_mod.decode_ids(vocab, sentence_ids)) + "\n")
            fh.write(" ".join(vocab.token(t) for t in cand) + "\n")
    for line in report.lines():
        print(line)
    print(f"report -> {args.out}; generations -> {generations_path}")
    return 0


def _cmd_gradcheck(args):
    opts = _resolve(args, [
        _Option("--variant", str, "all", ""), _Option("--rng-seed", int, 0, ""),
        _Option("--epsilon", float, 1e-5, ""), _Option("--tolerance", float, 1e-4, "")])
    variants = VARIANTS if opts["variant"] == "all" else (opts["variant"],)
    ok = True
    for variant in variants:
        report = gradcheck.run_gradcheck(variant=variant, seed=opts["rng_seed"],
                                         epsilon=opts["epsilon"],
                                         tolerance=opts["tolerance"])
        for line in report.lines():
            print(line)
        ok = ok and report.passed
    return 0 if ok else 1


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "train": _cmd_train,
    "generate": _cmd_generate,
    "evaluate": _cmd_evaluate,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"lyricgen {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
