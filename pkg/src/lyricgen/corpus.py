"""Corpus ingestion, vocabulary construction, and training-example extraction.

Corpus text format: UTF-8 plain text, one sentence per line, tokens separated
by single spaces, paragraphs separated by one blank line. Vocabulary file:
one token per line, line number = id, first three lines are the reserved
symbols unk / go / eos.
"""

import io
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

UNK_ID = 0
GO_ID = 1
EOS_ID = 2
UNK_TOKEN = "unk"
GO_TOKEN = "go"
EOS_TOKEN = "eos"
RESERVED_TOKENS = (UNK_TOKEN, GO_TOKEN, EOS_TOKEN)

DEFAULT_MAX_SENTENCE_LEN = 20


@dataclass
class Paragraph:
    """An ordered list of tokenized sentences."""

    sentences: list

    def __len__(self):
        return len(self.sentences)


@dataclass
class Vocabulary:
    """Token <-> id bijection with reserved unk/go/eos ids and counts.

    ids 0..2 are the reserved symbols; retained corpus tokens get ids from 3
    upward in order of descending frequency (ties broken lexicographically).
    """

    id_to_token: list
    token_to_id: dict = field(repr=False)
    counts: dict = field(repr=False, default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token(self, token_id: int) -> str:
        return self.id_to_token[token_id]


@dataclass
class TrainingExample:
    """A window of encoded context sentences plus the encoded next sentence."""

    context: list  # list of go..eos framed id sequences, oldest first
    target: list  # go..eos framed id sequence


def tokenize(line: str, tokenizer: str = "whitespace"):
    """Split one corpus line into surface tokens."""
    if tokenizer == "whitespace":
        return line.split()
    if tokenizer == "char":
        return [ch for ch in line if not ch.isspace()]
    raise ValueError(f"unknown tokenizer {tokenizer!r}")


def _iter_decoded_lines(source):
    """Yield (line_number, text) from a path, bytes buffer, or text stream."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            raw_lines = fh.readlines()
    elif isinstance(source, (bytes, bytearray)):
        raw_lines = io.BytesIO(bytes(source)).readlines()
    elif hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            for number, line in enumerate(data.splitlines(), start=1):
                yield number, line
            return
        raw_lines = io.BytesIO(data).readlines()
    else:
        raise ValueError(f"unsupported corpus source {type(source).__name__}")
    for number, raw in enumerate(raw_lines, start=1):
        try:
            yield number, raw.decode("utf-8").rstrip("\r\n")
        except UnicodeDecodeError as exc:
            raise ValueError(f"line {number}: invalid UTF-8 ({exc.reason})") from exc


def load_corpus(source, max_sentence_len: int = DEFAULT_MAX_SENTENCE_LEN,
                tokenizer: str = "whitespace"):
    """Parse the paragraph text format into a list of Paragraphs.

    Sentences longer than `max_sentence_len` tokens are dropped; paragraphs
    left empty are dropped too. Invalid UTF-8 is rejected with a line number.
    """
    paragraphs = []
    current = []

    def flush():
        if current:
            paragraphs.append(Paragraph(sentences=list(current)))
            current.clear()

    for _number, line in _iter_decoded_lines(source):
        tokens = tokenize(line, tokenizer)
        if not tokens:
            flush()
            continue
        if len(tokens) <= max_sentence_len:
            current.append(tokens)
    flush()
    return paragraphs


def build_vocab(paragraphs, min_count: int = 1) -> Vocabulary:
    """Count tokens over the corpus and retain those with freq >= min_count.

    Retained tokens are assigned ids 3.. by descending frequency with a
    lexicographic tie-break, so identical corpora always produce the same
    vocabulary. Tokens spelled like a reserved symbol keep the reserved id.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    for paragraph in paragraphs:
        for sentence in paragraph.sentences:
            counts.update(sentence)
    retained = [(tok, c) for tok, c in counts.items()
                if c >= min_count and tok not in RESERVED_TOKENS]
    retained.sort(key=lambda item: (-item[1], item[0]))
    id_to_token = list(RESERVED_TOKENS) + [tok for tok, _ in retained]
    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    return Vocabulary(id_to_token=id_to_token, token_to_id=token_to_id,
                      counts={tok: c for tok, c in retained})


def encode_sentence(vocab: Vocabulary, sentence):
    """Map surface tokens to ids and frame them: [go] + ids + [eos]."""
    return [GO_ID] + [vocab.lookup(tok) for tok in sentence] + [EOS_ID]


def decode_ids(vocab: Vocabulary, ids, strip_framing: bool = True):
    """Map ids back to surface tokens, dropping go/eos framing by default."""
    if strip_framing:
        ids = [i for i in ids if i not in (GO_ID, EOS_ID)]
    return [vocab.token(i) for i in ids]


def split_corpus(paragraphs, train_fraction: float = 0.9, seed: int = 0):
    """Deterministically shuffle and partition paragraphs into (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    order = np.random.default_rng(seed).permutation(len(paragraphs))
    n_train = int(round(train_fraction * len(paragraphs)))
    train = [paragraphs[i] for i in order[:n_train]]
    test = [paragraphs[i] for i in order[n_train:]]
    return train, test


def make_training_examples(paragraph: Paragraph, num_window: int, vocab: Vocabulary):
    """One example per target sentence index m in 2..M.

    The context is the up-to-`num_window` sentences preceding the target;
    shorter prefixes are used as-is (no padding sentences).
    """
    if num_window < 1:
        raise ValueError("num_window must be >= 1")
    encoded = [encode_sentence(vocab, s) for s in paragraph.sentences]
    examples = []
    for m in range(1, len(encoded)):  # 0-based target index
        lo = max(0, m - num_window)
        examples.append(TrainingExample(context=encoded[lo:m], target=encoded[m]))
    return examples


def corpus_examples(paragraphs, num_window: int, vocab: Vocabulary):
    """All training examples across a list of paragraphs."""
    examples = []
    for paragraph in paragraphs:
        examples.extend(make_training_examples(paragraph, num_window, vocab))
    return examples


def write_corpus(paragraphs, path):
    """Write paragraphs back out in the corpus text format."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, paragraph in enumerate(paragraphs):
            if i:
                fh.write("\n")
            for sentence in paragraph.sentences:
                fh.write(" ".join(sentence) + "\n")


def write_vocab(vocab: Vocabulary, path):
    with open(path, "w", encoding="utf-8") as fh:
        for token in vocab.id_to_token:
            fh.write(token + "\n")


def read_vocab(path) -> Vocabulary:
    with open(path, "r", encoding="utf-8") as fh:
        id_to_token = [line.rstrip("\n") for line in fh]
    while id_to_token and id_to_token[-1] == "":
        id_to_token.pop()
    if id_to_token[:3] != list(RESERVED_TOKENS):
        raise ValueError(f"{path}: first three vocabulary entries must be unk/go/eos")
    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    if len(token_to_id) != len(id_to_token):
        raise ValueError(f"{path}: duplicate tokens in vocabulary file")
    return Vocabulary(id_to_token=id_to_token, token_to_id=token_to_id)
