"""Deterministic synthetic corpora for the learning and ordering checks.

Two generators:

* `cycle_corpus` - each sentence is one of a fixed set of sentence types and
  the next sentence's type is a fixed function of the previous one, so the
  next sentence is fully predictable from one sentence of context.

* `delayed_topic_corpus` - sentences look like [topic, coupled, p0, p1, p2].
  The topic chain advances with a lag of three (topic_m is a function of
  topic_{m-3} only, three interleaved chains), while the payload tokens are a
  per-position substitution of the previous sentence's payload. Predicting
  the topic needs the hierarchical window; predicting the payload rewards
  word-level access to the last sentence.
"""

import numpy as np

from lyricgen.corpus import Paragraph

CYCLE_TYPES = 5
CYCLE_SENT_LEN = 4

TOPIC_COUNT = 4
PAYLOAD_ALPHABET = 8
PAYLOAD_LEN = 3


def cycle_corpus(n_paragraphs=200, paragraph_len=4, seed=0):
    """Paragraphs over CYCLE_TYPES fixed sentences, each followed by the next
    type in the cycle. Vocabulary: 20 word types."""
    words = [[f"w{k}_{i}" for i in range(CYCLE_SENT_LEN)] for k in range(CYCLE_TYPES)]
    rng = np.random.default_rng(seed)
    paragraphs = []
    for _ in range(n_paragraphs):
        k = int(rng.integers(CYCLE_TYPES))
        sentences = []
        for _ in range(paragraph_len):
            sentences.append(list(words[k]))
            k = (k + 1) % CYCLE_TYPES
        paragraphs.append(Paragraph(sentences=sentences))
    return paragraphs


def delayed_topic_corpus(n_paragraphs=120, paragraph_len=7, seed=0):
    """Topic depends on the sentence three back; payload on the last sentence.

    Vocabulary: 4 topic + 4 coupled + 8 payload word types = 16.
    """
    rng = np.random.default_rng(seed)
    paragraphs = []
    for _ in range(n_paragraphs):
        topics = [int(rng.integers(TOPIC_COUNT)) for _ in range(3)]
        payload = [int(rng.integers(PAYLOAD_ALPHABET)) for _ in range(PAYLOAD_LEN)]
        sentences = []
        for m in range(paragraph_len):
            if m >= 3:
                topics.append((topics[m - 3] + 1) % TOPIC_COUNT)
            if m >= 1:
                payload = [(p + 1) % PAYLOAD_ALPHABET for p in payload]
            k = topics[m]
            sentences.append([f"t{k}", f"a{k}"] + [f"p{p}" for p in payload])
        paragraphs.append(Paragraph(sentences=sentences))
    return paragraphs
