"""Decoding: greedy, beam search, paragraph generation, and a brute-force
oracle used to verify the beam.

Hypotheses are scored by summed token log-probabilities, optionally divided
by length^alpha (alpha defaults to 0, a pure sum). `unk` and `go` are never
generated: their log-probabilities are masked to -inf. A hypothesis finishes
when it emits `eos` or hits the length cap; finished hypotheses leave the
beam (freeing the slot) and compete once decoding ends.
"""

from dataclasses import dataclass, field

import numpy as np

from .corpus import EOS_ID, GO_ID, UNK_ID, Paragraph, Vocabulary, encode_sentence
from .decoder import step_log_probs
from .encoder import EncodedContext
from .model import ModelParams, encode

MASKED_IDS = (UNK_ID, GO_ID)
ORACLE_SEQUENCE_GUARD = 10 ** 6


@dataclass
class InferenceConfig:
    beam_width: int = 5
    max_decode_len: int = 21  # generated tokens incl. closing eos (20-token sentences)
    length_norm_alpha: float = 0.0

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_decode_len < 1:
            raise ValueError("max_decode_len must be >= 1")


@dataclass
class BeamHypothesis:
    """A (partial) decoded sequence.

    tokens: generated ids, including the terminal eos when finished by eos.
    log_prob: exact sum of the step log-probabilities of those tokens.
    """

    tokens: list
    log_prob: float
    state: np.ndarray = field(repr=False)
    finished: bool = False

    @property
    def content(self):
        """Generated ids without the terminal eos."""
        if self.tokens and self.tokens[-1] == EOS_ID:
            return self.tokens[:-1]
        return list(self.tokens)

    def score(self, alpha: float) -> float:
        if alpha == 0.0 or not self.tokens:
            return self.log_prob
        return self.log_prob / (len(self.tokens) ** alpha)


def _masked_log_probs(log_probs):
    out = log_probs.copy()
    for t in MASKED_IDS:
        out[t] = -np.inf
    return out


def _sort_key(alpha):
    return lambda hyp: (-hyp.score(alpha), tuple(hyp.tokens))


def greedy_decode(model: ModelParams, ctx: EncodedContext, cfg: InferenceConfig):
    """Argmax decoding from `go`; ties go to the lowest token id.

    Returns the generated content ids (no framing).
    """
    h = ctx.s
    prev = GO_ID
    tokens = []
    for _ in range(cfg.max_decode_len):
        h, log_probs = step_log_probs(model, h, prev, ctx)
        token = int(np.argmax(_masked_log_probs(log_probs)))
        tokens.append(token)
        if token == EOS_ID:
            break
        prev = token
    return [t for t in tokens if t != EOS_ID]


def beam_search(model: ModelParams, ctx: EncodedContext, cfg: InferenceConfig):
    """Standard beam search; returns <= beam_width finished hypotheses, best
    first (ties broken by token sequence).

    Each live hypothesis expands over the full (unmasked) vocabulary; the
    beam keeps the top `beam_width` unfinished expansions, while expansions
    that emit eos retire immediately to the finished pool without occupying
    a beam slot.
    """
    alpha = cfg.length_norm_alpha
    key = _sort_key(alpha)
    live = [BeamHypothesis(tokens=[], log_prob=0.0, state=ctx.s)]
    finished = []
    for _ in range(cfg.max_decode_len):
        candidates = []
        for hyp in live:
            prev = hyp.tokens[-1] if hyp.tokens else GO_ID
            h, log_probs = step_log_probs(model, hyp.state, prev, ctx)
            log_probs = _masked_log_probs(log_probs)
            for token in range(len(log_probs)):
                if not np.isfinite(log_probs[token]):
                    continue
                new = BeamHypothesis(tokens=hyp.tokens + [token],
                                     log_prob=hyp.log_prob + float(log_probs[token]),
                                     state=h)
                if token == EOS_ID:
                    new.finished = True
                    finished.append(new)
                else:
                    candidates.append(new)
        candidates.sort(key=key)
        live = candidates[:cfg.beam_width]
        if not live:
            break
    for hyp in live:  # length cap hit
        hyp.finished = True
        finished.append(hyp)
    finished.sort(key=key)
    return finished[:cfg.beam_width]


def exhaustive_oracle(model: ModelParams, ctx: EncodedContext, max_len: int):
    """Enumerate every candidate sequence and return the most probable one.

    Candidates are all maskable-token-free sequences of up to `max_len`
    generated tokens that end in eos or run to the cap. Scoring is the exact
    summed log-probability (no length normalization), with the beam's
    lexicographic tie-break. Refuses blow-up beyond 10^6 sequences.
    """
    n_allowed = model.vocab_size - len(MASKED_IDS)
    if n_allowed ** max_len > ORACLE_SEQUENCE_GUARD:
        raise ValueError(
            f"{n_allowed}^{max_len} sequences exceed the enumeration guard")

    best = []

    def expand(tokens, log_prob, h, prev, depth):
        h, log_probs = step_log_probs(model, h, prev, ctx)
        log_probs = _masked_log_probs(log_probs)
        for token in range(len(log_probs)):
            if not np.isfinite(log_probs[token]):
                continue
            seq = tokens + [token]
            lp = log_prob + float(log_probs[token])
            if token == EOS_ID or depth == max_len:
                best.append(BeamHypothesis(tokens=seq, log_prob=lp, state=h,
                                           finished=True))
            else:
                expand(seq, lp, h, token, depth + 1)

    expand([], 0.0, ctx.s, GO_ID, 1)
    best.sort(key=_sort_key(0.0))
    return best[0]


def generate_paragraph(model: ModelParams, vocab: Vocabulary, seed_sentence,
                       num_sentences: int, cfg: InferenceConfig,
                       num_window: int = 5) -> Paragraph:
    """Autoregressively extend a seed sentence by `num_sentences` lines.

    Each new sentence is the top beam hypothesis decoded from the trailing
    window of up to `num_window` sentences (seed included).
    """
    if not seed_sentence:
        raise ValueError("seed sentence must be non-empty")
    sentences = [list(seed_sentence)]
    encoded = [encode_sentence(vocab, seed_sentence)]
    for _ in range(num_sentences):
        ctx = encode(model, encoded[-num_window:])
        hyps = beam_search(model, ctx, cfg)
        content = hyps[0].content
        sentences.append([vocab.token(t) for t in content])
        encoded.append([GO_ID] + content + [EOS_ID])
    return Paragraph(sentences=sentences)
