"""Two-level recurrent encoder.

A word-level GRU stack turns each context sentence into a fixed vector (its
top layer's final hidden state); a single sentence-level GRU layer consumes
the sentence vectors in order and its final state initializes the decoder.
The top-layer word states of the most recent sentence are kept for the
attention variant.
"""

from dataclasses import dataclass

import numpy as np

from .gru import (GruLayerParams, GruStack, gru_step_backward, gru_step_forward,
                  unroll, unroll_backward)


@dataclass
class EncoderParams:
    """embedding: (vocab, embed); word_stack over embeddings; sent_layer over
    word-level sentence vectors. The embedding matrix is shared with the
    decoder input."""

    embedding: np.ndarray
    word_stack: GruStack
    sent_layer: GruLayerParams

    def __post_init__(self):
        if self.word_stack.input_dim != self.embedding.shape[1]:
            raise ValueError("word stack input dim must match embedding dim")
        if self.sent_layer.input_dim != self.word_stack.hidden_dim:
            raise ValueError("sentence layer input must match word stack hidden dim")

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    def zeros_like(self) -> "EncoderParams":
        return EncoderParams(embedding=np.zeros_like(self.embedding),
                             word_stack=self.word_stack.zeros_like(),
                             sent_layer=self.sent_layer.zeros_like())


@dataclass
class SentenceCache:
    token_ids: list
    word_caches: list  # unroll caches, [layer][step]
    top_states: list  # top-layer hidden state per step


@dataclass
class ContextCache:
    sentence_caches: list
    sent_caches: list  # sentence-level gru step caches
    sent_states: list  # sentence-level hidden states, one per context sentence


@dataclass
class EncodedContext:
    """s: final sentence-level state (the decoder's initial state).
    last_sentence_states: top-layer word states of the last context sentence."""

    s: np.ndarray
    last_sentence_states: list
    cache: ContextCache


def embed_tokens(params: EncoderParams, token_ids):
    for t in token_ids:
        if not 0 <= t < params.vocab_size:
            raise ValueError(f"token id {t} out of range for vocab {params.vocab_size}")
    return [params.embedding[t] for t in token_ids]


def encode_sentence_vec(params: EncoderParams, token_ids):
    """Encode one sentence; returns (sentence_vector, word_states, cache).

    The sentence vector is the top layer's final hidden state; word_states
    are the top layer's per-step states.
    """
    if len(token_ids) == 0:
        raise ValueError("cannot encode an empty sentence")
    embedded = embed_tokens(params, token_ids)
    states, caches = unroll(params.word_stack, embedded)
    top_states = states[-1]
    cache = SentenceCache(token_ids=list(token_ids), word_caches=caches,
                          top_states=top_states)
    return top_states[-1], top_states, cache


def encode_context(params: EncoderParams, context) -> EncodedContext:
    """Encode a window of sentences into the decoder's initial state.

    Each sentence becomes a vector via the word-level stack; the sentence
    level GRU consumes the vectors in order from a zero state.
    """
    if len(context) == 0:
        raise ValueError("cannot encode an empty context")
    sentence_caches = []
    sent_states, sent_caches = [], []
    h = np.zeros(params.sent_layer.hidden_dim)
    last_states = None
    for token_ids in context:
        vec, top_states, cache = encode_sentence_vec(params, token_ids)
        sentence_caches.append(cache)
        last_states = top_states
        h, step_cache = gru_step_forward(params.sent_layer, vec, h)
        sent_states.append(h)
        sent_caches.append(step_cache)
    return EncodedContext(
        s=h, last_sentence_states=last_states,
        cache=ContextCache(sentence_caches=sentence_caches,
                           sent_caches=sent_caches, sent_states=sent_states))


def encode_context_backward(params: EncoderParams, ctx: EncodedContext, grad_s,
                            grad_last_states, grads: EncoderParams):
    """Backward through encode_context.

    grad_s: gradient on the final sentence-level state; grad_last_states:
    per-step gradients on the last sentence's word states (None when the
    decoder variant does not attend). Accumulates into `grads`.
    """
    cache = ctx.cache
    n = len(cache.sent_caches)
    # sentence-level GRU: only the final state carries an external gradient
    grad_vecs = [None] * n
    carry = np.asarray(grad_s, dtype=np.float64)
    for i in range(n - 1, -1, -1):
        grad_vecs[i], carry = gru_step_backward(
            params.sent_layer, cache.sent_caches[i], carry, grads.sent_layer)

    for i, scache in enumerate(cache.sentence_caches):
        steps = len(scache.top_states)
        grad_top = [np.zeros(params.word_stack.hidden_dim) for _ in range(steps)]
        grad_top[-1] = grad_top[-1] + grad_vecs[i]
        if grad_last_states is not None and i == n - 1:
            for t, g in enumerate(grad_last_states):
                grad_top[t] = grad_top[t] + g
        grad_embedded = unroll_backward(params.word_stack, scache.word_caches,
                                        grad_top, grads.word_stack)
        for token_id, g in zip(scache.token_ids, grad_embedded):
            grads.embedding[token_id] += g
