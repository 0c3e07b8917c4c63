"""Attention-conditioned GRU decoder: single steps and the teacher-forced loss.

Each step builds a context vector s_t (attention over the last sentence's
word states, or the constant encoder summary for the no-attention variants),
feeds [embedding(w_prev), s_t] through the decoder GRU, and projects
[h_t, s_t] to vocabulary logits. The decoder's initial state is the
encoder's final sentence-level state, with no transformation.
"""

from dataclasses import dataclass

import numpy as np

from .attention import attend, attention_backward
from .corpus import TrainingExample
from .encoder import EncodedContext
from .gru import gru_step_backward, gru_step_forward
from .model import ModelParams, encode, encode_backward
from .numerics import cross_entropy, log_softmax


@dataclass
class DecoderStepCache:
    w_prev: int
    s_t: np.ndarray
    gru_cache: object
    attn_cache: object  # None for the constant-context variants
    out_in: np.ndarray  # [h_t, s_t]


def _context_vector(model: ModelParams, h_prev, ctx: EncodedContext):
    """Per-step context vector and (for attention) its weights + cache."""
    if model.variant == "hred_attention":
        s_t, weights, cache = attend(model.attention, h_prev, ctx.last_sentence_states)
        return s_t, weights, cache
    return ctx.s, None, None


def decoder_step(model: ModelParams, h_prev, w_prev: int, ctx: EncodedContext):
    """One decoding step.

    Returns (h_t, logits, attention weights or None, cache). `w_prev` is the
    previously emitted (or gold previous) token id.
    """
    if not 0 <= w_prev < model.vocab_size:
        raise ValueError(f"token id {w_prev} out of range for vocab {model.vocab_size}")
    if h_prev.shape != (model.dec_hidden,):
        raise ValueError(f"decoder state shape {h_prev.shape}, expected ({model.dec_hidden},)")
    s_t, weights, attn_cache = _context_vector(model, h_prev, ctx)
    x = np.concatenate([model.encoder.embedding[w_prev], s_t])
    h_t, gru_cache = gru_step_forward(model.decoder.layer, x, h_prev)
    out_in = np.concatenate([h_t, s_t])
    logits = model.decoder.w_out @ out_in + model.decoder.b_out
    cache = DecoderStepCache(w_prev=w_prev, s_t=s_t, gru_cache=gru_cache,
                             attn_cache=attn_cache, out_in=out_in)
    return h_t, logits, weights, cache


def step_log_probs(model: ModelParams, h_prev, w_prev: int, ctx: EncodedContext):
    """(h_t, log softmax of the next-token logits) for inference."""
    h_t, logits, _, _ = decoder_step(model, h_prev, w_prev, ctx)
    return h_t, log_softmax(logits)


def teacher_forced_loss(model: ModelParams, example: TrainingExample):
    """Mean cross-entropy of the gold target under teacher forcing, plus the
    gradients of every trainable tensor.

    The target is framed (go, w_1..w_k, eos): step t consumes gold token t-1
    and predicts token t, eos included. Returns (loss, grads) with `grads` a
    ModelParams-shaped tree of arrays.
    """
    loss, grads, _ = _teacher_forced(model, example, want_grads=True)
    return loss, grads


def teacher_forced_metrics(model: ModelParams, example: TrainingExample):
    """Forward-only (loss, n_correct, n_steps) under teacher forcing."""
    loss, _, correct = _teacher_forced(model, example, want_grads=False)
    return loss, correct, len(example.target) - 1


def _teacher_forced(model: ModelParams, example: TrainingExample, want_grads: bool):
    target = example.target
    if len(target) < 2:
        raise ValueError("target must contain at least (go, eos)")
    ctx = encode(model, example.context)
    n_steps = len(target) - 1

    h = ctx.s
    caches, step_grads = [], []
    total_loss = 0.0
    n_correct = 0
    for t in range(n_steps):
        h, logits, _, cache = decoder_step(model, h, target[t], ctx)
        step_loss, grad_logits = cross_entropy(logits, target[t + 1])
        total_loss += step_loss
        if int(np.argmax(logits)) == target[t + 1]:
            n_correct += 1
        if want_grads:
            caches.append(cache)
            step_grads.append(grad_logits / n_steps)
    loss = total_loss / n_steps
    if not want_grads:
        return loss, None, n_correct

    grads = model.zeros_like()
    attention_variant = model.variant == "hred_attention"
    dec_hidden = model.dec_hidden
    embed_dim = model.embed_dim
    grad_h = np.zeros(dec_hidden)  # carried from the later step
    grad_s = np.zeros_like(ctx.s)  # constant-context accumulation
    grad_last_states = None
    if attention_variant:
        grad_last_states = [np.zeros_like(v) for v in ctx.last_sentence_states]

    for t in range(n_steps - 1, -1, -1):
        cache = caches[t]
        grad_logits = step_grads[t]

        # logits = w_out @ [h_t, s_t] + b_out
        grads.decoder.w_out += np.outer(grad_logits, cache.out_in)
        grads.decoder.b_out += grad_logits
        grad_out_in = model.decoder.w_out.T @ grad_logits
        grad_h = grad_h + grad_out_in[:dec_hidden]
        grad_s_t = grad_out_in[dec_hidden:].copy()

        # h_t = gru(x_t, h_{t-1}), x_t = [embed(w_prev), s_t]
        grad_x, grad_h_prev = gru_step_backward(
            model.decoder.layer, cache.gru_cache, grad_h, grads.decoder.layer)
        grads.encoder.embedding[cache.w_prev] += grad_x[:embed_dim]
        grad_s_t += grad_x[embed_dim:]

        if attention_variant:
            grad_h_attn, grad_enc = attention_backward(
                model.attention, cache.attn_cache, grad_s_t, grads.attention)
            grad_h_prev = grad_h_prev + grad_h_attn
            for j, g in enumerate(grad_enc):
                grad_last_states[j] += g
        else:
            grad_s += grad_s_t
        grad_h = grad_h_prev

    grad_s = grad_s + grad_h  # h_0 = ctx.s exactly
    encode_backward(model, ctx, grad_s, grad_last_states, grads)
    return loss, grads, n_correct
