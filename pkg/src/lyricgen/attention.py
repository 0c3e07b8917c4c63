"""Additive attention over the last context sentence's word-level states.

Scores are e_j = v_a . tanh(W_a h_dec + U_a h_j), normalized by softmax; the
context vector is the weighted sum of the encoder states, so it always lies
in their componentwise convex hull.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import matmul, softmax, softmax_backward, tanh


@dataclass
class AttentionParams:
    """w_a: (attn, dec_hidden); u_a: (attn, word_hidden); v_a: (attn,)."""

    w_a: np.ndarray
    u_a: np.ndarray
    v_a: np.ndarray

    def __post_init__(self):
        attn = self.v_a.shape[0]
        if self.w_a.shape[0] != attn or self.u_a.shape[0] != attn:
            raise ValueError("attention projection rows must match v_a dim")

    def zeros_like(self) -> "AttentionParams":
        return AttentionParams(w_a=np.zeros_like(self.w_a),
                               u_a=np.zeros_like(self.u_a),
                               v_a=np.zeros_like(self.v_a))


@dataclass
class AttentionCache:
    h_dec: np.ndarray
    enc_states: list
    u: list  # tanh(w_a h_dec + u_a h_j) per state
    weights: np.ndarray


def attention_scores(params: AttentionParams, h_dec, enc_states):
    """Normalized attention weights over the encoder states.

    Returns (weights, cache); weights are nonnegative and sum to 1.
    """
    if len(enc_states) == 0:
        raise ValueError("cannot attend over an empty state sequence")
    query = matmul(params.w_a, h_dec)
    u = [tanh(query + matmul(params.u_a, h_j)) for h_j in enc_states]
    scores = np.array([params.v_a @ u_j for u_j in u])
    weights = softmax(scores)
    return weights, AttentionCache(h_dec=h_dec, enc_states=list(enc_states),
                                   u=u, weights=weights)


def attention_context(weights, enc_states):
    """Weighted sum of encoder states: the per-step context vector."""
    if len(weights) != len(enc_states):
        raise ValueError(f"{len(weights)} weights for {len(enc_states)} states")
    ctx = np.zeros_like(enc_states[0])
    for a_j, h_j in zip(weights, enc_states):
        ctx += a_j * h_j
    return ctx


def attend(params: AttentionParams, h_dec, enc_states):
    """Scores + context in one call. Returns (ctx, weights, cache)."""
    weights, cache = attention_scores(params, h_dec, enc_states)
    return attention_context(weights, cache.enc_states), weights, cache


def attention_backward(params: AttentionParams, cache: AttentionCache, grad_ctx,
                       grads: AttentionParams):
    """Backward through context + scores.

    grad_ctx is the gradient on the context vector. Accumulates parameter
    gradients into `grads`; returns (grad_h_dec, grad_enc_states).
    """
    weights, enc_states, u = cache.weights, cache.enc_states, cache.u

    # ctx = sum_j a_j h_j
    grad_weights = np.array([grad_ctx @ h_j for h_j in enc_states])
    grad_enc_states = [a_j * grad_ctx for a_j in weights]

    # weights = softmax(scores)
    grad_scores = softmax_backward(weights, grad_weights)

    # scores_j = v_a . u_j, u_j = tanh(w_a h_dec + u_a h_j)
    grad_query = np.zeros(params.v_a.shape[0])
    for j, (g_e, u_j, h_j) in enumerate(zip(grad_scores, u, enc_states)):
        grads.v_a += g_e * u_j
        grad_pre = g_e * params.v_a * (1.0 - u_j * u_j)
        grad_query += grad_pre
        grads.u_a += np.outer(grad_pre, h_j)
        grad_enc_states[j] += params.u_a.T @ grad_pre
    grads.w_a += np.outer(grad_query, cache.h_dec)
    grad_h_dec = params.w_a.T @ grad_query
    return grad_h_dec, grad_enc_states
