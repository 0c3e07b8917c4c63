"""Model variants and the full parameter container.

Three wirings share one code path:

  seq2seq        - the context window is flattened into a single token
                   sequence before encoding; the decoder sees the resulting
                   summary vector as a constant auxiliary input (no attention).
  hred           - hierarchical encoding; the final sentence-level state is
                   fed to the decoder as a constant auxiliary input.
  hred_attention - hierarchical encoding; each decoder step attends over the
                   last context sentence's word-level states.

Only the encoding/conditioning wiring differs, so BLEU comparisons between
variants are controlled.
"""

from dataclasses import dataclass

import numpy as np

from .attention import AttentionParams
from .corpus import EOS_ID, GO_ID
from .encoder import EncodedContext, EncoderParams, encode_context, encode_context_backward
from .gru import GruLayerParams, GruStack

VARIANTS = ("seq2seq", "hred", "hred_attention")


@dataclass
class DecoderParams:
    """GRU layer over [embedding, context vector] plus the output projection.

    w_out maps [decoder state, context vector] to vocabulary logits; b_out is
    the only bias in the model (without it, zero-initialized parameters would
    give every token an identical output gradient).
    """

    layer: GruLayerParams
    w_out: np.ndarray
    b_out: np.ndarray

    def zeros_like(self) -> "DecoderParams":
        return DecoderParams(layer=self.layer.zeros_like(),
                             w_out=np.zeros_like(self.w_out),
                             b_out=np.zeros_like(self.b_out))


@dataclass
class ModelParams:
    """Every trainable tensor, plus the variant wiring selector."""

    variant: str
    encoder: EncoderParams
    decoder: DecoderParams
    attention: AttentionParams | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "hred_attention" and self.attention is None:
            raise ValueError("hred_attention requires attention parameters")

    @property
    def vocab_size(self) -> int:
        return self.encoder.vocab_size

    @property
    def embed_dim(self) -> int:
        return self.encoder.embedding.shape[1]

    @property
    def dec_hidden(self) -> int:
        return self.decoder.layer.hidden_dim

    @property
    def ctx_dim(self) -> int:
        """Dimension of the per-step auxiliary context vector."""
        if self.variant == "hred_attention":
            return self.encoder.word_stack.hidden_dim
        return self.encoder.sent_layer.hidden_dim

    def zeros_like(self) -> "ModelParams":
        return ModelParams(
            variant=self.variant,
            encoder=self.encoder.zeros_like(),
            decoder=self.decoder.zeros_like(),
            attention=None if self.attention is None else self.attention.zeros_like())


def build_model(variant: str, vocab_size: int, embed_dim: int, word_hidden: int,
                word_layers: int, sent_hidden: int, dec_hidden: int,
                init=None) -> ModelParams:
    """Allocate a model of the given shape.

    `init` is a callable shape -> array (e.g. a seeded uniform draw); it
    defaults to zeros. Draw order is fixed, so a seeded init is reproducible.
    """
    if dec_hidden != sent_hidden:
        raise ValueError("dec_hidden must equal sent_hidden (decoder starts from s)")
    if init is None:
        init = np.zeros

    def gru_layer(input_dim, hidden_dim):
        return GruLayerParams(
            w_z=init((hidden_dim, input_dim)), u_z=init((hidden_dim, hidden_dim)),
            w_r=init((hidden_dim, input_dim)), u_r=init((hidden_dim, hidden_dim)),
            w_h=init((hidden_dim, input_dim)), u_h=init((hidden_dim, hidden_dim)))

    embedding = init((vocab_size, embed_dim))
    dims = [embed_dim] + [word_hidden] * word_layers
    word_stack = GruStack([gru_layer(dims[i], dims[i + 1]) for i in range(word_layers)])
    sent_layer = gru_layer(word_hidden, sent_hidden)
    encoder = EncoderParams(embedding=embedding, word_stack=word_stack,
                            sent_layer=sent_layer)

    attention = None
    ctx_dim = sent_hidden
    if variant == "hred_attention":
        ctx_dim = word_hidden
        # additive attention with attn_dim = dec_hidden
        attention = AttentionParams(w_a=init((dec_hidden, dec_hidden)),
                                    u_a=init((dec_hidden, word_hidden)),
                                    v_a=init((dec_hidden,)))

    decoder = DecoderParams(
        layer=gru_layer(embed_dim + ctx_dim, dec_hidden),
        w_out=init((vocab_size, dec_hidden + ctx_dim)),
        b_out=np.zeros(vocab_size))
    return ModelParams(variant=variant, encoder=encoder, decoder=decoder,
                       attention=attention)


def named_parameters(model: ModelParams):
    """Ordered name -> live array view of every trainable tensor.

    The arrays are the model's own storage, so in-place updates through this
    mapping update the model. Works on gradient trees too (same dataclasses).
    """
    params = {"embedding": model.encoder.embedding}
    for i, layer in enumerate(model.encoder.word_stack.layers):
        for name, arr in layer.matrices():
            params[f"word_enc.l{i}.{name}"] = arr
    for name, arr in model.encoder.sent_layer.matrices():
        params[f"sent_enc.{name}"] = arr
    if model.attention is not None:
        params["attn.w_a"] = model.attention.w_a
        params["attn.u_a"] = model.attention.u_a
        params["attn.v_a"] = model.attention.v_a
    for name, arr in model.decoder.layer.matrices():
        params[f"dec.{name}"] = arr
    params["out.w"] = model.decoder.w_out
    params["out.b"] = model.decoder.b_out
    return params


def flatten_context(context):
    """Concatenate a window of framed sentences into one token sequence.

    Used by the seq2seq variant: per-sentence go/eos markers are kept as
    boundary tokens inside the flat sequence.
    """
    flat = []
    for sentence in context:
        flat.extend(sentence)
    return flat


def encode(model: ModelParams, context) -> EncodedContext:
    """Variant-aware context encoding."""
    if model.variant == "seq2seq":
        context = [flatten_context(context)]
    return encode_context(model.encoder, context)


def encode_backward(model: ModelParams, ctx: EncodedContext, grad_s,
                    grad_last_states, grads: ModelParams):
    encode_context_backward(model.encoder, ctx, grad_s, grad_last_states,
                            grads.encoder)
