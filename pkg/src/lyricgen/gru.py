"""GRU cell, its backward pass, and multi-layer sequence unrolling.

The cell has no bias terms: the update gate z, reset gate r and candidate
state are pure products of the input and previous hidden state,

    z = sigmoid(W_z x + U_z h)
    r = sigmoid(W_r x + U_r h)
    h~ = tanh(W_h x + U_h (r * h))
    h' = (1 - z) * h + z * h~

which gives the useful closed forms h' = 0.5 * h for all-zero weights and
h' = 0 for zero input + zero state, both exercised by the tests.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import matmul, sigmoid, tanh


@dataclass
class GruLayerParams:
    """One GRU layer's six weight matrices.

    W_* are (hidden, input), U_* are (hidden, hidden). The same class doubles
    as the gradient accumulator for the layer (see `zeros_like`).
    """

    w_z: np.ndarray
    u_z: np.ndarray
    w_r: np.ndarray
    u_r: np.ndarray
    w_h: np.ndarray
    u_h: np.ndarray

    def __post_init__(self):
        h, i = self.w_z.shape
        for name in ("w_z", "w_r", "w_h"):
            if getattr(self, name).shape != (h, i):
                raise ValueError(f"{name} shape {getattr(self, name).shape} != {(h, i)}")
        for name in ("u_z", "u_r", "u_h"):
            if getattr(self, name).shape != (h, h):
                raise ValueError(f"{name} shape {getattr(self, name).shape} != {(h, h)}")

    @property
    def input_dim(self) -> int:
        return self.w_z.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_z.shape[0]

    def matrices(self):
        """(name, array) pairs in a fixed order."""
        return [("w_z", self.w_z), ("u_z", self.u_z), ("w_r", self.w_r),
                ("u_r", self.u_r), ("w_h", self.w_h), ("u_h", self.u_h)]

    @staticmethod
    def zeros(input_dim: int, hidden_dim: int) -> "GruLayerParams":
        return GruLayerParams(
            w_z=np.zeros((hidden_dim, input_dim)), u_z=np.zeros((hidden_dim, hidden_dim)),
            w_r=np.zeros((hidden_dim, input_dim)), u_r=np.zeros((hidden_dim, hidden_dim)),
            w_h=np.zeros((hidden_dim, input_dim)), u_h=np.zeros((hidden_dim, hidden_dim)),
        )

    def zeros_like(self) -> "GruLayerParams":
        return GruLayerParams.zeros(self.input_dim, self.hidden_dim)


@dataclass
class GruStack:
    """Stacked GRU layers; layer i consumes layer i-1's hidden sequence."""

    layers: list

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a GRU stack needs at least one layer")
        for below, above in zip(self.layers, self.layers[1:]):
            if above.input_dim != below.hidden_dim:
                raise ValueError(
                    f"layer input dim {above.input_dim} != lower hidden dim {below.hidden_dim}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def hidden_dim(self) -> int:
        return self.layers[-1].hidden_dim

    def zeros_like(self) -> "GruStack":
        return GruStack([layer.zeros_like() for layer in self.layers])


@dataclass
class GruStepCache:
    """Forward intermediates one backward step needs."""

    x: np.ndarray
    h_prev: np.ndarray
    z: np.ndarray
    r: np.ndarray
    h_tilde: np.ndarray


def gru_step(params: GruLayerParams, x, h_prev):
    """One recurrence step; returns the new hidden state only."""
    h, _ = gru_step_forward(params, x, h_prev)
    return h


def gru_step_forward(params: GruLayerParams, x, h_prev):
    """One recurrence step; returns (h_new, cache for the backward pass)."""
    if x.shape != (params.input_dim,):
        raise ValueError(f"input shape {x.shape}, expected ({params.input_dim},)")
    if h_prev.shape != (params.hidden_dim,):
        raise ValueError(f"state shape {h_prev.shape}, expected ({params.hidden_dim},)")
    z = sigmoid(matmul(params.w_z, x) + matmul(params.u_z, h_prev))
    r = sigmoid(matmul(params.w_r, x) + matmul(params.u_r, h_prev))
    h_tilde = tanh(matmul(params.w_h, x) + matmul(params.u_h, r * h_prev))
    h_new = (1.0 - z) * h_prev + z * h_tilde
    return h_new, GruStepCache(x=x, h_prev=h_prev, z=z, r=r, h_tilde=h_tilde)


def gru_step_backward(params: GruLayerParams, cache: GruStepCache, grad_h, grads: GruLayerParams):
    """Backward of one step. Accumulates weight gradients into `grads`.

    Returns (grad_x, grad_h_prev) for the chained upstream passes.
    """
    x, h_prev, z, r, h_tilde = cache.x, cache.h_prev, cache.z, cache.r, cache.h_tilde

    # h_new = (1 - z) * h_prev + z * h_tilde
    grad_h_prev = grad_h * (1.0 - z)
    grad_z = grad_h * (h_tilde - h_prev)
    grad_h_tilde = grad_h * z

    # h_tilde = tanh(w_h x + u_h (r * h_prev))
    grad_a_h = grad_h_tilde * (1.0 - h_tilde * h_tilde)
    grads.w_h += np.outer(grad_a_h, x)
    grad_x = params.w_h.T @ grad_a_h
    rh = r * h_prev
    grads.u_h += np.outer(grad_a_h, rh)
    grad_rh = params.u_h.T @ grad_a_h
    grad_r = grad_rh * h_prev
    grad_h_prev += grad_rh * r

    # r = sigmoid(w_r x + u_r h_prev)
    grad_a_r = grad_r * r * (1.0 - r)
    grads.w_r += np.outer(grad_a_r, x)
    grad_x += params.w_r.T @ grad_a_r
    grads.u_r += np.outer(grad_a_r, h_prev)
    grad_h_prev += params.u_r.T @ grad_a_r

    # z = sigmoid(w_z x + u_z h_prev)
    grad_a_z = grad_z * z * (1.0 - z)
    grads.w_z += np.outer(grad_a_z, x)
    grad_x += params.w_z.T @ grad_a_z
    grads.u_z += np.outer(grad_a_z, h_prev)
    grad_h_prev += params.u_z.T @ grad_a_z

    return grad_x, grad_h_prev


def unroll(stack: GruStack, inputs, h0=None):
    """Run the stack over an input sequence from (per-layer) initial states.

    inputs: sequence of 1-D arrays of stack.input_dim.
    h0: optional list of per-layer initial states; defaults to zeros.

    Returns (states, caches): states[l][t] is layer l's hidden state after
    step t, caches[l][t] the matching backward cache.
    """
    if len(inputs) == 0:
        raise ValueError("cannot unroll over an empty input sequence")
    if h0 is None:
        h0 = [np.zeros(layer.hidden_dim) for layer in stack.layers]
    states, caches = [], []
    layer_inputs = inputs
    for layer, h in zip(stack.layers, h0):
        layer_states, layer_caches = [], []
        for x in layer_inputs:
            h, cache = gru_step_forward(layer, x, h)
            layer_states.append(h)
            layer_caches.append(cache)
        states.append(layer_states)
        caches.append(layer_caches)
        layer_inputs = layer_states
    return states, caches


def unroll_backward(stack: GruStack, caches, grad_top_states, grads: GruStack):
    """Backpropagate through an `unroll` call.

    grad_top_states: per-step gradients on the top layer's hidden states
    (zeros where a step receives no external gradient). Weight gradients
    accumulate into `grads`; returns the per-step gradients on the inputs.
    """
    steps = len(caches[0])
    grad_states = [np.asarray(g, dtype=np.float64) for g in grad_top_states]
    if len(grad_states) != steps:
        raise ValueError(f"{len(grad_states)} state grads for {steps} steps")
    for layer_idx in range(len(stack.layers) - 1, -1, -1):
        layer = stack.layers[layer_idx]
        layer_grads = grads.layers[layer_idx]
        layer_caches = caches[layer_idx]
        grad_inputs = [None] * steps
        carry = np.zeros(layer.hidden_dim)
        for t in range(steps - 1, -1, -1):
            grad_x, carry = gru_step_backward(
                layer, layer_caches[t], grad_states[t] + carry, layer_grads)
            grad_inputs[t] = grad_x
        grad_states = grad_inputs  # becomes the state grads of the layer below
    return grad_states
