"""Dense float64 math primitives with exact backward rules.

Everything upstream (GRU cells, attention, the output softmax) is assembled
from the handful of operations in this module. Forward functions are pure;
each differentiable op has a matching ``*_backward`` that implements its
exact chain rule. The finite-difference helper at the bottom is the oracle
the backward rules are tested against.
"""

import numpy as np

# 2-D row-major float64 array; weight matrices live in this layout.
Matrix = np.ndarray
# 1-D float64 array; hidden states, embeddings, logits.
Vector = np.ndarray


def matmul(a: Matrix, x: Vector) -> Vector:
    """Matrix-vector product a @ x with explicit shape checking."""
    if a.ndim != 2:
        raise ValueError(f"matmul expects a 2-D matrix, got ndim={a.ndim}")
    if x.ndim != 1:
        raise ValueError(f"matmul expects a 1-D vector, got ndim={x.ndim}")
    if a.shape[1] != x.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} @ {x.shape}")
    return a @ x


def matmul_backward(a: Matrix, x: Vector, grad_out: Vector):
    """Backward of y = a @ x. Returns (grad_a, grad_x)."""
    return np.outer(grad_out, x), a.T @ grad_out


def sigmoid(x: Vector) -> Vector:
    """Logistic sigmoid, stable for large |x| (never overflows)."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(y: Vector, grad_out: Vector) -> Vector:
    """Backward of y = sigmoid(x), expressed through the saved output y."""
    return grad_out * y * (1.0 - y)


def tanh(x: Vector) -> Vector:
    return np.tanh(x)


def tanh_backward(y: Vector, grad_out: Vector) -> Vector:
    """Backward of y = tanh(x), expressed through the saved output y."""
    return grad_out * (1.0 - y * y)


def softmax(logits: Vector) -> Vector:
    """Stable softmax: shift by the max before exponentiating."""
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def softmax_backward(y: Vector, grad_out: Vector) -> Vector:
    """Backward of y = softmax(x): y * (g - y . g)."""
    return y * (grad_out - y @ grad_out)


def log_softmax(logits: Vector) -> Vector:
    """log(softmax(logits)) without forming intermediate probabilities."""
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


def cross_entropy(logits: Vector, target: int):
    """Softmax cross-entropy against a single target id.

    Returns (loss, grad_logits) where loss = -log softmax(logits)[target]
    and grad_logits = softmax(logits) - onehot(target).
    """
    if not 0 <= target < logits.shape[0]:
        raise ValueError(f"target {target} out of range for {logits.shape[0]} logits")
    logp = log_softmax(logits)
    grad = np.exp(logp)
    grad[target] -= 1.0
    return -logp[target], grad


def finite_difference_gradient(f, params: Vector, epsilon: float = 1e-5) -> Vector:
    """Central-difference gradient of a scalar function f at `params`.

    Perturbs one coordinate at a time: (f(p + eps*e_i) - f(p - eps*e_i)) / 2eps.
    Used as the independent oracle for every analytic backward rule.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    p = np.asarray(params, dtype=np.float64).copy()
    grad = np.zeros_like(p)
    for i in range(p.shape[0]):
        orig = p[i]
        p[i] = orig + epsilon
        f_plus = f(p)
        p[i] = orig - epsilon
        f_minus = f(p)
        p[i] = orig
        grad[i] = (f_plus - f_minus) / (2.0 * epsilon)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Max elementwise |a - n| / max(|a|, |n|, floor) over two gradient arrays.

    The floor keeps finite-difference roundoff on (near-)zero gradients from
    registering as a large relative error.
    """
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    if a.shape != n.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {n.shape}")
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
