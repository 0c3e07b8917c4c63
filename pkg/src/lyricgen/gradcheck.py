"""Full-model gradient checking against central finite differences.

Perturbs every scalar of every named tensor in place (two loss evaluations
per coordinate) and compares with the analytic gradients of the teacher
forced loss. This is the slow, independent oracle for the whole backward
pass; it runs in seconds on the desk-scale configuration.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import EOS_ID, GO_ID, TrainingExample
from .decoder import teacher_forced_loss, teacher_forced_metrics
from .model import VARIANTS, named_parameters
from .training import TrainConfig, desk_config, init_params


@dataclass
class TensorCheck:
    name: str
    max_rel_error: float
    worst_analytic: float
    worst_numeric: float


@dataclass
class GradCheckReport:
    variant: str
    checks: list
    epsilon: float
    tolerance: float

    @property
    def max_rel_error(self) -> float:
        return max(c.max_rel_error for c in self.checks)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def lines(self):
        rows = [f"{c.name:24s} max_rel_err={c.max_rel_error:.3e}" for c in self.checks]
        status = "PASS" if self.passed else "FAIL"
        rows.append(f"{self.variant}: max relative error {self.max_rel_error:.3e} "
                    f"(tolerance {self.tolerance:g}) {status}")
        return rows


def check_model_gradients(model, example: TrainingExample, epsilon: float = 1e-5,
                          tolerance: float = 1e-4) -> GradCheckReport:
    """Compare analytic and finite-difference gradients for every tensor.

    Relative error is |a - n| / max(|a|, |n|, 1e-6); the small-denominator
    floor keeps roundoff on (near-)zero-gradient coordinates from reading as
    a large ratio.
    """
    _, grads = teacher_forced_loss(model, example)
    params = named_parameters(model)
    analytic = named_parameters(grads)

    def loss_now():
        loss, _, _ = teacher_forced_metrics(model, example)
        return loss

    checks = []
    for name, tensor in params.items():
        a = analytic[name]
        flat = tensor.reshape(-1)
        worst = (0.0, 0.0, 0.0)
        for i in range(flat.shape[0]):
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus = loss_now()
            flat[i] = orig - epsilon
            f_minus = loss_now()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            a_i = a.reshape(-1)[i]
            err = abs(a_i - numeric) / max(abs(a_i), abs(numeric), 1e-6)
            if err > worst[0]:
                worst = (err, a_i, numeric)
        checks.append(TensorCheck(name=name, max_rel_error=worst[0],
                                  worst_analytic=worst[1], worst_numeric=worst[2]))
    return GradCheckReport(variant=model.variant, checks=checks,
                           epsilon=epsilon, tolerance=tolerance)


def desk_example(vocab_size: int, rng) -> TrainingExample:
    """A small random context window + target over a toy vocabulary."""
    def sentence(n_tokens):
        body = rng.integers(3, vocab_size, size=n_tokens).tolist()
        return [GO_ID] + body + [EOS_ID]

    context = [sentence(int(rng.integers(2, 5))) for _ in range(int(rng.integers(1, 4)))]
    return TrainingExample(context=context, target=sentence(int(rng.integers(2, 5))))


def run_gradcheck(variant: str = "hred_attention", vocab_size: int = 12,
                  seed: int = 0, epsilon: float = 1e-5,
                  tolerance: float = 1e-4, config: TrainConfig = None) -> GradCheckReport:
    """Desk-scale gradient check for one variant with a seeded random model."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if config is None:
        config = desk_config(init_range=0.2, seed=seed)
    rng = np.random.default_rng(seed + 1)
    model = init_params(config, vocab_size, variant, seed=seed)
    example = desk_example(vocab_size, rng)
    return check_model_gradients(model, example, epsilon=epsilon, tolerance=tolerance)
