"""Initialization, Adam, the training loop, and checkpoint serialization.

Training runs shuffled mini-batch epochs and stops when the best validation
loss has not been beaten for `patience` consecutive epochs (or at
max_epochs); the returned checkpoint holds the best-validation-loss
parameters. Everything is driven by one seed, so a run is bit-reproducible.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .decoder import teacher_forced_loss, teacher_forced_metrics
from .model import ModelParams, build_model, named_parameters

PAPER_DEFAULTS = dict(embed_dim=300, word_hidden=1000, word_layers=3,
                      sent_hidden=1500, dec_hidden=1500, num_window=5,
                      batch_size=256, init_range=0.5, patience=3)


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite (learning rate / overflow signal)."""


@dataclass
class AdamHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass
class TrainConfig:
    embed_dim: int = 300
    word_hidden: int = 1000
    word_layers: int = 3
    sent_hidden: int = 1500
    dec_hidden: int = 1500
    num_window: int = 5
    batch_size: int = 256
    init_range: float = 0.5
    adam: AdamHyper = field(default_factory=AdamHyper)
    patience: int = 3
    max_epochs: int = 50
    clip_norm: float = 5.0  # global-norm gradient clip; <= 0 disables
    seed: int = 0

    def __post_init__(self):
        for name in ("embed_dim", "word_hidden", "word_layers", "sent_hidden",
                     "dec_hidden", "num_window", "batch_size", "max_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.init_range < 0:
            raise ValueError("init_range must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


def desk_config(**overrides) -> TrainConfig:
    """Shrunken preset that keeps the architecture shape testable on a desk."""
    base = dict(embed_dim=16, word_hidden=24, word_layers=3, sent_hidden=32,
                dec_hidden=32, num_window=5, batch_size=8)
    base.update(overrides)
    return TrainConfig(**base)


def init_params(config: TrainConfig, vocab_size: int, variant: str,
                seed=None) -> ModelParams:
    """Draw every weight i.i.d. uniform over [-init_range, +init_range].

    b_out starts at zero. The draw order is fixed, so the same seed always
    produces bitwise-identical parameters.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    r = config.init_range

    def init(shape):
        return rng.uniform(-r, r, size=shape)

    return build_model(variant, vocab_size, config.embed_dim, config.word_hidden,
                       config.word_layers, config.sent_hidden, config.dec_hidden,
                       init=init)


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @staticmethod
    def zeros_for(params: dict) -> "AdamState":
        return AdamState(m={k: np.zeros_like(p) for k, p in params.items()},
                         v={k: np.zeros_like(p) for k, p in params.items()})


def adam_step(state: AdamState, params: dict, grads: dict, hyper: AdamHyper):
    """One bias-corrected Adam update, in place over named tensors."""
    state.t += 1
    b1, b2 = hyper.beta1, hyper.beta2
    scale_m = 1.0 / (1.0 - b1 ** state.t)
    scale_v = 1.0 / (1.0 - b2 ** state.t)
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= hyper.lr * (m * scale_m) / (np.sqrt(v * scale_v) + hyper.epsilon)


def clip_gradients(grads: dict, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = float(np.sqrt(total))
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm


@dataclass
class Checkpoint:
    config: TrainConfig
    variant: str
    vocab_size: int
    model: ModelParams
    adam: AdamState
    epoch: int
    train_losses: list
    val_losses: list


def mean_loss(model: ModelParams, examples) -> float:
    total = 0.0
    for example in examples:
        loss, _, _ = teacher_forced_metrics(model, example)
        total += loss
    return total / len(examples)


def forced_accuracy(model: ModelParams, examples) -> float:
    """Teacher-forced next-token accuracy over a set of examples."""
    correct = 0
    steps = 0
    for example in examples:
        _, c, n = teacher_forced_metrics(model, example)
        correct += c
        steps += n
    return correct / steps


def train(config: TrainConfig, variant: str, vocab_size: int, train_examples,
          val_examples=None, on_epoch=None) -> Checkpoint:
    """Train a fresh model; returns the best-validation-loss checkpoint.

    Batches are shuffled per epoch (final short batch kept); batch gradients
    are example means, clipped by global norm before the Adam update. When
    `val_examples` is empty the training set doubles as the validation set.
    `on_epoch(epoch, model, train_loss, val_loss)` may return True to stop
    early (used by learning-check harnesses).
    """
    if not train_examples:
        raise ValueError("training set is empty")
    if not val_examples:
        val_examples = train_examples

    model = init_params(config, vocab_size, variant)
    params = named_parameters(model)
    adam = AdamState.zeros_for(params)
    shuffle_rng = np.random.default_rng(config.seed)

    train_losses, val_losses = [], []
    best_val = np.inf
    best_epoch = 0
    best_model = None
    best_adam = None

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(len(train_examples))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [train_examples[i] for i in order[start:start + config.batch_size]]
            batch_grads = None
            for example in batch:
                loss, grads = teacher_forced_loss(model, example)
                if not np.isfinite(loss):
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch} (lr too high or overflow)")
                epoch_loss += loss
                named = named_parameters(grads)
                if batch_grads is None:
                    batch_grads = named
                else:
                    for name, g in named.items():
                        batch_grads[name] += g
            for g in batch_grads.values():
                g /= len(batch)
            clip_gradients(batch_grads, config.clip_norm)
            adam_step(adam, params, batch_grads, config.adam)

        train_loss = epoch_loss / len(train_examples)
        val_loss = mean_loss(model, val_examples)
        if not np.isfinite(val_loss):
            raise TrainingDiverged(f"non-finite validation loss at epoch {epoch}")
        train_losses.append(train_loss)
        val_losses.append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_model = _copy_model(model)
            best_adam = _copy_adam(adam)
        if on_epoch is not None and on_epoch(epoch, model, train_loss, val_loss):
            break
        if epoch - best_epoch >= config.patience:
            break

    return Checkpoint(config=config, variant=variant, vocab_size=vocab_size,
                      model=best_model, adam=best_adam, epoch=best_epoch,
                      train_losses=train_losses, val_losses=val_losses)


def _copy_model(model: ModelParams) -> ModelParams:
    copy = model.zeros_like()
    src, dst = named_parameters(model), named_parameters(copy)
    for name in src:
        dst[name][...] = src[name]
    return copy


def _copy_adam(adam: AdamState) -> AdamState:
    return AdamState(m={k: v.copy() for k, v in adam.m.items()},
                     v={k: v.copy() for k, v in adam.v.items()}, t=adam.t)


# ---------------------------------------------------------------------------
# Checkpoint file format (binary, little-endian; documented in README.md):
#   magic "LGCP1\n"
#   u32   header byte length, then that many UTF-8 bytes of "key = value"
#         lines (config fields, variant, vocab_size, epoch, adam.t)
#   u32   tensor count
#   per tensor:
#     u32  name byte length, name bytes (UTF-8)
#     u32  rank, then rank * u64 dims
#     dims-product * f64 values, row-major
# Model tensors use their parameter names; Adam moments are stored under
# "adam.m.<name>" / "adam.v.<name>"; loss histories as "history.train" /
# "history.val".
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"LGCP1\n"


def _write_tensor(fh, name: str, arr: np.ndarray):
    data = np.ascontiguousarray(arr, dtype="<f8")
    name_bytes = name.encode("utf-8")
    fh.write(struct.pack("<I", len(name_bytes)))
    fh.write(name_bytes)
    fh.write(struct.pack("<I", data.ndim))
    for dim in data.shape:
        fh.write(struct.pack("<Q", dim))
    fh.write(data.tobytes())


def _read_tensor(fh):
    (name_len,) = struct.unpack("<I", fh.read(4))
    name = fh.read(name_len).decode("utf-8")
    (rank,) = struct.unpack("<I", fh.read(4))
    dims = tuple(struct.unpack("<Q", fh.read(8))[0] for _ in range(rank))
    count = 1
    for dim in dims:
        count *= dim
    arr = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(dims)
    return name, arr.astype(np.float64)


def save_checkpoint(checkpoint: Checkpoint, path):
    cfg = checkpoint.config
    header_items = [
        ("variant", checkpoint.variant), ("vocab_size", checkpoint.vocab_size),
        ("epoch", checkpoint.epoch), ("adam_t", checkpoint.adam.t),
        ("embed_dim", cfg.embed_dim), ("word_hidden", cfg.word_hidden),
        ("word_layers", cfg.word_layers), ("sent_hidden", cfg.sent_hidden),
        ("dec_hidden", cfg.dec_hidden), ("num_window", cfg.num_window),
        ("batch_size", cfg.batch_size), ("init_range", repr(cfg.init_range)),
        ("lr", repr(cfg.adam.lr)), ("beta1", repr(cfg.adam.beta1)),
        ("beta2", repr(cfg.adam.beta2)), ("epsilon", repr(cfg.adam.epsilon)),
        ("patience", cfg.patience), ("max_epochs", cfg.max_epochs),
        ("clip_norm", repr(cfg.clip_norm)), ("seed", cfg.seed),
    ]
    header = "".join(f"{k} = {v}\n" for k, v in header_items).encode("utf-8")
    tensors = dict(named_parameters(checkpoint.model))
    for name, arr in checkpoint.adam.m.items():
        tensors[f"adam.m.{name}"] = arr
    for name, arr in checkpoint.adam.v.items():
        tensors[f"adam.v.{name}"] = arr
    tensors["history.train"] = np.asarray(checkpoint.train_losses, dtype=np.float64)
    tensors["history.val"] = np.asarray(checkpoint.val_losses, dtype=np.float64)

    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            _write_tensor(fh, name, arr)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = fh.read(header_len).decode("utf-8")
        fields = {}
        for line in header.splitlines():
            key, _, value = line.partition(" = ")
            fields[key] = value
        (count,) = struct.unpack("<I", fh.read(4))
        tensors = dict(_read_tensor(fh) for _ in range(count))

    config = TrainConfig(
        embed_dim=int(fields["embed_dim"]), word_hidden=int(fields["word_hidden"]),
        word_layers=int(fields["word_layers"]), sent_hidden=int(fields["sent_hidden"]),
        dec_hidden=int(fields["dec_hidden"]), num_window=int(fields["num_window"]),
        batch_size=int(fields["batch_size"]), init_range=float(fields["init_range"]),
        adam=AdamHyper(lr=float(fields["lr"]), beta1=float(fields["beta1"]),
                       beta2=float(fields["beta2"]), epsilon=float(fields["epsilon"])),
        patience=int(fields["patience"]), max_epochs=int(fields["max_epochs"]),
        clip_norm=float(fields["clip_norm"]), seed=int(fields["seed"]))
    variant = fields["variant"]
    vocab_size = int(fields["vocab_size"])

    model = build_model(variant, vocab_size, config.embed_dim, config.word_hidden,
                        config.word_layers, config.sent_hidden, config.dec_hidden)
    params = named_parameters(model)
    adam = AdamState.zeros_for(params)
    for name, arr in params.items():
        arr[...] = tensors[name]
        adam.m[name][...] = tensors[f"adam.m.{name}"]
        adam.v[name][...] = tensors[f"adam.v.{name}"]
    adam.t = int(fields["adam_t"])
    return Checkpoint(config=config, variant=variant, vocab_size=vocab_size,
                      model=model, adam=adam, epoch=int(fields["epoch"]),
                      train_losses=list(tensors["history.train"]),
                      val_losses=list(tensors["history.val"]))
