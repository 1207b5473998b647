"""Three-stream classifier over multi-scale DCT histogram features.

Each histogram tensor (shape 2*alpha x delta^2, treated as a single-channel
image) feeds its own convolutional stream of three base blocks; the stream
outputs are flattened, concatenated, and joined by the 64-entry auxiliary
quantization vector at three points of the dense stage. The final layer
emits two logits for single vs double compression.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import engine
from .features import ALPHA, DELTAS, FeatureRecord

AUX_LEN = 64


@dataclass
class StreamConfig:
    """Architecture knobs: per-block output channels/strides and dense widths."""

    channels: tuple[int, int, int] = (32, 64, 128)
    strides: tuple[int, int, int] = (1, 1, 1)
    dense: tuple[int, int] = (512, 256)
    bn_momentum: float = 0.99
    bn_eps: float = 1e-3
    alpha: int = ALPHA

    def __post_init__(self):
        self.channels = tuple(self.channels)
        self.strides = tuple(self.strides)
        self.dense = tuple(self.dense)
        if len(self.channels) != 3 or len(self.strides) != 3:
            raise ValueError("exactly three base blocks per stream")
        if any(c <= 0 for c in self.channels):
            raise ValueError("channel counts must be positive")


@dataclass
class TrainConfig:
    """Optimization settings: Adam with lr 1e-4, beta 0.9/0.999, eps 1e-8."""

    batch_size: int = 32
    epochs: int = 60
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4  # L2 coefficient on conv weights
    seed: int = 0
    dtype: str = "float32"  # float64 reserved for gradient verification

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch size must be >= 2 (batch normalization)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def _stream_shape(cfg: StreamConfig, delta: int) -> tuple[int, int]:
    """Spatial extent of one stream's output after its three blocks."""
    h, w = 2 * cfg.alpha, delta * delta
    for s in cfg.strides:
        h = (h - 1) // s + 1  # 'same' conv at stride s
        w = (w - 1) // s + 1
        h, w = h // 2, w // 2  # 2x2 pool, odd trailing row/col dropped
    return h, w


def flat_width(cfg: StreamConfig) -> int:
    """Length of the concatenated flattened stream outputs."""
    return sum(
        _stream_shape(cfg, d)[0] * _stream_shape(cfg, d)[1] * cfg.channels[2]
        for d in DELTAS
    )


class DHNet:
    """The assembled network: parameter dict plus forward/backward passes."""

    def __init__(
        self,
        cfg: StreamConfig | None = None,
        seed: int = 0,
        params=None,
        dtype=np.float64,
    ):
        self.cfg = cfg if cfg is not None else StreamConfig()
        self.dtype = np.dtype(dtype)
        if params is not None:
            self.params = params
            self.dtype = next(iter(params.values())).dtype
        else:
            self.params = self._init_params(np.random.Generator(np.random.PCG64(seed)))

    # -- construction -------------------------------------------------------

    def _init_params(self, rng) -> dict[str, np.ndarray]:
        cfg = self.cfg
        params: dict[str, np.ndarray] = {}

        dtype = self.dtype

        def uniform(shape, fan_in):
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape).astype(dtype)

        for delta in DELTAS:
            c_in = 1
            for bi, c_out in enumerate(cfg.channels):
                p = f"s{delta}.b{bi}"
                params[f"{p}.conv3.w"] = uniform((c_out, c_in, 3, 3), c_in * 9)
                params[f"{p}.conv3.b"] = np.zeros(c_out, dtype)
                params[f"{p}.conv1.w"] = uniform((c_out, c_out, 1, 1), c_out)
                params[f"{p}.conv1.b"] = np.zeros(c_out, dtype)
                for bn in ("bn3", "bn1"):
                    params[f"{p}.{bn}.gamma"] = np.ones(c_out, dtype)
                    params[f"{p}.{bn}.beta"] = np.zeros(c_out, dtype)
                    params[f"{p}.{bn}.rmean"] = np.zeros(c_out, dtype)
                    params[f"{p}.{bn}.rvar"] = np.ones(c_out, dtype)
                c_in = c_out

        w1, w2 = cfg.dense
        d_in = flat_width(cfg) + AUX_LEN
        params["fc1.w"] = uniform((d_in, w1), d_in)
        params["fc1.b"] = np.zeros(w1, dtype)
        params["fc2.w"] = uniform((w1 + AUX_LEN, w2), w1 + AUX_LEN)
        params["fc2.b"] = np.zeros(w2, dtype)
        params["out.w"] = uniform((w2 + AUX_LEN, 2), w2 + AUX_LEN)
        params["out.b"] = np.zeros(2, dtype)
        return params

    def trainable_names(self) -> list[str]:
        return [n for n in self.params if not n.endswith((".rmean", ".rvar"))]

    def conv_weight_names(self) -> list[str]:
        return [n for n in self.params if n.endswith((".conv3.w", ".conv1.w"))]

    # -- forward / backward -------------------------------------------------

    def _stream_forward(self, x, delta, mode, new_running):
        p_all, cfg = self.params, self.cfg
        caches = []
        for bi, stride in enumerate(cfg.strides):
            p = f"s{delta}.b{bi}"
            for conv, bn, st in ((f"conv3", "bn3", stride), ("conv1", "bn1", 1)):
                x, c_cache = engine.conv2d_forward(
                    x, p_all[f"{p}.{conv}.w"], p_all[f"{p}.{conv}.b"], stride=st
                )
                x, b_cache, rmean, rvar = engine.batchnorm_forward(
                    x,
                    p_all[f"{p}.{bn}.gamma"],
                    p_all[f"{p}.{bn}.beta"],
                    p_all[f"{p}.{bn}.rmean"],
                    p_all[f"{p}.{bn}.rvar"],
                    mode,
                    momentum=cfg.bn_momentum,
                    eps=cfg.bn_eps,
                )
                new_running[f"{p}.{bn}.rmean"] = rmean
                new_running[f"{p}.{bn}.rvar"] = rvar
                x, r_mask = engine.relu_forward(x)
                caches.append((f"{p}.{conv}", c_cache, f"{p}.{bn}", b_cache, r_mask))
            x, pool_cache = engine.maxpool_2x2_forward(x)
            caches.append(("pool", pool_cache))
        return x, caches

    def _stream_backward(self, dy, caches, grads):
        for entry in reversed(caches):
            if entry[0] == "pool":
                dy = engine.maxpool_2x2_backward(dy, entry[1])
            else:
                conv_name, c_cache, bn_name, b_cache, r_mask = entry
                dy = engine.relu_backward(dy, r_mask)
                dy, dgamma, dbeta = engine.batchnorm_backward(dy, b_cache)
                grads[f"{bn_name}.gamma"] = dgamma
                grads[f"{bn_name}.beta"] = dbeta
                dy, dw, db = engine.conv2d_backward(dy, c_cache)
                grads[f"{conv_name}.w"] = dw
                grads[f"{conv_name}.b"] = db
        return dy

    def forward(self, batch: dict, mode: str = "eval"):
        """Run the network; returns (logits, caches, new_running_stats).

        batch holds 'h4'/'h8'/'h16' as (N, 1, 2*alpha, delta^2) arrays and
        'aux' as (N, 64). Running batch-norm statistics are returned, not
        applied; the training loop decides when to commit them.
        """
        aux = np.asarray(batch["aux"], dtype=self.dtype)
        if aux.ndim != 2 or aux.shape[1] != AUX_LEN:
            raise ValueError(f"aux must be (N, {AUX_LEN}), got {aux.shape}")
        new_running: dict[str, np.ndarray] = {}
        flats, stream_caches, flat_shapes = [], [], []
        for delta in DELTAS:
            x = np.asarray(batch[f"h{delta}"], dtype=self.dtype)
            expected = (x.shape[0], 1, 2 * self.cfg.alpha, delta * delta)
            if x.shape != expected:
                raise ValueError(
                    f"h{delta} must have shape {expected}, got {x.shape}"
                )
            y, caches = self._stream_forward(x, delta, mode, new_running)
            stream_caches.append(caches)
            flat_shapes.append(y.shape)
            flats.append(y.reshape(y.shape[0], -1))

        p = self.params
        x0, cat0 = engine.concat_forward(flats + [aux])
        z1, d1 = engine.dense_forward(x0, p["fc1.w"], p["fc1.b"])
        a1, m1 = engine.relu_forward(z1)
        x1, cat1 = engine.concat_forward([a1, aux])
        z2, d2 = engine.dense_forward(x1, p["fc2.w"], p["fc2.b"])
        a2, m2 = engine.relu_forward(z2)
        x2, cat2 = engine.concat_forward([a2, aux])
        logits, d3 = engine.dense_forward(x2, p["out.w"], p["out.b"])
        caches = (stream_caches, flat_shapes, cat0, d1, m1, cat1, d2, m2, cat2, d3)
        return logits, caches, new_running

    def backward(self, dlogits, caches) -> dict[str, np.ndarray]:
        stream_caches, flat_shapes, cat0, d1, m1, cat1, d2, m2, cat2, d3 = caches
        grads: dict[str, np.ndarray] = {}
        dy, grads["out.w"], grads["out.b"] = engine.dense_backward(dlogits, d3)
        da2, _ = engine.concat_backward(dy, cat2)
        dz2 = engine.relu_backward(da2, m2)
        dy, grads["fc2.w"], grads["fc2.b"] = engine.dense_backward(dz2, d2)
        da1, _ = engine.concat_backward(dy, cat1)
        dz1 = engine.relu_backward(da1, m1)
        dy, grads["fc1.w"], grads["fc1.b"] = engine.dense_backward(dz1, d1)
        dflats = engine.concat_backward(dy, cat0)[:-1]
        for dflat, shape, caches_s in zip(dflats, flat_shapes, stream_caches):
            self._stream_backward(dflat.reshape(shape), caches_s, grads)
        return grads

    def loss_and_grads(
        self, batch: dict, labels: np.ndarray, weight_decay: float, mode: str = "train"
    ):
        """Total loss (cross-entropy + conv-weight L2) and its gradients."""
        logits, caches, new_running = self.forward(batch, mode)
        loss_c, xent_cache = engine.softmax_xent_forward(logits, labels)
        conv_names = self.conv_weight_names()
        loss_r = engine.l2_reg([self.params[n] for n in conv_names], weight_decay)
        grads = self.backward(engine.softmax_xent_backward(xent_cache), caches)
        for n in conv_names:
            grads[n] = grads[n] + 2.0 * weight_decay * self.params[n]
        return loss_c + loss_r, grads, new_running

    def predict_scores(self, batch: dict) -> np.ndarray:
        """Softmax probability of the double-compressed class, per sample."""
        logits, _, _ = self.forward(batch, mode="eval")
        return engine.softmax(logits)[:, 1]


def predict_labels(scores: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Decision rule: label 1 when score >= threshold (ties go to double)."""
    return (np.asarray(scores) >= threshold).astype(np.int64)


# -- batches and training ----------------------------------------------------


def records_to_batch(records: list[FeatureRecord], dtype=np.float64):
    """Stack feature records into the model's batch dict plus label vector."""
    if not records:
        raise ValueError("empty record list")
    batch = {}
    for i, k in enumerate(("h4", "h8", "h16")):
        batch[k] = np.stack([r.hists[i] for r in records]).astype(dtype)[:, None, :, :]
    batch["aux"] = np.stack([r.aux for r in records]).astype(dtype)
    labels = np.array([r.label for r in records], dtype=np.int64)
    return batch, labels


def _slice_batch(batch, idx):
    return {k: v[idx] for k, v in batch.items()}


def evaluate_accuracy(model: DHNet, records: list[FeatureRecord], batch_size=256):
    """Fraction of records classified correctly in eval mode."""
    batch, labels = records_to_batch(records, dtype=model.dtype)
    correct = 0
    for i in range(0, len(records), batch_size):
        idx = slice(i, i + batch_size)
        scores = model.predict_scores(_slice_batch(batch, idx))
        correct += int((predict_labels(scores) == labels[idx]).sum())
    return correct / len(records)


def train(
    train_records: list[FeatureRecord],
    val_records: list[FeatureRecord],
    train_cfg: TrainConfig | None = None,
    stream_cfg: StreamConfig | None = None,
    log=None,
):
    """Shuffled mini-batch Adam; returns the epoch checkpoint with the best
    validation accuracy, plus the per-epoch history.

    Refuses single-class training sets: with one class present the loss has
    a degenerate optimum and the validation selection is meaningless.
    """
    train_cfg = train_cfg or TrainConfig()
    stream_cfg = stream_cfg or StreamConfig()
    labels_present = {r.label for r in train_records}
    if labels_present != {0, 1}:
        raise ValueError(
            f"training set must contain both classes, found labels {sorted(labels_present)}"
        )
    if not val_records:
        raise ValueError("empty validation set")

    rng = np.random.Generator(np.random.PCG64(train_cfg.seed))
    dtype = np.dtype(train_cfg.dtype)
    model = DHNet(stream_cfg, seed=train_cfg.seed, dtype=dtype)
    state = engine.AdamState(
        lr=train_cfg.lr,
        beta1=train_cfg.beta1,
        beta2=train_cfg.beta2,
        eps=train_cfg.eps,
    )
    trainable = set(model.trainable_names())
    best_acc, best_params, history = -1.0, None, []

    n = len(train_records)
    full_batch, full_labels = records_to_batch(train_records, dtype=dtype)
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(n)
        epoch_loss, n_batches = 0.0, 0
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            if len(idx) < 2:
                continue  # batch norm needs >= 2 samples
            batch = _slice_batch(full_batch, idx)
            labels = full_labels[idx]
            loss, grads, new_running = model.loss_and_grads(
                batch, labels, train_cfg.weight_decay, mode="train"
            )
            model.params.update(new_running)
            updated = engine.adam_step(
                {k: model.params[k] for k in trainable}, grads, state
            )
            model.params.update(updated)
            epoch_loss += loss
            n_batches += 1
        val_acc = evaluate_accuracy(model, val_records)
        history.append(
            {"epoch": epoch, "train_loss": epoch_loss / max(n_batches, 1), "val_acc": val_acc}
        )
        if log is not None:
            log(history[-1])
        if val_acc > best_acc:
            best_acc = val_acc
            best_params = {k: v.copy() for k, v in model.params.items()}

    return DHNet(stream_cfg, params=best_params), history


# -- checkpoint + sidecar ----------------------------------------------------


def save_model(model: DHNet, path, extraction: dict | None = None) -> None:
    """Write the DHW1 checkpoint and its JSON sidecar (path + '.json')."""
    engine.save_checkpoint(model.params, path)
    sidecar = {
        "stream_config": asdict(model.cfg),
        "extraction": extraction or {"alpha": model.cfg.alpha, "deltas": list(DELTAS)},
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> tuple[DHNet, dict]:
    """Load checkpoint + sidecar; validates that parameter shapes match."""
    params = engine.load_checkpoint(path)
    with open(str(path) + ".json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    sc = sidecar["stream_config"]
    cfg = StreamConfig(
        channels=tuple(sc["channels"]),
        strides=tuple(sc["strides"]),
        dense=tuple(sc["dense"]),
        bn_momentum=sc["bn_momentum"],
        bn_eps=sc["bn_eps"],
        alpha=sc["alpha"],
    )
    expected = DHNet(cfg, seed=0).params
    if set(expected) != set(params):
        raise ValueError(f"{path}: checkpoint tensors do not match the sidecar config")
    for name, arr in expected.items():
        if params[name].shape != arr.shape:
            raise ValueError(
                f"{path}: tensor {name!r} has shape {params[name].shape}, "
                f"expected {arr.shape}"
            )
    return DHNet(cfg, params=params), sidecar
