"""Generative single-layer LSTM that predicts each step from its prefix.

The network reads ``x_1 .. x_{l-1}`` and emits a prediction for
``x_2 .. x_l`` through a linear head, so its output is the input lagged by
one step. Training minimises the per-cell mean squared error by
backpropagation through time with RMSProp.

Gate blocks inside the stacked weight matrix are ordered input, forget,
output, candidate.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Standardizer, as_sequences
from .exceptions import DimensionError, TrainingError
from .hmm import PairedGenerative

log = logging.getLogger(__name__)

MSE_FLOOR = 1e-12
INIT_SCALE = 0.08
FORMAT = "seqfusion.lstm"
FORMAT_VERSION = 1
PARAM_NAMES = ("W", "b", "Wy", "by")


@dataclass(frozen=True, eq=False)
class LstmNet:
    """``W`` is ``(n_d + n_units, 4 * n_units)``: input rows first, then recurrent rows."""

    W: np.ndarray
    b: np.ndarray
    Wy: np.ndarray
    by: np.ndarray
    dropout: float = 0.0
    history: tuple = field(default=(), repr=False)

    @property
    def n_units(self) -> int:
        return self.Wy.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.Wy.shape[1]

    def params(self) -> dict:
        return {"W": self.W, "b": self.b, "Wy": self.Wy, "by": self.by}

    def with_params(self, params: dict, **kw) -> "LstmNet":
        return replace(self, **{name: params[name] for name in PARAM_NAMES}, **kw)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "dropout": self.dropout,
            "tensors": {
                name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
                for name, arr in self.params().items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "LstmNet":
        if doc.get("format") != FORMAT or doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported LSTM document: {doc.get('format')} v{doc.get('version')}")
        t = {
            name: np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
            for name, spec in doc["tensors"].items()
        }
        return cls(t["W"], t["b"], t["Wy"], t["by"], float(doc["dropout"]))

    @classmethod
    def from_json(cls, text: str) -> "LstmNet":
        return cls.from_dict(json.loads(text))


def init_lstm(n_inputs: int, n_units: int, seed: int = 0, dropout: float = 0.0) -> LstmNet:
    """Uniform(-0.08, 0.08) weights, forget-gate bias 1, other biases 0."""
    if not 0.0 <= dropout < 1.0:
        raise ValueError("dropout must be in [0, 1)")
    rng = np.random.default_rng(seed)
    H = n_units
    W = rng.uniform(-INIT_SCALE, INIT_SCALE, (n_inputs + H, 4 * H))
    b = np.zeros(4 * H)
    b[H : 2 * H] = 1.0
    Wy = rng.uniform(-INIT_SCALE, INIT_SCALE, (H, n_inputs))
    return LstmNet(W, b, Wy, np.zeros(n_inputs), dropout)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _time_major(sequences, net: LstmNet) -> np.ndarray:
    X = np.ascontiguousarray(as_sequences(sequences).transpose(0, 2, 1))
    if X.shape[2] != net.n_inputs:
        raise DimensionError(f"network expects {net.n_inputs} channels, got {X.shape[2]}")
    if X.shape[1] < 2:
        raise DimensionError("sequences need at least 2 time steps")
    return X


def _run(net: LstmNet, X: np.ndarray, masks: np.ndarray | None = None, keep: bool = False):
    """Forward pass over ``X`` of shape ``(B, T, D)``.

    Consumes steps ``0 .. T-2``; returns predictions ``(B, T-1, D)``, the
    final hidden state ``(B, H)`` and optionally the cache for backprop.
    """
    B, T, D = X.shape
    H = net.n_units
    steps = T - 1
    proj = X[:, :steps] @ net.W[:D] + net.b
    W_h = net.W[D:]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((B, steps, H))
    if keep:
        gates = np.empty((B, steps, 4 * H))
        cs = np.empty((B, steps, H))
    for t in range(steps):
        z = proj[:, t] + h @ W_h
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H : 2 * H])
        o = _sigmoid(z[:, 2 * H : 3 * H])
        g = np.tanh(z[:, 3 * H :])
        c = f * c + i * g
        h = o * np.tanh(c)
        hs[:, t] = h
        if keep:
            gates[:, t, :H] = i
            gates[:, t, H : 2 * H] = f
            gates[:, t, 2 * H : 3 * H] = o
            gates[:, t, 3 * H :] = g
            cs[:, t] = c
    out = hs if masks is None else hs * masks
    preds = out @ net.Wy + net.by
    cache = (hs, out, gates, cs) if keep else None
    return preds, h, cache


def loss_and_grads(net: LstmNet, sequences, masks: np.ndarray | None = None):
    """Mean squared lagged-prediction error over all cells and its exact gradient.

    ``masks`` (shape ``(B, T-1, H)``) multiplies the hidden outputs before the
    dense head, which is how training-time dropout enters.
    """
    X = _time_major(sequences, net)
    B, T, D = X.shape
    H = net.n_units
    steps = T - 1
    preds, _, (hs, out, gates, cs) = _run(net, X, masks, keep=True)
    resid = preds - X[:, 1:]
    loss = float(np.mean(resid**2))

    dy = (2.0 / resid.size) * resid
    dWy = out.reshape(-1, H).T @ dy.reshape(-1, D)
    dby = dy.sum(axis=(0, 1))
    dh_out = dy @ net.Wy.T
    if masks is not None:
        dh_out = dh_out * masks

    W_h = net.W[D:]
    dz = np.empty((B, steps, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(steps - 1, -1, -1):
        i = gates[:, t, :H]
        f = gates[:, t, H : 2 * H]
        o = gates[:, t, 2 * H : 3 * H]
        g = gates[:, t, 3 * H :]
        c = cs[:, t]
        c_prev = cs[:, t - 1] if t > 0 else np.zeros((B, H))
        tc = np.tanh(c)
        dh = dh_out[:, t] + dh_next
        dc = dh * o * (1.0 - tc**2) + dc_next
        dz[:, t, :H] = dc * g * i * (1.0 - i)
        dz[:, t, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, t, 2 * H : 3 * H] = dh * tc * o * (1.0 - o)
        dz[:, t, 3 * H :] = dc * i * (1.0 - g**2)
        dh_next = dz[:, t] @ W_h.T
        dc_next = dc * f

    h_prev = np.concatenate([np.zeros((B, 1, H)), hs[:, :-1]], axis=1)
    dW = np.vstack(
        [
            X[:, :steps].reshape(-1, D).T @ dz.reshape(-1, 4 * H),
            h_prev.reshape(-1, H).T @ dz.reshape(-1, 4 * H),
        ]
    )
    db = dz.sum(axis=(0, 1))
    return loss, {"W": dW, "b": db, "Wy": dWy, "by": dby}


def lstm_forward(net: LstmNet, sequence):
    """Predictions ``(n_d, l_d - 1)`` for steps 2..l_d and the final hidden state ``(n_units,)``.

    Inference never applies dropout.
    """
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2:
        raise DimensionError(f"expected an n_d x l_d matrix, got shape {seq.shape}")
    preds, h, _ = _run(net, _time_major(seq[None], net))
    return preds[0].T, h[0]


def lstm_mse_batch(net: LstmNet, sequences) -> np.ndarray:
    X = _time_major(sequences, net)
    preds, _, _ = _run(net, X)
    return np.mean((preds - X[:, 1:]) ** 2, axis=(1, 2))


def lstm_mse(net: LstmNet, sequence) -> float:
    return float(lstm_mse_batch(net, np.asarray(sequence, dtype=np.float64)[None])[0])


def lstm_activations_batch(net: LstmNet, sequences) -> np.ndarray:
    _, h, _ = _run(net, _time_major(sequences, net))
    return h


def lstm_activations(net: LstmNet, sequence) -> np.ndarray:
    return lstm_forward(net, sequence)[1]


@dataclass(frozen=True, eq=False)
class RmsPropState:
    avg_sq: dict
    lr: float = 1e-3
    decay: float = 0.9
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: dict, lr=1e-3, decay=0.9, eps=1e-8) -> "RmsPropState":
        return cls({k: np.zeros_like(v) for k, v in params.items()}, lr, decay, eps)


def rmsprop_step(params: dict, grads: dict, state: RmsPropState):
    """One RMSProp update; returns new ``(params, state)`` without mutating inputs."""
    new_params, new_avg = {}, {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise DimensionError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        if not np.isfinite(g).all():
            raise TrainingError(f"non-finite gradient for {name}")
        r = state.decay * state.avg_sq[name] + (1.0 - state.decay) * g * g
        new_avg[name] = r
        new_params[name] = p - state.lr * g / (np.sqrt(r) + state.eps)
    return new_params, replace(state, avg_sq=new_avg)


def clip_by_global_norm(grads: dict, max_norm: float) -> dict:
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm is None or max_norm <= 0 or norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


@dataclass(frozen=True)
class TrainConfig:
    n_units: int = 32
    dropout: float = 0.0
    batch_size: int = 1
    epochs: int = 10
    lr: float = 1e-3
    clip: float = 5.0
    seed: int = 0
    decay: float = 0.9
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.n_units < 1:
            raise ValueError("n_units must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


def lstm_fit(sequences, config: TrainConfig, net: LstmNet | None = None) -> LstmNet:
    """Train by BPTT on lagged targets; per-epoch shuffling is seeded by ``config.seed``.

    The returned net's ``history`` holds the mean training loss per epoch.
    """
    X = as_sequences(sequences)
    if len(X) == 0:
        raise ValueError("empty training set")
    if X.shape[2] < 2:
        raise DimensionError("sequences need at least 2 time steps")
    if net is None:
        net = init_lstm(X.shape[1], config.n_units, config.seed, config.dropout)
    rng = np.random.default_rng([config.seed, 1])
    params = net.params()
    state = RmsPropState.zeros_like(params, config.lr, config.decay, config.eps)
    keep = 1.0 - config.dropout
    history = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(X))
        total = 0.0
        for start in range(0, len(X), config.batch_size):
            batch = X[order[start : start + config.batch_size]]
            masks = None
            if config.dropout > 0:
                shape = (len(batch), X.shape[2] - 1, net.n_units)
                masks = (rng.random(shape) < keep) / keep
            loss, grads = loss_and_grads(net.with_params(params), batch, masks)
            if not np.isfinite(loss):
                raise TrainingError(f"loss became non-finite in epoch {epoch}")
            grads = clip_by_global_norm(grads, config.clip)
            try:
                params, state = rmsprop_step(params, grads, state)
            except TrainingError as exc:
                raise TrainingError(f"{exc} in epoch {epoch}") from exc
            total += loss * len(batch)
        history.append(total / len(X))
        log.debug("epoch %d loss %.6f", epoch, history[-1])
        if not np.isfinite(history[-1]):
            raise TrainingError(f"loss became non-finite in epoch {epoch}")
    return net.with_params(params, history=tuple(history))


def lstm_classifier_fit(
    sequences,
    is_pos,
    config: TrainConfig,
    standardize: bool = True,
    labels: tuple = ("POS", "NEG"),
    trained_ids=(),
) -> PairedGenerative:
    """Train the POS and NEG networks, each on its own class only.

    With ``standardize`` one set of per-channel statistics is fit on all the
    training sequences and applied to every sequence either network sees.
    """
    X = as_sequences(sequences)
    is_pos = np.asarray(is_pos, dtype=bool)
    if len(is_pos) != len(X):
        raise DimensionError("one class flag per sequence required")
    if is_pos.all() or not is_pos.any():
        raise ValueError("both classes need at least one training sequence")
    stats = Standardizer.fit_dynamic(X) if standardize else None
    Z = stats.transform_dynamic(X) if stats is not None else X
    pos = lstm_fit(Z[is_pos], config)
    neg = lstm_fit(Z[~is_pos], config)
    return PairedGenerative(pos, neg, "lstm", tuple(labels), stats, frozenset(trained_ids))


def _prepare(paired: PairedGenerative, sequences) -> np.ndarray:
    X = as_sequences(sequences)
    if paired.standardizer is not None:
        X = paired.standardizer.transform_dynamic(X)
    return X


def lstm_scores(paired: PairedGenerative, sequences) -> np.ndarray:
    """``(N, 2)`` array of ``[MSE_POS, MSE_NEG]``."""
    X = _prepare(paired, sequences)
    return np.column_stack([lstm_mse_batch(paired.pos_model, X), lstm_mse_batch(paired.neg_model, X)])


def lstm_ratio_batch(paired: PairedGenerative, sequences) -> np.ndarray:
    mse = np.maximum(lstm_scores(paired, sequences), MSE_FLOOR)
    return np.log(mse[:, 1] / mse[:, 0])


def lstm_ratio(paired: PairedGenerative, sequence) -> float:
    """``log(MSE_NEG / MSE_POS)``; positive when the POS network reconstructs better."""
    return float(lstm_ratio_batch(paired, np.asarray(sequence, dtype=np.float64)[None])[0])


def lstm_classify(paired: PairedGenerative, sequence):
    return paired.labels[0] if lstm_ratio(paired, sequence) >= 0 else paired.labels[1]


def lstm_classify_batch(paired: PairedGenerative, sequences) -> np.ndarray:
    r = lstm_ratio_batch(paired, sequences)
    return np.where(r >= 0, paired.labels[0], paired.labels[1])


def paired_activations(paired: PairedGenerative, sequences, source: str = "pos") -> np.ndarray:
    """Final hidden states from the POS net, the NEG net, or both concatenated."""
    X = _prepare(paired, sequences)
    if source == "pos":
        return lstm_activations_batch(paired.pos_model, X)
    if source == "neg":
        return lstm_activations_batch(paired.neg_model, X)
    if source == "both":
        return np.hstack([lstm_activations_batch(paired.pos_model, X), lstm_activations_batch(paired.neg_model, X)])
    raise ValueError(f"unknown activation source {source!r}")
