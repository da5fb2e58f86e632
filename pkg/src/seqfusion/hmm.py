"""Gaussian hidden Markov models with diagonal emissions.

All recursions run in log space. Sequences are passed the way the rest of
the package stores them, ``(n_d, l_d)`` per sequence or ``(N, n_d, l_d)``
stacked.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import as_sequences
from .exceptions import DegenerateFitError, DimensionError

VAR_FLOOR = 1e-6
FORMAT = "seqfusion.gaussian_hmm"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class GaussianHMM:
    pi: np.ndarray
    A: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    history: tuple = field(default=(), repr=False)

    @property
    def K(self) -> int:
        return len(self.pi)

    @property
    def n_d(self) -> int:
        return self.means.shape[1]

    def permuted(self, perm) -> "GaussianHMM":
        """Same model with hidden states relabeled by ``perm``."""
        perm = np.asarray(perm)
        return GaussianHMM(
            self.pi[perm], self.A[np.ix_(perm, perm)], self.means[perm], self.variances[perm]
        )

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "K": self.K,
            "n_d": self.n_d,
            "pi": self.pi.tolist(),
            "A": self.A.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianHMM":
        if doc.get("format") != FORMAT or doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported HMM document: {doc.get('format')} v{doc.get('version')}")
        model = cls(
            np.asarray(doc["pi"], dtype=np.float64),
            np.asarray(doc["A"], dtype=np.float64),
            np.asarray(doc["means"], dtype=np.float64).reshape(doc["K"], doc["n_d"]),
            np.asarray(doc["variances"], dtype=np.float64).reshape(doc["K"], doc["n_d"]),
        )
        return model

    @classmethod
    def from_json(cls, text: str) -> "GaussianHMM":
        return cls.from_dict(json.loads(text))


def _time_major(sequences) -> np.ndarray:
    # (N, n_d, l_d) -> (N, l_d, n_d)
    return np.ascontiguousarray(as_sequences(sequences).transpose(0, 2, 1))


def _log_emissions(model: GaussianHMM, X: np.ndarray) -> np.ndarray:
    """Per-step, per-state diagonal Gaussian log densities, shape ``(N, T, K)``."""
    inv = 1.0 / model.variances
    const = -0.5 * (np.log(2 * np.pi * model.variances).sum(axis=1) + (model.means**2 * inv).sum(axis=1))
    quad = (X**2) @ inv.T - 2.0 * X @ (model.means * inv).T
    return const - 0.5 * quad


def _log(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


def _forward(model: GaussianHMM, logB: np.ndarray) -> np.ndarray:
    N, T, K = logB.shape
    log_alpha = np.empty_like(logB)
    log_alpha[:, 0] = _log(model.pi) + logB[:, 0]
    A = model.A
    for t in range(1, T):
        prev = log_alpha[:, t - 1]
        m = prev.max(axis=1, keepdims=True)
        # log sum_i exp(prev_i + log A_ij), with the max shifted out
        with np.errstate(divide="ignore"):
            log_alpha[:, t] = m + np.log(np.exp(prev - m) @ A) + logB[:, t]
    return log_alpha


def _backward(model: GaussianHMM, logB: np.ndarray) -> np.ndarray:
    N, T, K = logB.shape
    log_beta = np.zeros_like(logB)
    A_T = model.A.T
    for t in range(T - 2, -1, -1):
        nxt = logB[:, t + 1] + log_beta[:, t + 1]
        m = nxt.max(axis=1, keepdims=True)
        with np.errstate(divide="ignore"):
            log_beta[:, t] = m + np.log(np.exp(nxt - m) @ A_T)
    return log_beta


def _logsumexp_last(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=-1)
    return m + np.log(np.exp(a - m[..., None]).sum(axis=-1))


def _check_dims(model: GaussianHMM, X: np.ndarray):
    if X.shape[2] != model.n_d:
        raise DimensionError(f"model has n_d={model.n_d}, sequence has {X.shape[2]} channels")


def log_likelihood_batch(model: GaussianHMM, sequences) -> np.ndarray:
    """Forward-algorithm log-likelihood of each sequence in ``(N, n_d, l_d)``."""
    X = _time_major(sequences)
    _check_dims(model, X)
    return _logsumexp_last(_forward(model, _log_emissions(model, X))[:, -1])


def log_likelihood(model: GaussianHMM, sequence) -> float:
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2:
        raise DimensionError(f"expected an n_d x l_d matrix, got shape {seq.shape}")
    return float(log_likelihood_batch(model, seq[None])[0])


def _kmeanspp_means(obs: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    centers = [obs[rng.integers(len(obs))]]
    d2 = ((obs - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        idx = rng.choice(len(obs), p=d2 / total) if total > 0 else rng.integers(len(obs))
        centers.append(obs[idx])
        d2 = np.minimum(d2, ((obs - obs[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _jittered_simplex(rng: np.random.Generator, K: int, rows: int | None = None) -> np.ndarray:
    size = None if rows is None else rows
    jitter = rng.dirichlet(np.ones(K), size=size)
    return 0.5 * (np.full_like(jitter, 1.0 / K) + jitter)


def _init_model(X: np.ndarray, K: int, rng: np.random.Generator) -> GaussianHMM:
    obs = X.reshape(-1, X.shape[2])
    means = _kmeanspp_means(obs, K, rng)
    variances = np.tile(np.maximum(obs.var(axis=0), VAR_FLOOR), (K, 1))
    return GaussianHMM(_jittered_simplex(rng, K), _jittered_simplex(rng, K, K), means, variances)


def _e_step(model: GaussianHMM, X: np.ndarray):
    logB = _log_emissions(model, X)
    log_alpha = _forward(model, logB)
    log_beta = _backward(model, logB)
    ll = _logsumexp_last(log_alpha[:, -1])
    gamma = np.exp(log_alpha + log_beta - ll[:, None, None])
    with np.errstate(divide="ignore"):
        log_A = np.log(model.A)
    log_xi = (
        log_alpha[:, :-1, :, None]
        + log_A
        + (logB[:, 1:] + log_beta[:, 1:])[:, :, None, :]
        - ll[:, None, None, None]
    )
    xi_sum = np.exp(log_xi).sum(axis=(0, 1))
    return ll, gamma, xi_sum


def _m_step(model: GaussianHMM, X: np.ndarray, gamma: np.ndarray, xi_sum: np.ndarray) -> GaussianHMM:
    K = model.K
    pi = gamma[:, 0].mean(axis=0)
    pi = pi / pi.sum()
    row = xi_sum.sum(axis=1, keepdims=True)
    A = np.where(row > 0, xi_sum / np.where(row > 0, row, 1.0), 1.0 / K)
    obs = X.reshape(-1, X.shape[2])
    w = gamma.reshape(-1, K)
    occupancy = w.sum(axis=0)
    means = model.means.copy()
    variances = model.variances.copy()
    alive = occupancy > 1e-12
    if alive.any():
        means[alive] = (w[:, alive].T @ obs) / occupancy[alive, None]
        for k in np.flatnonzero(alive):
            diff = obs - means[k]
            variances[k] = w[:, k] @ (diff * diff) / occupancy[k]
    variances = np.maximum(variances, VAR_FLOOR)
    return GaussianHMM(pi, A, means, variances)


def fit_gaussian_hmm(sequences, K: int, max_iters: int = 50, seed: int = 0, tol: float = 1e-4) -> GaussianHMM:
    """Fit a diagonal Gaussian HMM by Baum-Welch.

    Stops after ``max_iters`` M-steps or once the per-sequence mean
    log-likelihood gain drops below ``tol``. The returned model carries the
    total training log-likelihood per iteration in ``history``.
    """
    X = _time_major(sequences)
    if X.shape[0] == 0:
        raise ValueError("need at least one training sequence")
    if not np.isfinite(X).all():
        raise ValueError("training sequences contain non-finite values")
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > X.shape[0] * X.shape[1]:
        raise DegenerateFitError(f"K={K} exceeds the {X.shape[0] * X.shape[1]} available observations")
    rng = np.random.default_rng(seed)
    model = _init_model(X, K, rng)
    n_seq = X.shape[0]
    history = []
    for _ in range(max_iters):
        ll, gamma, xi_sum = _e_step(model, X)
        total = float(ll.sum())
        history.append(total)
        if len(history) > 1 and (history[-1] - history[-2]) / n_seq < tol:
            break
        model = _m_step(model, X, gamma, xi_sum)
    return GaussianHMM(model.pi, model.A, model.means, model.variances, tuple(history))


@dataclass(frozen=True, eq=False)
class PairedGenerative:
    """Class-conditional generative pair: ``pos_model`` saw only POS sequences, ``neg_model`` only NEG.

    ``standardizer`` (LSTM pairs) is applied to every sequence before scoring.
    ``trained_ids`` records which samples the pair was fit on.
    """

    pos_model: Any
    neg_model: Any
    kind: str
    labels: tuple = ("POS", "NEG")
    standardizer: Any = None
    trained_ids: frozenset = frozenset()


def hmm_classifier_fit(
    sequences,
    is_pos,
    K: int = 2,
    max_iters: int = 50,
    seed: int = 0,
    labels: tuple = ("POS", "NEG"),
    trained_ids=(),
) -> PairedGenerative:
    X = as_sequences(sequences)
    is_pos = np.asarray(is_pos, dtype=bool)
    if len(is_pos) != len(X):
        raise DimensionError("one class flag per sequence required")
    if is_pos.all() or not is_pos.any():
        raise ValueError("both classes need at least one training sequence")
    pos = fit_gaussian_hmm(X[is_pos], K, max_iters, seed)
    neg = fit_gaussian_hmm(X[~is_pos], K, max_iters, seed)
    return PairedGenerative(pos, neg, "hmm", tuple(labels), trained_ids=frozenset(trained_ids))


def hmm_scores(paired: PairedGenerative, sequences) -> np.ndarray:
    """``(N, 2)`` array of ``[L(s|G_POS), L(s|G_NEG)]``."""
    return np.column_stack(
        [log_likelihood_batch(paired.pos_model, sequences), log_likelihood_batch(paired.neg_model, sequences)]
    )


def hmm_ratio_batch(paired: PairedGenerative, sequences) -> np.ndarray:
    scores = hmm_scores(paired, sequences)
    return scores[:, 0] - scores[:, 1]


def hmm_ratio(paired: PairedGenerative, sequence) -> float:
    return float(hmm_ratio_batch(paired, np.asarray(sequence, dtype=np.float64)[None])[0])


def hmm_classify(paired: PairedGenerative, sequence):
    """POS iff ``L(s|G_POS) >= L(s|G_NEG)``."""
    return paired.labels[0] if hmm_ratio(paired, sequence) >= 0 else paired.labels[1]


def hmm_classify_batch(paired: PairedGenerative, sequences) -> np.ndarray:
    r = hmm_ratio_batch(paired, sequences)
    return np.where(r >= 0, paired.labels[0], paired.labels[1])
