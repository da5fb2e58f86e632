"""Dataset container, feature-space transforms and split bookkeeping."""

from __future__ import annotations

import hashlib
import zlib
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .exceptions import DimensionError, StratificationError

STD_FLOOR = 1e-8


def rng_for(seed: int, *stream: str | int) -> np.random.Generator:
    """Return a generator for the named sub-stream of ``seed``.

    Streams are independent of each other, so drawing more numbers from
    ``rng_for(s, "lstm")`` never perturbs ``rng_for(s, "rf")``.
    """
    key = tuple(zlib.crc32(s.encode()) if isinstance(s, str) else int(s) for s in stream)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def derive_seed(seed: int, *stream: str | int) -> int:
    return int(rng_for(seed, *stream).integers(0, 2**31 - 1))


@dataclass(frozen=True)
class Sample:
    static: np.ndarray
    dynamic: np.ndarray
    label: Any
    sample_id: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled samples with a static vector and an ``n_d x l_d`` dynamic matrix each.

    Arrays are stored stacked: ``static`` is ``(N, n_s)``, ``dynamic`` is
    ``(N, n_d, l_d)``. ``class_labels`` is the ``(POS, NEG)`` pair.

    ``static_from_dynamic`` marks univariate datasets whose static features
    *are* the spatialized sequence; bimodal models then avoid duplicating it.
    """

    static: np.ndarray
    dynamic: np.ndarray
    labels: np.ndarray
    class_labels: tuple
    sample_ids: np.ndarray | None = None
    name: str = "dataset"
    static_from_dynamic: bool = False
    groups: np.ndarray | None = None
    _fingerprint: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        static = np.asarray(self.static, dtype=np.float64)
        dynamic = np.asarray(self.dynamic, dtype=np.float64)
        labels = np.asarray(self.labels)
        n = len(labels)
        if static.ndim == 1 and n == 0:
            static = static.reshape(0, 0)
        if static.ndim != 2 or static.shape[0] != n:
            raise DimensionError(f"static must be (N, n_s) with N={n}, got {static.shape}")
        if dynamic.ndim != 3 or dynamic.shape[0] != n:
            raise DimensionError(f"dynamic must be (N, n_d, l_d) with N={n}, got {dynamic.shape}")
        if not (np.isfinite(static).all() and np.isfinite(dynamic).all()):
            raise ValueError("dataset contains non-finite values")
        if len(self.class_labels) != 2 or self.class_labels[0] == self.class_labels[1]:
            raise ValueError("class_labels must be two distinct values (POS, NEG)")
        for value in set(labels.tolist()):
            if value not in self.class_labels:
                raise ValueError(f"label {value!r} is not one of {tuple(self.class_labels)}")
        ids = np.arange(n) if self.sample_ids is None else np.asarray(self.sample_ids, dtype=np.int64)
        if ids.shape != (n,) or len(np.unique(ids)) != n:
            raise ValueError("sample_ids must be unique, one per sample")
        object.__setattr__(self, "static", static)
        object.__setattr__(self, "dynamic", dynamic)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        object.__setattr__(self, "sample_ids", ids)
        if self.groups is not None:
            object.__setattr__(self, "groups", np.asarray(self.groups))

    @property
    def n_samples(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return self.n_samples

    @property
    def n_s(self) -> int:
        return self.static.shape[1]

    @property
    def n_d(self) -> int:
        return self.dynamic.shape[1]

    @property
    def l_d(self) -> int:
        return self.dynamic.shape[2]

    @property
    def pos_label(self):
        return self.class_labels[0]

    @property
    def neg_label(self):
        return self.class_labels[1]

    @property
    def is_pos(self) -> np.ndarray:
        return self.labels == self.pos_label

    @property
    def samples(self) -> list[Sample]:
        return [
            Sample(self.static[i], self.dynamic[i], self.labels[i], int(self.sample_ids[i]))
            for i in range(self.n_samples)
        ]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.static[idx],
            self.dynamic[idx],
            self.labels[idx],
            self.class_labels,
            self.sample_ids[idx],
            name=self.name,
            static_from_dynamic=self.static_from_dynamic,
            groups=None if self.groups is None else self.groups[idx],
        )

    def with_labels(self, labels) -> "Dataset":
        return Dataset(
            self.static,
            self.dynamic,
            np.asarray(labels),
            self.class_labels,
            self.sample_ids,
            name=self.name,
            static_from_dynamic=self.static_from_dynamic,
            groups=self.groups,
        )

    def with_features(self, static=None, dynamic=None) -> "Dataset":
        return Dataset(
            self.static if static is None else static,
            self.dynamic if dynamic is None else dynamic,
            self.labels,
            self.class_labels,
            self.sample_ids,
            name=self.name,
            static_from_dynamic=self.static_from_dynamic,
            groups=self.groups,
        )

    def fingerprint(self) -> str:
        """Content hash over features, labels and ids (cached)."""
        if not self._fingerprint:
            h = hashlib.sha1()
            for arr in (self.static, self.dynamic, self.sample_ids):
                h.update(str(arr.shape).encode())
                h.update(np.ascontiguousarray(arr).tobytes())
            h.update(repr(self.labels.tolist()).encode())
            h.update(repr(self.class_labels).encode())
            h.update(b"1" if self.static_from_dynamic else b"0")
            self._fingerprint.append(h.hexdigest())
        return self._fingerprint[0]


def spatialize(dynamic) -> np.ndarray:
    """Flatten an ``n_d x l_d`` matrix feature-major: all steps of feature 1, then feature 2, ..."""
    arr = np.asarray(dynamic, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"expected a non-empty n_d x l_d matrix, got shape {arr.shape}")
    return arr.reshape(-1).copy()


def spatialize_all(dynamic) -> np.ndarray:
    arr = np.asarray(dynamic, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1] * arr.shape[2] == 0:
        raise DimensionError(f"expected (N, n_d, l_d) with positive dims, got {arr.shape}")
    return arr.reshape(arr.shape[0], -1)


def staticize(static, l_d: int) -> np.ndarray:
    """Turn each static value into a constant sequence of length ``l_d``."""
    if l_d < 1:
        raise DimensionError("l_d must be at least 1")
    vec = np.asarray(static, dtype=np.float64).reshape(-1)
    return np.repeat(vec[:, None], l_d, axis=1)


def staticize_all(static, l_d: int) -> np.ndarray:
    if l_d < 1:
        raise DimensionError("l_d must be at least 1")
    arr = np.asarray(static, dtype=np.float64)
    return np.repeat(arr[:, :, None], l_d, axis=2)


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """Assignment of every sample (by position) to a partition index.

    ``kind`` is one of ``"train-test"`` (0 train, 1 test), ``"ab-halves"``
    (0 = training_A, 1 = training_B) or ``"k-folds"``.
    """

    kind: str
    assignments: np.ndarray
    seed: int

    @property
    def n_parts(self) -> int:
        return int(self.assignments.max()) + 1 if len(self.assignments) else 0

    def part(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == i)

    def complement(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != i)

    def sizes(self) -> list[int]:
        return np.bincount(self.assignments, minlength=self.n_parts).tolist()


def _stratified_deal(is_pos: np.ndarray, k: int, seed: int) -> np.ndarray:
    # Shuffle within each class, then deal round-robin with the offset carried
    # across classes; part sizes and per-class counts then differ by <= 1 and
    # part 0 receives any extra sample.
    rng = np.random.default_rng(seed)
    order = []
    for mask in (is_pos, ~is_pos):
        members = np.flatnonzero(mask)
        order.append(members[rng.permutation(len(members))])
    order = np.concatenate(order)
    assignments = np.empty(len(is_pos), dtype=np.int64)
    assignments[order] = np.arange(len(order)) % k
    return assignments


def split_ab(dataset: Dataset, seed: int) -> SplitPlan:
    """Stratified split into halves A (index 0) and B (index 1)."""
    for mask in (dataset.is_pos, ~dataset.is_pos):
        if mask.sum() < 2:
            raise StratificationError("each class needs at least 2 samples for an A/B split")
    return SplitPlan("ab-halves", _stratified_deal(dataset.is_pos, 2, seed), seed)


def make_folds(dataset: Dataset, k: int, seed: int) -> SplitPlan:
    if k < 2:
        raise ValueError("k must be at least 2")
    for mask in (dataset.is_pos, ~dataset.is_pos):
        if mask.sum() < k:
            raise StratificationError(f"a class has {int(mask.sum())} samples, fewer than k={k}")
    return SplitPlan("k-folds", _stratified_deal(dataset.is_pos, k, seed), seed)


def split_train_test(dataset: Dataset, test_fraction: float, seed: int) -> SplitPlan:
    """Stratified train (0) / test (1) split; each class contributes ``round(n_c * test_fraction)``."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    assignments = np.zeros(dataset.n_samples, dtype=np.int64)
    for mask in (dataset.is_pos, ~dataset.is_pos):
        members = np.flatnonzero(mask)
        n_test = int(round(len(members) * test_fraction))
        if n_test < 1 or n_test >= len(members):
            raise StratificationError("both train and test need samples of every class")
        assignments[rng.permutation(members)[:n_test]] = 1
    return SplitPlan("train-test", assignments, seed)


@dataclass(frozen=True, eq=False)
class Standardizer:
    static_mean: np.ndarray
    static_std: np.ndarray
    dynamic_mean: np.ndarray
    dynamic_std: np.ndarray

    @classmethod
    def fit(cls, dataset: Dataset) -> "Standardizer":
        """Per-column stats for static data; per-channel stats pooled over time for dynamics."""
        if dataset.n_samples == 0:
            raise ValueError("cannot fit a Standardizer on an empty partition")
        return cls(
            dataset.static.mean(axis=0),
            np.maximum(dataset.static.std(axis=0), STD_FLOOR),
            dataset.dynamic.mean(axis=(0, 2)),
            np.maximum(dataset.dynamic.std(axis=(0, 2)), STD_FLOOR),
        )

    @classmethod
    def fit_dynamic(cls, dynamic) -> "Standardizer":
        """Channel statistics only, for sequence-only consumers."""
        dynamic = as_sequences(dynamic)
        if len(dynamic) == 0:
            raise ValueError("cannot fit a Standardizer on an empty partition")
        return cls(
            np.zeros(0),
            np.ones(0),
            dynamic.mean(axis=(0, 2)),
            np.maximum(dynamic.std(axis=(0, 2)), STD_FLOOR),
        )

    def transform_static(self, static: np.ndarray) -> np.ndarray:
        static = np.asarray(static, dtype=np.float64)
        if static.shape[-1] != len(self.static_mean):
            raise DimensionError(f"expected {len(self.static_mean)} static features, got {static.shape[-1]}")
        return (static - self.static_mean) / self.static_std

    def transform_dynamic(self, dynamic: np.ndarray) -> np.ndarray:
        """Accepts ``(n_d, l_d)`` or ``(N, n_d, l_d)``."""
        dynamic = np.asarray(dynamic, dtype=np.float64)
        if dynamic.ndim < 2 or dynamic.shape[-2] != len(self.dynamic_mean):
            raise DimensionError(f"expected {len(self.dynamic_mean)} dynamic channels, got shape {dynamic.shape}")
        return (dynamic - self.dynamic_mean[:, None]) / self.dynamic_std[:, None]


def standardize(stats: Standardizer, dataset: Dataset) -> Dataset:
    return dataset.with_features(
        static=stats.transform_static(dataset.static),
        dynamic=stats.transform_dynamic(dataset.dynamic),
    )


def as_sequences(dynamic: Sequence) -> np.ndarray:
    """Stack a list of ``n_d x l_d`` matrices into an ``(N, n_d, l_d)`` float array."""
    try:
        arr = np.asarray(dynamic, dtype=np.float64)
    except ValueError as exc:
        raise DimensionError("all sequences must share n_d and l_d") from exc
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise DimensionError(f"expected sequences shaped (N, n_d, l_d), got {arr.shape}")
    return arr
