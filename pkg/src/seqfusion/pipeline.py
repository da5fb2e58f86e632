"""The twelve classifiers, two-tier enrichment protocols and evaluation reports.

Models 1-7 are fit and scored directly. Models 8-12 train first-tier
feature extractors on one partition, use them to enrich samples they never
saw, and fit a second-tier random forest on the enriched features.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import forest as rf
from . import hmm as hmm_mod
from . import lstm as lstm_mod
from .core import (
    Dataset,
    Sample,
    SplitPlan,
    derive_seed,
    make_folds,
    spatialize_all,
    split_ab,
    split_train_test,
    staticize_all,
)
from .exceptions import ConfigError, DimensionError, LeakageError

log = logging.getLogger(__name__)


class ModelId(enum.IntEnum):
    RF_s = 1
    HMM_d = 2
    LSTM_d = 3
    RF_d = 4
    RF_sd = 5
    HMM_sd = 6
    LSTM_sd = 7
    ENS_HMM = 8
    ENS_LSTM = 9
    HYB_HMM = 10
    HYB_LSTM = 11
    HYB_LSTMA = 12


STATIC = "static"
DYNAMIC = "dynamic"
PRED_RF = "pred_rf"
PRED_HMM = "pred_hmm"
PRED_LSTM = "pred_lstm"
RATIO_HMM = "ratio_hmm"
RATIO_LSTM = "ratio_lstm"
ACT_LSTM = "act_lstm"

# Feature sets each model consumes (checkmark matrix).
FEATURE_SOURCES = {
    ModelId.RF_s: frozenset({STATIC}),
    ModelId.HMM_d: frozenset({DYNAMIC}),
    ModelId.LSTM_d: frozenset({DYNAMIC}),
    ModelId.RF_d: frozenset({DYNAMIC}),
    ModelId.RF_sd: frozenset({STATIC, DYNAMIC}),
    ModelId.HMM_sd: frozenset({STATIC, DYNAMIC}),
    ModelId.LSTM_sd: frozenset({STATIC, DYNAMIC}),
    ModelId.ENS_HMM: frozenset({PRED_RF, PRED_HMM}),
    ModelId.ENS_LSTM: frozenset({PRED_RF, PRED_LSTM}),
    ModelId.HYB_HMM: frozenset({STATIC, RATIO_HMM}),
    ModelId.HYB_LSTM: frozenset({STATIC, RATIO_LSTM}),
    ModelId.HYB_LSTMA: frozenset({STATIC, ACT_LSTM}),
}

GENERATIVE_IDS = frozenset({ModelId.HMM_d, ModelId.LSTM_d, ModelId.HMM_sd, ModelId.LSTM_sd})
RF_IDS = frozenset({ModelId.RF_s, ModelId.RF_d, ModelId.RF_sd})
TWO_TIER_IDS = frozenset(range(8, 13))
ALL_IDS = tuple(ModelId)


def as_model_id(value) -> ModelId:
    try:
        return ModelId(int(value))
    except (ValueError, TypeError):
        raise ConfigError(f"invalid model id {value!r}; expected 1-12") from None


@dataclass(frozen=True)
class HyperParams:
    """Hyperparameters for every component; ``seed`` feeds all named sub-streams."""

    lstm: lstm_mod.TrainConfig = field(default_factory=lstm_mod.TrainConfig)
    hmm_states: int = 2
    hmm_iters: int = 50
    rf_trees: int = 500
    lstm_standardize: bool = True
    hmm_standardize: bool = False
    activation_source: str = "pos"
    seed: int = 0

    def __post_init__(self):
        if self.hmm_states < 1 or self.hmm_iters < 1 or self.rf_trees < 1:
            raise ConfigError("hmm_states, hmm_iters and rf_trees must be positive")
        if self.activation_source not in ("pos", "neg", "both"):
            raise ConfigError("activation_source must be pos, neg or both")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def rf_seed(self) -> int:
        return derive_seed(self.seed, "rf")

    @property
    def second_tier_seed(self) -> int:
        return derive_seed(self.seed, "rf", "second-tier")

    @property
    def hmm_seed(self) -> int:
        return derive_seed(self.seed, "hmm")

    @property
    def lstm_config(self) -> lstm_mod.TrainConfig:
        return dataclasses.replace(self.lstm, seed=derive_seed(self.seed, "lstm"))


class ExtractorCache:
    """Memoises fitted first-tier models. One lock serialises writers."""

    def __init__(self):
        self._store: dict = {}
        self._lock = threading.Lock()
        self.hits = 0

    def get_or_fit(self, key, fit: Callable[[], Any]):
        with self._lock:
            if key in self._store:
                self.hits += 1
                return self._store[key]
            value = fit()
            self._store[key] = value
            return value

    def __len__(self):
        return len(self._store)


def _hmm_key(hp: HyperParams):
    return ("hmm", hp.hmm_states, hp.hmm_iters, hp.hmm_seed, hp.hmm_standardize)


def _lstm_key(hp: HyperParams):
    return ("lstm", dataclasses.astuple(hp.lstm_config), hp.lstm_standardize)


def fit_paired(kind: str, sequences: np.ndarray, part: Dataset, hp: HyperParams, cache: ExtractorCache | None,
               tag: str = DYNAMIC) -> hmm_mod.PairedGenerative:
    """Fit a class-conditional HMM or LSTM pair on ``sequences`` (rows of ``part``)."""
    ids = frozenset(part.sample_ids.tolist())
    labels = part.class_labels

    def fit():
        if kind == "hmm":
            X = sequences
            stats = None
            if hp.hmm_standardize:
                from .core import Standardizer

                stats = Standardizer.fit_dynamic(X)
                X = stats.transform_dynamic(X)
            paired = hmm_mod.hmm_classifier_fit(
                X, part.is_pos, hp.hmm_states, hp.hmm_iters, hp.hmm_seed, labels, ids
            )
            return dataclasses.replace(paired, standardizer=stats)
        return lstm_mod.lstm_classifier_fit(
            sequences, part.is_pos, hp.lstm_config, hp.lstm_standardize, labels, ids
        )

    if cache is None:
        return fit()
    key = (part.fingerprint(), tag, _hmm_key(hp) if kind == "hmm" else _lstm_key(hp))
    return cache.get_or_fit(key, fit)


def fit_forest(X: np.ndarray, part: Dataset, seed: int, hp: HyperParams, cache: ExtractorCache | None, tag: str):
    def fit():
        return rf.rf_fit(X, part.labels, hp.rf_trees, seed, part.class_labels)

    if cache is None:
        return fit()
    return cache.get_or_fit((part.fingerprint(), tag, "rf", hp.rf_trees, seed), fit)


def _hmm_scores(paired, sequences) -> np.ndarray:
    if paired.standardizer is not None:
        sequences = paired.standardizer.transform_dynamic(sequences)
    return hmm_mod.hmm_scores(paired, sequences)


@dataclass(frozen=True, eq=False)
class Extractor:
    """First-tier models for a two-tier id, with the ids of the samples they saw."""

    model_id: ModelId
    trained_ids: frozenset
    forest: rf.Forest | None = None
    paired: hmm_mod.PairedGenerative | None = None
    activation_source: str = "pos"


def fit_extractor(model_id, part: Dataset, hp: HyperParams, cache: ExtractorCache | None = None) -> Extractor:
    mid = as_model_id(model_id)
    if mid not in TWO_TIER_IDS:
        raise ValueError(f"model {mid.name} has no feature extractor")
    forest = None
    if mid in (ModelId.ENS_HMM, ModelId.ENS_LSTM):
        forest = fit_forest(part.static, part, hp.rf_seed, hp, cache, STATIC)
    kind = "hmm" if mid in (ModelId.ENS_HMM, ModelId.HYB_HMM) else "lstm"
    paired = fit_paired(kind, part.dynamic, part, hp, cache)
    return Extractor(mid, frozenset(part.sample_ids.tolist()), forest, paired, hp.activation_source)


@dataclass(frozen=True, eq=False)
class EnrichedSet:
    """Vectorised samples plus column provenance.

    ``provenance`` lists ``(feature_set, start, stop)`` column ranges.
    ``row_extractor[i]`` indexes ``extractor_ids`` (the sample ids each
    extractor trained on), or is -1 when no extractor was involved.
    """

    features: np.ndarray
    labels: np.ndarray
    sample_ids: np.ndarray
    provenance: tuple
    row_extractor: np.ndarray
    extractor_ids: tuple = ()

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def audit(self) -> frozenset:
        """Feature sets actually present in the columns."""
        return frozenset(name for name, start, stop in self.provenance if stop > start)

    def check_leakage(self):
        for row, (sid, ex) in enumerate(zip(self.sample_ids, self.row_extractor)):
            if ex >= 0 and int(sid) in self.extractor_ids[ex]:
                raise LeakageError(f"sample {int(sid)} was enriched by an extractor trained on it")

    def subset(self, rows) -> "EnrichedSet":
        rows = np.asarray(rows, dtype=np.int64)
        return EnrichedSet(
            self.features[rows], self.labels[rows], self.sample_ids[rows], self.provenance,
            self.row_extractor[rows], self.extractor_ids,
        )


def _two_tier_blocks(mid: ModelId, static, dynamic, extractor: Extractor):
    blocks = []
    if mid in (ModelId.ENS_HMM, ModelId.ENS_LSTM):
        blocks.append((PRED_RF, extractor.forest.log_proba(static)))
        if mid == ModelId.ENS_HMM:
            blocks.append((PRED_HMM, _hmm_scores(extractor.paired, dynamic)))
        else:
            blocks.append((PRED_LSTM, lstm_mod.lstm_scores(extractor.paired, dynamic)))
        return blocks
    blocks.append((STATIC, static))
    if mid == ModelId.HYB_HMM:
        scores = _hmm_scores(extractor.paired, dynamic)
        blocks.append((RATIO_HMM, (scores[:, 0] - scores[:, 1])[:, None]))
    elif mid == ModelId.HYB_LSTM:
        blocks.append((RATIO_LSTM, lstm_mod.lstm_ratio_batch(extractor.paired, dynamic)[:, None]))
    else:
        acts = lstm_mod.paired_activations(extractor.paired, dynamic, extractor.activation_source)
        blocks.append((ACT_LSTM, acts))
    return blocks


def _vector_blocks(mid: ModelId, static, dynamic, static_from_dynamic: bool):
    if mid == ModelId.RF_s:
        return [(STATIC, static)]
    if mid == ModelId.RF_d:
        return [(DYNAMIC, spatialize_all(dynamic))]
    # RF_sd: on univariate data the statics already are the spatialized sequence
    if static_from_dynamic:
        return [(STATIC, static), (DYNAMIC, np.zeros((len(static), 0)))]
    return [(STATIC, static), (DYNAMIC, spatialize_all(dynamic))]


def build_sequences(model_id, static, dynamic, static_from_dynamic: bool = False) -> np.ndarray:
    """Sequence input of a generative classifier (ids 2, 3, 6, 7), shape ``(N, channels, l_d)``.

    For ids 6 and 7 statics become constant fake sequences stacked under the
    dynamic channels, unless they are themselves the spatialized sequence.
    """
    mid = as_model_id(model_id)
    dynamic = np.asarray(dynamic, dtype=np.float64)
    if mid in (ModelId.HMM_d, ModelId.LSTM_d):
        return dynamic
    if mid in (ModelId.HMM_sd, ModelId.LSTM_sd):
        if static_from_dynamic:
            return dynamic
        return np.concatenate([dynamic, staticize_all(static, dynamic.shape[2])], axis=1)
    raise ValueError(f"model {mid.name} is not a generative classifier")


def sequence_provenance(model_id, n_s: int, n_d: int, static_from_dynamic: bool = False) -> tuple:
    """``(feature_set, first_channel, stop_channel)`` ranges of a generative id's input sequences."""
    mid = as_model_id(model_id)
    if mid not in GENERATIVE_IDS:
        raise ValueError(f"model {mid.name} is not a generative classifier")
    if mid in (ModelId.HMM_d, ModelId.LSTM_d):
        return ((DYNAMIC, 0, n_d),)
    if static_from_dynamic:
        # the sequence doubles as the static features
        return ((DYNAMIC, 0, n_d), (STATIC, 0, n_d))
    return ((DYNAMIC, 0, n_d), (STATIC, n_d, n_d + n_s))


def audit_model(model_id, data: Dataset, extractor: Extractor | None = None) -> frozenset:
    """Feature sets ``model_id`` actually consumes on ``data``."""
    mid = as_model_id(model_id)
    if mid in GENERATIVE_IDS:
        prov = sequence_provenance(mid, data.n_s, data.n_d, data.static_from_dynamic)
        return frozenset(name for name, start, stop in prov if stop > start)
    return enrich(mid, data, extractor).audit()


def _check_extractor(mid: ModelId, extractor, sample_ids):
    if mid in TWO_TIER_IDS:
        if extractor is None:
            raise ValueError(f"model {mid.name} needs a feature extractor")
        if extractor.model_id != mid:
            raise ValueError(f"extractor was built for {extractor.model_id.name}, not {mid.name}")
        overlap = extractor.trained_ids.intersection(int(s) for s in sample_ids)
        if overlap:
            raise LeakageError(
                f"{len(overlap)} sample(s) would be enriched by an extractor trained on them, e.g. {min(overlap)}"
            )
    elif extractor is not None:
        raise ValueError(f"model {mid.name} does not use a feature extractor")


def enrich(model_id, data: Dataset, extractor: Extractor | None = None) -> EnrichedSet:
    """Vectorise every sample of ``data`` for a vector-input model (ids 1, 4, 5, 8-12)."""
    mid = as_model_id(model_id)
    if mid in GENERATIVE_IDS:
        raise ValueError(f"model {mid.name} consumes sequences; use build_sequences")
    _check_extractor(mid, extractor, data.sample_ids)
    if mid in TWO_TIER_IDS:
        blocks = _two_tier_blocks(mid, data.static, data.dynamic, extractor)
        row_ex = np.zeros(data.n_samples, dtype=np.int64)
        ex_ids = (extractor.trained_ids,)
    else:
        blocks = _vector_blocks(mid, data.static, data.dynamic, data.static_from_dynamic)
        row_ex = np.full(data.n_samples, -1, dtype=np.int64)
        ex_ids = ()
    provenance, start = [], 0
    for name, arr in blocks:
        provenance.append((name, start, start + arr.shape[1]))
        start += arr.shape[1]
    features = np.hstack([b for _, b in blocks]) if blocks else np.zeros((data.n_samples, 0))
    return EnrichedSet(features, data.labels, data.sample_ids, tuple(provenance), row_ex, ex_ids)


def build_features(model_id, sample: Sample, extractor: Extractor | None = None, static_from_dynamic: bool = False):
    """Feature representation of one sample.

    Vector-input ids return a 1-D vector; generative ids (2, 3, 6, 7) return
    the ``channels x l_d`` matrix their classifier reads.
    """
    mid = as_model_id(model_id)
    static = np.asarray(sample.static, dtype=np.float64)[None]
    dynamic = np.asarray(sample.dynamic, dtype=np.float64)[None]
    if dynamic.ndim != 3:
        raise DimensionError("sample dynamic data must be an n_d x l_d matrix")
    if mid in GENERATIVE_IDS:
        if extractor is not None:
            raise ValueError(f"model {mid.name} does not use a feature extractor")
        return build_sequences(mid, static, dynamic, static_from_dynamic)[0]
    _check_extractor(mid, extractor, [sample.sample_id])
    if mid in TWO_TIER_IDS:
        blocks = _two_tier_blocks(mid, static, dynamic, extractor)
    else:
        blocks = _vector_blocks(mid, static, dynamic, static_from_dynamic)
    return np.hstack([b for _, b in blocks])[0]


@dataclass
class EvalReport:
    model_id: int
    name: str
    dataset: str
    protocol: str
    accuracy: float
    fold_accuracies: list
    seed: int
    hyperparameters: dict
    wall_time_s: float
    error: str | None = None
    predictions: np.ndarray | None = field(default=None, repr=False)
    sample_ids: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_folds(self) -> int:
        return len(self.fold_accuracies)

    def metadata(self) -> dict:
        return {
            "model_id": self.model_id,
            "name": self.name,
            "dataset": self.dataset,
            "protocol": self.protocol,
            "accuracy": self.accuracy,
            "fold_accuracies": list(self.fold_accuracies),
            "seed": self.seed,
            "hyperparameters": self.hyperparameters,
            "wall_time_s": self.wall_time_s,
            "error": self.error,
        }


def _accuracy(pred, labels) -> float:
    return float(np.mean(np.asarray(pred) == np.asarray(labels)))


def _fit_predict_single_tier(mid: ModelId, train: Dataset, test: Dataset, hp: HyperParams,
                             cache: ExtractorCache | None) -> np.ndarray:
    if mid in RF_IDS:
        tr = enrich(mid, train)
        te = enrich(mid, test)
        forest = fit_forest(tr.features, train, hp.rf_seed, hp, cache, f"model{int(mid)}")
        return forest.predict(te.features)
    seq_train = build_sequences(mid, train.static, train.dynamic, train.static_from_dynamic)
    seq_test = build_sequences(mid, test.static, test.dynamic, test.static_from_dynamic)
    kind = "hmm" if mid in (ModelId.HMM_d, ModelId.HMM_sd) else "lstm"
    # the cache tag keys on channel count so ids sharing identical inputs share fits
    paired = fit_paired(kind, seq_train, train, hp, cache, tag=f"seq{seq_train.shape[1]}")
    if kind == "hmm":
        scores = _hmm_scores(paired, seq_test)
        ratio = scores[:, 0] - scores[:, 1]
    else:
        ratio = lstm_mod.lstm_ratio_batch(paired, seq_test)
    return np.where(ratio >= 0, train.pos_label, train.neg_label)


def _second_tier(enriched_train: EnrichedSet, enriched_test: EnrichedSet, classes, hp: HyperParams) -> np.ndarray:
    enriched_train.check_leakage()
    enriched_test.check_leakage()
    forest = rf.rf_fit(enriched_train.features, enriched_train.labels, hp.rf_trees, hp.second_tier_seed, classes)
    return forest.predict(enriched_test.features)


def _check_disjoint(a: Dataset, b: Dataset):
    if np.intersect1d(a.sample_ids, b.sample_ids).size:
        raise LeakageError("train and test partitions share sample ids")


def fit_predict(model_id, train: Dataset, test: Dataset, hp: HyperParams, cache: ExtractorCache | None = None):
    """Predicted labels for ``test`` after training ``model_id`` on ``train``."""
    mid = as_model_id(model_id)
    _check_disjoint(train, test)
    if mid not in TWO_TIER_IDS:
        return _fit_predict_single_tier(mid, train, test, hp, cache)
    plan = split_ab(train, derive_seed(hp.seed, "split", "ab"))
    part_a, part_b = train.subset(plan.part(0)), train.subset(plan.part(1))
    extractor = fit_extractor(mid, part_a, hp, cache)
    return _second_tier(enrich(mid, part_b, extractor), enrich(mid, test, extractor), train.class_labels, hp)


def train_traintest(model_id, train: Dataset, test: Dataset, hp: HyperParams,
                    cache: ExtractorCache | None = None) -> EvalReport:
    """Fit on ``train``, score on ``test``.

    Two-tier ids split ``train`` into stratified halves: extractors learn on
    training_A, the second-tier forest on enriched training_B.
    """
    mid = as_model_id(model_id)
    start = time.perf_counter()
    pred = fit_predict(mid, train, test, hp, cache)
    acc = _accuracy(pred, test.labels)
    return EvalReport(
        int(mid), mid.name, train.name, "train-test", acc, [acc], hp.seed, hp.as_dict(),
        time.perf_counter() - start, predictions=pred, sample_ids=test.sample_ids,
    )


def enrich_out_of_fold(model_id, dataset: Dataset, plan: SplitPlan, hp: HyperParams,
                       cache: ExtractorCache | None = None) -> EnrichedSet:
    """Enrich every chunk with extractors trained on all the other chunks."""
    mid = as_model_id(model_id)
    if mid not in TWO_TIER_IDS:
        raise ValueError(f"model {mid.name} has no enrichment step")
    features = None
    row_ex = np.empty(dataset.n_samples, dtype=np.int64)
    ex_ids, provenance = [], None
    for i in range(plan.n_parts):
        rows = plan.part(i)
        extractor = fit_extractor(mid, dataset.subset(plan.complement(i)), hp, cache)
        chunk = enrich(mid, dataset.subset(rows), extractor)
        if features is None:
            features = np.empty((dataset.n_samples, chunk.n_features))
            provenance = chunk.provenance
        features[rows] = chunk.features
        row_ex[rows] = i
        ex_ids.append(extractor.trained_ids)
    enriched = EnrichedSet(features, dataset.labels, dataset.sample_ids, provenance, row_ex, tuple(ex_ids))
    enriched.check_leakage()
    return enriched


def train_cv(model_id, dataset: Dataset, k: int, hp: HyperParams, plan: SplitPlan | None = None,
             cache: ExtractorCache | None = None) -> EvalReport:
    """k-fold accuracy; two-tier ids are enriched out of fold, then cross-validated on the same chunks."""
    mid = as_model_id(model_id)
    start = time.perf_counter()
    plan = plan or make_folds(dataset, k, derive_seed(hp.seed, "split", "folds"))
    fold_acc = []
    pred_all = np.empty(dataset.n_samples, dtype=dataset.labels.dtype)
    if mid in TWO_TIER_IDS:
        enriched = enrich_out_of_fold(mid, dataset, plan, hp, cache)
        for i in range(plan.n_parts):
            pred = _second_tier(
                enriched.subset(plan.complement(i)), enriched.subset(plan.part(i)), dataset.class_labels, hp
            )
            pred_all[plan.part(i)] = pred
            fold_acc.append(_accuracy(pred, dataset.labels[plan.part(i)]))
    else:
        for i in range(plan.n_parts):
            test = dataset.subset(plan.part(i))
            pred = _fit_predict_single_tier(mid, dataset.subset(plan.complement(i)), test, hp, cache)
            pred_all[plan.part(i)] = pred
            fold_acc.append(_accuracy(pred, test.labels))
    return EvalReport(
        int(mid), mid.name, dataset.name, f"cv:{plan.n_parts}", float(np.mean(fold_acc)), fold_acc,
        hp.seed, hp.as_dict(), time.perf_counter() - start, predictions=pred_all, sample_ids=dataset.sample_ids,
    )


def parse_protocol(protocol) -> tuple[str, int]:
    """``"train-test"`` -> ("train-test", 0); ``"cv:5"`` -> ("cv", 5)."""
    if protocol == "train-test":
        return "train-test", 0
    if isinstance(protocol, str) and protocol.startswith("cv"):
        _, _, k = protocol.partition(":")
        try:
            k = int(k) if k else 5
        except ValueError:
            raise ConfigError(f"bad protocol {protocol!r}") from None
        if k < 2:
            raise ConfigError("cv needs k >= 2")
        return "cv", k
    raise ConfigError(f"unknown protocol {protocol!r}; use train-test or cv:k")


def evaluate_all(dataset: Dataset, model_ids, hp: HyperParams, protocol="train-test", test: Dataset | None = None,
                 test_fraction: float = 0.5, cache: ExtractorCache | None = None) -> list[EvalReport]:
    """One report per requested id. A failing model yields a report with ``error`` set.

    Under ``train-test`` without an explicit ``test`` set, ``dataset`` is split
    by a stratified draw from the ``split`` sub-stream.
    """
    kind, k = parse_protocol(protocol)
    ids = [as_model_id(m) for m in model_ids]
    cache = cache if cache is not None else ExtractorCache()
    train = dataset
    if kind == "train-test" and test is None and ids:
        plan = split_train_test(dataset, test_fraction, derive_seed(hp.seed, "split", "test"))
        train, test = dataset.subset(plan.part(0)), dataset.subset(plan.part(1))
    reports = []
    for mid in ids:
        start = time.perf_counter()
        try:
            if kind == "train-test":
                rep = train_traintest(mid, train, test, hp, cache)
            else:
                rep = train_cv(mid, dataset, k, hp, cache=cache)
        except Exception as exc:  # noqa: BLE001 -- recorded per model, the batch continues
            log.exception("model %s failed", mid.name)
            rep = EvalReport(
                int(mid), mid.name, dataset.name, protocol if kind == "train-test" else f"cv:{k}",
                float("nan"), [], hp.seed, hp.as_dict(), time.perf_counter() - start,
                error=f"{type(exc).__name__}: {exc}",
            )
        log.info("%s accuracy %.4f (%.1fs)", rep.name, rep.accuracy, rep.wall_time_s)
        reports.append(rep)
    return reports


REPORT_COLUMNS = ("id", "name", "accuracy", "n_folds", "seed", "wall_time_s")


def format_accuracy(acc: float) -> str:
    return "nan" if np.isnan(acc) else f"{acc:.6f}"


def reports_to_csv(reports, timing: bool = True) -> str:
    """CSV text, one row per model. ``timing=False`` blanks ``wall_time_s`` for reproducible output."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        writer.writerow(
            [r.model_id, r.name, format_accuracy(r.accuracy), r.n_folds, r.seed,
             f"{r.wall_time_s:.3f}" if timing else ""]
        )
    return buf.getvalue()


def read_reports_csv(text: str) -> list[dict]:
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append(
            {
                "id": int(row["id"]),
                "name": row["name"],
                "accuracy": float(row["accuracy"]),
                "n_folds": int(row["n_folds"]),
                "seed": int(row["seed"]),
                "wall_time_s": float(row["wall_time_s"]) if row["wall_time_s"] else None,
            }
        )
    return rows


def format_table(reports) -> str:
    lines = [f"{'id':>3}  {'model':<10} {'accuracy':>9}  {'folds':>5}  {'time[s]':>8}  note"]
    for r in reports:
        note = r.error or ""
        lines.append(
            f"{r.model_id:>3}  {r.name:<10} {format_accuracy(r.accuracy):>9}  {r.n_folds:>5}  "
            f"{r.wall_time_s:>8.1f}  {note}"
        )
    return "\n".join(lines)
